//! Weighted digraphs with nonnegative matrices `M[u][v] = exp(w(u, v))`.
//!
//! Used for the Perron oracle of block presentations, for the presentations
//! of constructed subsystems, and for maximum-mean-cycle computations.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Digraph with log-weights on edges (`exp(weight)` is the matrix entry).
#[derive(Clone, Debug)]
pub struct WeightedDigraph<S> {
    out: Vec<Vec<(usize, S)>>,
}

/// Result of a Perron root computation.
#[derive(Clone, Debug)]
pub struct PerronRoot<S> {
    /// `ln ρ(M)`.
    pub log_radius: S,
    /// Half-width of the final Collatz–Wielandt bracket on `ln ρ`.
    pub error_bound: S,
    pub iterations: usize,
    pub period: usize,
    pub converged: bool,
}

impl<S: Scalar> WeightedDigraph<S> {
    pub fn new(vertices: usize) -> Self {
        WeightedDigraph { out: vec![Vec::new(); vertices] }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, log_weight: S) {
        self.out[from].push((to, log_weight));
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn edges_from(&self, u: usize) -> &[(usize, S)] {
        &self.out[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        self.out.iter().enumerate().flat_map(|(u, es)| es.iter().map(move |&(v, w)| (u, v, w)))
    }

    fn reach(&self, src: usize, reverse: bool) -> Vec<bool> {
        let n = self.out.len();
        let rev;
        let adj: &Vec<Vec<(usize, S)>> = if reverse {
            let mut r = vec![Vec::new(); n];
            for (u, v, w) in self.edges() {
                r[v].push((u, w));
            }
            rev = r;
            &rev
        } else {
            &self.out
        };
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        seen
    }

    /// First `(from, to)` pair with no path, if any.
    pub fn unreachable_pair(&self) -> Option<(usize, usize)> {
        if self.out.is_empty() {
            return None;
        }
        let fwd = self.reach(0, false);
        if let Some(v) = fwd.iter().position(|&s| !s) {
            return Some((0, v));
        }
        let bwd = self.reach(0, true);
        bwd.iter().position(|&s| !s).map(|v| (v, 0))
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.unreachable_pair().is_none()
    }

    /// Period of a strongly connected digraph.
    pub fn period(&self) -> usize {
        let n = self.out.len();
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut q = VecDeque::from([0usize]);
        while let Some(u) = q.pop_front() {
            for &(v, _) in &self.out[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    q.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for (u, v, _) in self.edges() {
            if level[u] == usize::MAX || level[v] == usize::MAX {
                continue;
            }
            let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
            g = gcd(g, d);
        }
        g.max(1)
    }

    fn max_weight(&self) -> S {
        self.edges().map(|(_, _, w)| w).fold(S::neg_infinity(), S::max)
    }

    // y = M x with entries exp(w - shift)
    fn apply(&self, x: &[S], shift: S, y: &mut [S]) {
        for (u, es) in self.out.iter().enumerate() {
            let mut acc = S::zero();
            for &(v, w) in es {
                acc = acc + (w - shift).exp() * x[v];
            }
            y[u] = acc;
        }
    }

    fn apply_transpose(&self, x: &[S], shift: S, y: &mut [S]) {
        y.iter_mut().for_each(|v| *v = S::zero());
        for (u, es) in self.out.iter().enumerate() {
            for &(v, w) in es {
                y[v] = y[v] + (w - shift).exp() * x[u];
            }
        }
    }

    /// `ln ρ(M)` of a strongly connected digraph by power iteration from the
    /// all-ones vector.
    ///
    /// Every step yields a Collatz–Wielandt bracket `min_i (M^d x)_i / x_i <=
    /// ρ^d <= max_i (M^d x)_i / x_i` with `d` the period; iteration stops once
    /// the bracket on `ln ρ` is narrower than `2·tol`. For periodic matrices
    /// the bracket spans one full period of the iteration.
    pub fn perron_root(&self, tol: f64, max_iter: usize) -> Result<PerronRoot<S>> {
        let n = self.out.len();
        if n == 0 {
            return Err(Error::Structural("empty digraph".into()));
        }
        if let Some((from, to)) = self.unreachable_pair() {
            return Err(Error::NotStronglyConnected { from, to });
        }
        let d = self.period();
        let shift = self.max_weight();
        let tol = S::tolerance(tol);
        let nf = S::of_usize(n);

        // history of the last d normalized iterates and their log norms
        let mut hist: VecDeque<Vec<S>> = VecDeque::with_capacity(d + 1);
        let mut log_norms: VecDeque<S> = VecDeque::with_capacity(d + 1);
        let mut x = vec![S::one() / nf; n];
        hist.push_back(x.clone());
        let mut y = vec![S::zero(); n];
        let mut best = (S::neg_infinity(), S::infinity());
        for it in 1..=max_iter {
            self.apply(&x, shift, &mut y);
            let norm: S = y.iter().copied().sum();
            if !(norm > S::zero()) || !norm.is_finite() {
                return Err(Error::Numerical("power iteration lost positivity".into()));
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = *yi / norm;
            }
            log_norms.push_back(norm.ln());
            hist.push_back(x.clone());
            if hist.len() > d + 1 {
                hist.pop_front();
                log_norms.pop_front();
            }
            if hist.len() == d + 1 {
                let old = &hist[0];
                let acc: S = log_norms.iter().copied().sum();
                let mut lo = S::infinity();
                let mut hi = S::neg_infinity();
                for (a, b) in x.iter().zip(old) {
                    let r = (*a / *b).ln() + acc;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                let df = S::of_usize(d);
                let (lo, hi) = (lo / df + shift, hi / df + shift);
                best = (best.0.max(lo), best.1.min(hi));
                let half = (best.1 - best.0) / S::of(2.0);
                if half < tol {
                    return Ok(PerronRoot {
                        log_radius: (best.0 + best.1) / S::of(2.0),
                        error_bound: half.max(S::zero()),
                        iterations: it,
                        period: d,
                        converged: true,
                    });
                }
            }
        }
        let half = (best.1 - best.0) / S::of(2.0);
        Ok(PerronRoot {
            log_radius: (best.0 + best.1) / S::of(2.0),
            error_bound: half,
            iterations: max_iter,
            period: d,
            converged: false,
        })
    }

    /// Right and left Perron vectors (`M r = ρ r`, `l M = ρ l`), each
    /// normalized to unit 1-norm. Iterates the aperiodic matrix `M/ρ + I`.
    pub fn perron_vectors(&self, log_radius: S, tol: f64, max_iter: usize) -> (Vec<S>, Vec<S>) {
        let shift = log_radius;
        let right = self.shifted_vector(shift, tol, max_iter, false);
        let left = self.shifted_vector(shift, tol, max_iter, true);
        (right, left)
    }

    fn shifted_vector(&self, shift: S, tol: f64, max_iter: usize, transpose: bool) -> Vec<S> {
        let n = self.out.len();
        let tol = S::tolerance(tol);
        let mut x = vec![S::one() / S::of_usize(n); n];
        let mut y = vec![S::zero(); n];
        for _ in 0..max_iter {
            if transpose {
                self.apply_transpose(&x, shift, &mut y);
            } else {
                self.apply(&x, shift, &mut y);
            }
            for (yi, xi) in y.iter_mut().zip(&x) {
                *yi = *yi + *xi;
            }
            let norm: S = y.iter().copied().sum();
            let mut change = S::zero();
            for (xi, yi) in x.iter_mut().zip(&y) {
                let v = *yi / norm;
                change = change.max(((v - *xi) / v).abs());
                *xi = v;
            }
            if change < tol {
                break;
            }
        }
        x
    }

    /// Strongly connected components (Kosaraju), each as a vertex list.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.out.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut stack = vec![(s, 0usize)];
            seen[s] = true;
            while let Some(&mut (u, ref mut i)) = stack.last_mut() {
                if *i < self.out[u].len() {
                    let v = self.out[u][*i].0;
                    *i += 1;
                    if !seen[v] {
                        seen[v] = true;
                        stack.push((v, 0));
                    }
                } else {
                    order.push(u);
                    stack.pop();
                }
            }
        }
        let mut rev = vec![Vec::new(); n];
        for (u, v, _) in self.edges() {
            rev[v].push(u);
        }
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let u = members[i];
                i += 1;
                for &v in &rev[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                    }
                }
            }
            out.push(members);
        }
        out
    }

    /// Subgraph induced on `vertices`, reindexed in the given order.
    pub fn induced(&self, vertices: &[usize]) -> WeightedDigraph<S> {
        let mut index = vec![usize::MAX; self.out.len()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let mut g = WeightedDigraph::new(vertices.len());
        for (i, &u) in vertices.iter().enumerate() {
            for &(v, w) in &self.out[u] {
                if index[v] != usize::MAX {
                    g.add_edge(i, index[v], w);
                }
            }
        }
        g
    }

    /// `ln ρ(M)` for an arbitrary digraph: the maximum over strongly
    /// connected components that carry a cycle; `-∞` for acyclic graphs.
    pub fn log_spectral_radius(&self, tol: f64, max_iter: usize) -> Result<PerronRoot<S>> {
        let mut best: Option<PerronRoot<S>> = None;
        for comp in self.components() {
            let sub = self.induced(&comp);
            if sub.edge_count() == 0 {
                continue;
            }
            let root = sub.perron_root(tol, max_iter)?;
            if best.as_ref().is_none_or(|b| root.log_radius > b.log_radius) {
                best = Some(root);
            }
        }
        Ok(best.unwrap_or(PerronRoot {
            log_radius: S::neg_infinity(),
            error_bound: S::zero(),
            iterations: 0,
            period: 0,
            converged: true,
        }))
    }

    /// Maximum cycle mean of a strongly connected digraph (Karp).
    pub fn max_cycle_mean(&self) -> Result<S> {
        let n = self.out.len();
        if n == 0 {
            return Err(Error::Structural("empty digraph".into()));
        }
        if let Some((from, to)) = self.unreachable_pair() {
            return Err(Error::NotStronglyConnected { from, to });
        }
        let ninf = S::neg_infinity();
        // dist[k][v]: max weight of a k-edge walk from vertex 0 to v
        let mut dist = vec![vec![ninf; n]; n + 1];
        dist[0][0] = S::zero();
        for k in 1..=n {
            let (prev, cur) = dist.split_at_mut(k);
            let prev = &prev[k - 1];
            let cur = &mut cur[0];
            for (u, es) in self.out.iter().enumerate() {
                if prev[u] == ninf {
                    continue;
                }
                for &(v, w) in es {
                    let cand = prev[u] + w;
                    if cand > cur[v] {
                        cur[v] = cand;
                    }
                }
            }
        }
        let mut best = ninf;
        for v in 0..n {
            if dist[n][v] == ninf {
                continue;
            }
            let mut worst = S::infinity();
            for k in 0..n {
                if dist[k][v] == ninf {
                    continue;
                }
                let m = (dist[n][v] - dist[k][v]) / S::of_usize(n - k);
                worst = worst.min(m);
            }
            best = best.max(worst);
        }
        Ok(best)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
