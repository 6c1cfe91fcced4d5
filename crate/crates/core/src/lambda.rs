//! The subsystem `Λ` generated by concatenating chosen words through fixed
//! connectors, its pressure, and exhaustive checks of its combinatorics.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gluing::{traces, GluingCertificate};
use crate::graph::WeightedDigraph;
use crate::report::real;
use crate::scalar::{LogSumExp, Scalar};
use crate::symbolic::{Resolution, ShiftSystem, Word};
use crate::thermo::pressure::ORACLE_MAX_ITER;
use crate::thermo::{sup_birkhoff, ErrorBound, Method, Potential, PressureParams, PressureReport, SequencePoint};

/// Words of one common length stored back to back.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordList {
    width: usize,
    data: Vec<u8>,
}

impl WordList {
    pub fn new(width: usize) -> Self {
        WordList { width, data: Vec::new() }
    }

    pub fn from_words<I, W>(width: usize, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = W>,
        W: AsRef<[u8]>,
    {
        let mut l = WordList::new(width);
        for w in words {
            l.push(w.as_ref())?;
        }
        Ok(l)
    }

    pub fn push(&mut self, w: &[u8]) -> Result<()> {
        if w.len() != self.width {
            return Err(Error::Precondition(format!(
                "word {} has length {}, expected {}",
                Word::from(w),
                w.len(),
                self.width
            )));
        }
        self.data.extend_from_slice(w);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[u8] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn contains(&self, w: &[u8]) -> bool {
        self.iter().any(|u| u == w)
    }
}

impl Serialize for WordList {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        ser.collect_seq(self.iter().map(Word::from))
    }
}

/// Parameters recorded with a constructed subsystem.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LambdaParams<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub alpha: S,
    #[serde(serialize_with = "real")]
    pub eta0: S,
    #[serde(serialize_with = "real")]
    pub eta: S,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Gap bound of the gluing certificate.
    pub tau: usize,
}

/// Vertex-shift presentation of `Λ`: one vertex per position inside each
/// word, plus one chain of vertices per connector word.
#[derive(Clone, Debug, Serialize)]
pub struct Presentation {
    pub vertices: Vec<PresentationVertex>,
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PresentationVertex {
    pub label: u8,
    /// `"word"` or `"connector"`.
    pub kind: &'static str,
    /// Word index, or the `(last, first)` pair encoded as `last * A + first`.
    pub owner: usize,
    pub offset: usize,
}

impl Presentation {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for &(u, v) in &self.edges {
            out[u].push(v);
        }
        out
    }
}

/// `Λ` for a word set `E` of common length `N`.
#[derive(Clone, Debug)]
pub struct LambdaSystem<S: Scalar> {
    sys: ShiftSystem,
    phi: Potential<S>,
    words: WordList,
    cert: GluingCertificate,
    /// Longest connector actually used between two words of `E`.
    tau_used: usize,
    pub params: LambdaParams<S>,
}

/// Checks `E` against the certificate and assembles `Λ`.
pub fn build_lambda<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    words: WordList,
    cert: &GluingCertificate,
    params: LambdaParams<S>,
) -> Result<LambdaSystem<S>> {
    if words.is_empty() {
        return Err(Error::Precondition("E is empty".into()));
    }
    if words.width() == 0 {
        return Err(Error::Precondition("E words must be nonempty".into()));
    }
    let r = phi.memory().max(2) - 1;
    if words.width() < r {
        return Err(Error::Precondition(format!(
            "E words of length {} are shorter than the potential's block width {r}",
            words.width()
        )));
    }
    for w in words.iter() {
        sys.check_admissible(w)?;
    }
    let (firsts, lasts) = boundary_symbols(&words);
    let mut tau_used = 0;
    for &a in &lasts {
        for &b in &firsts {
            let c = cert.connector(a, b);
            let mut junction = vec![a];
            junction.extend_from_slice(c);
            junction.push(b);
            if !sys.is_admissible(&junction) {
                return Err(Error::Structural(format!("stale certificate: {} is not admissible", Word(junction))));
            }
            tau_used = tau_used.max(c.len());
        }
    }
    if tau_used > cert.tau {
        return Err(Error::Structural(format!(
            "E needs a connector of length {tau_used} but the certificate only covers gaps up to {}",
            cert.tau
        )));
    }
    Ok(LambdaSystem { sys: sys.clone(), phi: phi.clone(), words, cert: cert.clone(), tau_used, params })
}

fn boundary_symbols(words: &WordList) -> (BTreeSet<u8>, BTreeSet<u8>) {
    let firsts = words.iter().map(|w| w[0]).collect();
    let lasts = words.iter().map(|w| w[w.len() - 1]).collect();
    (firsts, lasts)
}

impl<S: Scalar> LambdaSystem<S> {
    pub fn words(&self) -> &WordList {
        &self.words
    }

    pub fn n(&self) -> usize {
        self.words.width()
    }

    pub fn tau_used(&self) -> usize {
        self.tau_used
    }

    pub fn certificate(&self) -> &GluingCertificate {
        &self.cert
    }

    pub fn potential(&self) -> &Potential<S> {
        &self.phi
    }

    pub fn system(&self) -> &ShiftSystem {
        &self.sys
    }

    /// Connector words used between words of `E`.
    pub fn connectors_used(&self) -> BTreeMap<(u8, u8), Word> {
        let (firsts, lasts) = boundary_symbols(&self.words);
        let mut out = BTreeMap::new();
        for &a in &lasts {
            for &b in &firsts {
                out.insert((a, b), Word(self.cert.connector(a, b).to_vec()));
            }
        }
        out
    }

    /// Glues a sequence of word indices; returns the word and the times `t_k`.
    pub fn glue(&self, seq: &[usize]) -> (Vec<u8>, Vec<usize>) {
        self.cert.glue(seq.iter().map(|&i| self.words.get(i)))
    }

    /// `Φ(w, N)` of a word of `E`: the largest Birkhoff sum over admissible
    /// continuations when the potential looks past the end of the word.
    pub fn word_weight(&self, i: usize) -> S {
        word_weight(&self.sys, &self.phi, self.words.get(i))
    }

    /// `ln Σ_E e^{Φ(w, N)}`.
    pub fn log_mass(&self) -> S {
        let mut acc = LogSumExp::new();
        for i in 0..self.words.len() {
            acc.add(self.word_weight(i));
        }
        acc.value()
    }

    /// Pressure of the concatenation paths: the unique `P` with
    /// `ρ(K(e^{-P})) = 1`, where `K` sums over `E` the weights of one
    /// connector plus one word, split by the trailing block of the previous
    /// word. Equals the Perron value of the presentation's weighted lift and
    /// bounds the pressure of `Λ` from above.
    pub fn path_pressure(&self) -> Result<PressureReport<S>> {
        let kernel = RenewalKernel::new(self);
        let (value, width) = kernel.solve()?;
        Ok(PressureReport {
            value,
            method: Method::Oracle,
            params: None,
            error_bound: ErrorBound::Bounded(width),
            sequence: Vec::new(),
            periodic: false,
            converged: true,
            iterations: 0,
        })
    }

    /// Lower bound for `P(Y, φ, γ)`: at most `(τ+1)` gap patterns per junction
    /// can collapse distinct paths onto one orbit, and junctions are at least
    /// `N` symbols apart.
    pub fn lower_bound(&self, path: S) -> S {
        path - S::of_usize(self.tau_used + 1).ln() / S::of_usize(self.n())
    }

    /// Explicit presentation, refused above `max_vertices`.
    pub fn presentation(&self, max_vertices: usize) -> Result<Presentation> {
        let n = self.n();
        let a = self.sys.alphabet();
        let (firsts, lasts) = boundary_symbols(&self.words);
        let gadget_len: usize = lasts
            .iter()
            .flat_map(|&x| firsts.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.cert.connector(x, y).len())
            .sum();
        let total = self.words.len() * n + gadget_len;
        if total > max_vertices {
            return Err(Error::Budget { limit: max_vertices as u64, at_n: n, needed: total.to_string() });
        }
        let mut vertices = Vec::with_capacity(total);
        let mut edges = Vec::new();
        for (i, w) in self.words.iter().enumerate() {
            for (j, &s) in w.iter().enumerate() {
                vertices.push(PresentationVertex { label: s, kind: "word", owner: i, offset: j });
                if j > 0 {
                    edges.push((i * n + j - 1, i * n + j));
                }
            }
        }
        let mut by_first: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, w) in self.words.iter().enumerate() {
            by_first.entry(w[0]).or_default().push(i * n);
        }
        let mut entry: BTreeMap<(u8, u8), usize> = BTreeMap::new();
        for &x in &lasts {
            for &y in &firsts {
                let c = self.cert.connector(x, y);
                if c.is_empty() {
                    continue;
                }
                let start = vertices.len();
                for (k, &s) in c.iter().enumerate() {
                    vertices.push(PresentationVertex { label: s, kind: "connector", owner: x as usize * a + y as usize, offset: k });
                    if k > 0 {
                        edges.push((start + k - 1, start + k));
                    }
                }
                let end = vertices.len() - 1;
                for &v in &by_first[&y] {
                    edges.push((end, v));
                }
                entry.insert((x, y), start);
            }
        }
        for (i, w) in self.words.iter().enumerate() {
            let tail = i * n + n - 1;
            let x = w[n - 1];
            for &y in &firsts {
                match entry.get(&(x, y)) {
                    Some(&g) => edges.push((tail, g)),
                    None => edges.extend(by_first[&y].iter().map(|&v| (tail, v))),
                }
            }
        }
        edges.sort_unstable();
        Ok(Presentation { vertices, edges })
    }

    /// Perron value of the presentation lifted to blocks of `max(m-1, 1)`
    /// vertices, each edge weighted by `φ` of the labels it spans.
    pub fn presentation_pressure(&self, pres: &Presentation) -> Result<PressureReport<S>> {
        let m = self.phi.memory();
        let r = m.max(2) - 1;
        let succ = pres.successors();
        let labels: Vec<u8> = pres.vertices.iter().map(|v| v.label).collect();
        let mut paths: Vec<Vec<usize>> = (0..labels.len()).map(|v| vec![v]).collect();
        for _ in 1..r {
            paths = paths
                .into_iter()
                .flat_map(|p| succ[*p.last().unwrap()].iter().map(move |&v| [p.clone(), vec![v]].concat()))
                .collect();
        }
        paths.sort();
        let id: BTreeMap<Vec<usize>, usize> = paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut g = WeightedDigraph::new(paths.len());
        let mut buf = Vec::with_capacity(m);
        for (i, p) in paths.iter().enumerate() {
            for &v in &succ[*p.last().unwrap()] {
                let mut q = p[1..].to_vec();
                q.push(v);
                let w = if m == 1 {
                    self.phi.eval(&[labels[p[0]]])
                } else {
                    buf.clear();
                    buf.extend(p.iter().map(|&u| labels[u]));
                    buf.push(labels[v]);
                    self.phi.eval(&buf)
                };
                g.add_edge(i, id[&q], w);
            }
        }
        let root = g.log_spectral_radius(1e-13, ORACLE_MAX_ITER)?;
        Ok(PressureReport {
            value: root.log_radius,
            method: Method::Oracle,
            params: None,
            error_bound: ErrorBound::Bounded(root.error_bound),
            sequence: Vec::new(),
            periodic: root.period > 1,
            converged: root.converged,
            iterations: root.iterations,
        })
    }

    /// Pressure of the label language of the presentation at `ℓ_δ = 1`, by
    /// depth-first enumeration of readable words with subset tracking of the
    /// presentation vertices. The value is the growth rate of `ln Θ_n` over
    /// the upper half of the range; the error bound compares it with the
    /// lower half.
    pub fn label_pressure_enumerate(&self, pres: &Presentation, n_range: (usize, usize), budget: u64) -> Result<PressureReport<S>> {
        let (n_min, n_max) = n_range;
        if n_min == 0 || n_max < n_min {
            return Err(Error::Precondition(format!("bad n range [{n_min}, {n_max}]")));
        }
        let succ = pres.successors();
        let labels: Vec<u8> = pres.vertices.iter().map(|v| v.label).collect();
        let a = self.sys.alphabet() as u8;
        let m = self.phi.memory();
        let mut seq = Vec::new();
        let mut logs = Vec::new();
        for n in n_min..=n_max {
            let t = n + m - 1;
            let mut visited = 0u64;
            let mut total = LogSumExp::new();
            for s in 0..a {
                let set: Vec<usize> = (0..labels.len()).filter(|&v| labels[v] == s).collect();
                if set.is_empty() {
                    continue;
                }
                let mut word = vec![s];
                self.dfs(&succ, &labels, &set, &mut word, n, t, &mut total, &mut visited, budget)?;
            }
            logs.push(total.value());
            seq.push(SequencePoint { n, value: total.value() / S::of_usize(n) });
        }
        // Θ_n ≈ C e^{nP} with C up to the vertex count, so the slope over the
        // upper half converges much faster than (1/n) ln Θ_n.
        let slope = |i: usize, j: usize| (logs[j] - logs[i]) / S::of_usize(j - i);
        let last = logs.len() - 1;
        let mid = last / 2;
        let (value, err) = if mid == last {
            (seq[last].value, S::infinity())
        } else if mid == 0 {
            (slope(0, last), S::infinity())
        } else {
            let v = slope(mid, last);
            (v, (v - slope(0, mid)).abs())
        };
        Ok(PressureReport {
            value,
            method: Method::Enumeration,
            params: Some(PressureParams { n_min, n_max, delta: 1, eps: None }),
            error_bound: if err.is_finite() { ErrorBound::Bounded(err) } else { ErrorBound::Unbounded },
            sequence: seq,
            periodic: false,
            converged: true,
            iterations: 0,
        })
    }

    /// Walks readable words. Below depth `n` it adds finished cylinder
    /// weights to `total`; between `n` and `t` it returns the largest
    /// Birkhoff sum over continuations.
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        succ: &[Vec<usize>],
        labels: &[u8],
        set: &[usize],
        word: &mut Vec<u8>,
        n: usize,
        t: usize,
        total: &mut LogSumExp<S>,
        visited: &mut u64,
        budget: u64,
    ) -> Result<S> {
        *visited += 1;
        if *visited > budget {
            return Err(Error::Budget { limit: budget, at_n: n, needed: format!("> {budget}") });
        }
        if word.len() == t {
            let v = self.phi.birkhoff_unchecked(word, n);
            if t == n {
                total.add(v);
            }
            return Ok(v);
        }
        let mut next: BTreeMap<u8, BTreeSet<usize>> = BTreeMap::new();
        for &u in set {
            for &v in &succ[u] {
                next.entry(labels[v]).or_default().insert(v);
            }
        }
        let mut best = S::neg_infinity();
        for (s, vs) in next {
            let vs: Vec<usize> = vs.into_iter().collect();
            word.push(s);
            let b = self.dfs(succ, labels, &vs, word, n, t, total, visited, budget)?;
            word.pop();
            best = best.max(b);
        }
        if word.len() == n && t > n {
            total.add(best);
        }
        Ok(best)
    }

    /// Every sequence in `E^n` glues to an admissible word that traces each
    /// of its words exactly. Returns the number of sequences checked.
    pub fn check_tracing_exhaustive(&self, n: usize) -> Result<usize> {
        let mut count = 0;
        for seq in sequences(self.words.len(), n) {
            let (z, times) = self.glue(&seq);
            let segs: Vec<&[u8]> = seq.iter().map(|&i| self.words.get(i)).collect();
            if !self.sys.is_admissible(&z) || !traces(&z, &times, &segs) {
                return Err(Error::Structural(format!("sequence {seq:?} glues to {} which does not trace it", Word(z))));
            }
            count += 1;
        }
        Ok(count)
    }

    /// Sequences with equal `t_n` and different last words glue to words
    /// that differ within the first `n(N + τ)` symbols. Returns the number of
    /// pairs checked.
    pub fn check_separation_exhaustive(&self, n: usize) -> Result<usize> {
        let span = n * (self.n() + self.cert.tau);
        let glued: Vec<(Vec<usize>, Vec<u8>, usize)> = sequences(self.words.len(), n)
            .map(|seq| {
                let (z, t) = self.glue(&seq);
                let tn = t[n - 1];
                (seq, z, tn)
            })
            .collect();
        let mut pairs = 0;
        for (i, (s1, z1, t1)) in glued.iter().enumerate() {
            for (s2, z2, t2) in &glued[i + 1..] {
                if t1 != t2 || s1[n - 1] == s2[n - 1] {
                    continue;
                }
                let k = span.min(z1.len()).min(z2.len());
                if z1[..k] == z2[..k] {
                    return Err(Error::Structural(format!("sequences {s1:?} and {s2:?} are not separated")));
                }
                pairs += 1;
            }
        }
        Ok(pairs)
    }
}

/// All index sequences of length `n` over `0..k` in lexicographic order.
fn sequences(k: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (k as u128).pow(n as u32);
    (0..total).map(move |mut c| {
        let mut s = vec![0; n];
        for i in (0..n).rev() {
            s[i] = (c % k as u128) as usize;
            c /= k as u128;
        }
        s
    })
}

/// `max Φ(y, N)` over admissible `y` extending the `N`-word `w`.
pub fn word_weight<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, w: &[u8]) -> S {
    let n = w.len();
    let t = phi.span(n);
    if t == n {
        return phi.birkhoff_unchecked(w, n);
    }
    let mut best = S::neg_infinity();
    sys.visit_words_with_prefix(w, t, |y| best = best.max(phi.birkhoff_unchecked(y, n)));
    best
}

/// Renewal kernel entries `ln Σ exp(weight)` keyed by source block, target
/// block and length of connector plus word.
struct RenewalKernel<S> {
    states: usize,
    entries: BTreeMap<(usize, usize, usize), S>,
    n: usize,
    tau: usize,
}

impl<S: Scalar> RenewalKernel<S> {
    fn new(l: &LambdaSystem<S>) -> Self {
        let m = l.phi.memory();
        let r = m.max(2) - 1;
        let n = l.n();
        let mut blocks: Vec<&[u8]> = l.words.iter().map(|w| &w[n - r..]).collect();
        blocks.sort();
        blocks.dedup();
        let index: BTreeMap<&[u8], usize> = blocks.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut acc: BTreeMap<(usize, usize, usize), LogSumExp<S>> = BTreeMap::new();
        let mut x = Vec::with_capacity(r + l.tau_used + n);
        for (si, s) in blocks.iter().enumerate() {
            for w in l.words.iter() {
                let c = l.cert.connector(s[r - 1], w[0]);
                x.clear();
                x.extend_from_slice(s);
                x.extend_from_slice(c);
                x.extend_from_slice(w);
                // terms whose window ends inside connector + word
                let mut weight = S::zero();
                for e in r..x.len() {
                    let k = e + 1 - m;
                    weight = weight + l.phi.eval(&x[k..]);
                }
                let ti = index[&w[n - r..]];
                acc.entry((si, ti, c.len() + n)).or_default().add(weight);
            }
        }
        RenewalKernel {
            states: blocks.len(),
            entries: acc.into_iter().map(|(k, v)| (k, v.value())).collect(),
            n,
            tau: l.tau_used,
        }
    }

    /// `ln ρ(K(e^{-p}))`.
    fn log_radius(&self, p: S) -> Result<S> {
        let mut cells: BTreeMap<(usize, usize), LogSumExp<S>> = BTreeMap::new();
        for (&(s, t, len), &w) in &self.entries {
            cells.entry((s, t)).or_default().add(w - p * S::of_usize(len));
        }
        let mut g = WeightedDigraph::new(self.states);
        for ((s, t), v) in cells {
            g.add_edge(s, t, v.value());
        }
        Ok(g.perron_root(1e-14, ORACLE_MAX_ITER)?.log_radius)
    }

    /// Root of `ln ρ(K(e^{-p})) = 0` and the width of the final bracket.
    fn solve(&self) -> Result<(S, S)> {
        let f0 = self.log_radius(S::zero())?;
        let a = f0 / S::of_usize(self.n + self.tau);
        let b = f0 / S::of_usize(self.n);
        let pad = S::of(1e-9) * (S::one() + f0.abs());
        let (mut lo, mut hi) = (a.min(b) - pad, a.max(b) + pad);
        let mut grow = 0;
        while self.log_radius(lo)? < S::zero() || self.log_radius(hi)? > S::zero() {
            let w = hi - lo;
            lo = lo - w;
            hi = hi + w;
            grow += 1;
            if grow > 60 {
                return Err(Error::Numerical("could not bracket the path pressure".into()));
            }
        }
        let tol = S::tolerance(1e-13);
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = (lo + hi) / S::of(2.0);
            if self.log_radius(mid)? > S::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(((lo + hi) / S::of(2.0), (hi - lo) / S::of(2.0)))
    }
}

/// Outcome of [`verify_counting_bound`].
#[derive(Clone, Debug, Serialize)]
pub struct CountingReport<S: Scalar> {
    pub n: usize,
    pub holds: bool,
    /// `true` when every cylinder class was checked exactly, by either
    /// [`CountingMethod::Enumeration`] or [`CountingMethod::MaxPlus`].
    pub exhaustive: bool,
    pub method: CountingMethod,
    pub classes: u64,
    /// Largest number of `(nN, 2δ)`-separated points found in one class.
    pub max_count: u64,
    /// `s(X, τ, δ)^{n-1}`.
    pub count_bound: f64,
    /// Smallest slack (log scale) of the `θ_n` partition-function bound.
    #[serde(serialize_with = "real")]
    pub theta_margin: S,
    pub violation: Option<String>,
}

/// How the classes of [`verify_counting_bound`] were covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingMethod {
    /// Every word sequence glued and checked.
    Enumeration,
    /// Junctions checked pairwise; the smallest `θ_n` margin over all
    /// sequences found by a max-plus recursion over (word, start time).
    MaxPlus,
    /// X-wide Birkhoff bound; classes not resolved.
    Reduced,
}

/// `s(X, τ, δ)`: one point per cylinder of length `τ + ℓ_δ - 1`, and `1`
/// for `τ = 0`.
pub fn separated_count(sys: &ShiftSystem, tau: usize, delta: Resolution) -> f64 {
    if tau == 0 {
        1.0
    } else {
        sys.count_words_u64(delta.window(tau)).map_or(f64::INFINITY, |c| c as f64)
    }
}

/// Classes enumerated one by one below this many.
const EXHAUSTIVE_CLASSES: u128 = 5_000_000;

/// Work limit for the max-plus recursion, in relaxation steps.
const MAXPLUS_STEPS: u128 = 2_000_000_000;

/// Checks the point-count and `θ_n` partition-function bounds on every
/// cylinder class `C¹_{y₁…y_n} × C²_{w₁…w_{n-1}}` of `Λ`.
///
/// Connectors are fixed per symbol pair, so each word sequence admits one
/// gap pattern and its class is pinned on the glued window `[0, t_n + N)`;
/// separation is counted on that window. The `θ_n` bound is checked on the
/// normalized potential `φ - φ⁻`.
pub fn verify_counting_bound<S: Scalar>(l: &LambdaSystem<S>, n: usize, delta: Resolution) -> Result<CountingReport<S>> {
    counting_bound_with(l, n, delta, true)
}

fn counting_bound_with<S: Scalar>(
    l: &LambdaSystem<S>,
    n: usize,
    delta: Resolution,
    enumerate: bool,
) -> Result<CountingReport<S>> {
    if !(1..=8).contains(&n) {
        return Err(Error::Precondition(format!("counting bound is checked for 1 <= n <= 8, got {n}")));
    }
    let big_n = l.n();
    let tau = l.cert.tau;
    let s = separated_count(&l.sys, tau, delta);
    let count_bound = s.powi(n as i32 - 1);
    let phi = l.phi.shifted(-l.phi.min_value());
    let phi_plus = phi.max_value();
    let eta = l.params.eta;
    let d2 = delta.scaled(2);
    let theta_n = ((n as isize - 4) * big_n as isize).div_euclid((big_n + tau) as isize);
    let rhs_const = S::of(count_bound.ln()) + S::of_usize(2 * n * big_n) * eta + S::of_usize(5 * big_n) * phi_plus;
    let weights: Vec<S> = (0..l.words.len()).map(|i| word_weight(&l.sys, &phi, l.words.get(i))).collect();

    let k = l.words.len() as u128;
    let classes = k.checked_pow(n as u32).unwrap_or(u128::MAX);
    let mut report = CountingReport {
        n,
        holds: true,
        exhaustive: enumerate && classes <= EXHAUSTIVE_CLASSES,
        method: CountingMethod::Enumeration,
        classes: classes.min(u64::MAX as u128) as u64,
        max_count: 0,
        count_bound,
        theta_margin: S::infinity(),
        violation: None,
    };

    if report.exhaustive {
        let k = l.words.len();
        let check = |seq: &[usize]| -> std::result::Result<S, String> {
            let (z, times) = l.glue(seq);
            let segs: Vec<&[u8]> = seq.iter().map(|&i| l.words.get(i)).collect();
            if !l.sys.is_admissible(&z) || !traces(&z, &times, &segs) {
                return Err(format!("class {seq:?} is not traced by its glued word"));
            }
            // every point of the class carries z on the pinned window
            // [0, t_n + N), so the class holds exactly one separated point
            if 1.0 > count_bound {
                return Err(format!("class {seq:?} has 1 separated point, bound {count_bound}"));
            }
            let sum_y: S = if theta_n >= 3 {
                (3..=theta_n as usize).map(|j| weights[seq[j - 1]]).fold(S::zero(), |a, b| a + b)
            } else {
                S::zero()
            };
            let rhs = rhs_const + sum_y;
            let lhs = theta_lhs(l, &phi, &z, n, d2);
            if lhs > rhs {
                return Err(format!("class {seq:?} breaks the θ_n bound: {lhs} > {rhs}"));
            }
            Ok(rhs - lhs)
        };
        let chunks: Vec<std::result::Result<S, String>> = (0..k)
            .into_par_iter()
            .map(|first| {
                let mut best = S::infinity();
                let mut seq = vec![first; n];
                for rest in sequences(k, n - 1) {
                    seq[1..].copy_from_slice(&rest);
                    best = best.min(check(&seq)?);
                }
                Ok(best)
            })
            .collect();
        report.max_count = 1;
        for c in chunks {
            match c {
                Ok(m) => report.theta_margin = report.theta_margin.min(m),
                Err(msg) => {
                    report.holds = false;
                    report.violation = Some(msg);
                    break;
                }
            }
        }
        return Ok(report);
    }

    // one point per class: junction admissibility only depends on the
    // boundary symbols, which build_lambda already verified
    report.max_count = 1;
    if count_bound < 1.0 {
        report.holds = false;
        report.violation = Some("bound below one point".into());
        return Ok(report);
    }
    if let Some(best) = theta_max_plus(l, &phi, n, d2, &weights, theta_n) {
        report.exhaustive = true;
        report.method = CountingMethod::MaxPlus;
        match best {
            Ok(lhs) => {
                report.theta_margin = rhs_const - lhs;
                if lhs > rhs_const {
                    report.holds = false;
                    report.violation = Some(format!("some class breaks the θ_n bound: margin {}", rhs_const - lhs));
                }
            }
            Err(msg) => {
                report.holds = false;
                report.violation = Some(msg);
            }
        }
        return Ok(report);
    }
    report.method = CountingMethod::Reduced;
    let min_w = weights.iter().copied().fold(S::infinity(), S::min);
    let sum_y = if theta_n >= 3 { S::of_usize(theta_n as usize - 2) * min_w } else { S::zero() };
    let rhs = rhs_const + sum_y;
    let mut lhs = S::neg_infinity();
    for len in 1..=(n.saturating_sub(2) * big_n) {
        lhs = lhs.max(sup_birkhoff(&l.sys, &phi, len));
    }
    report.theta_margin = rhs - lhs;
    if lhs > rhs {
        report.holds = false;
        report.violation = Some(format!("X-wide Birkhoff bound {lhs} exceeds {rhs}; classes not resolved"));
    }
    Ok(report)
}

/// `max` over all word sequences of `theta_lhs - Σ_{j=3}^{θ_n} Φ(y_j)`.
///
/// A sequence glues to `w₁ c₁₂ w₂ c₂₃ … w_n`. Terms on the first `N - m + 1`
/// positions of a word only see that word; the remaining ones and the
/// connector only see the last `r` symbols of `w_i` and the first `r` of
/// `w_{i'}`, with `r = max(m - 1, 1)`. The recursion over (word, start
/// time) therefore passes through these boundary keys, and each junction
/// type is checked once. `None` when over the work limit or when `φ` looks
/// past the next word.
fn theta_max_plus<S: Scalar>(
    l: &LambdaSystem<S>,
    phi: &Potential<S>,
    n: usize,
    d2: Resolution,
    weights: &[S],
    theta_n: isize,
) -> Option<std::result::Result<S, String>> {
    let big_n = l.n();
    let tau = l.cert.tau;
    let m = phi.memory();
    let k = l.words.len();
    if m > big_n + 1 {
        return None;
    }
    let r = m.max(2) - 1;
    let inner = big_n + 1 - m;

    let mut tails: Vec<&[u8]> = l.words.iter().map(|w| &w[big_n - r..]).collect();
    let mut heads: Vec<&[u8]> = l.words.iter().map(|w| &w[..r]).collect();
    tails.sort();
    tails.dedup();
    heads.sort();
    heads.dedup();
    let tail_of: Vec<usize> = l.words.iter().map(|w| tails.binary_search(&&w[big_n - r..]).unwrap()).collect();
    let head_of: Vec<usize> = l.words.iter().map(|w| heads.binary_search(&&w[..r]).unwrap()).collect();

    let windows = ((big_n + tau) * big_n) as u128;
    let per_step = (2 * k + tails.len() * heads.len()) as u128 * (n * tau + 1) as u128;
    if windows * n as u128 * per_step > MAXPLUS_STEPS {
        return None;
    }
    let phi_plus = phi.max_value();
    let ln_a = S::of((l.sys.alphabet() as f64).ln());
    let prefix_sums = |terms: &[S]| {
        let mut p = vec![S::zero(); terms.len() + 1];
        for (i, t) in terms.iter().enumerate() {
            p[i + 1] = p[i] + *t;
        }
        p
    };

    // one representative glue per junction type
    let mut rep_tail = vec![usize::MAX; tails.len()];
    let mut rep_head = vec![usize::MAX; heads.len()];
    for i in 0..k {
        if rep_tail[tail_of[i]] == usize::MAX {
            rep_tail[tail_of[i]] = i;
        }
        if rep_head[head_of[i]] == usize::MAX {
            rep_head[head_of[i]] = i;
        }
    }
    // junction (b, a): prefix sums over the last m - 1 word positions and
    // the connector, and the length of connector plus word
    let mut junction = Vec::with_capacity(tails.len() * heads.len());
    for &i in &rep_tail {
        for &j in &rep_head {
            let (z, t) = l.glue(&[i, j]);
            if !l.sys.is_admissible(&z) || !traces(&z, &t, &[l.words.get(i), l.words.get(j)]) {
                return Some(Err(format!("junction {i} -> {j} is not traced by its glued word")));
            }
            let terms: Vec<S> = (inner..t[1]).map(|p| phi.eval(&z[p..])).collect();
            junction.push((prefix_sums(&terms), t[1]));
        }
    }
    let internal: Vec<Vec<S>> = l
        .words
        .iter()
        .map(|w| prefix_sums(&(0..inner).map(|p| phi.eval(&w[p..])).collect::<Vec<S>>()))
        .collect();
    // last word: terms past the end of z count as φ⁺
    let last: Vec<Vec<S>> = l
        .words
        .iter()
        .map(|w| {
            let terms: Vec<S> = (0..big_n).map(|p| if p + m <= big_n { phi.eval(&w[p..]) } else { phi_plus }).collect();
            prefix_sums(&terms)
        })
        .collect();
    let window = |pre: &[S], t: usize, a: usize, b: usize| -> S {
        let len = pre.len() - 1;
        let lo = a.saturating_sub(t).min(len);
        let hi = b.saturating_sub(t).min(len);
        if hi > lo {
            pre[hi] - pre[lo]
        } else {
            S::zero()
        }
    };
    let subtract = |j: usize| j >= 3 && (j as isize) <= theta_n;
    let neg = S::neg_infinity();

    let cases: Vec<(usize, usize)> = (0..big_n + tau).flat_map(|r| (0..big_n).map(move |off| (r, off))).collect();
    let best = cases
        .par_iter()
        .map(|&(r0, off)| {
            let len = n.saturating_sub(3) * big_n + off;
            if len == 0 {
                return neg;
            }
            let (end, wend) = (r0 + len, r0 + d2.window(len));
            // v[i][t - (j-1)N]: best partial value with word j = i starting at t
            let mut v: Vec<Vec<S>> = vec![vec![S::zero()]; k];
            for j in 1..n {
                let (base, width) = ((j - 1) * big_n, (j - 1) * tau + 1);
                let mut u = vec![vec![neg; width]; tails.len()];
                for (i, row) in v.iter().enumerate() {
                    for (dt, &val) in row.iter().enumerate() {
                        if val > neg {
                            let x = val + window(&internal[i], base + dt, r0, end);
                            let cell = &mut u[tail_of[i]][dt];
                            *cell = cell.max(x);
                        }
                    }
                }
                let next_width = j * tau + 1;
                let mut x = vec![vec![neg; next_width]; heads.len()];
                for (b, row) in u.iter().enumerate() {
                    for (dt, &val) in row.iter().enumerate() {
                        if val == neg {
                            continue;
                        }
                        let t = base + dt;
                        for (a, slot) in x.iter_mut().enumerate() {
                            let (pre, step) = &junction[b * heads.len() + a];
                            let t2 = t + step - j * big_n;
                            slot[t2] = slot[t2].max(val + window(pre, t + inner, r0, end));
                        }
                    }
                }
                v = (0..k)
                    .map(|i| {
                        let row = &x[head_of[i]];
                        if subtract(j + 1) {
                            row.iter().map(|&y| y - weights[i]).collect()
                        } else {
                            row.clone()
                        }
                    })
                    .collect();
            }
            let base = (n - 1) * big_n;
            let mut best = neg;
            for (i, row) in v.iter().enumerate() {
                for (dt, &val) in row.iter().enumerate() {
                    if val == neg {
                        continue;
                    }
                    let t = base + dt;
                    let z_len = t + big_n;
                    let tail = S::of_usize(end.saturating_sub(z_len.max(r0))) * phi_plus;
                    let free = S::of_usize(wend.saturating_sub(z_len)) * ln_a;
                    best = best.max(val + window(&last[i], t, r0, end) + tail + free);
                }
            }
            best
        })
        .reduce(|| neg, S::max);
    Some(Ok(best))
}

/// `max_{r, l} ln Θ(f^r(class), φ, (n-3)N + l, 2δ)` for a class pinned on `z`.
fn theta_lhs<S: Scalar>(l: &LambdaSystem<S>, phi: &Potential<S>, z: &[u8], n: usize, d2: Resolution) -> S {
    let big_n = l.n();
    let m = phi.memory();
    let mut best = S::neg_infinity();
    // terms[k] = φ(z[k..]) when z carries the whole window, else φ⁺
    let phi_plus = phi.max_value();
    let terms: Vec<S> = (0..z.len()).map(|k| if k + m <= z.len() { phi.eval(&z[k..]) } else { phi_plus }).collect();
    let mut prefix = vec![S::zero(); terms.len() + 1];
    for (i, t) in terms.iter().enumerate() {
        prefix[i + 1] = prefix[i] + *t;
    }
    let a = l.sys.alphabet() as f64;
    for r in 0..big_n + l.cert.tau {
        for off in 0..big_n {
            let len = (n.saturating_sub(3)) * big_n + off;
            if len == 0 {
                continue;
            }
            let end = r + len;
            let window_end = r + d2.window(len);
            // continuation symbols beyond z are free: count them crudely
            let free = window_end.saturating_sub(z.len());
            let sum = if end <= z.len() {
                prefix[end] - prefix[r]
            } else {
                prefix[z.len()] - prefix[r.min(z.len())] + S::of_usize(end - z.len().max(r)) * phi_plus
            };
            best = best.max(sum + S::of(free as f64 * a.ln()));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::pressure_oracle;

    fn params(n: usize, tau: usize) -> LambdaParams<f64> {
        LambdaParams { alpha: 0.0, eta0: 0.1, eta: 0.02, n, m: 0, tau }
    }

    fn res(l: u32) -> Resolution {
        Resolution::new(l).unwrap()
    }

    fn cert(sys: &ShiftSystem) -> GluingCertificate {
        let a = sys.alphabet() as u8;
        let pairs = (0..a).flat_map(|x| (0..a).map(move |y| (x, y))).collect();
        GluingCertificate::for_system(sys, res(7), 1, pairs).unwrap()
    }

    fn golden_two() -> LambdaSystem<f64> {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0, 0.5]).unwrap();
        let e = WordList::from_words(4, [[0u8, 1, 0, 1], [1, 0, 0, 1]]).unwrap();
        build_lambda(&g, &phi, e, &cert(&g), params(4, 1)).unwrap()
    }

    #[test]
    fn single_word_is_its_orbit() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::from_symbol_values(&f, &[0.2, 0.9]).unwrap();
        let e = WordList::from_words(5, [[0u8, 1, 1, 0, 1]]).unwrap();
        let l = build_lambda(&f, &phi, e, &cert(&f), params(5, 0)).unwrap();
        let p = l.path_pressure().unwrap().value;
        assert!((p - (0.2 * 2.0 + 0.9 * 3.0) / 5.0).abs() < 1e-12);
    }

    #[test]
    fn all_words_recover_the_system() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::from_fn(&f, 2, |b| 0.3 * b[0] as f64 + 0.5 * (b[0] * b[1]) as f64).unwrap();
        let words: Vec<Vec<u8>> = f.words_vec(6);
        let l = build_lambda(&f, &phi, WordList::from_words(6, &words).unwrap(), &cert(&f), params(6, 0)).unwrap();
        let p = l.path_pressure().unwrap().value;
        assert!((p - pressure_oracle(&f, &phi).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn renewal_matches_presentation() {
        let l = golden_two();
        assert_eq!(l.tau_used(), 1);
        let pres = l.presentation(1000).unwrap();
        assert!(pres.vertex_count() <= 2 * 4 + 4);
        let a = l.path_pressure().unwrap().value;
        let b = l.presentation_pressure(&pres).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        let e = l.label_pressure_enumerate(&pres, (2, 18), 10_000_000).unwrap();
        assert!((e.value - a).abs() < 0.05, "{} vs {a}", e.value);
        assert!(l.lower_bound(a) < a);
    }

    #[test]
    fn memory_two_presentation() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_fn(&g, 2, |b| [0.1, 0.7, -0.2][(b[0] + 2 * b[1]) as usize]).unwrap();
        let e = WordList::from_words(3, [[0u8, 1, 0], [0, 0, 1], [1, 0, 1]]).unwrap();
        let l = build_lambda(&g, &phi, e, &cert(&g), params(3, 1)).unwrap();
        let pres = l.presentation(1000).unwrap();
        let a = l.path_pressure().unwrap().value;
        let b = l.presentation_pressure(&pres).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn presentation_language_is_shift_invariant() {
        let l = golden_two();
        let pres = l.presentation(1000).unwrap();
        let succ = pres.successors();
        // every vertex has a successor and a predecessor
        assert!(succ.iter().all(|s| !s.is_empty()));
        let mut has_pred = vec![false; pres.vertex_count()];
        for &(_, v) in &pres.edges {
            has_pred[v] = true;
        }
        assert!(has_pred.iter().all(|&b| b));
    }

    #[test]
    fn tracing_and_separation_on_golden() {
        let l = golden_two();
        for n in 1..=3 {
            assert_eq!(l.check_tracing_exhaustive(n).unwrap(), 2usize.pow(n as u32));
            l.check_separation_exhaustive(n).unwrap();
        }
    }

    #[test]
    fn counting_bound_small_cases() {
        let l = golden_two();
        for n in 3..=5 {
            let r = verify_counting_bound(&l, n, res(7)).unwrap();
            assert!(r.holds, "{r:?}");
            assert!(r.exhaustive);
        }
    }

    #[test]
    fn max_plus_matches_enumeration() {
        let g = ShiftSystem::golden_mean();
        let one = Potential::from_symbol_values(&g, &[0.0, 0.5]).unwrap();
        let two = Potential::from_fn(&g, 2, |w| 0.1 * w[0] as f64 + 0.35 * w[1] as f64 + 0.05).unwrap();
        let sets: [&[[u8; 4]]; 3] = [
            &[[0, 1, 0, 1], [1, 0, 0, 1]],
            &[[0, 0, 0, 0], [0, 1, 0, 1], [1, 0, 1, 0]],
            &[[1, 0, 1, 0], [0, 0, 1, 0], [1, 0, 0, 1], [0, 1, 0, 0]],
        ];
        for (words, phi) in sets.iter().flat_map(|w| [(w, &one), (w, &two)]) {
            let l = build_lambda(&g, phi, WordList::from_words(4, *words).unwrap(), &cert(&g), params(4, 1)).unwrap();
            for n in 3..=6 {
                let a = counting_bound_with(&l, n, res(2), true).unwrap();
                let b = counting_bound_with(&l, n, res(2), false).unwrap();
                assert_eq!((a.method, b.method), (CountingMethod::Enumeration, CountingMethod::MaxPlus));
                assert!((a.theta_margin - b.theta_margin).abs() < 1e-12, "{a:?} {b:?}");
                assert_eq!(a.holds, b.holds);
            }
        }
    }

    #[test]
    fn empty_or_bad_sets_are_rejected() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::<f64>::zero(&g);
        assert!(build_lambda(&g, &phi, WordList::new(3), &cert(&g), params(3, 1)).is_err());
        let bad = WordList::from_words(2, [[1u8, 1]]).unwrap();
        assert!(build_lambda(&g, &phi, bad, &cert(&g), params(2, 1)).is_err());
        // certificate restricted to pairs that never need a connector
        let narrow = GluingCertificate::for_system(&g, res(7), 1, BTreeSet::from([(0, 0)])).unwrap();
        let e = WordList::from_words(2, [[0u8, 1], [1, 0]]).unwrap();
        assert!(build_lambda(&g, &phi, e, &narrow, params(2, 0)).is_err());
    }
}
