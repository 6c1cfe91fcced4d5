//! Partition functions, the finite-`n` pressure estimator and the transfer
//! matrix oracle.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::real;
use crate::scalar::{LogSumExp, Scalar};
use crate::segments::SegmentClass;
use crate::symbolic::{Resolution, ShiftSystem};

use super::block::{BlockGraph, BlockIndex};
use super::potential::Potential;

/// Default cap on the number of words enumerated by one partition function.
pub const DEFAULT_WORD_BUDGET: u64 = 50_000_000;

/// Power-iteration stopping rule of the oracle.
pub const ORACLE_TOL: f64 = 1e-12;
pub const ORACLE_MAX_ITER: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Enumeration,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorBound<S> {
    Bounded(S),
    Unbounded,
}

impl<S: Scalar> ErrorBound<S> {
    pub fn value(&self) -> Option<S> {
        match self {
            ErrorBound::Bounded(x) => Some(*x),
            ErrorBound::Unbounded => None,
        }
    }
}

impl<S: Scalar> Serialize for ErrorBound<S> {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            ErrorBound::Bounded(x) if x.is_finite() => ser.serialize_f64(x.as_f64()),
            _ => ser.serialize_str("unbounded"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PressureParams {
    pub n_min: usize,
    pub n_max: usize,
    pub delta: u32,
    /// `None` stands for `ε = 0`.
    pub eps: Option<u32>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SequencePoint<S: Scalar> {
    pub n: usize,
    #[serde(serialize_with = "real")]
    pub value: S,
}

/// A pressure value together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct PressureReport<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub value: S,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<PressureParams>,
    pub error_bound: ErrorBound<S>,
    /// `(1/n) ln Θ` for every `n` of an enumeration run.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<SequencePoint<S>>,
    /// Oracle only: the matrix is periodic and the eigenvalue bracket was
    /// taken over one full period of the iteration.
    pub periodic: bool,
    pub converged: bool,
    pub iterations: usize,
}

impl<S: Scalar> PressureReport<S> {
    pub fn exact(value: S) -> Self {
        PressureReport {
            value,
            method: Method::Oracle,
            params: None,
            error_bound: ErrorBound::Bounded(S::zero()),
            sequence: Vec::new(),
            periodic: false,
            converged: true,
            iterations: 0,
        }
    }

    /// `value ± error_bound` contains `x` up to `tol`.
    pub fn brackets(&self, x: S, tol: S) -> bool {
        match self.error_bound {
            ErrorBound::Bounded(e) => (self.value - x).abs() <= e + tol,
            ErrorBound::Unbounded => true,
        }
    }

    /// Same report with `c` added to every value.
    pub fn shifted(mut self, c: S) -> Self {
        self.value = self.value + c;
        for p in &mut self.sequence {
            p.value = p.value + c;
        }
        self
    }
}

/// Symbol counts that pin down `Θ(Y, φ, n, δ, ε)`.
#[derive(Clone, Copy, Debug)]
struct Windows {
    /// Cylinder length of a maximal `(n, δ)`-separated set.
    l: usize,
    /// Symbols of agreement inside the `(n, ε)`-ball; `None` for `ε = 0`.
    k: Option<usize>,
    /// Symbols needed to evaluate `Φ(·, n)`.
    t: usize,
}

impl Windows {
    fn new(phi_memory: usize, n: usize, delta: Resolution, eps: Option<Resolution>) -> Self {
        Windows { l: delta.window(n), k: eps.map(|e| e.window(n)), t: n + phi_memory - 1 }
    }

    /// Symbols of `u` that determine `sup_{x ∈ [u]} Φ(x, n, ε)`.
    fn pinned(&self) -> usize {
        self.k.map_or(self.l, |k| k.min(self.l))
    }

    fn enumerated(&self) -> usize {
        self.l.max(self.t).max(self.k.unwrap_or(0))
    }
}

/// `ln Θ(Y, φ, n, δ, ε)`.
///
/// A maximal `(n, δ)`-separated set has one point per admissible cylinder of
/// length `n + ℓ_δ - 1`, so `Θ` is the sum over those cylinders `[u]` that
/// meet `Y` of `exp sup_{x ∈ [u] ∩ Y} Φ(x, n, ε)`. `eps = None` means `ε = 0`.
/// Terms are reduced with a compensated log-sum-exp in a fixed order, so the
/// result does not depend on the number of rayon workers.
pub fn partition_function<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    y: &SegmentClass,
    n: usize,
    delta: Resolution,
    eps: Option<Resolution>,
    budget: Option<u64>,
) -> Result<S> {
    if n == 0 {
        return Err(Error::Precondition("partition function needs n >= 1".into()));
    }
    if y.is_empty_class() {
        return Ok(S::neg_infinity());
    }
    let win = Windows::new(phi.memory(), n, delta, eps);
    let r = phi.memory().max(2) - 1;
    if y.is_all() && win.pinned() >= r {
        return Ok(log_theta_full(sys, phi, n, win, r));
    }
    let w_len = win.enumerated();
    let total = sys.count_words(w_len);
    if let Some(limit) = budget {
        if total > limit.into() {
            return Err(Error::Budget { limit, at_n: n, needed: total.to_string() });
        }
    }
    Ok(log_theta_enumerate(sys, phi, y, n, win))
}

/// Transfer-matrix evaluation for `Y = X`: a forward log-sum-exp over the
/// pinned prefix, a max-plus tail up to `n + m - 1` symbols, and the count of
/// free symbols after the pinned prefix.
fn log_theta_full<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, n: usize, win: Windows, r: usize) -> S {
    let m = phi.memory();
    let idx = BlockIndex::new(sys, r);
    let states = idx.len();
    let pinned = win.pinned();
    let term = |i: usize, s: usize, sym: u8, buf: &mut Vec<u8>| -> S {
        // term k uses symbols k..k+m and is complete once symbol i = k+m-1 is read
        let k = (i + 1) as isize - m as isize;
        if k < 0 || k as usize >= n {
            return S::zero();
        }
        if m == 1 {
            phi.eval(&[sym])
        } else {
            buf.clear();
            buf.extend_from_slice(idx.block(s));
            buf.push(sym);
            phi.eval(buf)
        }
    };
    let mut buf = Vec::with_capacity(m);

    let mut fwd: Vec<S> = (0..states)
        .map(|s| {
            let b = idx.block(s);
            let mut acc = S::zero();
            for i in 0..r {
                let k = (i + 1) as isize - m as isize;
                if k >= 0 && (k as usize) < n {
                    acc = acc + phi.eval(&b[k as usize..]);
                }
            }
            acc
        })
        .collect();
    for i in r..pinned {
        let mut next = vec![LogSumExp::new(); states];
        for s in 0..states {
            if fwd[s] == S::neg_infinity() {
                continue;
            }
            for (sym, t) in idx.followers(s) {
                next[t].add(fwd[s] + term(i, s, sym, &mut buf));
            }
        }
        fwd = next.iter().map(|x| x.value()).collect();
    }

    let mut best = vec![S::zero(); states];
    for i in (pinned..win.t).rev() {
        best = (0..states)
            .map(|s| {
                idx.followers(s)
                    .map(|(sym, t)| term(i, s, sym, &mut buf) + best[t])
                    .fold(S::neg_infinity(), S::max)
            })
            .collect();
    }

    let free = win.l.saturating_sub(pinned);
    let a = sys.alphabet();
    let mut count = vec![S::zero(); a];
    for _ in 0..free {
        count = (0..a as u8)
            .map(|x| {
                let mut acc = LogSumExp::new();
                for y in sys.successors(x) {
                    acc.add(count[y as usize]);
                }
                acc.value()
            })
            .collect();
    }

    let mut total = LogSumExp::new();
    for s in 0..states {
        let last = *idx.block(s).last().unwrap() as usize;
        total.add(fwd[s] + best[s] + count[last]);
    }
    total.value()
}

fn log_theta_enumerate<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, y: &SegmentClass, n: usize, win: Windows) -> S {
    let w_len = win.enumerated();
    let pinned = win.pinned();
    let l = win.l;
    let chunk_len = chunk_depth(sys, l);
    let prefixes = sys.words_vec(chunk_len);
    let parts: Vec<LogSumExp<S>> = prefixes
        .par_iter()
        .map(|pre| {
            let mut acc = LogSumExp::new();
            let mut group: Option<(Vec<u8>, S)> = None;
            let mut ext = Vec::new();
            sys.visit_words_with_prefix(pre, w_len, |w| {
                if !y.contains(w, n) {
                    return;
                }
                let v = if pinned >= win.t {
                    phi.birkhoff_unchecked(w, n)
                } else {
                    max_extension(sys, phi, &w[..pinned], win.t, n, &mut ext)
                };
                match &mut group {
                    Some((u, best)) if u[..] == w[..l] => *best = best.max(v),
                    _ => {
                        if let Some((_, best)) = group.take() {
                            acc.add(best);
                        }
                        group = Some((w[..l].to_vec(), v));
                    }
                }
            });
            if let Some((_, best)) = group {
                acc.add(best);
            }
            acc
        })
        .collect();
    let mut total = LogSumExp::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

/// Prefix length used to split enumeration into independent chunks: the
/// shortest length with at least 64 words, never beyond the cylinder length.
fn chunk_depth(sys: &ShiftSystem, l: usize) -> usize {
    let mut k = 1;
    while k < l && k < 8 && sys.count_words_u64(k).unwrap_or(u64::MAX) < 64 {
        k += 1;
    }
    k.min(l)
}

/// `max Φ(y, n)` over admissible `y` of length `t` extending `prefix`.
fn max_extension<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, prefix: &[u8], t: usize, n: usize, buf: &mut Vec<u8>) -> S {
    buf.clear();
    buf.extend_from_slice(prefix);
    fn rec<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, t: usize, n: usize, buf: &mut Vec<u8>) -> S {
        if buf.len() == t {
            return phi.birkhoff_unchecked(buf, n);
        }
        let last = *buf.last().unwrap();
        let mut best = S::neg_infinity();
        for s in sys.successors(last) {
            buf.push(s);
            best = best.max(rec(sys, phi, t, n, buf));
            buf.pop();
        }
        best
    }
    rec(sys, phi, t, n, buf)
}

/// Finite-`n` estimate of `P(Y, φ, δ, ε)` from `a_n = (1/n) ln Θ(Y, φ, n, δ, ε)`.
///
/// `value` is the largest `a_n` over the upper half of the range and
/// `error_bound` is the spread of `a_n` over that half.
pub fn pressure_enumerate<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    y: &SegmentClass,
    delta: Resolution,
    eps: Option<Resolution>,
    n_range: (usize, usize),
    budget: Option<u64>,
) -> Result<PressureReport<S>> {
    let (n_min, n_max) = n_range;
    if n_min < 2 || n_max < n_min {
        return Err(Error::Precondition(format!("bad n range [{n_min}, {n_max}]")));
    }
    let mut seq = Vec::with_capacity(n_max - n_min + 1);
    for n in n_min..=n_max {
        let lt = partition_function(sys, phi, y, n, delta, eps, budget)?;
        seq.push(SequencePoint { n, value: lt / S::of_usize(n) });
    }
    let half = &seq[(seq.len() - 1) / 2..];
    let hi = half.iter().map(|p| p.value).fold(S::neg_infinity(), S::max);
    let lo = half.iter().map(|p| p.value).fold(S::infinity(), S::min);
    let error_bound = if hi == S::neg_infinity() {
        ErrorBound::Bounded(S::zero())
    } else if lo.is_finite() {
        ErrorBound::Bounded(hi - lo)
    } else {
        ErrorBound::Unbounded
    };
    Ok(PressureReport {
        value: hi,
        method: Method::Enumeration,
        params: Some(PressureParams { n_min, n_max, delta: delta.level(), eps: eps.map(Resolution::level) }),
        error_bound,
        sequence: seq,
        periodic: false,
        converged: true,
        iterations: 0,
    })
}

/// `P(φ)` as the log of the Perron root of the weighted block matrix.
pub fn pressure_oracle<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>) -> Result<PressureReport<S>> {
    sys.require_strongly_connected()?;
    let bg = BlockGraph::new(sys, phi);
    let root = bg.graph.perron_root(ORACLE_TOL, ORACLE_MAX_ITER)?;
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

#[cfg(test)]
mod tests {
    use super::*;

    fn res(l: u32) -> Resolution {
        Resolution::new(l).unwrap()
    }

    fn theta(sys: &ShiftSystem, phi: &Potential<f64>, y: &SegmentClass, n: usize, d: u32, e: Option<u32>) -> f64 {
        partition_function(sys, phi, y, n, res(d), e.map(res), None).unwrap().exp()
    }

    /// Everything-in-one predicate that forces the enumeration path.
    fn all_pred() -> SegmentClass {
        SegmentClass::from_fn("all (enumerated)", |_, _| true)
    }

    #[test]
    fn partition_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let zero = Potential::zero(&f);
        let all = SegmentClass::all();
        assert!((theta(&f, &zero, &all, 3, 1, Some(1)) - 8.0).abs() < 1e-9);
        let ln2 = Potential::from_symbol_values(&f, &[0.0, 2f64.ln()]).unwrap();
        assert!((theta(&f, &ln2, &all, 1, 1, None) - 3.0).abs() < 1e-12);
        let g = ShiftSystem::golden_mean();
        assert!((theta(&g, &Potential::zero(&g), &all, 2, 2, None) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fast_path_matches_enumeration() {
        let f = ShiftSystem::full(3).unwrap();
        let phi = Potential::from_fn(&f, 3, |b| (b[0] as f64) * 0.3 - (b[1] * b[2]) as f64 * 0.2 + 0.05 * b[2] as f64).unwrap();
        for n in 1..=5 {
            for d in 1..=3 {
                for e in [None, Some(1), Some(2), Some(4)] {
                    let a = theta(&f, &phi, &SegmentClass::all(), n, d, e);
                    let b = theta(&f, &phi, &all_pred(), n, d, e);
                    assert!((a.ln() - b.ln()).abs() < 1e-10, "n={n} d={d} e={e:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn restricted_class_counts_members_only() {
        let f = ShiftSystem::full(2).unwrap();
        let zero = Potential::zero(&f);
        let starts0 = SegmentClass::from_fn("starts with 0", |w, _| w[0] == 0);
        assert!((theta(&f, &zero, &starts0, 4, 1, None) - 8.0).abs() < 1e-9);
        assert_eq!(theta(&f, &zero, &SegmentClass::empty(), 4, 1, None), 0.0);
    }

    #[test]
    fn budget_is_enforced() {
        let f = ShiftSystem::full(2).unwrap();
        let e = partition_function(&f, &Potential::<f64>::zero(&f), &all_pred(), 12, res(1), None, Some(100)).unwrap_err();
        assert!(matches!(e, Error::Budget { at_n: 12, .. }));
    }

    #[test]
    fn oracle_examples() {
        let f2 = ShiftSystem::full(2).unwrap();
        let g = ShiftSystem::golden_mean();
        let p = pressure_oracle(&f2, &Potential::<f64>::zero(&f2)).unwrap();
        assert!((p.value - 2f64.ln()).abs() < 1e-12);
        let p = pressure_oracle(&g, &Potential::<f64>::zero(&g)).unwrap();
        assert!((p.value - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        let ln2 = Potential::from_symbol_values(&f2, &[0.0, 2f64.ln()]).unwrap();
        assert!((pressure_oracle(&f2, &ln2).unwrap().value - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn periodic_system_is_flagged() {
        let c = ShiftSystem::cycle(3).unwrap();
        let p = pressure_oracle(&c, &Potential::<f64>::from_symbol_values(&c, &[0.0, 0.3, 0.6]).unwrap()).unwrap();
        assert!(p.periodic);
        assert!((p.value - 0.3).abs() < 1e-12);
    }

    #[test]
    fn enumerate_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let all = SegmentClass::all();
        let r = pressure_enumerate(&f, &Potential::<f64>::zero(&f), &all, res(1), None, (2, 12), None).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-12);
        assert!(r.sequence.iter().all(|p| (p.value - 2f64.ln()).abs() < 1e-12));
        let g = ShiftSystem::golden_mean();
        let r = pressure_enumerate(&g, &Potential::<f64>::zero(&g), &all, res(1), None, (2, 20), None).unwrap();
        assert!((r.value - 0.481212).abs() < 0.05);
        let c = 0.5;
        let shifted = pressure_enumerate(&g, &Potential::<f64>::constant(&g, c), &all, res(1), None, (2, 20), None).unwrap();
        for (a, b) in r.sequence.iter().zip(&shifted.sequence) {
            assert!((b.value - a.value - c).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_oracle() {
        let g = ShiftSystem::golden_mean();
        let p = pressure_oracle(&g, &Potential::<f32>::zero(&g)).unwrap();
        assert!((p.value - 0.481_211_8).abs() < 1e-5);
    }
}
