//! Ergodic Markov and periodic-orbit measures with closed-form pressure.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{fmt_real, real};
use crate::scalar::{CompensatedSum, Scalar};
use crate::symbolic::{ShiftSystem, Word};
use crate::thermo::pressure::{ORACLE_MAX_ITER, ORACLE_TOL};
use crate::thermo::{BlockGraph, BlockIndex, Potential};

/// Stationary Markov measure on the `r`-block presentation of a system.
/// With `r = 1` the states are the symbols and `Q` is an `A×A` matrix.
#[derive(Clone, Debug)]
pub struct MarkovMeasure<S> {
    index: BlockIndex,
    q: Vec<Vec<S>>,
    pi: Vec<S>,
}

impl<S: Scalar> MarkovMeasure<S> {
    /// Chain with transition matrix `q` over the admissible `r`-blocks
    /// (lexicographic order). Rows must sum to one and charge only allowed
    /// block transitions; the stationary vector is computed.
    pub fn new(sys: &ShiftSystem, r: usize, q: Vec<Vec<S>>) -> Result<Self> {
        let index = BlockIndex::new(sys, r);
        let k = index.len();
        if q.len() != k || q.iter().any(|row| row.len() != k) {
            return Err(Error::Precondition(format!("transition matrix must be {k}×{k}")));
        }
        let tol = S::tolerance(1e-12);
        for (u, row) in q.iter().enumerate() {
            let mut sum = CompensatedSum::new();
            for (v, &p) in row.iter().enumerate() {
                if p < S::zero() || !p.is_finite() {
                    return Err(Error::Precondition(format!("Q[{u}][{v}] = {p} is not a probability")));
                }
                if p > S::zero() && !index.followers(u).any(|(_, t)| t == v) {
                    return Err(Error::Precondition(format!("Q[{u}][{v}] > 0 on a forbidden transition")));
                }
                sum.add(p);
            }
            if (sum.value() - S::one()).abs() > tol {
                return Err(Error::Precondition(format!("row {u} of Q sums to {}", sum.value())));
            }
        }
        let pi = stationary(&q)?;
        Ok(MarkovMeasure { index, q, pi })
    }

    /// Bernoulli measure on a full shift.
    pub fn bernoulli(sys: &ShiftSystem, probs: &[S]) -> Result<Self> {
        if !sys.is_full() || probs.len() != sys.alphabet() {
            return Err(Error::Precondition("Bernoulli measures need a full shift and one weight per symbol".into()));
        }
        Self::new(sys, 1, vec![probs.to_vec(); probs.len()])
    }

    /// Equilibrium chain of `φ`: `Q[u][v] = L[u][v] r_v / (λ r_u)` and
    /// `π_u ∝ l_u r_u` from the Perron data of the weighted block matrix.
    pub fn gibbs(sys: &ShiftSystem, phi: &Potential<S>) -> Result<Self> {
        sys.require_strongly_connected()?;
        let bg = BlockGraph::new(sys, phi);
        let root = bg.graph.perron_root(ORACLE_TOL, ORACLE_MAX_ITER)?;
        let lam = root.log_radius;
        let (right, left) = bg.graph.perron_vectors(lam, 1e-15, ORACLE_MAX_ITER);
        let k = bg.index.len();
        let mut q = vec![vec![S::zero(); k]; k];
        for (u, v, w) in bg.graph.edges() {
            q[u][v] = (w - lam).exp() * right[v] / right[u];
        }
        for row in &mut q {
            let s: S = row.iter().copied().sum();
            row.iter_mut().for_each(|x| *x = *x / s);
        }
        let mut pi: Vec<S> = left.iter().zip(&right).map(|(a, b)| *a * *b).collect();
        let z: S = pi.iter().copied().sum();
        pi.iter_mut().for_each(|x| *x = *x / z);
        Ok(MarkovMeasure { index: bg.index, q, pi })
    }

    pub fn width(&self) -> usize {
        self.index.width()
    }

    pub fn transition(&self) -> &[Vec<S>] {
        &self.q
    }

    pub fn stationary(&self) -> &[S] {
        &self.pi
    }

    pub fn index(&self) -> &BlockIndex {
        &self.index
    }

    /// `μ([w])` for `|w| >= r`.
    pub fn cylinder(&self, w: &[u8]) -> S {
        let r = self.index.width();
        let Some(mut s) = self.index.state(w) else {
            return S::zero();
        };
        let mut p = self.pi[s];
        for &c in &w[r..] {
            match self.index.step(s, c) {
                Some(t) => {
                    p = p * self.q[s][t];
                    s = t;
                }
                None => return S::zero(),
            }
        }
        p
    }
}

/// Stationary vector of a row-stochastic matrix by power iteration on the
/// lazy chain `(Q + I)/2`.
fn stationary<S: Scalar>(q: &[Vec<S>]) -> Result<Vec<S>> {
    let k = q.len();
    let half = S::of(0.5);
    let tol = S::tolerance(ORACLE_TOL) * S::of(1e-3);
    let mut x = vec![S::one() / S::of_usize(k); k];
    for _ in 0..ORACLE_MAX_ITER {
        let mut y: Vec<S> = x.iter().map(|&v| v * half).collect();
        for (u, row) in q.iter().enumerate() {
            for (v, &p) in row.iter().enumerate() {
                if p > S::zero() {
                    y[v] = y[v] + half * x[u] * p;
                }
            }
        }
        let z: S = y.iter().copied().sum();
        y.iter_mut().for_each(|v| *v = *v / z);
        let diff = x.iter().zip(&y).map(|(a, b)| (*a - *b).abs()).fold(S::zero(), S::max);
        x = y;
        if diff <= tol {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Invariant measure on the periodic orbit of a primitive cyclic word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicOrbitMeasure {
    cycle: Word,
}

impl PeriodicOrbitMeasure {
    pub fn new(sys: &ShiftSystem, cycle: Word) -> Result<Self> {
        let w = cycle.symbols();
        if w.is_empty() {
            return Err(Error::InvalidWord("empty cycle".into()));
        }
        sys.check_admissible(w)?;
        if !sys.allows(*w.last().unwrap(), w[0]) {
            return Err(Error::InvalidWord(format!("cycle {cycle} does not close up")));
        }
        if !is_primitive(w) {
            return Err(Error::InvalidWord(format!("cycle {cycle} is a power of a shorter cycle")));
        }
        Ok(PeriodicOrbitMeasure { cycle })
    }

    pub fn cycle(&self) -> &Word {
        &self.cycle
    }

    pub fn period(&self) -> usize {
        self.cycle.len()
    }
}

fn is_primitive(w: &[u8]) -> bool {
    let p = w.len();
    (1..p).filter(|d| p % d == 0).all(|d| (0..p).any(|i| w[i] != w[i % d]))
}

/// `h_μ = -Σ_u π_u Σ_v Q[u][v] ln Q[u][v]`.
pub fn markov_entropy<S: Scalar>(mu: &MarkovMeasure<S>) -> S {
    let mut acc = CompensatedSum::new();
    for (u, row) in mu.q.iter().enumerate() {
        for &p in row {
            if p > S::zero() {
                acc.add(-mu.pi[u] * p * p.ln());
            }
        }
    }
    acc.value()
}

/// `∫ φ dμ` for a Markov measure.
pub fn markov_integral<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, mu: &MarkovMeasure<S>) -> S {
    let len = phi.memory().max(mu.width());
    let mut acc = CompensatedSum::new();
    sys.visit_words_with_prefix(&[], len, |w| {
        let p = mu.cylinder(w);
        if p > S::zero() {
            acc.add(p * phi.eval(w));
        }
    });
    acc.value()
}

/// An ergodic measure with computable pressure.
#[derive(Clone, Debug)]
pub enum Measure<S> {
    Markov(MarkovMeasure<S>),
    Periodic(PeriodicOrbitMeasure),
}

/// Entropy, integral and pressure `h_μ + ∫φ dμ` of a measure.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasurePressure<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub entropy: S,
    #[serde(serialize_with = "real")]
    pub integral: S,
    #[serde(serialize_with = "real")]
    pub pressure: S,
}

pub fn measure_pressure<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, mu: &Measure<S>) -> MeasurePressure<S> {
    let (entropy, integral) = match mu {
        Measure::Markov(m) => (markov_entropy(m), markov_integral(sys, phi, m)),
        Measure::Periodic(c) => (S::zero(), phi.cyclic_sum(c.cycle.symbols()) / S::of_usize(c.period())),
    };
    MeasurePressure { entropy, integral, pressure: entropy + integral }
}

/// Primitive cycles up to length `max_len`, one per orbit (the
/// lexicographically least rotation), ordered by length then lexicographically.
pub fn primitive_cycles(sys: &ShiftSystem, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for p in 1..=max_len {
        sys.visit_words_with_prefix(&[], p, |w| {
            if sys.allows(w[p - 1], w[0]) && is_primitive(w) && (1..p).all(|i| w[i..].iter().chain(&w[..i]).cmp(w.iter()).is_gt()) {
                out.push(Word::from(w));
            }
        });
    }
    out
}

#[derive(Clone, Copy, Debug)]
pub struct SpectrumConfig {
    pub max_cycle_len: usize,
    /// Interior interpolation points per cycle, `t = 1 - (1 - i/grid)²` for
    /// `0 < i < grid`; entropy moves fastest near the cycle end.
    pub grid: usize,
    /// Cap on the number of sampled measures.
    pub max_measures: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { max_cycle_len: 10, grid: 50, max_measures: 200_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumRow<S: Scalar> {
    pub kind: String,
    #[serde(serialize_with = "real")]
    pub parameter: S,
    #[serde(serialize_with = "real")]
    pub entropy: S,
    #[serde(serialize_with = "real")]
    pub integral: S,
    #[serde(serialize_with = "real")]
    pub pressure: S,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSample<S: Scalar> {
    /// Sorted by pressure; rows within `1e-12` of the previous one are merged.
    pub rows: Vec<SpectrumRow<S>>,
    /// The measure cap cut the cycle list short.
    pub partial: bool,
}

impl<S: Scalar> SpectrumSample<S> {
    pub fn pressures(&self) -> Vec<S> {
        self.rows.iter().map(|r| r.pressure).collect()
    }

    /// Largest gap between consecutive samples inside `[lo, hi]`, counting
    /// the distance from each endpoint to the nearest sample.
    pub fn max_gap(&self, lo: S, hi: S) -> S {
        let mut pts: Vec<S> = self.pressures().into_iter().filter(|p| *p >= lo && *p <= hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.windows(2).map(|w| w[1] - w[0]).fold(S::zero(), S::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,parameter,entropy,integral,pressure\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.kind,
                fmt_real(r.parameter.as_f64()),
                fmt_real(r.entropy.as_f64()),
                fmt_real(r.integral.as_f64()),
                fmt_real(r.pressure.as_f64())
            ));
        }
        out
    }
}

/// Samples `{P_μ(φ)}` over periodic orbits, the equilibrium chain and the
/// chains interpolating between the two.
pub fn spectrum_sample<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, cfg: &SpectrumConfig) -> Result<SpectrumSample<S>> {
    let gibbs = MarkovMeasure::gibbs(sys, phi)?;
    let mut rows = Vec::new();
    let g = measure_pressure(sys, phi, &Measure::Markov(gibbs.clone()));
    rows.push(SpectrumRow { kind: "gibbs".into(), parameter: S::zero(), entropy: g.entropy, integral: g.integral, pressure: g.pressure });

    let per_cycle = 1 + cfg.grid.saturating_sub(1);
    let mut cycles = primitive_cycles(sys, cfg.max_cycle_len);
    let room = cfg.max_measures.saturating_sub(1) / per_cycle;
    let partial = cycles.len() > room;
    cycles.truncate(room);

    let blocks: Vec<Vec<SpectrumRow<S>>> = cycles
        .par_iter()
        .map(|c| {
            let mut out = Vec::with_capacity(per_cycle);
            let po = PeriodicOrbitMeasure { cycle: c.clone() };
            let mp = measure_pressure(sys, phi, &Measure::Periodic(po));
            out.push(SpectrumRow {
                kind: format!("cycle:{c}"),
                parameter: S::of_usize(c.len()),
                entropy: mp.entropy,
                integral: mp.integral,
                pressure: mp.pressure,
            });
            let qc = cycle_chain(&gibbs, c.symbols());
            for i in 1..cfg.grid {
                let u = S::one() - S::of_usize(i) / S::of_usize(cfg.grid);
                let t = S::one() - u * u;
                if let Ok(mu) = interpolate(sys, &gibbs, &qc, t) {
                    let mp = measure_pressure(sys, phi, &Measure::Markov(mu));
                    out.push(SpectrumRow {
                        kind: format!("interp:{c}"),
                        parameter: t,
                        entropy: mp.entropy,
                        integral: mp.integral,
                        pressure: mp.pressure,
                    });
                }
            }
            out
        })
        .collect();
    rows.extend(blocks.into_iter().flatten());
    rows.sort_by(|a, b| a.pressure.partial_cmp(&b.pressure).unwrap().then_with(|| a.kind.cmp(&b.kind)));
    let mut merged: Vec<SpectrumRow<S>> = Vec::with_capacity(rows.len());
    for r in rows {
        if merged.last().is_some_and(|l| (r.pressure - l.pressure).abs() <= S::of(1e-12)) {
            continue;
        }
        merged.push(r);
    }
    Ok(SpectrumSample { rows: merged, partial })
}

/// Empirical transition frequencies of the block sequence along a cycle;
/// states off the cycle get an all-zero row.
fn cycle_chain<S: Scalar>(gibbs: &MarkovMeasure<S>, w: &[u8]) -> Vec<Vec<S>> {
    let idx = &gibbs.index;
    let k = idx.len();
    let r = idx.width();
    let p = w.len();
    let ext: Vec<u8> = w.iter().copied().cycle().take(p + r).collect();
    let mut q = vec![vec![S::zero(); k]; k];
    for i in 0..p {
        let u = idx.state(&ext[i..]).unwrap();
        let v = idx.state(&ext[i + 1..]).unwrap();
        q[u][v] = q[u][v] + S::one();
    }
    for row in &mut q {
        let s: S = row.iter().copied().sum();
        if s > S::zero() {
            row.iter_mut().for_each(|x| *x = *x / s);
        }
    }
    q
}

fn interpolate<S: Scalar>(sys: &ShiftSystem, gibbs: &MarkovMeasure<S>, qc: &[Vec<S>], t: S) -> Result<MarkovMeasure<S>> {
    let q: Vec<Vec<S>> = gibbs
        .q
        .iter()
        .zip(qc)
        .map(|(g, c)| {
            let row: Vec<S> = g.iter().zip(c).map(|(a, b)| (S::one() - t) * *a + t * *b).collect();
            let s: S = row.iter().copied().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MarkovMeasure::new(sys, gibbs.width(), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::{pressure_oracle, pstar};

    #[test]
    fn entropy_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let u = MarkovMeasure::bernoulli(&f, &[0.5_f64, 0.5]).unwrap();
        assert!((markov_entropy(&u) - 2f64.ln()).abs() < 1e-12);
        let d = MarkovMeasure::bernoulli(&f, &[1.0_f64, 0.0]).unwrap();
        assert_eq!(markov_entropy(&d), 0.0);
        let b = MarkovMeasure::bernoulli(&f, &[0.25_f64, 0.75]).unwrap();
        assert!((markov_entropy(&b) - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn pressure_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let zero = Potential::<f64>::zero(&f);
        let u = Measure::Markov(MarkovMeasure::bernoulli(&f, &[0.5, 0.5]).unwrap());
        assert!((measure_pressure(&f, &zero, &u).pressure - 2f64.ln()).abs() < 1e-12);
        let x0 = Potential::from_symbol_values(&f, &[0.0, 1.0]).unwrap();
        let fix = Measure::Periodic(PeriodicOrbitMeasure::new(&f, "1".parse().unwrap()).unwrap());
        assert_eq!(measure_pressure(&f, &x0, &fix).pressure, 1.0);
        let g = ShiftSystem::golden_mean();
        let gz = Potential::<f64>::zero(&g);
        let parry = Measure::Markov(MarkovMeasure::gibbs(&g, &gz).unwrap());
        let p = measure_pressure(&g, &gz, &parry).pressure;
        assert!((p - pressure_oracle(&g, &gz).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn gibbs_attains_pressure_with_memory() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_fn(&g, 3, |b| 0.1 * b[0] as f64 + 0.7 * b[2] as f64 - 0.2 * b[1] as f64).unwrap();
        let mu = Measure::Markov(MarkovMeasure::gibbs(&g, &phi).unwrap());
        let p = measure_pressure(&g, &phi, &mu).pressure;
        assert!((p - pressure_oracle(&g, &phi).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn periodic_measure_validation() {
        let g = ShiftSystem::golden_mean();
        assert!(PeriodicOrbitMeasure::new(&g, "0101".parse().unwrap()).is_err());
        assert!(PeriodicOrbitMeasure::new(&g, "011".parse().unwrap()).is_err());
        assert!(PeriodicOrbitMeasure::new(&g, "1".parse().unwrap()).is_err());
        assert!(PeriodicOrbitMeasure::new(&g, "001".parse().unwrap()).is_ok());
    }

    #[test]
    fn cycles_are_necklaces() {
        let f = ShiftSystem::full(2).unwrap();
        // primitive binary necklaces of length 1..=4: 2, 1, 2, 3
        assert_eq!(primitive_cycles(&f, 4).len(), 8);
        let g = ShiftSystem::golden_mean();
        let c: Vec<String> = primitive_cycles(&g, 3).iter().map(|w| w.to_string()).collect();
        assert_eq!(c, ["0", "01", "001"]);
    }

    #[test]
    fn spectrum_respects_variational_principle() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::from_symbol_values(&f, &[0.0_f64, 1.0]).unwrap();
        let cfg = SpectrumConfig { max_cycle_len: 6, grid: 10, max_measures: 10_000 };
        let s = spectrum_sample(&f, &phi, &cfg).unwrap();
        let p = pressure_oracle(&f, &phi).unwrap().value;
        assert!(s.pressures().iter().all(|&x| x <= p + 1e-9));
        let ps = pstar(&f, &phi).unwrap();
        assert!(s.pressures().iter().any(|&x| (x - ps).abs() < 1e-12));
        assert!(s.pressures().iter().any(|&x| (x - p).abs() < 1e-9));
    }

    #[test]
    fn spectrum_without_cycles_is_gibbs_only() {
        let f = ShiftSystem::full(2).unwrap();
        let cfg = SpectrumConfig { max_cycle_len: 0, grid: 50, max_measures: 100 };
        let s = spectrum_sample(&f, &Potential::<f64>::zero(&f), &cfg).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].kind, "gibbs");
        assert!(s.to_csv().starts_with("kind,parameter,entropy,integral,pressure\n"));
    }

    #[test]
    fn full_shift_spectrum_has_no_wide_gaps() {
        let f = ShiftSystem::full(2).unwrap();
        let s = spectrum_sample(&f, &Potential::<f64>::zero(&f), &SpectrumConfig::default()).unwrap();
        let gap = s.max_gap(0.0, 2f64.ln());
        assert!(gap < 0.05, "{gap}");
    }

}
