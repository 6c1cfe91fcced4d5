//! Construction of a subsystem `Λ` whose pressure lies within `η₀` of a
//! prescribed value `α ∈ (P*(φ), P(φ))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gluing::{check_gluing, Connector, GluingSampling};
use crate::lambda::{build_lambda, separated_count, word_weight, LambdaParams, LambdaSystem, Presentation, WordList};
use crate::report::real;
use crate::scalar::{log_add, Scalar};
use crate::segments::{restrict_gm, CTDecomposition, SegmentClass};
use crate::symbolic::{Resolution, ShiftSystem, Word};
use crate::thermo::{
    bowen_bound, partition_function, pressure_oracle, pstar, sup_birkhoff, ErrorBound, Potential, PressureReport, SequencePoint,
    DEFAULT_WORD_BUDGET,
};

/// Sandwich tolerance on oracle values.
pub const SANDWICH_TOL: f64 = 1e-6;

/// Resolution levels `ℓ_ε < ℓ_γ < ℓ_δ` with `16δ < 8γ < ε`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CtResolutions {
    #[serde(serialize_with = "ser_level")]
    pub eps: Resolution,
    #[serde(serialize_with = "ser_level")]
    pub gamma: Resolution,
    #[serde(serialize_with = "ser_level")]
    pub delta: Resolution,
}

fn ser_level<Ser: serde::Serializer>(r: &Resolution, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    ser.serialize_u32(r.level())
}

impl CtResolutions {
    /// `8·2^-ℓγ < 2^-ℓε` needs `ℓγ >= ℓε + 4`; `16·2^-ℓδ < 8·2^-ℓγ` needs
    /// `ℓδ >= ℓγ + 2`.
    pub fn new(eps: u32, gamma: u32, delta: u32) -> Result<Self> {
        if gamma < eps + 4 || delta < gamma + 2 {
            return Err(Error::Config(format!(
                "resolution levels eps={eps}, gamma={gamma}, delta={delta} violate 16δ < 8γ < ε \
                 (need gamma >= eps + 4 and delta >= gamma + 2)"
            )));
        }
        Ok(CtResolutions { eps: Resolution::new(eps)?, gamma: Resolution::new(gamma)?, delta: Resolution::new(delta)? })
    }
}

impl Default for CtResolutions {
    fn default() -> Self {
        CtResolutions::new(1, 5, 7).expect("default levels are valid")
    }
}

#[derive(Clone, Debug)]
pub struct ConstructConfig {
    pub res: CtResolutions,
    pub n_cap: usize,
    pub m_candidates: Vec<usize>,
    /// Largest `n` used to measure `C₀` and `N₁`.
    pub fit_n_max: usize,
    pub seed: u64,
    pub budget: u64,
    /// Presentations with more vertices are not materialized.
    pub explicit_limit: usize,
    /// Label enumeration only runs on presentations up to this size; it
    /// needs `n` well past `N` to converge.
    pub enumerate_limit: usize,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            res: CtResolutions::default(),
            n_cap: 24,
            m_candidates: vec![0, 1, 2, 4],
            fit_n_max: 16,
            seed: 0,
            budget: DEFAULT_WORD_BUDGET,
            explicit_limit: 20_000,
            enumerate_limit: 256,
        }
    }
}

/// One logged inequality `lhs < rhs`.
#[derive(Clone, Debug, Serialize)]
pub struct Inequality<S: Scalar> {
    pub name: &'static str,
    #[serde(serialize_with = "real")]
    pub lhs: S,
    #[serde(serialize_with = "real")]
    pub rhs: S,
    pub holds: bool,
}

impl<S: Scalar> Inequality<S> {
    fn new(name: &'static str, lhs: S, rhs: S) -> Self {
        Inequality { name, lhs, rhs, holds: lhs < rhs }
    }

    pub fn margin(&self) -> S {
        self.rhs - self.lhs
    }
}

/// Inequalities evaluated for one `(M, N)`.
#[derive(Clone, Debug, Serialize)]
pub struct Candidate<S: Scalar> {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau: usize,
    pub inequalities: Vec<Inequality<S>>,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl<S: Scalar> Candidate<S> {
    fn failing(&self) -> String {
        if let Some(note) = &self.note {
            return format!("M={} N={}: {note}", self.m, self.n);
        }
        let f: Vec<String> = self
            .inequalities
            .iter()
            .filter(|i| !i.holds)
            .map(|i| format!("{}: {} < {} fails (margin {})", i.name, i.lhs, i.rhs, i.margin()))
            .collect();
        format!("M={} N={}: {}", self.m, self.n, f.join("; "))
    }
}

/// Measured lower-bound constants for `Θ(𝒢_M, 2γ, n) >= C₀ e^{nP}`.
#[derive(Clone, Debug, Serialize)]
pub struct FittedConstants<S: Scalar> {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(serialize_with = "real")]
    pub c0: S,
    pub n1: usize,
    /// `ln Θ(𝒢_M, 2γ, n) - nP` for `n = 1..`.
    pub residuals: Vec<SequencePoint<S>>,
}

/// Result of [`construct_intermediate`]. Pressures are for the original
/// potential.
#[derive(Clone, Debug, Serialize)]
pub struct Construction<S: Scalar> {
    pub params: LambdaParams<S>,
    pub resolutions: CtResolutions,
    #[serde(serialize_with = "real")]
    pub pressure: S,
    #[serde(serialize_with = "real")]
    pub pstar: S,
    /// `φ⁻`, subtracted internally.
    #[serde(serialize_with = "real")]
    pub normalization: S,
    pub constants: Vec<FittedConstants<S>>,
    pub search: Vec<Candidate<S>>,
    /// Connector length actually used between words of `E`.
    pub tau_used: usize,
    pub connectors: Vec<Connector>,
    pub words: WordList,
    /// `ln Σ_E e^{Φ(w, N)}` for the original potential.
    #[serde(serialize_with = "real")]
    pub log_mass: S,
    pub lower: PressureReport<S>,
    pub upper: PressureReport<S>,
    /// Perron value of the explicit presentation, when it was built.
    pub upper_presentation: Option<PressureReport<S>>,
    /// Label enumeration on the explicit presentation, when it was built.
    pub upper_enumeration: Option<PressureReport<S>>,
    #[serde(serialize_with = "real")]
    pub lower_margin: S,
    #[serde(serialize_with = "real")]
    pub upper_margin: S,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presentation: Option<Presentation>,
    #[serde(skip)]
    pub lambda: LambdaSystem<S>,
}

/// `N`-words of a class with their weights, in lexicographic order.
struct Pool<S> {
    weights: Vec<S>,
    log_mass: S,
}

fn pool_of<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, g: &SegmentClass, n: usize, budget: u64) -> Result<Pool<S>> {
    let need = sys.count_words(phi.span(n));
    if need > budget.into() {
        return Err(Error::Budget { limit: budget, at_n: n, needed: need.to_string() });
    }
    let mut weights = Vec::new();
    let mut log_mass = S::neg_infinity();
    sys.visit_words_with_prefix(&[], n, |w| {
        let v = if g.contains(w, n) { word_weight(sys, phi, w) } else { S::neg_infinity() };
        log_mass = log_add(log_mass, v);
        weights.push(v);
    });
    Ok(Pool { weights, log_mass })
}

/// Greedy choice of `E` from a pool: heaviest words first, ties broken
/// lexicographically, skipping words that would push the sum past
/// `e^{N(α+η)}` and stopping once it exceeds `e^{N(α-η)}`. Returns the
/// chosen lexicographic ranks in increasing order.
fn greedy<S: Scalar>(weights: &[S], lo: S, hi: S) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > S::neg_infinity()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut sum = S::neg_infinity();
    let mut chosen = Vec::new();
    for i in order {
        let next = log_add(sum, weights[i]);
        if next >= hi {
            continue;
        }
        sum = next;
        chosen.push(i);
        if sum > lo {
            chosen.sort_unstable();
            return Ok(chosen);
        }
    }
    Err(Error::Infeasible(format!(
        "greedy selection reached ln mass {sum}, not above N(α-η) = {lo} while staying below N(α+η) = {hi}"
    )))
}

/// Prunes the `N`-words of `gm` to `E` with
/// `e^{N(α-η)} < Σ_E e^{Φ(w,N)} < e^{N(α+η)}`.
#[allow(clippy::too_many_arguments)]
pub fn select_e_set<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    gm: &SegmentClass,
    alpha: S,
    eta: S,
    n: usize,
    budget: u64,
) -> Result<WordList> {
    let nn = S::of_usize(n);
    let sup = sup_birkhoff(sys, phi, n);
    if sup >= nn * (alpha - eta) {
        return Err(Error::Infeasible(format!(
            "sup Φ(x, N) < N(α-η) fails: {sup} >= {}",
            nn * (alpha - eta)
        )));
    }
    let pool = pool_of(sys, phi, gm, n, budget)?;
    if pool.log_mass <= nn * (alpha + eta) {
        return Err(Error::Infeasible(format!(
            "N(α+η) < ln Σ e^Φ over the pool fails: {} >= {}",
            nn * (alpha + eta),
            pool.log_mass
        )));
    }
    let ranks = greedy(&pool.weights, nn * (alpha - eta), nn * (alpha + eta))?;
    extract(sys, n, &ranks)
}

fn extract(sys: &ShiftSystem, n: usize, ranks: &[usize]) -> Result<WordList> {
    let mut out = WordList::new(n);
    let mut rank = 0;
    let mut next = 0;
    let mut err = None;
    sys.visit_words_with_prefix(&[], n, |w| {
        if next < ranks.len() && ranks[next] == rank {
            if let Err(e) = out.push(w) {
                err = Some(e);
            }
            next += 1;
        }
        rank += 1;
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn fit_constants<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    gm: &SegmentClass,
    m: usize,
    p: S,
    cfg: &ConstructConfig,
) -> Result<FittedConstants<S>> {
    let d = cfg.res.gamma.scaled(2);
    let mut residuals = Vec::new();
    for n in 1..=cfg.fit_n_max {
        let t = partition_function(sys, phi, gm, n, d, None, Some(cfg.budget))?;
        residuals.push(SequencePoint { n, value: t - S::of_usize(n) * p });
    }
    let stable_from = |i: usize| {
        let tail = &residuals[i..];
        let hi = tail.iter().map(|r| r.value).fold(S::neg_infinity(), S::max);
        let lo = tail.iter().map(|r| r.value).fold(S::infinity(), S::min);
        hi - lo <= S::of(0.1)
    };
    let i1 = (0..residuals.len()).find(|&i| stable_from(i)).unwrap_or(residuals.len() - 1);
    let c0 = residuals[i1..].iter().map(|r| r.value).fold(S::infinity(), S::min).exp();
    Ok(FittedConstants { m, c0, n1: residuals[i1].n, residuals })
}

/// Evaluates the conditions on `N` that do not need the word pool.
#[allow(clippy::too_many_arguments)]
fn cheap_inequalities<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    gm: &SegmentClass,
    consts: &FittedConstants<S>,
    alpha: S,
    eta: S,
    n: usize,
    tau: usize,
    res: &CtResolutions,
) -> Vec<Inequality<S>> {
    let nn = S::of_usize(n);
    let t = S::of_usize(tau);
    let phi_plus = phi.max_value();
    let var = phi.max_value() - phi.min_value();
    let v_bowen = bowen_bound(sys, phi, gm, res.delta, 0).certified;
    let s = separated_count(sys, tau, res.delta);
    vec![
        Inequality::new("word_weight_cap", sup_birkhoff(sys, phi, n), nn * (alpha - eta)),
        Inequality::new("n_past_n1", S::of_usize(consts.n1.max(1)), nn),
        Inequality::new("c0_growth", S::zero(), consts.c0.ln() + nn * eta),
        Inequality::new("doubling", S::of(2f64.ln()), S::of(2.0) * nn * eta),
        Inequality::new("gap_ratio", alpha * t / eta, nn),
        Inequality::new("n_past_tau", t, nn),
        Inequality::new("bowen_slack", v_bowen + S::of_usize(2 * consts.m) * var, nn * eta),
        Inequality::new("connector_weight", t * phi_plus, nn * eta),
        Inequality::new("connector_count", S::of_usize(tau + 1).ln() + S::of(s.ln()), nn * eta),
    ]
}

/// Builds `Λ` for the target `α` and certifies `α - η₀ <= P(Y) <= P(Λ) <= α + η₀`
/// with oracle values.
pub fn construct_intermediate<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    dec: &CTDecomposition,
    alpha: S,
    eta0: S,
    cfg: &ConstructConfig,
) -> Result<Construction<S>> {
    sys.require_strongly_connected()?;
    if !(eta0 > S::zero()) {
        return Err(Error::Precondition(format!("η₀ must be positive, got {eta0}")));
    }
    if cfg.n_cap == 0 || cfg.m_candidates.is_empty() || cfg.fit_n_max == 0 {
        return Err(Error::Config("n_cap, fit_n_max and the M candidates must be nonempty".into()));
    }
    let p = pressure_oracle(sys, phi)?.value;
    let ps = pstar(sys, phi)?;
    if !(ps < alpha && alpha < p) {
        return Err(Error::Precondition(format!("need P*(φ) < α < P(φ), got P* = {ps}, α = {alpha}, P = {p}")));
    }
    let shift = phi.min_value();
    let phi_n = phi.shifted(-shift);
    let alpha_n = alpha - shift;
    let p_n = p - shift;
    let eta = (eta0 / S::of(5.0)).min(alpha_n / S::of(5.0));

    let classes: Vec<(usize, SegmentClass)> = cfg.m_candidates.iter().map(|&m| (m, restrict_gm(dec, m))).collect();
    let mut constants: Vec<Option<FittedConstants<S>>> = vec![None; classes.len()];
    let mut search = Vec::new();
    for n in 1..=cfg.n_cap {
        for (k, (m, gm)) in classes.iter().enumerate() {
            let sampling = GluingSampling { seed: cfg.seed, ..GluingSampling::default() };
            let cert = match check_gluing(sys, gm, cfg.res.delta, n, sampling) {
                Ok(c) => c,
                Err(Error::Structural(msg)) => {
                    let note = Some(format!("gluing fails: {msg}"));
                    search.push(Candidate { m: *m, n, tau: 0, inequalities: Vec::new(), feasible: false, note });
                    continue;
                }
                Err(e) => return Err(e),
            };
            if constants[k].is_none() {
                constants[k] = Some(fit_constants(sys, &phi_n, gm, *m, p_n, cfg)?);
            }
            let consts = constants[k].as_ref().unwrap();
            let mut ineq = cheap_inequalities(sys, &phi_n, gm, consts, alpha_n, eta, n, cert.tau, &cfg.res);
            let mut cand = Candidate { m: *m, n, tau: cert.tau, inequalities: Vec::new(), feasible: false, note: None };
            if ineq.iter().all(|i| i.holds) {
                let pool = pool_of(sys, &phi_n, gm, n, cfg.budget)?;
                let nn = S::of_usize(n);
                ineq.push(Inequality::new("pool_mass", nn * (alpha_n + eta), pool.log_mass));
                cand.feasible = ineq.iter().all(|i| i.holds);
                cand.inequalities = ineq;
                if cand.feasible {
                    let ranks = greedy(&pool.weights, nn * (alpha_n - eta), nn * (alpha_n + eta))?;
                    drop(pool);
                    let words = extract(sys, n, &ranks)?;
                    let params = LambdaParams { alpha, eta0, eta, n, m: *m, tau: cert.tau };
                    let lambda = build_lambda(sys, &phi_n, words, &cert, params)?;
                    search.push(cand);
                    let constants = constants.into_iter().flatten().collect();
                    return finish(lambda, cfg, p, ps, shift, constants, search);
                }
            } else {
                cand.inequalities = ineq;
            }
            search.push(cand);
        }
    }
    let mut last: Vec<String> = search.iter().rev().take(classes.len()).map(Candidate::failing).collect();
    last.reverse();
    Err(Error::Infeasible(format!("no feasible N <= {}; last candidates: {}", cfg.n_cap, last.join(" | "))))
}

fn finish<S: Scalar>(
    lambda: LambdaSystem<S>,
    cfg: &ConstructConfig,
    p: S,
    ps: S,
    shift: S,
    constants: Vec<FittedConstants<S>>,
    search: Vec<Candidate<S>>,
) -> Result<Construction<S>> {
    let params = lambda.params;
    let (alpha, eta0) = (params.alpha, params.eta0);
    let path = lambda.path_pressure()?;
    let lower_val = lambda.lower_bound(path.value);
    let lower = PressureReport { value: lower_val + shift, ..path.clone() };
    let upper = path.shifted(shift);
    let (presentation, upper_presentation, upper_enumeration) = match lambda.presentation(cfg.explicit_limit) {
        Ok(pres) => {
            let oracle = lambda.presentation_pressure(&pres)?.shifted(shift);
            let enumerated = if pres.vertex_count() <= cfg.enumerate_limit {
                let n_max = (4 * lambda.n()).clamp(8, 24);
                lambda.label_pressure_enumerate(&pres, (2, n_max), cfg.budget).ok().map(|r| r.shifted(shift))
            } else {
                None
            };
            (Some(pres), Some(oracle), enumerated)
        }
        Err(Error::Budget { .. }) => (None, None, None),
        Err(e) => return Err(e),
    };
    let tol = S::of(SANDWICH_TOL);
    let lower_margin = lower.value - (alpha - eta0);
    let upper_margin = (alpha + eta0) - upper.value;
    let certified = lower_margin >= -tol && upper_margin >= -tol && matches!(upper.error_bound, ErrorBound::Bounded(_));
    let connectors = lambda
        .connectors_used()
        .into_iter()
        .map(|((from, to), word)| Connector { from, to, word })
        .collect();
    let log_mass = lambda.log_mass() + S::of_usize(lambda.n()) * shift;
    Ok(Construction {
        params,
        resolutions: cfg.res,
        pressure: p,
        pstar: ps,
        normalization: shift,
        constants,
        search,
        tau_used: lambda.tau_used(),
        connectors,
        words: lambda.words().clone(),
        log_mass,
        lower,
        upper,
        upper_presentation,
        upper_enumeration,
        lower_margin,
        upper_margin,
        certified,
        presentation,
        lambda,
    })
}

/// Words of `E` as [`Word`] values.
pub fn words_of(list: &WordList) -> Vec<Word> {
    list.iter().map(Word::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolutions_follow_the_dyadic_rule() {
        assert!(CtResolutions::new(1, 5, 7).is_ok());
        assert!(CtResolutions::new(1, 4, 7).is_err());
        assert!(CtResolutions::new(1, 5, 6).is_err());
    }

    #[test]
    fn greedy_respects_both_sides() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let e = select_e_set(&f, &phi, &SegmentClass::all(), 0.4, 0.05, 6, 1 << 20).unwrap();
        let size = e.len() as f64;
        assert!(size > (6.0 * 0.35f64).exp() && size < (6.0 * 0.45f64).exp(), "{size}");
        assert!(select_e_set(&f, &phi, &SegmentClass::all(), 0.8, 0.05, 6, 1 << 20).is_err());
    }

    #[test]
    fn full_shift_sandwich() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let c = construct_intermediate(&f, &phi, &CTDecomposition::trivial(), 0.35, 0.1, &ConstructConfig::default()).unwrap();
        assert!(c.certified, "{:?} {:?}", c.lower.value, c.upper.value);
        assert_eq!(c.params.tau, 0);
        assert!(c.upper.value > 0.25 && c.upper.value < 0.45);
        let pres = c.upper_presentation.as_ref().unwrap();
        assert!((pres.value - c.upper.value).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        for alpha in [0.0, 0.7] {
            let e = construct_intermediate(&f, &phi, &CTDecomposition::trivial(), alpha, 0.1, &ConstructConfig::default());
            assert!(matches!(e, Err(Error::Precondition(_))));
        }
    }

    #[test]
    fn small_cap_lists_failing_inequalities() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let cfg = ConstructConfig { n_cap: 3, ..ConstructConfig::default() };
        match construct_intermediate(&f, &phi, &CTDecomposition::trivial(), 0.35, 0.1, &cfg) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("doubling"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn golden_with_prefix_run() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0, 0.5]).unwrap();
        let dec = CTDecomposition::prefix_run(&g, 1, 1).unwrap();
        let c = construct_intermediate(&g, &phi, &dec, 0.45, 0.1, &ConstructConfig::default()).unwrap();
        assert!(c.certified, "lower {} upper {}", c.lower.value, c.upper.value);
    }
}
