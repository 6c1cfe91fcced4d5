//! Sweeps `α` across `(P*(φ), P(φ))` and builds one subsystem per value.

use serde::Serialize;

use crate::conditions::{check_ct_conditions, ConditionReport};
use crate::construct::{construct_intermediate, ConstructConfig};
use crate::error::{Error, Result};
use crate::report::{fmt_real, real};
use crate::scalar::Scalar;
use crate::segments::CTDecomposition;
use crate::symbolic::ShiftSystem;
use crate::thermo::{expansivity_report, pressure_oracle, pstar, Potential};

#[derive(Clone, Debug, Serialize)]
pub struct DensityRow<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub alpha: S,
    pub certified: bool,
    /// Oracle pressure of `Λ`; NaN when the construction failed.
    #[serde(serialize_with = "real")]
    pub pressure: S,
    #[serde(serialize_with = "real")]
    pub gap: S,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub tau: Option<usize>,
    pub e_size: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub pressure: S,
    #[serde(serialize_with = "real")]
    pub pstar: S,
    #[serde(serialize_with = "real")]
    pub eta0: S,
    /// `h*(f, 2δ) + var(φ, 2δ)`, which has to stay below every `η` used.
    #[serde(serialize_with = "real")]
    pub tail: S,
    pub conditions: ConditionReport<S>,
    pub rows: Vec<DensityRow<S>>,
}

impl<S: Scalar> DensityReport<S> {
    pub fn certified_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.certified).count()
    }

    /// Largest `|pressure - α|` over certified rows.
    pub fn max_gap(&self) -> S {
        self.rows.iter().filter(|r| r.certified).map(|r| r.gap).fold(S::zero(), S::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,certified,pressure,gap,N,tau,E_size\n");
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_real(r.alpha.as_f64()),
                r.certified,
                fmt_real(r.pressure.as_f64()),
                fmt_real(r.gap.as_f64()),
                opt(r.n),
                opt(r.tau),
                opt(r.e_size)
            ));
        }
        out
    }
}

/// `α_i = a + (i + 1)(b - a)/(grid + 1)` for `i < grid`, with
/// `a = P* + margin`, `b = P - margin` and `margin = min(η₀, (P - P*)/4)`.
pub fn alpha_grid<S: Scalar>(pstar: S, p: S, eta0: S, grid: usize) -> Vec<S> {
    let margin = eta0.min((p - pstar) / S::of(4.0));
    let (a, b) = (pstar + margin, p - margin);
    (0..grid).map(|i| a + S::of_usize(i + 1) * (b - a) / S::of_usize(grid + 1)).collect()
}

/// Runs the construction for every grid value of `α`; failures are recorded
/// per row. Refuses to run when a condition does not pass.
pub fn density_experiment<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    dec: &CTDecomposition,
    grid: usize,
    eta0: S,
    cfg: &ConstructConfig,
    check_n_cap: usize,
) -> Result<DensityReport<S>> {
    if grid == 0 {
        return Err(Error::Config("grid size must be at least 1".into()));
    }
    if !(eta0 > S::zero()) {
        return Err(Error::Config(format!("η₀ must be positive, got {eta0}")));
    }
    let conditions = check_ct_conditions(sys, phi, dec, cfg.res, check_n_cap, cfg.seed, Some(cfg.budget))?;
    if !conditions.all_pass() {
        return Err(Error::Precondition(format!("decomposition conditions not met: {}", conditions.summary())));
    }
    let p = pressure_oracle(sys, phi)?.value;
    let ps = pstar(sys, phi)?;
    let d2 = cfg.res.delta.scaled(2);
    let tail = expansivity_report::<S>(sys, d2).h_star + phi.variation(d2);
    let mut rows = Vec::with_capacity(grid);
    for alpha in alpha_grid(ps, p, eta0, grid) {
        let row = match construct_intermediate(sys, phi, dec, alpha, eta0, cfg) {
            Ok(c) => DensityRow {
                alpha,
                certified: c.certified && tail < c.params.eta,
                pressure: c.upper.value,
                gap: (c.upper.value - alpha).abs(),
                n: Some(c.params.n),
                tau: Some(c.params.tau),
                e_size: Some(c.words.len()),
                error: None,
            },
            Err(e) => DensityRow {
                alpha,
                certified: false,
                pressure: S::nan(),
                gap: S::nan(),
                n: None,
                tau: None,
                e_size: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(DensityReport { pressure: p, pstar: ps, eta0, tail, conditions, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_strictly_inside() {
        let a = alpha_grid(0.0_f64, 1.0, 0.1, 4);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|&x| x > 0.1 && x < 0.9));
        assert!((a[0] - 0.26).abs() < 1e-12);
    }

    #[test]
    fn full_shift_midpoint() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let r = density_experiment(&f, &phi, &CTDecomposition::trivial(), 1, 0.08, &ConstructConfig::default(), 10).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.rows[0].certified);
        assert_eq!(r.tail, 0.0);
        assert!(r.to_csv().starts_with("alpha,certified,pressure,gap,N,tau,E_size\n"));
    }

    #[test]
    fn constant_potential() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::constant(&f, 1.0);
        let r = density_experiment(&f, &phi, &CTDecomposition::trivial(), 4, 0.1, &ConstructConfig::default(), 10).unwrap();
        assert_eq!(r.certified_rows(), 4, "{:?}", r.rows);
    }

    #[test]
    fn failing_conditions_stop_the_run() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let e = density_experiment(&f, &phi, &CTDecomposition::all_prefix(), 2, 0.1, &ConstructConfig::default(), 10);
        assert!(matches!(e, Err(Error::Precondition(_))));
        assert!(density_experiment(&f, &phi, &CTDecomposition::trivial(), 0, 0.1, &ConstructConfig::default(), 10).is_err());
    }
}
