//! Numerical evaluation of the five conditions a decomposition must meet at
//! scales `δ < γ < ε` before the density argument applies.

use serde::Serialize;

use crate::construct::CtResolutions;
use crate::error::{Error, Result};
use crate::gluing::{check_gluing, GluingSampling};
use crate::report::real;
use crate::scalar::Scalar;
use crate::segments::{restrict_gm, CTDecomposition, SegmentClass};
use crate::symbolic::{Resolution, ShiftSystem};
use crate::thermo::{bowen_bound, expansivity_report, pressure_enumerate, pressure_oracle, ErrorBound, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition<S: Scalar> {
    pub name: &'static str,
    pub status: Status,
    /// Positive when the condition holds with room to spare.
    #[serde(serialize_with = "real")]
    pub margin: S,
    /// Uncertainty of the estimate the margin was computed from.
    #[serde(serialize_with = "real")]
    pub spread: S,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport<S: Scalar> {
    pub resolutions: CtResolutions,
    #[serde(serialize_with = "real")]
    pub pressure: S,
    pub conditions: Vec<Condition<S>>,
}

impl<S: Scalar> ConditionReport<S> {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.status == Status::Pass)
    }

    /// One line per condition, for error messages.
    pub fn summary(&self) -> String {
        let lines: Vec<String> = self
            .conditions
            .iter()
            .map(|c| format!("{}: {:?} (margin {}, spread {})", c.name, c.status, c.margin, c.spread))
            .collect();
        lines.join("; ")
    }
}

/// Largest `n_cap` accepted by [`check_ct_conditions`].
pub const CONDITION_N_CAP: usize = 16;

/// Evaluates gluing on `𝒢_M` (`M = 0, 1, 2`), `P(𝒟ᶜ, 2γ, 2γ) < P`,
/// `P(𝒫 ∪ 𝒮, γ, 3γ) < P`, the Bowen property at `3γ` on `𝒢` and the
/// expansivity obstruction at `ε`.
pub fn check_ct_conditions<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    dec: &CTDecomposition,
    res: CtResolutions,
    n_cap: usize,
    seed: u64,
    budget: Option<u64>,
) -> Result<ConditionReport<S>> {
    if !(2..=CONDITION_N_CAP).contains(&n_cap) {
        return Err(Error::Config(format!("n_cap must lie in 2..={CONDITION_N_CAP}, got {n_cap}")));
    }
    sys.require_strongly_connected()?;
    let p = pressure_oracle(sys, phi)?.value;
    let mut conditions = Vec::with_capacity(5);

    let mut taus = Vec::new();
    let mut failure = None;
    for m in 0..=2 {
        let sampling = GluingSampling { seed, ..GluingSampling::default() };
        match check_gluing(sys, &restrict_gm(dec, m), res.delta, 1, sampling) {
            Ok(c) => taus.push(format!("M={m}: tau={}", c.tau)),
            Err(e @ Error::Structural(_)) => {
                failure = Some(format!("M={m}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    conditions.push(Condition {
        name: "gluing",
        status: if failure.is_none() { Status::Pass } else { Status::Fail },
        margin: S::nan(),
        spread: S::zero(),
        detail: failure.unwrap_or_else(|| taus.join(", ")),
    });

    let g2 = res.gamma.scaled(2);
    conditions.push(class_pressure(
        sys,
        phi,
        "complement_pressure",
        &dec.d.complement(),
        (g2, g2),
        p,
        n_cap,
        budget,
    ));
    let g3 = res.gamma.scaled(3);
    conditions.push(class_pressure(
        sys,
        phi,
        "prefix_suffix_pressure",
        &dec.p.union(&dec.s),
        (res.gamma, g3),
        p,
        n_cap,
        budget,
    ));

    let b = bowen_bound(sys, phi, &dec.g, g3, n_cap.min(10));
    conditions.push(Condition {
        name: "bowen",
        status: if b.certified.is_finite() { Status::Pass } else { Status::Fail },
        margin: -b.certified,
        spread: S::zero(),
        detail: format!(
            "V <= {} for all n; largest sampled variation {} up to n = {}",
            b.certified, b.sampled, b.sampled_up_to
        ),
    });

    let e = expansivity_report::<S>(sys, res.eps);
    let margin = p - e.p_exp_bot;
    conditions.push(Condition {
        name: "expansivity",
        status: if margin > S::zero() { Status::Pass } else { Status::Fail },
        margin,
        spread: S::zero(),
        detail: format!("h* = {}, NE(ε) empty: {}", e.h_star, e.ne_empty),
    });

    Ok(ConditionReport { resolutions: res, pressure: p, conditions })
}

#[allow(clippy::too_many_arguments)]
fn class_pressure<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    name: &'static str,
    class: &SegmentClass,
    (delta, eps): (Resolution, Resolution),
    p: S,
    n_cap: usize,
    budget: Option<u64>,
) -> Condition<S> {
    let label = format!("P({}, {}, {}) < P = {p}", class.label(), delta.level(), eps.level());
    if class.is_empty_class() {
        return Condition { name, status: Status::Pass, margin: S::infinity(), spread: S::zero(), detail: label };
    }
    if class.is_all() {
        return Condition { name, status: Status::Fail, margin: S::zero(), spread: S::zero(), detail: label };
    }
    let n_min = n_cap.div_ceil(2).max(2);
    match pressure_enumerate(sys, phi, class, delta, Some(eps), (n_min, n_cap), budget) {
        Ok(r) => {
            let margin = p - r.value;
            let spread = match r.error_bound {
                ErrorBound::Bounded(s) => s,
                ErrorBound::Unbounded => S::infinity(),
            };
            let status = if margin <= S::zero() {
                Status::Fail
            } else if margin <= spread {
                Status::Inconclusive
            } else {
                Status::Pass
            };
            Condition { name, status, margin, spread, detail: label }
        }
        Err(e @ Error::Budget { .. }) => Condition {
            name,
            status: Status::Inconclusive,
            margin: S::nan(),
            spread: S::infinity(),
            detail: format!("{label}: {e}"),
        },
        Err(e) => Condition {
            name,
            status: Status::Inconclusive,
            margin: S::nan(),
            spread: S::infinity(),
            detail: format!("{label}: {e}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_decomposition_passes() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let r = check_ct_conditions(&f, &phi, &CTDecomposition::trivial(), CtResolutions::default(), 10, 0, None).unwrap();
        assert!(r.all_pass(), "{}", r.summary());
        assert_eq!(r.conditions[1].margin, f64::INFINITY);

        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0, 0.5]).unwrap();
        let r = check_ct_conditions(&g, &phi, &CTDecomposition::trivial(), CtResolutions::default(), 10, 0, None).unwrap();
        assert!(r.all_pass(), "{}", r.summary());
    }

    #[test]
    fn prefix_everything_fails_condition_three() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        let r = check_ct_conditions(&f, &phi, &CTDecomposition::all_prefix(), CtResolutions::default(), 10, 0, None).unwrap();
        let c = &r.conditions[2];
        assert_eq!(c.status, Status::Fail);
        assert_eq!(c.margin, 0.0);
        assert!(!r.all_pass());
    }

    #[test]
    fn prefix_run_on_golden() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0, 0.5]).unwrap();
        let dec = CTDecomposition::prefix_run(&g, 1, 1).unwrap();
        let r = check_ct_conditions(&g, &phi, &dec, CtResolutions::default(), 12, 0, None).unwrap();
        assert!(r.all_pass(), "{}", r.summary());
    }

    #[test]
    fn n_cap_is_bounded() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::<f64>::zero(&f);
        assert!(check_ct_conditions(&f, &phi, &CTDecomposition::trivial(), CtResolutions::default(), 17, 0, None).is_err());
    }
}
