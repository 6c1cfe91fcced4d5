//! Bowen-property bounds and expansivity obstructions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::report::real;
use crate::scalar::Scalar;
use crate::segments::SegmentClass;
use crate::symbolic::{Resolution, ShiftSystem};

use super::potential::Potential;

/// Words enumerated per `n` before the sampled Bowen estimate stops growing `n`.
const BOWEN_SAMPLE_WORDS: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BowenBound<S: Scalar> {
    /// `(m - ℓ)⁺ · var(φ, ε)`, an upper bound for `V(C, φ, ε)` valid for
    /// every `n`: points in one `(n, ε)`-ball share `n + ℓ - 1` symbols, so
    /// only the last `m - ℓ` terms of their Birkhoff sums can differ.
    #[serde(serialize_with = "real")]
    pub certified: S,
    /// Largest `|Φ(x, n) - Φ(y, n)|` found by exhaustive ball enumeration.
    #[serde(serialize_with = "real")]
    pub sampled: S,
    /// Largest `n` covered by the enumeration.
    pub sampled_up_to: usize,
}

/// `V(C, φ, ε)`: the certified bound, plus an exhaustive ball enumeration
/// for segments with `n <= n_cap`.
pub fn bowen_bound<S: Scalar>(
    sys: &ShiftSystem,
    phi: &Potential<S>,
    class: &SegmentClass,
    eps: Resolution,
    n_cap: usize,
) -> BowenBound<S> {
    let m = phi.memory();
    if eps.level() as usize >= m {
        return BowenBound { certified: S::zero(), sampled: S::zero(), sampled_up_to: n_cap };
    }
    let certified = S::of_usize(m - eps.level() as usize) * phi.variation(eps);
    let mut sampled = S::zero();
    let mut up_to = 0;
    for n in 1..=n_cap {
        let t = phi.span(n);
        if sys.count_words_u64(t).is_none_or(|c| c > BOWEN_SAMPLE_WORDS) {
            break;
        }
        let keep = eps.window(n).min(t);
        // per ball: (min over all y, max over all y, min over x in C, max over x in C)
        let mut balls: BTreeMap<Vec<u8>, [S; 4]> = BTreeMap::new();
        sys.visit_words_with_prefix(&[], t, |w| {
            let v = phi.birkhoff_unchecked(w, n);
            let inf = S::infinity();
            let e = balls.entry(w[..keep].to_vec()).or_insert([inf, -inf, inf, -inf]);
            e[0] = e[0].min(v);
            e[1] = e[1].max(v);
            if class.contains(w, n) {
                e[2] = e[2].min(v);
                e[3] = e[3].max(v);
            }
        });
        for [lo, hi, clo, chi] in balls.into_values() {
            if clo <= chi {
                sampled = sampled.max(hi - clo).max(chi - lo);
            }
        }
        up_to = n;
    }
    BowenBound { certified, sampled, sampled_up_to: up_to }
}

/// Expansivity data of a one-sided shift at scale `ε`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpansivityReport<S: Scalar> {
    #[serde(serialize_with = "real")]
    pub h_star: S,
    /// Whether every point has trivial infinite Bowen ball `Γ_ε(x) = {x}`.
    pub ne_empty: bool,
    #[serde(serialize_with = "real")]
    pub p_exp_bot: S,
}

/// A subshift is expansive with constant `1/2`: two points agreeing on
/// `n + ℓ - 1` symbols for every `n` coincide. So `Γ_ε(x) = {x}` for every
/// `ℓ >= 1`, the tail entropy vanishes and no measure charges `NE(ε)`.
pub fn expansivity_report<S: Scalar>(_sys: &ShiftSystem, _eps: Resolution) -> ExpansivityReport<S> {
    ExpansivityReport { h_star: S::zero(), ne_empty: true, p_exp_bot: S::neg_infinity() }
}
