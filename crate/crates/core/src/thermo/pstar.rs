//! `P*(φ) = liminf_n sup_x (1/n) Φ(x, n)` and related max-plus quantities.

use serde::Serialize;

use crate::error::Result;
use crate::report::real;
use crate::scalar::Scalar;
use crate::symbolic::ShiftSystem;

use super::block::BlockGraph;
use super::potential::Potential;
use super::pressure::SequencePoint;

/// Largest `n` of the finite sequence reported alongside `P*`.
pub const PSTAR_SEQUENCE_MAX: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct PStarReport<S: Scalar> {
    /// Maximum mean cycle weight of the block graph.
    #[serde(serialize_with = "real")]
    pub value: S,
    /// `sup_x (1/n) Φ(x, n)` for `n = 1..=20`.
    pub sequence: Vec<SequencePoint<S>>,
}

/// `P*(φ)` for a strongly connected system: the maximum mean weight of a
/// cycle in the block graph, computed with Karp's algorithm.
pub fn pstar<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>) -> Result<S> {
    sys.require_strongly_connected()?;
    BlockGraph::new(sys, phi).graph.max_cycle_mean()
}

pub fn pstar_report<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>) -> Result<PStarReport<S>> {
    let value = pstar(sys, phi)?;
    let sequence = sup_birkhoff_sequence(sys, phi, PSTAR_SEQUENCE_MAX)
        .into_iter()
        .enumerate()
        .map(|(i, s)| SequencePoint { n: i + 1, value: s / S::of_usize(i + 1) })
        .collect();
    Ok(PStarReport { value, sequence })
}

/// `sup_x Φ(x, n)` for `n = 1..=n_max`: max-weight walks of `n` edges in the
/// block graph.
pub fn sup_birkhoff_sequence<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, n_max: usize) -> Vec<S> {
    let g = BlockGraph::new(sys, phi).graph;
    let v = g.vertex_count();
    let mut best = vec![S::zero(); v];
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        // best[u]: max weight of a walk of the current length starting at u
        best = (0..v)
            .map(|u| g.edges_from(u).iter().map(|&(t, w)| w + best[t]).fold(S::neg_infinity(), S::max))
            .collect();
        out.push(best.iter().copied().fold(S::neg_infinity(), S::max));
    }
    out
}

/// `sup_x Φ(x, n)`.
pub fn sup_birkhoff<S: Scalar>(sys: &ShiftSystem, phi: &Potential<S>, n: usize) -> S {
    if n == 0 {
        return S::zero();
    }
    *sup_birkhoff_sequence(sys, phi, n).last().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pstar_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::from_symbol_values(&f, &[0.0_f64, 1.0]).unwrap();
        assert_eq!(pstar(&f, &phi).unwrap(), 1.0);
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0_f64, 1.0]).unwrap();
        assert_eq!(pstar(&g, &phi).unwrap(), 0.5);
        let c = Potential::constant(&g, 0.7_f64);
        assert!((pstar(&g, &c).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn sup_birkhoff_matches_brute_force() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_fn(&g, 2, |b| [0.3, 1.0, -0.4][(b[0] + 2 * b[1]) as usize]).unwrap();
        let seq = sup_birkhoff_sequence(&g, &phi, 8);
        for n in 1..=8 {
            let brute = g
                .enumerate_words(n + 1, None)
                .unwrap()
                .map(|w| phi.birkhoff_sum(w.symbols(), n).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((seq[n - 1] - brute).abs() < 1e-12);
        }
        let rep = pstar_report(&g, &phi).unwrap();
        assert!((rep.sequence[19].value - rep.value).abs() < 0.1);
    }
}
