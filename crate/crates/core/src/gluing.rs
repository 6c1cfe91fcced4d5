//! Gluing certificates: fixed connector words between orbit segments and
//! the tracing check for their concatenations.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::segments::SegmentClass;
use crate::symbolic::{Resolution, ShiftSystem, Word};

/// Sampling effort of [`check_gluing`].
#[derive(Clone, Copy, Debug)]
pub struct GluingSampling {
    pub seed: u64,
    /// Number of random segment sequences checked.
    pub sequences: usize,
    /// Random words tried per (length, boundary symbol) when discovering
    /// which symbol pairs meet at a junction.
    pub probes: usize,
}

impl Default for GluingSampling {
    fn default() -> Self {
        GluingSampling { seed: 0, sequences: 256, probes: 64 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Connector {
    pub from: u8,
    pub to: u8,
    pub word: Word,
}

/// Connectors for every ordered symbol pair, plus the largest connector
/// length `tau` among the pairs that can occur between two segments of the
/// certified class.
#[derive(Clone, Debug, Serialize)]
pub struct GluingCertificate {
    pub delta: u32,
    pub n0: usize,
    pub tau: usize,
    /// `(last symbol, first symbol)` pairs seen at junctions of the class.
    pub pairs: BTreeSet<(u8, u8)>,
    #[serde(serialize_with = "ser_connectors")]
    connectors: BTreeMap<(u8, u8), Vec<u8>>,
    pub sequences_checked: usize,
}

fn ser_connectors<Ser: serde::Serializer>(
    c: &BTreeMap<(u8, u8), Vec<u8>>,
    ser: Ser,
) -> std::result::Result<Ser::Ok, Ser::Error> {
    ser.collect_seq(c.iter().map(|(&(from, to), w)| Connector { from, to, word: Word(w.clone()) }))
}

impl GluingCertificate {
    /// Shortest-path connectors for all pairs of a strongly connected system.
    pub fn for_system(sys: &ShiftSystem, delta: Resolution, n0: usize, pairs: BTreeSet<(u8, u8)>) -> Result<Self> {
        sys.require_strongly_connected()?;
        let a = sys.alphabet() as u8;
        let mut connectors = BTreeMap::new();
        for x in 0..a {
            for y in 0..a {
                connectors.insert((x, y), sys.connector(x, y)?);
            }
        }
        let tau = pairs.iter().map(|p| connectors[p].len()).max().unwrap_or(0);
        Ok(GluingCertificate { delta: delta.level(), n0, tau, pairs, connectors, sequences_checked: 0 })
    }

    pub fn connector(&self, last: u8, first: u8) -> &[u8] {
        &self.connectors[&(last, first)]
    }

    /// Longest connector over all symbol pairs.
    pub fn max_connector(&self) -> usize {
        self.connectors.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Concatenates `w₁ c w₂ c' …` and returns the word together with the
    /// starting times `t_k` of the segments.
    pub fn glue<'a, I: IntoIterator<Item = &'a [u8]>>(&self, segments: I) -> (Vec<u8>, Vec<usize>) {
        let mut z: Vec<u8> = Vec::new();
        let mut times = Vec::new();
        for w in segments {
            if let (Some(&a), Some(&b)) = (z.last(), w.first()) {
                z.extend_from_slice(self.connector(a, b));
            }
            times.push(z.len());
            z.extend_from_slice(w);
        }
        (z, times)
    }
}

/// Whether `z` traces each segment exactly: `z[t_k .. t_k + |w_k|] = w_k`.
pub fn traces(z: &[u8], times: &[usize], segments: &[&[u8]]) -> bool {
    times.len() == segments.len()
        && times.iter().zip(segments).all(|(&t, w)| z.get(t..t + w.len()).is_some_and(|s| s == *w))
}

/// Builds connectors by breadth-first search and checks, on random
/// sequences of segments from `g` with lengths in `[n0, n0 + 4]`, that the
/// glued word is admissible and traces every segment at its time `t_k`.
pub fn check_gluing(
    sys: &ShiftSystem,
    g: &SegmentClass,
    delta: Resolution,
    n0: usize,
    sampling: GluingSampling,
) -> Result<GluingCertificate> {
    sys.require_strongly_connected()?;
    if n0 == 0 {
        return Err(Error::Precondition("gluing needs N0 >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let lengths: Vec<usize> = (n0..=n0 + 4).collect();
    let mut pool: BTreeMap<usize, Vec<Vec<u8>>> = BTreeMap::new();
    let mut pairs = BTreeSet::new();
    let (mut firsts, mut lasts) = (BTreeSet::new(), BTreeSet::new());
    for &n in &lengths {
        let found = pool.entry(n).or_default();
        for s in 0..sys.alphabet() as u8 {
            for _ in 0..sampling.probes {
                for w in [random_word_from(sys, s, n, &mut rng), random_word_to(sys, s, n, &mut rng)] {
                    if g.contains(&w, n) {
                        firsts.insert(w[0]);
                        lasts.insert(w[n - 1]);
                        found.push(w);
                    }
                }
            }
        }
    }
    if g.is_all() {
        firsts.extend(0..sys.alphabet() as u8);
        lasts.extend(0..sys.alphabet() as u8);
    }
    for &a in &lasts {
        for &b in &firsts {
            pairs.insert((a, b));
        }
    }
    let mut cert = GluingCertificate::for_system(sys, delta, n0, pairs)?;
    let nonempty: Vec<usize> = pool.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| *k).collect();
    if nonempty.is_empty() {
        cert.sequences_checked = 0;
        return Ok(cert);
    }
    for _ in 0..sampling.sequences {
        let len = rng.gen_range(1..=8);
        let segs: Vec<&[u8]> = (0..len)
            .map(|_| {
                let n = *nonempty.choose(&mut rng).unwrap();
                pool[&n].choose(&mut rng).unwrap().as_slice()
            })
            .collect();
        let (z, times) = cert.glue(segs.iter().copied());
        if !sys.is_admissible(&z) || !traces(&z, &times, &segs) {
            let shown: Vec<String> = segs.iter().map(|w| Word::from(*w).to_string()).collect();
            return Err(Error::Structural(format!(
                "glued word {} fails to trace segments [{}]",
                Word(z),
                shown.join(", ")
            )));
        }
        for k in 1..segs.len() {
            let gap = times[k] - times[k - 1] - segs[k - 1].len();
            if gap > cert.tau {
                return Err(Error::Structural(format!("gap {gap} exceeds tau = {}", cert.tau)));
            }
        }
        cert.sequences_checked += 1;
    }
    Ok(cert)
}

fn random_word_from(sys: &ShiftSystem, first: u8, n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut w = vec![first];
    while w.len() < n {
        let succ: Vec<u8> = sys.successors(*w.last().unwrap()).collect();
        w.push(*succ.choose(rng).unwrap());
    }
    w
}

fn random_word_to(sys: &ShiftSystem, last: u8, n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let a = sys.alphabet() as u8;
    let mut w = vec![last];
    while w.len() < n {
        let head = *w.last().unwrap();
        let pred: Vec<u8> = (0..a).filter(|&p| sys.allows(p, head)).collect();
        w.push(*pred.choose(rng).unwrap());
    }
    w.reverse();
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segments::{restrict_gm, CTDecomposition};

    fn res(l: u32) -> Resolution {
        Resolution::new(l).unwrap()
    }

    #[test]
    fn full_shift_needs_no_connectors() {
        let f = ShiftSystem::full(2).unwrap();
        let c = check_gluing(&f, &SegmentClass::all(), res(7), 3, GluingSampling::default()).unwrap();
        assert_eq!(c.tau, 0);
        assert_eq!(c.max_connector(), 0);
        assert_eq!(c.sequences_checked, 256);
    }

    #[test]
    fn golden_connectors() {
        let g = ShiftSystem::golden_mean();
        let c = check_gluing(&g, &SegmentClass::all(), res(7), 3, GluingSampling::default()).unwrap();
        assert_eq!(c.tau, 1);
        assert_eq!(c.connector(1, 1), &[0]);
        assert!(c.connector(0, 1).is_empty() && c.connector(1, 0).is_empty() && c.connector(0, 0).is_empty());
        // the core of prefix-run(1) never starts with 1
        let dec = CTDecomposition::prefix_run(&g, 1, 1).unwrap();
        let c0 = check_gluing(&g, &restrict_gm(&dec, 0), res(7), 3, GluingSampling::default()).unwrap();
        assert_eq!(c0.tau, 0);
        assert!(c0.pairs.iter().all(|&(_, b)| b == 0));
    }

    #[test]
    fn three_cycle_connectors() {
        let c3 = ShiftSystem::cycle(3).unwrap();
        let c = check_gluing(&c3, &SegmentClass::all(), res(7), 2, GluingSampling::default()).unwrap();
        assert_eq!(c.tau, 2);
        for a in 0..3u8 {
            for b in 0..3u8 {
                // connector from last symbol a to first symbol b
                let want = (b as usize + 3 - a as usize - 1) % 3;
                assert_eq!(c.connector(a, b).len(), want, "({a},{b})");
            }
        }
    }

    #[test]
    fn glue_and_trace() {
        let g = ShiftSystem::golden_mean();
        let c = GluingCertificate::for_system(&g, res(7), 1, BTreeSet::new()).unwrap();
        let segs: [&[u8]; 3] = [&[0, 1], &[1, 0], &[0, 1]];
        let (z, t) = c.glue(segs.iter().copied());
        assert_eq!(z, vec![0, 1, 0, 1, 0, 0, 1]);
        assert_eq!(t, vec![0, 3, 5]);
        assert!(g.is_admissible(&z));
        assert!(traces(&z, &t, &segs));
        assert!(!traces(&z, &[0, 2, 5], &segs));
    }

    #[test]
    fn disconnected_system_is_rejected() {
        let s = ShiftSystem::new(vec![vec![true, false], vec![false, true]]).unwrap();
        assert!(check_gluing(&s, &SegmentClass::all(), res(7), 2, GluingSampling::default()).is_err());
    }
}
