//! Higher-block presentation of a potential: states are admissible `r`-blocks
//! with `r = max(m - 1, 1)` and every edge carries one value of `φ`.

use crate::graph::WeightedDigraph;
use crate::scalar::Scalar;
use crate::symbolic::ShiftSystem;

use super::potential::Potential;

const NONE: usize = usize::MAX;

/// Admissible `r`-blocks and the one-symbol transitions between them.
#[derive(Clone, Debug)]
pub struct BlockIndex {
    r: usize,
    alphabet: usize,
    blocks: Vec<Vec<u8>>,
    lookup: Vec<usize>,
    next: Vec<usize>,
}

impl BlockIndex {
    pub fn new(sys: &ShiftSystem, r: usize) -> Self {
        assert!(r >= 1);
        let a = sys.alphabet();
        let blocks = sys.words_vec(r);
        let mut lookup = vec![NONE; a.pow(r as u32)];
        for (i, b) in blocks.iter().enumerate() {
            lookup[code(b, a)] = i;
        }
        let mut next = vec![NONE; blocks.len() * a];
        for (i, b) in blocks.iter().enumerate() {
            let last = *b.last().unwrap();
            for s in sys.successors(last) {
                let mut nb = b[1..].to_vec();
                nb.push(s);
                next[i * a + s as usize] = lookup[code(&nb, a)];
            }
        }
        BlockIndex { r, alphabet: a, blocks, lookup, next }
    }

    pub fn width(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, i: usize) -> &[u8] {
        &self.blocks[i]
    }

    /// State of the block `w[..r]`, if admissible.
    pub fn state(&self, w: &[u8]) -> Option<usize> {
        let i = self.lookup[code(&w[..self.r], self.alphabet)];
        (i != NONE).then_some(i)
    }

    /// State reached by appending symbol `s` to block `i`.
    #[inline]
    pub fn step(&self, i: usize, s: u8) -> Option<usize> {
        let j = self.next[i * self.alphabet + s as usize];
        (j != NONE).then_some(j)
    }

    /// Symbols that may follow block `i`.
    pub fn followers(&self, i: usize) -> impl Iterator<Item = (u8, usize)> + '_ {
        (0..self.alphabet as u8).filter_map(move |s| self.step(i, s).map(|j| (s, j)))
    }
}

fn code(w: &[u8], a: usize) -> usize {
    w.iter().fold(0usize, |acc, &s| acc * a + s as usize)
}

/// Weighted block graph of `(X, φ)`.
///
/// For memory 1 the edge `a → b` carries `φ(a)`. Otherwise the edge
/// `u → v` (with `u` and `v` overlapping in `m - 2` symbols) carries `φ`
/// of the joined `m`-block. Cycles of this graph are exactly the periodic
/// orbits of `X`, and the weight of a cycle is the Birkhoff sum of `φ`
/// along one period.
#[derive(Clone, Debug)]
pub struct BlockGraph<S> {
    pub index: BlockIndex,
    pub graph: WeightedDigraph<S>,
}

impl<S: Scalar> BlockGraph<S> {
    pub fn new(sys: &ShiftSystem, phi: &Potential<S>) -> Self {
        let m = phi.memory();
        let r = (m.max(2)) - 1;
        let index = BlockIndex::new(sys, r);
        let mut graph = WeightedDigraph::new(index.len());
        let mut joined = Vec::with_capacity(r + 1);
        for u in 0..index.len() {
            for (s, v) in index.followers(u) {
                joined.clear();
                joined.extend_from_slice(index.block(u));
                joined.push(s);
                let w = if m == 1 { phi.eval(&joined[..1]) } else { phi.eval(&joined) };
                graph.add_edge(u, v, w);
            }
        }
        BlockGraph { index, graph }
    }

    /// Same block graph with every weight replaced by `0` (counts words).
    pub fn unweighted(&self) -> WeightedDigraph<S> {
        let mut g = WeightedDigraph::new(self.graph.vertex_count());
        for (u, v, _) in self.graph.edges() {
            g.add_edge(u, v, S::zero());
        }
        g
    }

    /// Block sequence of a periodic point `w w w …`, one state per symbol.
    pub fn cycle_states(&self, w: &[u8]) -> Option<Vec<usize>> {
        let r = self.index.width();
        let p = w.len();
        let ext: Vec<u8> = w.iter().copied().cycle().take(p + r).collect();
        (0..p).map(|k| self.index.state(&ext[k..])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_blocks() {
        let g = ShiftSystem::golden_mean();
        let phi = Potential::from_symbol_values(&g, &[0.0_f64, 0.5]).unwrap();
        let bg = BlockGraph::new(&g, &phi);
        assert_eq!(bg.index.len(), 2);
        assert_eq!(bg.graph.edge_count(), 3);
        let idx = BlockIndex::new(&g, 2);
        assert_eq!(idx.len(), 3);
        let s01 = idx.state(&[0, 1]).unwrap();
        assert_eq!(idx.step(s01, 1), None);
        assert_eq!(idx.block(idx.step(s01, 0).unwrap()), &[1, 0]);
    }

    #[test]
    fn cycle_weights_are_birkhoff_sums() {
        let f = ShiftSystem::full(2).unwrap();
        let phi = Potential::from_fn(&f, 3, |b| (b[0] + 2 * b[2]) as f64).unwrap();
        let bg = BlockGraph::new(&f, &phi);
        let w = [0u8, 1, 1, 0, 1];
        let states = bg.cycle_states(&w).unwrap();
        let mut total = 0.0;
        for k in 0..w.len() {
            let (u, v) = (states[k], states[(k + 1) % w.len()]);
            total += bg.graph.edges_from(u).iter().find(|e| e.0 == v).unwrap().1;
        }
        assert!((total - phi.cyclic_sum(&w)).abs() < 1e-12);
    }
}
