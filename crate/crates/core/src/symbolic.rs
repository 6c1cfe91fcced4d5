//! Subshifts of finite type, their words, and dyadic resolutions.
//!
//! A point of a one-sided subshift is a sequence `x_0 x_1 …`; the metric is
//! `d(x, y) = 2^-min{k : x_k != y_k}`. Every finite-time quantity used in
//! the crate depends on a finite prefix only, so points are handled as
//! [`Word`]s (cylinders).

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Largest alphabet whose words still print as digit strings.
pub const MAX_ALPHABET: usize = 36;

/// A finite sequence of symbols.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// The word `w` repeated until it has at least `len` symbols, truncated
    /// to exactly `len`. Used to evaluate Birkhoff sums on periodic points.
    pub fn periodic_prefix(&self, len: usize) -> Word {
        assert!(!self.is_empty(), "periodic extension of the empty word");
        Word(self.0.iter().copied().cycle().take(len).collect())
    }
}

impl From<Vec<u8>> for Word {
    fn from(v: Vec<u8>) -> Self {
        Word(v)
    }
}

impl From<&[u8]> for Word {
    fn from(v: &[u8]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            let c = DIGITS.get(s as usize).copied().unwrap_or(b'?');
            write!(f, "{}", c as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|b| {
                DIGITS
                    .iter()
                    .position(|&d| d == b.to_ascii_lowercase())
                    .map(|p| p as u8)
                    .ok_or_else(|| Error::InvalidWord(format!("bad symbol '{}' in \"{s}\"", b as char)))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<Ser: serde::Serializer>(&self, ser: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dyadic scale `ε = 2^-level`.
///
/// `d(x, y) <= 2^-level` iff `x` and `y` share their first `level` symbols,
/// so two points are `(n, ε)`-separated iff their length-`n + level - 1`
/// prefixes differ, and the closed Bowen ball `B_n(x, ε)` is the cylinder of
/// the length-`n + level - 1` prefix of `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Resolution(u32);

impl Resolution {
    pub fn new(level: u32) -> Result<Self> {
        if level == 0 {
            return Err(Error::Config("resolution level must be at least 1".into()));
        }
        Ok(Resolution(level))
    }

    pub fn level(self) -> u32 {
        self.0
    }

    pub fn radius(self) -> f64 {
        (-(self.0 as f64)).exp2()
    }

    /// Resolution of the radius `factor · 2^-level`: the metric only takes
    /// dyadic values, so `d <= k·ε` iff `d <= 2^-(level - ⌊log2 k⌋)`.
    /// Saturates at level 1 (radius 1/2 already covers every distinct pair
    /// disagreeing after the first symbol).
    pub fn scaled(self, factor: u32) -> Self {
        assert!(factor >= 1);
        let shift = 31 - factor.leading_zeros();
        Resolution(self.0.saturating_sub(shift).max(1))
    }

    /// Number of symbols that determine a point up to `(n, ε)`-closeness.
    pub fn window(self, n: usize) -> usize {
        n + self.0 as usize - 1
    }
}

impl TryFrom<u32> for Resolution {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Resolution::new(v)
    }
}

impl From<Resolution> for u32 {
    fn from(r: Resolution) -> u32 {
        r.0
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^-{}", self.0)
    }
}

/// A one-sided subshift of finite type on `{0, …, A-1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct ShiftSystem {
    alphabet: usize,
    transitions: Vec<bool>,
    strongly_connected: bool,
    period: usize,
}

impl fmt::Debug for ShiftSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShiftSystem")
            .field("alphabet", &self.alphabet)
            .field("transitions", &self.matrix_rows())
            .field("primitive", &self.is_primitive())
            .finish()
    }
}

impl ShiftSystem {
    /// Builds a system from row-major transition rows.
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let a = rows.len();
        if a < 2 {
            return Err(Error::InvalidSystem(format!("alphabet size must be at least 2, got {a}")));
        }
        if a > MAX_ALPHABET {
            return Err(Error::InvalidSystem(format!("alphabet size {a} exceeds {MAX_ALPHABET}")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != a {
                return Err(Error::InvalidSystem(format!(
                    "row {i} has {} entries, expected {a}",
                    row.len()
                )));
            }
            if !row.iter().any(|&t| t) {
                return Err(Error::InvalidSystem(format!("row {i} has no admissible successor")));
            }
        }
        for j in 0..a {
            if !rows.iter().any(|r| r[j]) {
                return Err(Error::InvalidSystem(format!("column {j} has no admissible predecessor")));
            }
        }
        let transitions: Vec<bool> = rows.into_iter().flatten().collect();
        let mut sys = ShiftSystem { alphabet: a, transitions, strongly_connected: false, period: 0 };
        sys.strongly_connected = sys.unreachable_pair().is_none();
        sys.period = if sys.strongly_connected { sys.compute_period() } else { 0 };
        Ok(sys)
    }

    pub fn full(alphabet: usize) -> Result<Self> {
        Self::new(vec![vec![true; alphabet]; alphabet])
    }

    /// The golden-mean shift: `11` is forbidden.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![true, true], vec![true, false]]).expect("valid system")
    }

    /// Cyclic shift on `k` symbols: `a -> a+1 mod k` only.
    pub fn cycle(k: usize) -> Result<Self> {
        Self::new((0..k).map(|a| (0..k).map(|b| b == (a + 1) % k).collect()).collect())
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    #[inline]
    pub fn allows(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize * self.alphabet + b as usize]
    }

    pub fn successors(&self, a: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.alphabet as u8).filter(move |&b| self.allows(a, b))
    }

    pub fn matrix_rows(&self) -> Vec<Vec<bool>> {
        self.transitions.chunks(self.alphabet).map(|r| r.to_vec()).collect()
    }

    pub fn is_full(&self) -> bool {
        self.transitions.iter().all(|&t| t)
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected
    }

    /// Some power of the transition matrix is entrywise positive.
    pub fn is_primitive(&self) -> bool {
        self.strongly_connected && self.period == 1
    }

    /// Period of the (strongly connected) transition digraph; 0 otherwise.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_admissible(&self, w: &[u8]) -> bool {
        w.iter().all(|&s| (s as usize) < self.alphabet) && w.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    pub fn check_admissible(&self, w: &[u8]) -> Result<()> {
        if let Some(&s) = w.iter().find(|&&s| s as usize >= self.alphabet) {
            return Err(Error::InvalidWord(format!("symbol {s} outside alphabet of size {}", self.alphabet)));
        }
        if let Some(i) = w.windows(2).position(|p| !self.allows(p[0], p[1])) {
            return Err(Error::InvalidWord(format!(
                "transition {}{} at position {i} of \"{}\" is forbidden",
                w[i],
                w[i + 1],
                Word::from(w)
            )));
        }
        Ok(())
    }

    pub fn require_strongly_connected(&self) -> Result<()> {
        match self.unreachable_pair() {
            None => Ok(()),
            Some((from, to)) => Err(Error::NotStronglyConnected { from, to }),
        }
    }

    fn bfs(&self, src: u8) -> Vec<Option<(usize, u8)>> {
        // dist, parent
        let mut seen = vec![None; self.alphabet];
        let mut q = VecDeque::new();
        for b in self.successors(src) {
            if seen[b as usize].is_none() {
                seen[b as usize] = Some((1, src));
                q.push_back(b);
            }
        }
        while let Some(u) = q.pop_front() {
            let d = seen[u as usize].unwrap().0;
            for v in self.successors(u) {
                if seen[v as usize].is_none() {
                    seen[v as usize] = Some((d + 1, u));
                    q.push_back(v);
                }
            }
        }
        seen
    }

    fn unreachable_pair(&self) -> Option<(usize, usize)> {
        (0..self.alphabet as u8).find_map(|a| {
            let d = self.bfs(a);
            d.iter().position(|x| x.is_none()).map(|b| (a as usize, b))
        })
    }

    fn compute_period(&self) -> usize {
        // gcd over edges (u,v) of level(u) + 1 - level(v)
        let mut level = vec![usize::MAX; self.alphabet];
        level[0] = 0;
        let mut q = VecDeque::from([0u8]);
        while let Some(u) = q.pop_front() {
            for v in self.successors(u) {
                if level[v as usize] == usize::MAX {
                    level[v as usize] = level[u as usize] + 1;
                    q.push_back(v);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..self.alphabet as u8 {
            for v in self.successors(u) {
                let diff = (level[u as usize] as i64 + 1 - level[v as usize] as i64).unsigned_abs() as usize;
                g = gcd(g, diff);
            }
        }
        g.max(1)
    }

    /// Number of admissible words of length `n`: the entry sum of `T^(n-1)`.
    pub fn count_words(&self, n: usize) -> BigUint {
        if n == 0 {
            return BigUint::one();
        }
        let a = self.alphabet;
        let mut v: Vec<BigUint> = vec![BigUint::one(); a];
        for _ in 1..n {
            let mut next = vec![BigUint::zero(); a];
            for (i, vi) in v.iter().enumerate() {
                for j in self.successors(i as u8) {
                    next[j as usize] += vi;
                }
            }
            v = next;
        }
        v.into_iter().sum()
    }

    /// `count_words` as a `u64`, or `None` on overflow.
    pub fn count_words_u64(&self, n: usize) -> Option<u64> {
        self.count_words(n).to_u64()
    }

    fn check_budget(&self, n: usize, budget: Option<u64>) -> Result<()> {
        if let Some(limit) = budget {
            let needed = self.count_words(n);
            if needed > BigUint::from(limit) {
                return Err(Error::Budget { limit, at_n: n, needed: needed.to_string() });
            }
        }
        Ok(())
    }

    /// Lexicographic stream of admissible words of length `n`. Fails up
    /// front when the count exceeds `budget`.
    pub fn enumerate_words(&self, n: usize, budget: Option<u64>) -> Result<WordIter<'_>> {
        if n == 0 {
            return Err(Error::Precondition("word length must be at least 1".into()));
        }
        self.check_budget(n, budget)?;
        Ok(WordIter::new(self, n))
    }

    /// Calls `f` on every admissible word of length `n` beginning with
    /// `prefix`, in lexicographic order, reusing a single buffer.
    pub fn visit_words_with_prefix<F: FnMut(&[u8])>(&self, prefix: &[u8], n: usize, mut f: F) {
        if prefix.len() > n || !self.is_admissible(prefix) {
            return;
        }
        let mut buf = prefix.to_vec();
        if buf.len() == n {
            f(&buf);
            return;
        }
        if buf.is_empty() {
            for s in 0..self.alphabet as u8 {
                buf.push(s);
                self.visit_rec(&mut buf, n, &mut f);
                buf.pop();
            }
        } else {
            self.visit_rec(&mut buf, n, &mut f);
        }
    }

    fn visit_rec<F: FnMut(&[u8])>(&self, buf: &mut Vec<u8>, n: usize, f: &mut F) {
        if buf.len() == n {
            f(buf);
            return;
        }
        let last = *buf.last().unwrap();
        for s in 0..self.alphabet as u8 {
            if self.allows(last, s) {
                buf.push(s);
                self.visit_rec(buf, n, f);
                buf.pop();
            }
        }
    }

    /// All admissible words of length `k` (lexicographic), used to split
    /// enumeration work into fixed chunks.
    pub fn words_vec(&self, k: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        if k == 0 {
            out.push(Vec::new());
            return out;
        }
        self.visit_words_with_prefix(&[], k, |w| out.push(w.to_vec()));
        out
    }

    /// A maximal `(n, ε)`-separated set: one representative per cylinder of
    /// length `n + level - 1`.
    pub fn separated_set(&self, n: usize, eps: Resolution, budget: Option<u64>) -> Result<Vec<Word>> {
        if n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        Ok(self.enumerate_words(eps.window(n), budget)?.collect())
    }

    /// Shortest path from `a` to `b` as the list of interior symbols.
    pub fn connector(&self, a: u8, b: u8) -> Result<Vec<u8>> {
        if self.allows(a, b) {
            return Ok(Vec::new());
        }
        let tree = self.bfs(a);
        let Some((_, mut parent)) = tree[b as usize] else {
            return Err(Error::NotStronglyConnected { from: a as usize, to: b as usize });
        };
        let mut interior = Vec::new();
        while parent != a {
            interior.push(parent);
            parent = tree[parent as usize].unwrap().1;
        }
        interior.reverse();
        Ok(interior)
    }

    /// `max_{a,b} dist(a, b)` over ordered pairs, distances counted in edges.
    pub fn digraph_diameter(&self) -> Result<usize> {
        let mut diam = 0;
        for a in 0..self.alphabet as u8 {
            let d = self.bfs(a);
            for (b, x) in d.iter().enumerate() {
                match x {
                    Some((dist, _)) => diam = diam.max(*dist),
                    None => return Err(Error::NotStronglyConnected { from: a as usize, to: b }),
                }
            }
        }
        Ok(diam)
    }

    /// Parses the system-definition JSON format.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(s).map_err(|e| Error::InvalidSystem(e.to_string()))?;
        file.into_system()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read system file {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> SystemFile {
        if self.is_full() {
            SystemFile { alphabet: self.alphabet, transitions: None, full: Some(true) }
        } else {
            SystemFile {
                alphabet: self.alphabet,
                transitions: Some(
                    self.matrix_rows().into_iter().map(|r| r.into_iter().map(u8::from).collect()).collect(),
                ),
                full: None,
            }
        }
    }
}

/// On-disk system definition: `{"alphabet": A, "transitions": [[0|1,…],…]}`
/// or `{"alphabet": A, "full": true}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub alphabet: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<bool>,
}

impl SystemFile {
    pub fn into_system(self) -> Result<ShiftSystem> {
        match (self.full, self.transitions) {
            (Some(true), None) => ShiftSystem::full(self.alphabet),
            (Some(true), Some(_)) => {
                Err(Error::InvalidSystem("\"full\": true cannot be combined with \"transitions\"".into()))
            }
            (_, Some(rows)) => {
                if rows.len() != self.alphabet {
                    return Err(Error::InvalidSystem(format!(
                        "alphabet is {} but {} transition rows given",
                        self.alphabet,
                        rows.len()
                    )));
                }
                let mut parsed = Vec::with_capacity(rows.len());
                for (i, row) in rows.into_iter().enumerate() {
                    let r = row
                        .into_iter()
                        .enumerate()
                        .map(|(j, v)| match v {
                            0 => Ok(false),
                            1 => Ok(true),
                            other => Err(Error::InvalidSystem(format!("entry ({i},{j}) is {other}, expected 0 or 1"))),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    parsed.push(r);
                }
                ShiftSystem::new(parsed)
            }
            (_, None) => Err(Error::InvalidSystem("missing \"transitions\" (or \"full\": true)".into())),
        }
    }
}

/// Lexicographic iterator over admissible words of a fixed length.
pub struct WordIter<'a> {
    sys: &'a ShiftSystem,
    n: usize,
    buf: Vec<u8>,
    started: bool,
    done: bool,
}

impl<'a> WordIter<'a> {
    fn new(sys: &'a ShiftSystem, n: usize) -> Self {
        WordIter { sys, n, buf: Vec::with_capacity(n), started: false, done: false }
    }

    // extend buf to full length using the smallest admissible symbols
    fn fill_min(&mut self) -> bool {
        while self.buf.len() < self.n {
            let next = match self.buf.last() {
                None => Some(0),
                Some(&l) => self.sys.successors(l).next(),
            };
            match next {
                Some(s) => self.buf.push(s),
                None => return false,
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        while let Some(cur) = self.buf.pop() {
            let prev = self.buf.last().copied();
            let candidate = (cur + 1..self.sys.alphabet() as u8).find(|&s| prev.is_none_or(|p| self.sys.allows(p, s)));
            if let Some(s) = candidate {
                self.buf.push(s);
                if self.fill_min() {
                    return true;
                }
            }
        }
        false
    }
}

impl Iterator for WordIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let ok = if !self.started {
            self.started = true;
            self.fill_min()
        } else {
            self.advance()
        };
        if ok {
            Some(Word(self.buf.clone()))
        } else {
            self.done = true;
            None
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(sys: &ShiftSystem, n: usize) -> Vec<String> {
        sys.enumerate_words(n, None).unwrap().map(|w| w.to_string()).collect()
    }

    #[test]
    fn count_examples() {
        assert_eq!(ShiftSystem::full(2).unwrap().count_words(3), BigUint::from(8u32));
        assert_eq!(ShiftSystem::golden_mean().count_words(4), BigUint::from(8u32));
        assert_eq!(ShiftSystem::full(3).unwrap().count_words(1), BigUint::from(3u32));
    }

    #[test]
    fn golden_count_is_fibonacci() {
        let g = ShiftSystem::golden_mean();
        let (mut a, mut b) = (2u64, 3u64);
        for n in 1..60 {
            assert_eq!(g.count_words_u64(n).unwrap(), a);
            (a, b) = (b, a + b);
        }
    }

    #[test]
    fn count_does_not_overflow() {
        let c = ShiftSystem::full(3).unwrap().count_words(200);
        assert_eq!(c, BigUint::from(3u32).pow(200));
    }

    #[test]
    fn enumerate_examples() {
        let g = ShiftSystem::golden_mean();
        assert_eq!(words(&g, 2), ["00", "01", "10"]);
        assert_eq!(words(&g, 3), ["000", "001", "010", "100", "101"]);
        assert_eq!(words(&ShiftSystem::full(2).unwrap(), 2), ["00", "01", "10", "11"]);
    }

    #[test]
    fn enumerate_budget_is_an_error() {
        let f = ShiftSystem::full(2).unwrap();
        let err = f.enumerate_words(10, Some(1000)).err().unwrap();
        assert!(matches!(err, Error::Budget { limit: 1000, at_n: 10, .. }));
        assert!(f.enumerate_words(10, Some(1024)).is_ok());
    }

    #[test]
    fn separated_set_examples() {
        let f = ShiftSystem::full(2).unwrap();
        let g = ShiftSystem::golden_mean();
        let r = |l| Resolution::new(l).unwrap();
        assert_eq!(f.separated_set(1, r(1), None).unwrap().len(), 2);
        assert_eq!(g.separated_set(2, r(2), None).unwrap().len(), 5);
        assert_eq!(f.separated_set(3, r(2), None).unwrap().len(), 16);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(ShiftSystem::full(2).unwrap().digraph_diameter().unwrap(), 1);
        assert_eq!(ShiftSystem::golden_mean().digraph_diameter().unwrap(), 2);
        assert_eq!(ShiftSystem::cycle(3).unwrap().digraph_diameter().unwrap(), 3);
    }

    #[test]
    fn diameter_rejects_reducible() {
        let sys = ShiftSystem::new(vec![vec![true, true], vec![false, true]]).unwrap();
        assert!(!sys.is_strongly_connected());
        match sys.digraph_diameter() {
            Err(Error::NotStronglyConnected { from: 1, to: 0 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn connectors() {
        let g = ShiftSystem::golden_mean();
        assert_eq!(g.connector(1, 1).unwrap(), vec![0]);
        assert!(g.connector(0, 1).unwrap().is_empty());
        let c = ShiftSystem::cycle(3).unwrap();
        assert_eq!(c.connector(0, 0).unwrap(), vec![1, 2]);
        assert_eq!(c.connector(2, 1).unwrap(), vec![0]);
    }

    #[test]
    fn primitivity() {
        assert!(ShiftSystem::golden_mean().is_primitive());
        let c = ShiftSystem::cycle(3).unwrap();
        assert!(c.is_strongly_connected());
        assert_eq!(c.period(), 3);
        assert!(!c.is_primitive());
    }

    #[test]
    fn rejects_degenerate() {
        assert!(ShiftSystem::full(1).is_err());
        let e = ShiftSystem::new(vec![vec![true, false], vec![true, false]]).unwrap_err();
        assert!(e.to_string().contains("column 1"));
        let e = ShiftSystem::new(vec![vec![false, false], vec![true, true]]).unwrap_err();
        assert!(e.to_string().contains("row 0"));
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let s = ShiftSystem::from_json_str(r#"{"alphabet": 2, "transitions": [[1,1],[1,0]]}"#).unwrap();
        assert_eq!(s, ShiftSystem::golden_mean());
        let f = ShiftSystem::from_json_str(r#"{"alphabet": 3, "full": true}"#).unwrap();
        assert!(f.is_full());
        let back = serde_json::to_string(&s.to_file()).unwrap();
        assert_eq!(ShiftSystem::from_json_str(&back).unwrap(), s);
        assert!(ShiftSystem::from_json_str(r#"{"alphabet": 2, "transitions": [[1,2],[1,0]]}"#).is_err());
        assert!(ShiftSystem::from_json_str(r#"{"alphabet": 3, "transitions": [[1,1],[1,0]]}"#).is_err());
        let e = ShiftSystem::from_json_str(r#"{"alphabet": 2, "transitions": [[0,0],[1,1]]}"#).unwrap_err();
        assert!(e.to_string().contains("row 0"));
    }

    #[test]
    fn resolution_scaling() {
        let g = Resolution::new(5).unwrap();
        assert_eq!(g.scaled(2).level(), 4);
        assert_eq!(g.scaled(3).level(), 4);
        assert_eq!(g.scaled(4).level(), 3);
        assert_eq!(Resolution::new(1).unwrap().scaled(2).level(), 1);
        assert!(Resolution::new(0).is_err());
    }

    #[test]
    fn word_parse_and_display() {
        let w: Word = "0110".parse().unwrap();
        assert_eq!(w.symbols(), &[0, 1, 1, 0]);
        assert_eq!(w.to_string(), "0110");
        assert_eq!(w.periodic_prefix(6).to_string(), "011001");
        assert!("01x!".parse::<Word>().is_err());
    }
}
