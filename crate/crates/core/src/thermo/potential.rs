//! Locally constant potentials and their Birkhoff sums.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};
use crate::symbolic::{Resolution, ShiftSystem, Word};

/// A potential `φ(x) = table[x_0 … x_{m-1}]` of memory `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential<S> {
    memory: usize,
    alphabet: usize,
    values: Vec<Option<S>>,
}

fn encode(w: &[u8], alphabet: usize) -> usize {
    w.iter().fold(0usize, |acc, &s| acc * alphabet + s as usize)
}

impl<S: Scalar> Potential<S> {
    /// Builds a potential from a table keyed by length-`memory` words. Every
    /// admissible word needs an entry and inadmissible words may not have one.
    pub fn new(sys: &ShiftSystem, memory: usize, table: &BTreeMap<Word, S>) -> Result<Self> {
        if memory == 0 {
            return Err(Error::InvalidPotential("memory must be at least 1".into()));
        }
        let a = sys.alphabet();
        let size = a
            .checked_pow(memory as u32)
            .filter(|&s| s <= 1 << 24)
            .ok_or_else(|| Error::InvalidPotential(format!("memory {memory} too large for alphabet {a}")))?;
        let mut values = vec![None; size];
        let mut bad = Vec::new();
        for (w, &v) in table {
            if w.len() != memory || !sys.is_admissible(w.symbols()) {
                bad.push(w.to_string());
                continue;
            }
            if !v.is_finite() {
                return Err(Error::InvalidPotential(format!("value for \"{w}\" is not finite")));
            }
            values[encode(w.symbols(), a)] = Some(v);
        }
        if !bad.is_empty() {
            return Err(Error::InvalidPotential(format!(
                "entries for inadmissible or wrong-length words: {}",
                bad.join(", ")
            )));
        }
        let mut missing = Vec::new();
        sys.visit_words_with_prefix(&[], memory, |w| {
            if values[encode(w, a)].is_none() {
                missing.push(Word::from(w).to_string());
            }
        });
        if !missing.is_empty() {
            return Err(Error::InvalidPotential(format!("missing admissible words: {}", missing.join(", "))));
        }
        Ok(Potential { memory, alphabet: a, values })
    }

    pub fn from_fn<F: FnMut(&[u8]) -> S>(sys: &ShiftSystem, memory: usize, mut f: F) -> Result<Self> {
        let mut table = BTreeMap::new();
        sys.visit_words_with_prefix(&[], memory, |w| {
            table.insert(Word::from(w), f(w));
        });
        Self::new(sys, memory, &table)
    }

    pub fn constant(sys: &ShiftSystem, c: S) -> Self {
        Self::from_fn(sys, 1, |_| c).expect("constant potential is valid")
    }

    pub fn zero(sys: &ShiftSystem) -> Self {
        Self::constant(sys, S::zero())
    }

    /// Memory-1 potential with `φ(x) = values[x_0]`.
    pub fn from_symbol_values(sys: &ShiftSystem, values: &[S]) -> Result<Self> {
        if values.len() != sys.alphabet() {
            return Err(Error::InvalidPotential(format!(
                "{} symbol values for alphabet of size {}",
                values.len(),
                sys.alphabet()
            )));
        }
        Self::from_fn(sys, 1, |w| values[w[0] as usize])
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// `φ` at any point whose first `memory` symbols are `w[..memory]`.
    #[inline]
    pub fn eval(&self, w: &[u8]) -> S {
        let code = encode(&w[..self.memory], self.alphabet);
        self.values[code].expect("potential evaluated on an inadmissible block")
    }

    pub fn get(&self, w: &[u8]) -> Option<S> {
        if w.len() < self.memory {
            return None;
        }
        self.values.get(encode(&w[..self.memory], self.alphabet)).copied().flatten()
    }

    /// Table entries in lexicographic order.
    pub fn entries(&self) -> Vec<(Word, S)> {
        let mut out = Vec::new();
        let m = self.memory;
        let a = self.alphabet;
        for (code, v) in self.values.iter().enumerate() {
            if let Some(v) = v {
                let mut w = vec![0u8; m];
                let mut c = code;
                for i in (0..m).rev() {
                    w[i] = (c % a) as u8;
                    c /= a;
                }
                out.push((Word(w), *v));
            }
        }
        out
    }

    /// `φ⁻ = min φ`.
    pub fn min_value(&self) -> S {
        self.values.iter().flatten().copied().fold(S::infinity(), S::min)
    }

    /// `φ⁺ = max φ`.
    pub fn max_value(&self) -> S {
        self.values.iter().flatten().copied().fold(S::neg_infinity(), S::max)
    }

    /// `φ⁺ - φ⁻`.
    pub fn range(&self) -> S {
        self.max_value() - self.min_value()
    }

    pub fn is_constant(&self) -> bool {
        self.range() == S::zero()
    }

    /// `φ + c`.
    pub fn shifted(&self, c: S) -> Self {
        Potential {
            memory: self.memory,
            alphabet: self.alphabet,
            values: self.values.iter().map(|v| v.map(|x| x + c)).collect(),
        }
    }

    /// Same potential viewed with a larger memory (ignores the extra symbols).
    pub fn with_memory(&self, sys: &ShiftSystem, memory: usize) -> Result<Self> {
        if memory < self.memory {
            return Err(Error::InvalidPotential("cannot shrink memory".into()));
        }
        Self::from_fn(sys, memory, |w| self.eval(w))
    }

    /// Number of symbols needed to evaluate `Φ(x, n)`.
    pub fn span(&self, n: usize) -> usize {
        n + self.memory - 1
    }

    /// Birkhoff sum `Φ(w, n) = Σ_{k<n} φ(σ^k w)`; `w` must carry at least
    /// `n + memory - 1` symbols.
    pub fn birkhoff_sum(&self, w: &[u8], n: usize) -> Result<S> {
        let need = self.span(n);
        if w.len() < need {
            return Err(Error::Precondition(format!(
                "Birkhoff sum over {n} steps of a memory-{} potential needs {need} symbols, word has {}",
                self.memory,
                w.len()
            )));
        }
        Ok(self.birkhoff_unchecked(w, n))
    }

    pub(crate) fn birkhoff_unchecked(&self, w: &[u8], n: usize) -> S {
        let mut acc = CompensatedSum::new();
        for k in 0..n {
            acc.add(self.eval(&w[k..]));
        }
        acc.value()
    }

    /// Birkhoff sum along the periodic point `w w w …` over one period.
    pub fn cyclic_sum(&self, w: &[u8]) -> S {
        let p = w.len();
        let ext: Vec<u8> = w.iter().copied().cycle().take(p + self.memory - 1).collect();
        self.birkhoff_unchecked(&ext, p)
    }

    /// `var(φ, ε) = sup{|φ(x) - φ(y)| : d(x, y) <= ε}`: the largest spread of
    /// `φ` over blocks sharing their first `min(level, memory)` symbols.
    pub fn variation(&self, eps: Resolution) -> S {
        let keep = (eps.level() as usize).min(self.memory);
        if keep >= self.memory {
            return S::zero();
        }
        let mut groups: BTreeMap<Vec<u8>, (S, S)> = BTreeMap::new();
        for (w, v) in self.entries() {
            let e = groups.entry(w.symbols()[..keep].to_vec()).or_insert((v, v));
            e.0 = e.0.min(v);
            e.1 = e.1.max(v);
        }
        groups.values().map(|(lo, hi)| *hi - *lo).fold(S::zero(), S::max)
    }

    pub fn to_file(&self) -> PotentialFile {
        PotentialFile {
            memory: self.memory,
            table: self.entries().into_iter().map(|(w, v)| (w.to_string(), v.as_f64())).collect(),
        }
    }

    pub fn from_json_str(sys: &ShiftSystem, s: &str) -> Result<Self> {
        let file: PotentialFile = serde_json::from_str(s).map_err(|e| Error::InvalidPotential(e.to_string()))?;
        file.into_potential(sys)
    }

    pub fn from_json_file(sys: &ShiftSystem, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read potential file {}: {e}", path.display())))?;
        Self::from_json_str(sys, &text)
    }
}

/// On-disk potential: `{"memory": m, "table": {"01": 1.0, …}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub memory: usize,
    pub table: BTreeMap<String, f64>,
}

impl PotentialFile {
    pub fn into_potential<S: Scalar>(self, sys: &ShiftSystem) -> Result<Potential<S>> {
        let mut table = BTreeMap::new();
        let mut bad = Vec::new();
        for (k, v) in &self.table {
            match k.parse::<Word>() {
                Ok(w) => {
                    table.insert(w, S::of(*v));
                }
                Err(_) => bad.push(k.clone()),
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidPotential(format!("unparseable keys: {}", bad.join(", "))));
        }
        Potential::new(sys, self.memory, &table)
    }
}
