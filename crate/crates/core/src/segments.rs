//! Classes of orbit segments `(x, n)` and decompositions of segments into
//! prefix, good core and suffix.
//!
//! A segment is represented by a word carrying at least `n` symbols of `x`.
//! Zero-length pieces are vacuous: `(x, 0)` belongs to every class.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{ShiftSystem, Word};

type Pred = dyn Fn(&[u8], usize) -> bool + Send + Sync;

#[derive(Clone)]
enum Kind {
    All,
    Empty,
    Pred(Arc<Pred>),
}

/// A set of orbit segments given by a membership predicate on `(word, n)`.
#[derive(Clone)]
pub struct SegmentClass {
    label: String,
    kind: Kind,
}

impl fmt::Debug for SegmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SegmentClass({})", self.label)
    }
}

impl SegmentClass {
    pub fn all() -> Self {
        SegmentClass { label: "all".into(), kind: Kind::All }
    }

    pub fn empty() -> Self {
        SegmentClass { label: "empty".into(), kind: Kind::Empty }
    }

    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[u8], usize) -> bool + Send + Sync + 'static,
    {
        SegmentClass { label: label.into(), kind: Kind::Pred(Arc::new(f)) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_all(&self) -> bool {
        matches!(self.kind, Kind::All)
    }

    pub fn is_empty_class(&self) -> bool {
        matches!(self.kind, Kind::Empty)
    }

    /// Whether `(w, n)` lies in the class. Words shorter than `n` carry too
    /// little information and are rejected.
    pub fn contains(&self, w: &[u8], n: usize) -> bool {
        if w.len() < n {
            return false;
        }
        if n == 0 {
            return true;
        }
        match &self.kind {
            Kind::All => true,
            Kind::Empty => false,
            Kind::Pred(f) => f(w, n),
        }
    }

    pub fn union(&self, other: &SegmentClass) -> SegmentClass {
        if self.is_all() || other.is_empty_class() {
            return self.clone();
        }
        if other.is_all() || self.is_empty_class() {
            return other.clone();
        }
        let (a, b) = (self.clone(), other.clone());
        let label = format!("{} ∪ {}", a.label, b.label);
        SegmentClass::from_fn(label, move |w, n| a.contains(w, n) || b.contains(w, n))
    }

    pub fn intersect(&self, other: &SegmentClass) -> SegmentClass {
        if self.is_all() || other.is_empty_class() {
            return other.clone();
        }
        if other.is_all() || self.is_empty_class() {
            return self.clone();
        }
        let (a, b) = (self.clone(), other.clone());
        let label = format!("{} ∩ {}", a.label, b.label);
        SegmentClass::from_fn(label, move |w, n| a.contains(w, n) && b.contains(w, n))
    }

    pub fn complement(&self) -> SegmentClass {
        match &self.kind {
            Kind::All => SegmentClass::empty().with_label(format!("{}ᶜ", self.label)),
            Kind::Empty => SegmentClass::all().with_label(format!("{}ᶜ", self.label)),
            Kind::Pred(_) => {
                let a = self.clone();
                SegmentClass::from_fn(format!("{}ᶜ", a.label), move |w, n| !a.contains(w, n))
            }
        }
    }
}

/// Lengths `(p, g, s)` of the three pieces of a decomposed segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub p: usize,
    pub g: usize,
    pub s: usize,
}

type SplitFn = dyn Fn(&[u8], usize) -> Option<Split> + Send + Sync;

/// Decomposition of the segments in `D` as prefix in `P`, core in `G` and
/// suffix in `S`.
#[derive(Clone)]
pub struct CTDecomposition {
    pub name: String,
    pub d: SegmentClass,
    pub p: SegmentClass,
    pub g: SegmentClass,
    pub s: SegmentClass,
    split: Arc<SplitFn>,
}

impl fmt::Debug for CTDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CTDecomposition")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("p", &self.p)
            .field("g", &self.g)
            .field("s", &self.s)
            .finish()
    }
}

impl CTDecomposition {
    pub fn new<F>(name: impl Into<String>, d: SegmentClass, p: SegmentClass, g: SegmentClass, s: SegmentClass, split: F) -> Self
    where
        F: Fn(&[u8], usize) -> Option<Split> + Send + Sync + 'static,
    {
        CTDecomposition { name: name.into(), d, p, g, s, split: Arc::new(split) }
    }

    /// `D = G = all`, `P = S = ∅`, `p = s = 0`.
    pub fn trivial() -> Self {
        Self::new(
            "trivial",
            SegmentClass::all(),
            SegmentClass::empty().with_label("prefix class"),
            SegmentClass::all().with_label("good core"),
            SegmentClass::empty().with_label("suffix class"),
            |_, n| Some(Split { p: 0, g: n, s: 0 }),
        )
    }

    /// Every segment is entirely prefix: `P = all`, `p = n`.
    pub fn all_prefix() -> Self {
        Self::new(
            "all-prefix",
            SegmentClass::all(),
            SegmentClass::all().with_label("prefix class"),
            SegmentClass::empty().with_label("good core"),
            SegmentClass::empty().with_label("suffix class"),
            |_, n| Some(Split { p: n, g: 0, s: 0 }),
        )
    }

    /// Peels off the leading run of `symbol`, at most `cap` symbols, as the
    /// prefix. The core is what remains and the suffix is empty.
    pub fn prefix_run(sys: &ShiftSystem, symbol: u8, cap: usize) -> Result<Self> {
        if symbol as usize >= sys.alphabet() {
            return Err(Error::Config(format!("prefix-run symbol {symbol} outside alphabet")));
        }
        let run = move |w: &[u8], n: usize| w[..n].iter().take_while(|&&c| c == symbol).count();
        let split = move |w: &[u8], n: usize| {
            let p = run(w, n).min(cap);
            Some(Split { p, g: n - p, s: 0 })
        };
        let p_class =
            SegmentClass::from_fn(format!("prefix-run({symbol}) prefixes"), move |w, k| k <= cap && run(w, k) == k);
        let sys = sys.clone();
        let g_class = SegmentClass::from_fn(format!("prefix-run({symbol}) core"), move |y, _| {
            if y[0] != symbol {
                return true;
            }
            // nothing is peeled when cap = 0; otherwise the core starts with
            // `symbol` only when the run continues past the cap
            cap == 0 || sys.allows(symbol, symbol)
        });
        Ok(Self::new(
            format!("prefix-run({symbol},{cap})"),
            SegmentClass::all(),
            p_class,
            g_class,
            SegmentClass::empty().with_label("suffix class"),
            split,
        ))
    }

    /// Table-driven decomposition on finitely many segments; a segment
    /// `(x, n)` lies in `D` when `x` begins with a table word of length `n`.
    pub fn explicit(sys: &ShiftSystem, rows: &[ExplicitSegment]) -> Result<Self> {
        let mut table: Vec<(Vec<u8>, Split)> = Vec::new();
        for r in rows {
            let w = r.word.symbols().to_vec();
            sys.check_admissible(&w).map_err(|e| Error::Config(format!("explicit segment {}: {e}", r.word)))?;
            if r.p + r.g + r.s != w.len() {
                return Err(Error::Config(format!(
                    "explicit segment {}: p + g + s = {} but word has length {}",
                    r.word,
                    r.p + r.g + r.s,
                    w.len()
                )));
            }
            if table.iter().any(|(u, _)| *u == w) {
                return Err(Error::Config(format!("explicit segment {} listed twice", r.word)));
            }
            table.push((w, Split { p: r.p, g: r.g, s: r.s }));
        }
        let table = Arc::new(table);
        let t = table.clone();
        let find = move |w: &[u8], n: usize| t.iter().find(|(u, _)| u.len() == n && w[..n] == u[..]).map(|x| x.1);
        let f1 = find.clone();
        let d = SegmentClass::from_fn("explicit domain", move |w, n| f1(w, n).is_some());
        let piece = |label: &str, sel: fn(&Split) -> (usize, usize)| {
            let t = table.clone();
            SegmentClass::from_fn(label.to_string(), move |w, k| {
                t.iter().any(|(u, sp)| {
                    let (start, len) = sel(sp);
                    len == k && u[start..start + len] == w[..k]
                })
            })
        };
        let p = piece("explicit prefixes", |sp| (0, sp.p));
        let g = piece("explicit cores", |sp| (sp.p, sp.g));
        let s = piece("explicit suffixes", |sp| (sp.p + sp.g, sp.s));
        Ok(Self::new("explicit", d, p, g, s, find))
    }

    /// `(p, g, s)` for a segment of `D`, `None` outside `D`.
    pub fn split(&self, w: &[u8], n: usize) -> Option<Split> {
        if !self.d.contains(w, n) {
            return None;
        }
        (self.split)(w, n)
    }

    /// Checks the three membership clauses for one segment of `D`.
    pub fn check_segment(&self, w: &[u8], n: usize) -> Result<()> {
        let Some(sp) = self.split(w, n) else {
            return Ok(());
        };
        if sp.p + sp.g + sp.s != n {
            return Err(Error::Structural(format!("split of ({}, {n}) does not add up: {sp:?}", Word::from(w))));
        }
        let clauses = [
            (&self.p, 0, sp.p, "prefix"),
            (&self.g, sp.p, sp.g, "core"),
            (&self.s, sp.p + sp.g, sp.s, "suffix"),
        ];
        for (class, start, len, what) in clauses {
            if !class.contains(&w[start..], len) {
                return Err(Error::Structural(format!(
                    "{what} piece of ({}, {n}) with split {sp:?} is not in {}",
                    Word::from(w),
                    class.label()
                )));
            }
        }
        Ok(())
    }
}

/// `G_M = {(x, n) ∈ D : p(x, n) <= M and s(x, n) <= M}`.
pub fn restrict_gm(dec: &CTDecomposition, m: usize) -> SegmentClass {
    let label = format!("{} G_{m}", dec.name);
    if dec.name == "trivial" {
        return dec.d.clone().with_label(label);
    }
    let dec = dec.clone();
    SegmentClass::from_fn(label, move |w, n| dec.split(w, n).is_some_and(|sp| sp.p <= m && sp.s <= m))
}

/// One row of an explicit decomposition table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSegment {
    pub word: Word,
    pub p: usize,
    pub g: usize,
    pub s: usize,
}

/// On-disk decomposition description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecompositionConfig {
    Trivial,
    AllPrefix,
    PrefixRun { symbol: u8, cap: usize },
    Explicit { segments: Vec<ExplicitSegment> },
}

impl DecompositionConfig {
    pub fn build(&self, sys: &ShiftSystem) -> Result<CTDecomposition> {
        match self {
            DecompositionConfig::Trivial => Ok(CTDecomposition::trivial()),
            DecompositionConfig::AllPrefix => Ok(CTDecomposition::all_prefix()),
            DecompositionConfig::PrefixRun { symbol, cap } => CTDecomposition::prefix_run(sys, *symbol, *cap),
            DecompositionConfig::Explicit { segments } => CTDecomposition::explicit(sys, segments),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("decomposition: {e}")))
    }
}
