//! Alphabets, letters and probability mass functions.
//!
//! An [`Alphabet`] is the set of valid values of a variable at some stage of
//! a workflow. Small alphabets are enumerated letter by letter with a
//! [`Pmf`]. Alphabets of raw data (every possible hour of share prices, every
//! possible video) cannot be enumerated, so they are tracked symbolically by
//! their entropy and maximal entropy, or as a product of independent
//! identically distributed factors.
//!
//! All quantities are in bits.

use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a pmf.
pub const PMF_TOLERANCE: f64 = 1e-9;

/// Which entropy a report uses for an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    /// Shannon entropy of the alphabet's probability model.
    #[default]
    Actual,
    /// Entropy under the uniform distribution, log2 of the cardinality.
    Maximal,
}

impl std::fmt::Display for EntropyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntropyMode::Actual => f.write_str("actual"),
            EntropyMode::Maximal => f.write_str("maximal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl Letter {
    pub fn new(id: impl Into<String>) -> Self {
        Letter {
            id: id.into(),
            payload: None,
        }
    }

    pub fn with_payload(id: impl Into<String>, payload: impl Into<String>) -> Self {
        Letter {
            id: id.into(),
            payload: Some(payload.into()),
        }
    }
}

/// A probability mass function keyed by letter id, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: IndexMap<String, f64>,
}

impl Pmf {
    /// Builds a pmf, renormalizing when the total is within
    /// [`PMF_TOLERANCE`] of one.
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut probs = IndexMap::new();
        for (id, p) in entries {
            let id = id.into();
            if !p.is_finite() || !(-PMF_TOLERANCE..=1.0 + PMF_TOLERANCE).contains(&p) {
                return Err(Error::InvalidProbability { letter: id, value: p });
            }
            let p = p.clamp(0.0, 1.0);
            if probs.insert(id.clone(), p).is_some() {
                return Err(Error::DuplicateLetter(id));
            }
        }
        if probs.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let sum: f64 = probs.values().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            for p in probs.values_mut() {
                *p /= sum;
            }
        }
        Ok(Pmf { probs })
    }

    pub fn uniform<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        if ids.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let p = 1.0 / ids.len() as f64;
        let mut probs = IndexMap::with_capacity(ids.len());
        for id in ids {
            if probs.insert(id.clone(), p).is_some() {
                return Err(Error::DuplicateLetter(id));
            }
        }
        Ok(Pmf { probs })
    }

    /// Normalizes non-negative weights into a pmf.
    pub fn from_weights<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let raw: Vec<(String, f64)> = entries.into_iter().map(|(s, w)| (s.into(), w)).collect();
        for (id, w) in &raw {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidProbability {
                    letter: id.clone(),
                    value: *w,
                });
            }
        }
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::NotNormalized { sum: total });
        }
        Pmf::new(raw.into_iter().map(|(id, w)| (id, w / total)))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.probs.get(id).copied()
    }

    /// Probability of `id`, zero when the letter is absent.
    pub fn prob(&self, id: &str) -> f64 {
        self.get(id).unwrap_or(0.0)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.probs.get_index_of(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.probs.keys().map(String::as_str)
    }

    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.values().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.probs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(self.probs.values().copied())
    }

    /// Pointwise equality within `tol`, treating absent letters as zero.
    pub fn approx_eq(&self, other: &Pmf, tol: f64) -> bool {
        let ids: IndexSet<&str> = self.ids().chain(other.ids()).collect();
        ids.into_iter()
            .all(|id| (self.prob(id) - other.prob(id)).abs() <= tol)
    }
}

/// Shannon entropy in bits of a probability vector, with 0·log2(0) = 0.
pub fn entropy_of<I: IntoIterator<Item = f64>>(probs: I) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // -0.0 and rounding residue below zero for point masses
    h.max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphabetModel {
    Enumerated { letters: Vec<Letter>, pmf: Pmf },
    Symbolic { entropy_bits: f64, max_entropy_bits: f64 },
    Product { factor: Arc<Alphabet>, count: u64 },
}

/// A named alphabet with its probability model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    name: String,
    model: AlphabetModel,
}

impl Alphabet {
    pub fn enumerated(name: impl Into<String>, letters: Vec<Letter>, pmf: Pmf) -> Result<Self> {
        if letters.len() != pmf.len() {
            let missing = letters
                .iter()
                .find(|l| pmf.get(&l.id).is_none())
                .map(|l| l.id.clone())
                .or_else(|| {
                    pmf.ids()
                        .find(|id| !letters.iter().any(|l| l.id == *id))
                        .map(str::to_string)
                })
                .unwrap_or_default();
            return Err(Error::LetterPmfMismatch(missing));
        }
        let mut seen = IndexSet::new();
        for l in &letters {
            if !seen.insert(l.id.as_str()) {
                return Err(Error::DuplicateLetter(l.id.clone()));
            }
            if pmf.get(&l.id).is_none() {
                return Err(Error::LetterPmfMismatch(l.id.clone()));
            }
        }
        Ok(Alphabet {
            name: name.into(),
            model: AlphabetModel::Enumerated { letters, pmf },
        })
    }

    /// Enumerated alphabet whose letters are the pmf's ids.
    pub fn from_pmf(name: impl Into<String>, pmf: Pmf) -> Self {
        let letters = pmf.ids().map(Letter::new).collect();
        Alphabet {
            name: name.into(),
            model: AlphabetModel::Enumerated { letters, pmf },
        }
    }

    /// Uniform alphabet over the letters `"0"`, `"1"`, ... `"n-1"`.
    pub fn uniform(name: impl Into<String>, n: usize) -> Result<Self> {
        let pmf = Pmf::uniform((0..n).map(|i| i.to_string()))?;
        Ok(Alphabet::from_pmf(name, pmf))
    }

    pub fn symbolic(name: impl Into<String>, entropy_bits: f64, max_entropy_bits: f64) -> Result<Self> {
        for b in [entropy_bits, max_entropy_bits] {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::InvalidBits(b));
            }
        }
        if entropy_bits > max_entropy_bits {
            return Err(Error::SymbolicEntropyExceedsMax {
                entropy: entropy_bits,
                max: max_entropy_bits,
            });
        }
        Ok(Alphabet {
            name: name.into(),
            model: AlphabetModel::Symbolic {
                entropy_bits,
                max_entropy_bits,
            },
        })
    }

    /// `count` independent copies of this alphabet.
    pub fn product(&self, count: u64) -> Result<Alphabet> {
        Alphabet::product_of(format!("{}^{}", self.name, count), Arc::new(self.clone()), count)
    }

    pub fn product_of(name: impl Into<String>, factor: Arc<Alphabet>, count: u64) -> Result<Alphabet> {
        if count == 0 {
            return Err(Error::EmptyProduct);
        }
        Ok(Alphabet {
            name: name.into(),
            model: AlphabetModel::Product { factor, count },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &AlphabetModel {
        &self.model
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn pmf(&self) -> Option<&Pmf> {
        match &self.model {
            AlphabetModel::Enumerated { pmf, .. } => Some(pmf),
            _ => None,
        }
    }

    pub fn letters(&self) -> Option<&[Letter]> {
        match &self.model {
            AlphabetModel::Enumerated { letters, .. } => Some(letters),
            _ => None,
        }
    }

    pub fn is_enumerated(&self) -> bool {
        matches!(self.model, AlphabetModel::Enumerated { .. })
    }

    pub fn entropy(&self) -> f64 {
        match &self.model {
            AlphabetModel::Enumerated { pmf, .. } => pmf.entropy(),
            AlphabetModel::Symbolic { entropy_bits, .. } => *entropy_bits,
            AlphabetModel::Product { factor, count } => *count as f64 * factor.entropy(),
        }
    }

    pub fn max_entropy(&self) -> f64 {
        match &self.model {
            AlphabetModel::Enumerated { letters, .. } => (letters.len() as f64).log2(),
            AlphabetModel::Symbolic {
                max_entropy_bits, ..
            } => *max_entropy_bits,
            AlphabetModel::Product { factor, count } => *count as f64 * factor.max_entropy(),
        }
    }

    pub fn entropy_in(&self, mode: EntropyMode) -> f64 {
        match mode {
            EntropyMode::Actual => self.entropy(),
            EntropyMode::Maximal => self.max_entropy(),
        }
    }

    /// Conditions an enumerated alphabet on a subset of its letters.
    pub fn restrict<S: AsRef<str>>(&self, subset: &[S]) -> Result<Alphabet> {
        let (letters, pmf) = match &self.model {
            AlphabetModel::Enumerated { letters, pmf } => (letters, pmf),
            _ => return Err(Error::RequiresEnumerated(format!("restrict `{}`", self.name))),
        };
        if subset.is_empty() {
            return Err(Error::UnconditionableSubset("empty subset".into()));
        }
        let wanted: IndexSet<&str> = subset.iter().map(AsRef::as_ref).collect();
        for id in &wanted {
            if pmf.get(id).is_none() {
                return Err(Error::UnconditionableSubset(format!("`{id}` is not a letter")));
            }
        }
        let mass: f64 = wanted.iter().map(|id| pmf.prob(id)).sum();
        if mass <= 0.0 {
            return Err(Error::UnconditionableSubset("subset has zero mass".into()));
        }
        // keep the alphabet's letter order
        let kept: Vec<Letter> = letters
            .iter()
            .filter(|l| wanted.contains(l.id.as_str()))
            .cloned()
            .collect();
        let pmf = Pmf::new(kept.iter().map(|l| (l.id.clone(), pmf.prob(&l.id) / mass)))?;
        Alphabet::enumerated(self.name.clone(), kept, pmf)
    }

    /// Whether two alphabets describe the same variable up to naming:
    /// equal pmfs for enumerated models, equal entropies otherwise.
    pub fn matches(&self, other: &Alphabet, tol: f64) -> bool {
        match (self.pmf(), other.pmf()) {
            (Some(a), Some(b)) => a.len() == b.len() && a.ids().all(|id| b.get(id).is_some()) && a.approx_eq(b, tol),
            (None, None) => {
                (self.entropy() - other.entropy()).abs() <= tol * self.entropy().max(1.0)
                    && (self.max_entropy() - other.max_entropy()).abs() <= tol * self.max_entropy().max(1.0)
            }
            _ => false,
        }
    }
}
