//! Finitely supported exact probability distributions.
//!
//! `Dist<T>` is the workhorse value type: a finite map from outcomes to
//! positive rationals summing to exactly one. It is used at three nesting
//! depths (distributions over states, over distributions, and over
//! distributions of distributions) by the semantics layer.

use std::collections::BTreeMap;
use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::rat::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("negative weight {0}")]
    NegativeWeight(String),
}

/// Finitely supported probability distribution with exact weights.
///
/// Invariants: every stored probability is strictly positive (zero entries
/// are dropped, duplicates merged by addition) and the probabilities sum to
/// exactly one. Equality is structural, which by canonicality is semantic
/// equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist<T: Ord> {
    support: BTreeMap<T, Rat>,
}

impl<T: Ord> Dist<T> {
    /// Builds a distribution from weighted outcomes; duplicate keys merge by
    /// addition and zero entries are dropped.
    pub fn new(pairs: impl IntoIterator<Item = (T, Rat)>) -> Result<Self, DistError> {
        let mut support: BTreeMap<T, Rat> = BTreeMap::new();
        for (key, w) in pairs {
            if w.is_negative() {
                return Err(DistError::NegativeWeight(crate::rat::format_rat(&w)));
            }
            if w.is_zero() {
                continue;
            }
            *support.entry(key).or_insert_with(Rat::zero) += w;
        }
        let total: Rat = support.values().cloned().sum();
        if !total.is_one() {
            return Err(DistError::NotNormalized(crate::rat::format_rat(&total)));
        }
        Ok(Dist { support })
    }

    /// Dirac distribution: all mass on one outcome.
    pub fn dirac(x: T) -> Self {
        let mut support = BTreeMap::new();
        support.insert(x, Rat::one());
        Dist { support }
    }

    /// Probability of `x` (zero off the support).
    pub fn prob(&self, x: &T) -> Rat {
        self.support.get(x).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rat)> {
        self.support.iter()
    }

    pub fn into_iter_pairs(self) -> impl Iterator<Item = (T, Rat)> {
        self.support.into_iter()
    }

    pub fn is_dirac(&self) -> bool {
        self.support.len() == 1
    }

    /// The unique outcome of a Dirac distribution.
    pub fn as_dirac(&self) -> Option<&T> {
        if self.is_dirac() {
            self.support.keys().next()
        } else {
            None
        }
    }

    /// Pushforward along a total map: `(Df(d))(u) = Σ_{t : f(t)=u} d(t)`.
    pub fn pushforward<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> Dist<U> {
        let mut support: BTreeMap<U, Rat> = BTreeMap::new();
        for (t, w) in &self.support {
            *support.entry(f(t)).or_insert_with(Rat::zero) += w.clone();
        }
        Dist { support }
    }

    /// Total mass (always exactly one; exposed for property tests).
    pub fn total(&self) -> Rat {
        self.support.values().cloned().sum()
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (k, v) in &self.support {
            map.entry(k, &crate::rat::format_rat(v));
        }
        map.finish()
    }
}
