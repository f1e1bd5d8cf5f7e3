//! MDPs, configurations, and the componentwise order.

use std::fmt;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::dist::Dist;
use crate::rat::{format_rat, is_unit, Rat};

/// Index into an [`MdpModel`]'s state list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// Index into an [`MdpModel`]'s action list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("row {row} of action {action} is not stochastic (sum {sum})")]
    NotStochastic {
        action: String,
        row: usize,
        sum: String,
    },
    #[error("matrix entry out of [0,1] at action {action}, row {row}, column {col}")]
    EntryOutOfRange {
        action: String,
        row: usize,
        col: usize,
    },
    #[error("model needs at least one state and one action")]
    Empty,
    #[error("matrix for action {0} has wrong shape")]
    BadShape(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("configuration weights sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("entry out of [0,1]: {0}")]
    OutOfRange(String),
}

/// A probability distribution over states, stored densely; the state of a
/// config MC. Entries are in [0,1] and sum to exactly one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    weights: Vec<Rat>,
}

impl Configuration {
    pub fn new(weights: Vec<Rat>) -> Result<Self, ModelError> {
        for w in &weights {
            if !is_unit(w) {
                return Err(ModelError::OutOfRange(format_rat(w)));
            }
        }
        let total: Rat = weights.iter().cloned().sum();
        if !total.is_one() {
            return Err(ModelError::NotNormalized(format_rat(&total)));
        }
        Ok(Configuration { weights })
    }

    /// All mass on one state.
    pub fn dirac(state: StateId, n_states: usize) -> Self {
        let mut weights = vec![Rat::zero(); n_states];
        weights[state.0] = Rat::one();
        Configuration { weights }
    }

    pub fn weight(&self, q: StateId) -> &Rat {
        &self.weights[q.0]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[Rat] {
        &self.weights
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, _)| StateId(i))
    }

    pub fn is_dirac(&self) -> bool {
        self.weights.iter().filter(|w| !w.is_zero()).count() == 1
    }

    /// Converts to a sparse distribution over states.
    pub fn to_dist(&self) -> Dist<StateId> {
        Dist::new(
            self.weights
                .iter()
                .enumerate()
                .map(|(i, w)| (StateId(i), w.clone())),
        )
        .expect("configuration invariant")
    }

    /// Densifies a distribution over states.
    pub fn from_dist(d: &Dist<StateId>, n_states: usize) -> Self {
        let mut weights = vec![Rat::zero(); n_states];
        for (q, w) in d.iter() {
            weights[q.0] = w.clone();
        }
        Configuration { weights }
    }

    pub fn as_vec01(&self) -> Vec01 {
        Vec01 {
            entries: self.weights.clone(),
        }
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rat(w))?;
        }
        write!(f, ")")
    }
}

/// A vector in [0,1]^|Q|: a sub-distribution. Antichain elements and LP
/// solutions live here; entries need not sum to one.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vec01 {
    entries: Vec<Rat>,
}

impl Vec01 {
    pub fn new(entries: Vec<Rat>) -> Result<Self, ModelError> {
        for e in &entries {
            if !is_unit(e) {
                return Err(ModelError::OutOfRange(format_rat(e)));
            }
        }
        Ok(Vec01 { entries })
    }

    pub fn zeros(n: usize) -> Self {
        Vec01 {
            entries: vec![Rat::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &Rat {
        &self.entries[i]
    }

    /// Componentwise `self <= other`.
    pub fn leq(&self, other: &Vec01) -> Result<bool, ModelError> {
        if self.len() != other.len() {
            return Err(ModelError::DimensionMismatch(self.len(), other.len()));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a <= b))
    }
}

impl fmt::Debug for Vec01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rat(w))?;
        }
        write!(f, "]")
    }
}

/// Componentwise order on equal-length vectors; the order underlying
/// antichains and monotone target sets.
pub fn leq(x: &Vec01, y: &Vec01) -> Result<bool, ModelError> {
    x.leq(y)
}

/// Coupling of a configuration with an action distribution:
/// `result(q,a) = d(q) * e(a)`.
pub fn couple(d: &Configuration, e: &Dist<ActionId>) -> Dist<(StateId, ActionId)> {
    Dist::new(d.support().flat_map(|q| {
        let dq = d.weight(q).clone();
        e.iter()
            .map(move |(a, w)| ((q, *a), dq.clone() * w))
            .collect::<Vec<_>>()
    }))
    .expect("product of distributions is a distribution")
}

/// A finite MDP with global actions: one row-stochastic matrix per action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MdpModel {
    pub state_names: Vec<String>,
    pub action_names: Vec<String>,
    /// `matrices[a][i][j]` is the probability of moving from state `i` to
    /// state `j` under action `a`.
    pub matrices: Vec<Vec<Vec<Rat>>>,
}

impl MdpModel {
    pub fn new(
        state_names: Vec<String>,
        action_names: Vec<String>,
        matrices: Vec<Vec<Vec<Rat>>>,
    ) -> Result<Self, ModelError> {
        let m = MdpModel {
            state_names,
            action_names,
            matrices,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks every row of every matrix sums to exactly one with entries in
    /// [0,1].
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.state_names.is_empty() || self.action_names.is_empty() {
            return Err(ModelError::Empty);
        }
        let n = self.state_names.len();
        if self.matrices.len() != self.action_names.len() {
            return Err(ModelError::BadShape("action count".into()));
        }
        for (a, mat) in self.matrices.iter().enumerate() {
            if mat.len() != n {
                return Err(ModelError::BadShape(self.action_names[a].clone()));
            }
            for (i, row) in mat.iter().enumerate() {
                if row.len() != n {
                    return Err(ModelError::BadShape(self.action_names[a].clone()));
                }
                for (j, p) in row.iter().enumerate() {
                    if p.is_negative() || *p > Rat::one() {
                        return Err(ModelError::EntryOutOfRange {
                            action: self.action_names[a].clone(),
                            row: i,
                            col: j,
                        });
                    }
                }
                let sum: Rat = row.iter().cloned().sum();
                if !sum.is_one() {
                    return Err(ModelError::NotStochastic {
                        action: self.action_names[a].clone(),
                        row: i,
                        sum: format_rat(&sum),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn n_actions(&self) -> usize {
        self.action_names.len()
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> {
        (0..self.n_actions()).map(ActionId)
    }

    /// The transition distribution `δ(q, a)` (row `q` of `M_a`).
    pub fn row(&self, q: StateId, a: ActionId) -> &[Rat] {
        &self.matrices[a.0][q.0]
    }

    pub fn row_dist(&self, q: StateId, a: ActionId) -> Dist<StateId> {
        Dist::new(
            self.row(q, a)
                .iter()
                .enumerate()
                .map(|(j, p)| (StateId(j), p.clone())),
        )
        .expect("validated row is stochastic")
    }

    /// `M_a^T d`: the image of a configuration under one application of the
    /// action's matrix (the mass-transition step).
    pub fn apply_transposed(&self, a: ActionId, d: &Configuration) -> Configuration {
        let n = self.n_states();
        let mut out = vec![Rat::zero(); n];
        for q in d.support() {
            let w = d.weight(q);
            for (j, p) in self.row(q, a).iter().enumerate() {
                if !p.is_zero() {
                    out[j] += w.clone() * p;
                }
            }
        }
        Configuration::new(out).expect("stochastic matrix preserves normalization")
    }

    /// `M_a^T y` for a sub-distribution vector.
    pub fn apply_transposed_vec(&self, a: ActionId, y: &Vec01) -> Vec<Rat> {
        let n = self.n_states();
        let mut out = vec![Rat::zero(); n];
        for (i, w) in y.entries().iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            for (j, p) in self.row(StateId(i), a).iter().enumerate() {
                if !p.is_zero() {
                    out[j] += w.clone() * p;
                }
            }
        }
        out
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.action_names.iter().position(|n| n == name).map(ActionId)
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name).map(StateId)
    }
}
