//! Schedulers: maps from configuration histories to action distributions.
//!
//! A closed set of serializable variants rather than an opaque callback, so
//! schedulers can be stored in query files, replayed, and synthesized.

use num::{One, Signed};
use thiserror::Error;

use crate::dist::Dist;
use crate::model::{ActionId, Configuration, StateId};
use crate::rat::{format_rat, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("empty history")]
    EmptyHistory,
    #[error("linear-fractional scheduler invalid at evaluation: {0}")]
    InvalidScheduler(String),
}

/// Coefficients of one linear-fractional scheduler: the weight of action `a`
/// at configuration `d` is `(theta[a].0 + Σ_q theta[a].1[q]·d(q)) /
/// (s.0 + Σ_q s.1[q]·d(q))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFractional {
    /// Per action: constant term and one coefficient per state.
    pub theta: Vec<(Rat, Vec<Rat>)>,
    /// Denominator: constant term and one coefficient per state.
    pub s: (Rat, Vec<Rat>),
}

impl LinearFractional {
    /// Numerator of action `a` at `d`.
    pub fn numerator(&self, a: ActionId, d: &Configuration) -> Rat {
        let (c, coeffs) = &self.theta[a.0];
        c.clone()
            + coeffs
                .iter()
                .zip(d.weights())
                .map(|(t, w)| t.clone() * w)
                .sum::<Rat>()
    }

    /// Denominator at `d`.
    pub fn denominator(&self, d: &Configuration) -> Rat {
        let (c, coeffs) = &self.s;
        c.clone()
            + coeffs
                .iter()
                .zip(d.weights())
                .map(|(t, w)| t.clone() * w)
                .sum::<Rat>()
    }
}

/// A scheduler for an MDP with global actions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scheduler {
    /// History-independent mixture over actions.
    ConstantMixed(Dist<ActionId>),
    /// Plays `word[k]` at the k-th step, then the default action forever.
    ActionWord {
        word: Vec<ActionId>,
        default: ActionId,
    },
    /// Memoryless linear-fractional template over the last configuration.
    LinearFractional(LinearFractional),
    /// Finite table from history prefixes to action distributions; the
    /// longest matching prefix wins, with a fallback default.
    HistoryTable {
        entries: Vec<(Vec<Configuration>, Dist<ActionId>)>,
        default: Dist<ActionId>,
    },
}

impl Scheduler {
    pub fn pure(a: ActionId) -> Self {
        Scheduler::ConstantMixed(Dist::dirac(a))
    }

    /// `true` if the action distribution depends only on the last
    /// configuration of the history.
    pub fn is_memoryless(&self) -> bool {
        matches!(
            self,
            Scheduler::ConstantMixed(_) | Scheduler::LinearFractional(_)
        )
    }

    /// Evaluates the scheduler on a nonempty history of configurations.
    pub fn eval(&self, history: &[Configuration]) -> Result<Dist<ActionId>, SchedulerError> {
        let last = history.last().ok_or(SchedulerError::EmptyHistory)?;
        match self {
            Scheduler::ConstantMixed(d) => Ok(d.clone()),
            Scheduler::ActionWord { word, default } => {
                let step = history.len() - 1;
                let a = word.get(step).copied().unwrap_or(*default);
                Ok(Dist::dirac(a))
            }
            Scheduler::LinearFractional(lf) => {
                let denom = lf.denominator(last);
                if denom < Rat::one() {
                    return Err(SchedulerError::InvalidScheduler(format!(
                        "denominator {} < 1",
                        format_rat(&denom)
                    )));
                }
                let mut pairs = Vec::with_capacity(lf.theta.len());
                for a in 0..lf.theta.len() {
                    let num = lf.numerator(ActionId(a), last);
                    if num.is_negative() {
                        return Err(SchedulerError::InvalidScheduler(format!(
                            "negative numerator {} for action {}",
                            format_rat(&num),
                            a
                        )));
                    }
                    pairs.push((ActionId(a), num / denom.clone()));
                }
                Dist::new(pairs).map_err(|e| SchedulerError::InvalidScheduler(e.to_string()))
            }
            Scheduler::HistoryTable { entries, default } => {
                let mut best: Option<&(Vec<Configuration>, Dist<ActionId>)> = None;
                for entry in entries {
                    let (prefix, _) = entry;
                    if prefix.len() <= history.len() && history[..prefix.len()] == prefix[..] {
                        match best {
                            Some((b, _)) if b.len() >= prefix.len() => {}
                            _ => best = Some(entry),
                        }
                    }
                }
                Ok(best.map(|(_, d)| d.clone()).unwrap_or_else(|| default.clone()))
            }
        }
    }

    /// Checks a linear-fractional parameterization at the simplex vertices;
    /// since numerators and denominator are affine, nonnegativity and the
    /// denominator bound there extend to the whole simplex.
    pub fn check_linear_fractional(lf: &LinearFractional, n_states: usize) -> bool {
        for q in 0..n_states {
            let vertex = Configuration::dirac(StateId(q), n_states);
            if lf.denominator(&vertex) < Rat::one() {
                return false;
            }
            for a in 0..lf.theta.len() {
                if lf.numerator(ActionId(a), &vertex).is_negative() {
                    return false;
                }
            }
        }
        true
    }
}
