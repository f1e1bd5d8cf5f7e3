//! Target sets over configurations: monotone sets given by generator
//! antichains, explicit finite sets, and linear-threshold half-spaces.


use crate::model::{Configuration, ModelError, Vec01};
use crate::rat::Rat;

/// A decidable set of configurations used as the reachability target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetSet {
    /// Upward closure of a generator antichain (dominated generators are
    /// removed at construction).
    UpwardGenerators(Vec<Vec01>),
    /// Downward closure of a generator antichain.
    DownwardGenerators(Vec<Vec01>),
    /// A finite set of configurations, membership by exact equality.
    ExplicitConfigs(Vec<Configuration>),
    /// `{d : α·d ≥ bound}` (or strict `>`).
    LinearThreshold {
        alpha: Vec<Rat>,
        bound: Rat,
        strict: bool,
    },
}

impl TargetSet {
    /// Upward-closed target; keeps only the minimal generators.
    pub fn upward(generators: Vec<Vec01>) -> Self {
        TargetSet::UpwardGenerators(reduce_min(generators))
    }

    /// Downward-closed target; keeps only the maximal generators.
    pub fn downward(generators: Vec<Vec01>) -> Self {
        TargetSet::DownwardGenerators(reduce_max(generators))
    }

    pub fn explicit(configs: Vec<Configuration>) -> Self {
        let mut configs = configs;
        configs.sort();
        configs.dedup();
        TargetSet::ExplicitConfigs(configs)
    }

    /// Exact membership test.
    pub fn contains(&self, d: &Configuration) -> Result<bool, ModelError> {
        match self {
            TargetSet::UpwardGenerators(gens) => {
                let v = d.as_vec01();
                for g in gens {
                    if g.leq(&v)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            TargetSet::DownwardGenerators(gens) => {
                let v = d.as_vec01();
                for g in gens {
                    if v.leq(g)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            TargetSet::ExplicitConfigs(configs) => Ok(configs.iter().any(|c| c == d)),
            TargetSet::LinearThreshold {
                alpha,
                bound,
                strict,
            } => {
                if alpha.len() != d.len() {
                    return Err(ModelError::DimensionMismatch(alpha.len(), d.len()));
                }
                let dot: Rat = alpha
                    .iter()
                    .zip(d.weights())
                    .map(|(a, w)| a.clone() * w)
                    .sum();
                Ok(if *strict { dot > *bound } else { dot >= *bound })
            }
        }
    }

    /// Generators of a monotone target, when it is one.
    pub fn generators(&self) -> Option<&[Vec01]> {
        match self {
            TargetSet::UpwardGenerators(g) | TargetSet::DownwardGenerators(g) => Some(g),
            _ => None,
        }
    }
}

/// Removes generators dominated from below (for upward closures, `g` is
/// redundant when some other generator is `<= g`).
fn reduce_min(gens: Vec<Vec01>) -> Vec<Vec01> {
    let mut kept: Vec<Vec01> = Vec::new();
    for g in gens {
        if kept
            .iter()
            .any(|k| k.leq(&g).unwrap_or(false))
        {
            continue;
        }
        kept.retain(|k| !g.leq(k).unwrap_or(false));
        kept.push(g);
    }
    kept
}

fn reduce_max(gens: Vec<Vec01>) -> Vec<Vec01> {
    let mut kept: Vec<Vec01> = Vec::new();
    for g in gens {
        if kept.iter().any(|k| g.leq(k).unwrap_or(false)) {
            continue;
        }
        kept.retain(|k| !k.leq(&g).unwrap_or(false));
        kept.push(g);
    }
    kept
}

/// The all-zero generator, whose upward closure is the whole space.
pub fn whole_space(n: usize) -> TargetSet {
    TargetSet::upward(vec![Vec01::zeros(n)])
}
