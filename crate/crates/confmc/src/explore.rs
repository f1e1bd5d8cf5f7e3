//! Bounded exact forward exploration of config MCs, reachability evaluation
//! for explicit schedulers, and Monte-Carlo simulation.

use std::collections::BTreeMap;

use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Configuration, MdpModel, ModelError};
use crate::rat::{format_rat, Rat};
use crate::scheduler::Scheduler;
use crate::semantics::{config_step_capped, SemanticsError, SemanticsId, DEFAULT_BRANCH_CAP};
use crate::target::TargetSet;

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("exploration exceeded the node cap {0}")]
    NodeExplosion(usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Default cap on explored nodes.
pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// One node of an unfolded config MC.
#[derive(Clone, Debug)]
pub struct GraphNode {
    /// Full history when the scheduler is memoryful; the last entry is the
    /// node's configuration.
    pub history: Vec<Configuration>,
    pub depth: usize,
    pub in_target: bool,
    /// Node was not expanded (depth bound, or already in the target).
    pub frontier: bool,
}

impl GraphNode {
    pub fn config(&self) -> &Configuration {
        self.history.last().expect("nonempty history")
    }
}

/// Breadth-first unfolding of a config MC. Node identity is keyed on the
/// configuration under memoryless schedulers (merging histories) and on the
/// full history otherwise.
#[derive(Clone, Debug)]
pub struct ConfigGraph {
    pub nodes: Vec<GraphNode>,
    /// `(from, to, probability)`; outgoing probabilities of every expanded
    /// node sum to one.
    pub edges: Vec<(usize, usize, Rat)>,
    pub root: usize,
}

impl ConfigGraph {
    /// Standard DOT rendering: nodes `n0, n1, …` in BFS order, labeled by
    /// the configuration's rational vector, edges labeled by probability.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph confmc {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let label = node
                .config()
                .weights()
                .iter()
                .map(format_rat)
                .collect::<Vec<_>>()
                .join(", ");
            let shape = if node.in_target {
                ", shape=doublecircle"
            } else {
                ""
            };
            out.push_str(&format!("  n{i} [label=\"({label})\"{shape}];\n"));
        }
        for (from, to, p) in &self.edges {
            out.push_str(&format!(
                "  n{from} -> n{to} [label=\"{}\"];\n",
                format_rat(p)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// `true` iff every action's one-step successor distribution is Dirac at the
/// configuration itself, under the given semantics.
pub fn is_absorbing(
    m: &MdpModel,
    s: SemanticsId,
    d: &Configuration,
    cap: usize,
) -> Result<bool, ExploreError> {
    for a in m.actions() {
        let step = config_step_capped(m, &Scheduler::pure(a), s, std::slice::from_ref(d), cap)?;
        match step.successors.as_dirac() {
            Some(succ) if succ == d => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Options for [`explore`] and [`reach_prob_bounded`].
#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub node_cap: usize,
    pub branch_cap: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            node_cap: DEFAULT_NODE_CAP,
            branch_cap: DEFAULT_BRANCH_CAP,
        }
    }
}

/// Unfolds the config MC to the given depth, flagging target membership and
/// stopping expansion at target nodes (first-hit reachability semantics).
pub fn explore(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    d0: &Configuration,
    depth: usize,
    target: Option<&TargetSet>,
    opts: ExploreOptions,
) -> Result<ConfigGraph, ExploreError> {
    let memoryless = sigma.is_memoryless();
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut edges: Vec<(usize, usize, Rat)> = Vec::new();
    // Merged-node lookup under memoryless schedulers.
    let mut by_config: BTreeMap<Configuration, usize> = BTreeMap::new();

    let in_target = |d: &Configuration| -> Result<bool, ExploreError> {
        Ok(match target {
            Some(t) => t.contains(d)?,
            None => false,
        })
    };

    let root_hit = in_target(d0)?;
    nodes.push(GraphNode {
        history: vec![d0.clone()],
        depth: 0,
        in_target: root_hit,
        frontier: true,
    });
    if memoryless {
        by_config.insert(d0.clone(), 0);
    }

    let mut queue: Vec<usize> = vec![0];
    while let Some(idx) = queue.pop() {
        let (hist, node_depth, hit) = {
            let n = &nodes[idx];
            (n.history.clone(), n.depth, n.in_target)
        };
        if hit || node_depth >= depth {
            continue;
        }
        nodes[idx].frontier = false;
        let step = config_step_capped(m, sigma, s, &hist, opts.branch_cap)?;
        for (succ, p) in step.successors.iter() {
            let succ_idx = if memoryless {
                match by_config.get(succ) {
                    Some(&existing) => existing,
                    None => {
                        let new_idx = nodes.len();
                        if new_idx >= opts.node_cap {
                            return Err(ExploreError::NodeExplosion(opts.node_cap));
                        }
                        let hit = in_target(succ)?;
                        nodes.push(GraphNode {
                            history: vec![succ.clone()],
                            depth: node_depth + 1,
                            in_target: hit,
                            frontier: true,
                        });
                        by_config.insert(succ.clone(), new_idx);
                        queue.insert(0, new_idx);
                        new_idx
                    }
                }
            } else {
                let new_idx = nodes.len();
                if new_idx >= opts.node_cap {
                    return Err(ExploreError::NodeExplosion(opts.node_cap));
                }
                let mut next_hist = hist.clone();
                next_hist.push(succ.clone());
                let hit = in_target(succ)?;
                nodes.push(GraphNode {
                    history: next_hist,
                    depth: node_depth + 1,
                    in_target: hit,
                    frontier: true,
                });
                queue.insert(0, new_idx);
                new_idx
            };
            edges.push((idx, succ_idx, p.clone()));
        }
    }

    Ok(ConfigGraph {
        nodes,
        edges,
        root: 0,
    })
}

/// Exact probability of hitting the target within `depth` steps, together
/// with a `settled` flag: when every unexpanded frontier holds either target
/// mass or absorbing off-target mass, the lower bound is the exact
/// (infinite-horizon) reachability probability.
pub fn reach_prob_bounded(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    d0: &Configuration,
    target: &TargetSet,
    depth: usize,
    opts: ExploreOptions,
) -> Result<(Rat, bool), ExploreError> {
    // Mass flowing through histories; first hit absorbs into `hit`.
    let mut active: BTreeMap<Vec<Configuration>, Rat> = BTreeMap::new();
    let mut hit = Rat::zero();
    if target.contains(d0)? {
        return Ok((Rat::one(), true));
    }
    active.insert(vec![d0.clone()], Rat::one());

    for _ in 0..depth {
        let mut next: BTreeMap<Vec<Configuration>, Rat> = BTreeMap::new();
        for (hist, mass) in active {
            let step = config_step_capped(m, sigma, s, &hist, opts.branch_cap)?;
            for (succ, p) in step.successors.iter() {
                let weight = mass.clone() * p;
                if target.contains(succ)? {
                    hit += weight;
                } else {
                    let mut next_hist = hist.clone();
                    next_hist.push(succ.clone());
                    *next.entry(next_hist).or_insert_with(Rat::zero) += weight;
                    if next.len() > opts.node_cap {
                        return Err(ExploreError::NodeExplosion(opts.node_cap));
                    }
                }
            }
        }
        active = next;
        if active.is_empty() {
            return Ok((hit, true));
        }
    }

    let mut settled = true;
    for hist in active.keys() {
        let d = hist.last().expect("nonempty history");
        if !is_absorbing(m, s, d, opts.branch_cap)? {
            settled = false;
            break;
        }
    }
    Ok((hit, settled))
}

/// Samples one configuration path of length `steps + 1`; deterministic for
/// a fixed seed.
pub fn simulate(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    d0: &Configuration,
    steps: usize,
    rng_seed: u64,
) -> Result<Vec<Configuration>, ExploreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut history = vec![d0.clone()];
    for _ in 0..steps {
        let step = config_step_capped(m, sigma, s, &history, DEFAULT_BRANCH_CAP)?;
        let draw_num: u64 = rng.gen();
        let draw = Rat::new(draw_num.into(), (u64::MAX as u128 + 1).into());
        let mut acc = Rat::zero();
        let mut chosen: Option<Configuration> = None;
        for (succ, p) in step.successors.iter() {
            acc += p.clone();
            if draw < acc {
                chosen = Some(succ.clone());
                break;
            }
        }
        let next = chosen.unwrap_or_else(|| {
            step.successors
                .iter()
                .last()
                .map(|(c, _)| c.clone())
                .expect("nonempty successor distribution")
        });
        history.push(next);
    }
    Ok(history)
}

/// Fraction of `runs` simulated paths that enter the target within
/// `step_cap` steps; seeds are derived deterministically from `rng_seed`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_hit_frequency(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    d0: &Configuration,
    target: &TargetSet,
    runs: usize,
    step_cap: usize,
    rng_seed: u64,
) -> Result<f64, ExploreError> {
    let mut hits = 0usize;
    for run in 0..runs {
        let path = simulate(m, sigma, s, d0, step_cap, rng_seed.wrapping_add(run as u64))?;
        for d in &path {
            if target.contains(d)? {
                hits += 1;
                break;
            }
        }
    }
    Ok(hits as f64 / runs as f64)
}
