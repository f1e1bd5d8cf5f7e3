//! Backward projection over antichains for chance-scheduler/mass-transition
//! reachability with finitely generated monotone targets.
//!
//! Starting from the target's generator antichain, each round pulls the
//! frontier back through every transition matrix by solving a short sequence
//! of exact LPs whose sampled tightening constraints steer successive
//! solutions away from the ones already found. Every returned vector is a
//! true minimal element of the pullback, so the maintained set always
//! under-approximates the configurations that can reach the target; a
//! positive answer therefore comes with an action-word witness that is
//! replayed exactly before being reported.

use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lp::{Cmp, LinearProgram, LpBackend, LpError, LpOutcome};
use crate::model::{ActionId, Configuration, MdpModel, Vec01};
use crate::rat::Rat;
use crate::target::TargetSet;

#[derive(Debug, Error)]
pub enum AntichainError {
    #[error("LP backend failed: {0}")]
    BackendFailure(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("target must be a finitely generated monotone set")]
    NotMonotone,
    #[error("witness replay failed to land in the target (internal bug)")]
    WitnessReplayFailed,
}

/// Result of a backward-reachability run. Stabilization proves nothing
/// negative: the sampled pullback under-approximates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReachOutcome {
    Reachable {
        witness: Vec<ActionId>,
        iterations: usize,
    },
    Stabilized {
        iterations: usize,
    },
    LoopLimit {
        limit: usize,
    },
}

/// A set of pairwise incomparable vectors with an arena tag per element
/// (used for provenance back-pointers).
#[derive(Clone, Debug, Default)]
pub struct Antichain {
    items: Vec<(Vec01, usize)>,
}

impl Antichain {
    pub fn elements(&self) -> impl Iterator<Item = &Vec01> {
        self.items.iter().map(|(v, _)| v)
    }

    pub fn items(&self) -> &[(Vec01, usize)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Insert keeping minimal elements: dominated input is dropped, existing
    /// elements above the input are removed. Returns whether `x` was kept.
    pub fn floor_insert(&mut self, x: Vec01, tag: usize) -> bool {
        if self
            .items
            .iter()
            .any(|(a, _)| a.leq(&x).unwrap_or(false))
        {
            return false;
        }
        self.items.retain(|(a, _)| !x.leq(a).unwrap_or(false));
        self.items.push((x, tag));
        true
    }

    /// Insert keeping maximal elements (the dual of [`Self::floor_insert`]).
    pub fn top_insert(&mut self, x: Vec01, tag: usize) -> bool {
        if self.items.iter().any(|(a, _)| x.leq(a).unwrap_or(false)) {
            return false;
        }
        self.items.retain(|(a, _)| !a.leq(&x).unwrap_or(false));
        self.items.push((x, tag));
        true
    }

    /// Tag of some element below `d`, if any (upward-coverage test).
    pub fn covers_from_below(&self, d: &Vec01) -> Option<usize> {
        self.items
            .iter()
            .find(|(a, _)| a.leq(d).unwrap_or(false))
            .map(|(_, tag)| *tag)
    }

    /// Tag of some element above `d`, if any (downward-coverage test).
    pub fn covers_from_above(&self, d: &Vec01) -> Option<usize> {
        self.items
            .iter()
            .find(|(a, _)| d.leq(a).unwrap_or(false))
            .map(|(_, tag)| *tag)
    }

    /// Set equality on the underlying vectors.
    pub fn same_elements(&self, other: &Antichain) -> bool {
        let mut a: Vec<&Vec01> = self.items.iter().map(|(v, _)| v).collect();
        let mut b: Vec<&Vec01> = other.items.iter().map(|(v, _)| v).collect();
        a.sort();
        b.sort();
        a == b
    }
}

/// Spec-level floor insert on a bare element list.
pub fn antichain_floor_insert(elements: &[Vec01], x: Vec01) -> Vec<Vec01> {
    let mut chain = Antichain::default();
    for e in elements {
        chain.floor_insert(e.clone(), 0);
    }
    chain.floor_insert(x, 0);
    chain.elements().cloned().collect()
}

/// Direction of the monotone target (upward closures use minimal frontiers,
/// downward closures maximal ones).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Up,
    Down,
}

fn pullback_lp(
    matrix: &[Vec<Rat>],
    x: &Vec01,
    tightenings: &[(usize, Rat)],
    dir: Direction,
) -> LinearProgram {
    let n = x.len();
    let mut lp = LinearProgram::with_unit_box(n);
    lp.objective = match dir {
        Direction::Up => vec![Rat::one(); n],
        Direction::Down => vec![-Rat::one(); n],
    };
    // Row j constrains column j of M^T, i.e. the j-th entries of the rows.
    #[allow(clippy::needless_range_loop)]
    for j in 0..n {
        let coeffs: Vec<Rat> = (0..n).map(|i| matrix[i][j].clone()).collect();
        let cmp = match dir {
            Direction::Up => Cmp::Ge,
            Direction::Down => Cmp::Le,
        };
        lp.push(coeffs, cmp, x.entry(j).clone());
    }
    if dir == Direction::Up {
        lp.push(vec![Rat::one(); n], Cmp::Le, Rat::one());
    }
    for (coord, bound) in tightenings {
        let mut coeffs = vec![Rat::zero(); n];
        coeffs[*coord] = Rat::one();
        let cmp = match dir {
            Direction::Up => Cmp::Le,
            Direction::Down => Cmp::Ge,
        };
        lp.push(coeffs, cmp, bound.clone());
    }
    lp
}

fn image(matrix: &[Vec<Rat>], y: &[Rat]) -> Vec<Rat> {
    let n = matrix.len();
    let mut out = vec![Rat::zero(); n];
    for (i, w) in y.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        for (j, p) in matrix[i].iter().enumerate() {
            if !p.is_zero() {
                out[j] += w.clone() * p;
            }
        }
    }
    out
}

fn solve_pullback<B: LpBackend>(
    backend: &B,
    matrix: &[Vec<Rat>],
    x: &Vec01,
    big_k: usize,
    big_l: usize,
    rng: &mut ChaCha8Rng,
    dir: Direction,
) -> Result<Vec<Vec01>, AntichainError> {
    let n = x.len();
    let mut solutions: Vec<Vec01> = Vec::new();
    'outer: for k in 0..big_k.max(1) {
        let attempts = if k == 0 { 1 } else { big_l.max(1) };
        for _ in 0..attempts {
            // One sampled tightening per prior solution: push some coordinate
            // strictly past the prior value (all the way to the boundary or
            // halfway), which realizes the strict constraint exactly.
            let mut tightenings = Vec::with_capacity(solutions.len());
            let mut sample_ok = true;
            for prior in &solutions {
                let coord = rng.gen_range(0..n);
                let halve: bool = rng.gen();
                let prior_v = prior.entry(coord).clone();
                let bound = match dir {
                    Direction::Up => {
                        if prior_v.is_zero() {
                            sample_ok = false;
                            break;
                        }
                        if halve {
                            prior_v / Rat::from_integer(2.into())
                        } else {
                            Rat::zero()
                        }
                    }
                    Direction::Down => {
                        if prior_v.is_one() {
                            sample_ok = false;
                            break;
                        }
                        if halve {
                            (prior_v + Rat::one()) / Rat::from_integer(2.into())
                        } else {
                            Rat::one()
                        }
                    }
                };
                tightenings.push((coord, bound));
            }
            if !sample_ok {
                continue;
            }
            let lp = pullback_lp(matrix, x, &tightenings, dir);
            match backend.solve_min(&lp)? {
                LpOutcome::Optimal { x: y, .. } => {
                    // Exact feasibility re-check before accepting.
                    let img = image(matrix, &y);
                    let feasible = match dir {
                        Direction::Up => img.iter().zip(x.entries()).all(|(a, b)| a >= b),
                        Direction::Down => img.iter().zip(x.entries()).all(|(a, b)| a <= b),
                    };
                    if !feasible {
                        return Err(AntichainError::BackendFailure(
                            "backend returned an infeasible pullback vector".into(),
                        ));
                    }
                    let v = Vec01::new(y)
                        .map_err(|e| AntichainError::BackendFailure(e.to_string()))?;
                    solutions.push(v);
                    continue 'outer;
                }
                LpOutcome::Infeasible => continue,
                LpOutcome::Unbounded => {
                    return Err(AntichainError::BackendFailure(
                        "pullback LP unbounded".into(),
                    ))
                }
            }
        }
        break;
    }
    // Distinct optima of the tightened LPs are minimal (maximal, in the dual
    // order) elements of the pullback, hence pairwise incomparable; reduce
    // anyway so the contract does not depend on that argument.
    let mut chain = Antichain::default();
    for s in solutions {
        match dir {
            Direction::Up => chain.floor_insert(s, 0),
            Direction::Down => chain.top_insert(s, 0),
        };
    }
    Ok(chain.elements().cloned().collect())
}

/// Sampled minimal elements of `{y : M^T y ⪰ x}` within the unit box, per
/// the iterated argmin scheme: up to `big_k` solutions, each later solve
/// constrained strictly below every prior solution at one sampled
/// coordinate, with `big_l` resamples on infeasibility.
pub fn pullback_minimals<B: LpBackend>(
    backend: &B,
    matrix: &[Vec<Rat>],
    x: &Vec01,
    big_k: usize,
    big_l: usize,
    rng_seed: u64,
) -> Result<Vec<Vec01>, AntichainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    solve_pullback(backend, matrix, x, big_k, big_l, &mut rng, Direction::Up)
}

/// Dual of [`pullback_minimals`]: sampled maximal elements of
/// `{y : M^T y ⪯ x}`.
pub fn pullback_maximals<B: LpBackend>(
    backend: &B,
    matrix: &[Vec<Rat>],
    x: &Vec01,
    big_k: usize,
    big_l: usize,
    rng_seed: u64,
) -> Result<Vec<Vec01>, AntichainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    solve_pullback(backend, matrix, x, big_k, big_l, &mut rng, Direction::Down)
}

struct Arena {
    nodes: Vec<(Vec01, Option<(ActionId, usize)>)>,
}

impl Arena {
    fn push(&mut self, v: Vec01, parent: Option<(ActionId, usize)>) -> usize {
        self.nodes.push((v, parent));
        self.nodes.len() - 1
    }

    fn witness_word(&self, mut id: usize) -> Vec<ActionId> {
        let mut word = Vec::new();
        while let Some((action, parent)) = self.nodes[id].1 {
            word.push(action);
            id = parent;
        }
        word
    }
}

/// Exact forward replay of a witness word from `d0`; lands in the target or
/// reports the internal-soundness failure.
pub fn replay_witness(
    m: &MdpModel,
    d0: &Configuration,
    word: &[ActionId],
    target: &TargetSet,
) -> Result<Configuration, AntichainError> {
    let mut d = d0.clone();
    for &a in word {
        d = m.apply_transposed(a, &d);
    }
    match target.contains(&d) {
        Ok(true) => Ok(d),
        _ => Err(AntichainError::WitnessReplayFailed),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_backward<B: LpBackend>(
    backend: &B,
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    generators: &[Vec01],
    dir: Direction,
    big_k: usize,
    big_l: usize,
    loop_limit: usize,
    rng_seed: u64,
) -> Result<ReachOutcome, AntichainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut arena = Arena { nodes: Vec::new() };
    let generator_ids: Vec<usize> = generators
        .iter()
        .map(|g| arena.push(g.clone(), None))
        .collect();

    let fresh_floor = |arena: &Arena| {
        let mut chain = Antichain::default();
        for &id in &generator_ids {
            match dir {
                Direction::Up => chain.floor_insert(arena.nodes[id].0.clone(), id),
                Direction::Down => chain.top_insert(arena.nodes[id].0.clone(), id),
            };
        }
        chain
    };

    let d0v = d0.as_vec01();
    let covered = |chain: &Antichain| match dir {
        Direction::Up => chain.covers_from_below(&d0v),
        Direction::Down => chain.covers_from_above(&d0v),
    };

    let mut current = fresh_floor(&arena);
    if let Some(id) = covered(&current) {
        let word = arena.witness_word(id);
        replay_witness(m, d0, &word, target)?;
        return Ok(ReachOutcome::Reachable {
            witness: word,
            iterations: 0,
        });
    }

    for iteration in 1..=loop_limit {
        let previous = current.clone();
        let mut next = fresh_floor(&arena);
        for a in m.actions() {
            let matrix = &m.matrices[a.0];
            for (x, parent_id) in previous.items().to_vec() {
                let ys = solve_pullback(backend, matrix, &x, big_k, big_l, &mut rng, dir)?;
                for y in ys {
                    let id = arena.push(y.clone(), Some((a, parent_id)));
                    match dir {
                        Direction::Up => next.floor_insert(y, id),
                        Direction::Down => next.top_insert(y, id),
                    };
                }
            }
        }
        if let Some(id) = covered(&next) {
            let word = arena.witness_word(id);
            replay_witness(m, d0, &word, target)?;
            return Ok(ReachOutcome::Reachable {
                witness: word,
                iterations: iteration,
            });
        }
        if next.same_elements(&previous) {
            return Ok(ReachOutcome::Stabilized {
                iterations: iteration,
            });
        }
        current = next;
    }
    Ok(ReachOutcome::LoopLimit { limit: loop_limit })
}

/// Backward projection for an upward-closed target given by its minimal
/// generators. Reachable answers carry a witness action word verified by
/// exact forward replay.
#[allow(clippy::too_many_arguments)]
pub fn backward_reach<B: LpBackend>(
    backend: &B,
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    big_k: usize,
    big_l: usize,
    loop_limit: usize,
    rng_seed: u64,
) -> Result<ReachOutcome, AntichainError> {
    match target {
        TargetSet::UpwardGenerators(gens) => run_backward(
            backend,
            m,
            d0,
            target,
            gens,
            Direction::Up,
            big_k,
            big_l,
            loop_limit,
            rng_seed,
        ),
        _ => Err(AntichainError::NotMonotone),
    }
}

/// Backward projection for a downward-closed target (the order dual of
/// [`backward_reach`]).
#[allow(clippy::too_many_arguments)]
pub fn dual_backward_reach<B: LpBackend>(
    backend: &B,
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    big_k: usize,
    big_l: usize,
    loop_limit: usize,
    rng_seed: u64,
) -> Result<ReachOutcome, AntichainError> {
    match target {
        TargetSet::DownwardGenerators(gens) => run_backward(
            backend,
            m,
            d0,
            target,
            gens,
            Direction::Down,
            big_k,
            big_l,
            loop_limit,
            rng_seed,
        ),
        _ => Err(AntichainError::NotMonotone),
    }
}

/// Dispatches on the monotone target kind.
#[allow(clippy::too_many_arguments)]
pub fn check_reach<B: LpBackend>(
    backend: &B,
    m: &MdpModel,
    d0: &Configuration,
    target: &TargetSet,
    big_k: usize,
    big_l: usize,
    loop_limit: usize,
    rng_seed: u64,
) -> Result<ReachOutcome, AntichainError> {
    match target {
        TargetSet::UpwardGenerators(_) => {
            backward_reach(backend, m, d0, target, big_k, big_l, loop_limit, rng_seed)
        }
        TargetSet::DownwardGenerators(_) => {
            dual_backward_reach(backend, m, d0, target, big_k, big_l, loop_limit, rng_seed)
        }
        _ => Err(AntichainError::NotMonotone),
    }
}
