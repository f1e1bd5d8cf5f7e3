//! Shared random-instance generators for the integration suites.
//!
//! Matrices are sampled with all rows pairwise distinct across actions:
//! identical rows make the canonical pre-configuration merge chance events,
//! which is exactly the regime where classifier compositions and closed
//! forms legitimately differ. The generic class is where their equality is
//! a theorem, so equivalence suites sample from it.

use num::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use confmc::dist::Dist;
use confmc::model::{ActionId, Configuration, MdpModel};
use confmc::rat::{rat, Rat};
use confmc::scheduler::Scheduler;

pub fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rat> {
    let support_size = match rng.gen_range(0..10) {
        0..=3 => 1,
        4..=8 => 2.min(n),
        _ => 3.min(n),
    };
    let mut cols: Vec<usize> = (0..n).collect();
    for i in 0..support_size {
        let j = rng.gen_range(i..n);
        cols.swap(i, j);
    }
    let numerators: Vec<u64> = (0..support_size).map(|_| rng.gen_range(1..=12)).collect();
    let total: u64 = numerators.iter().sum();
    let mut row = vec![Rat::zero(); n];
    for (k, &c) in cols[..support_size].iter().enumerate() {
        row[c] = rat(numerators[k] as i64, total as i64);
    }
    row
}

/// Random MDP with `n_states` states and `n_actions` actions whose rows are
/// pairwise distinct across all state/action pairs.
pub fn random_mdp(rng: &mut ChaCha8Rng, n_states: usize, n_actions: usize) -> MdpModel {
    loop {
        let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(n_states * n_actions);
        let mut ok = true;
        'outer: for _ in 0..n_states * n_actions {
            for _ in 0..50 {
                let candidate = random_row(rng, n_states);
                if !rows.contains(&candidate) {
                    rows.push(candidate);
                    continue 'outer;
                }
            }
            ok = false;
            break;
        }
        if !ok {
            continue;
        }
        let matrices: Vec<Vec<Vec<Rat>>> = (0..n_actions)
            .map(|a| rows[a * n_states..(a + 1) * n_states].to_vec())
            .collect();
        let state_names = (0..n_states).map(|i| format!("q{i}")).collect();
        let action_names = (0..n_actions).map(|a| format!("a{a}")).collect();
        return MdpModel::new(state_names, action_names, matrices)
            .expect("sampled rows are stochastic");
    }
}

/// Random configuration with support size at most `max_support`.
pub fn random_configuration(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> Configuration {
    let support_size = rng.gen_range(1..=max_support.min(n));
    let mut cols: Vec<usize> = (0..n).collect();
    for i in 0..support_size {
        let j = rng.gen_range(i..n);
        cols.swap(i, j);
    }
    let numerators: Vec<u64> = (0..support_size).map(|_| rng.gen_range(1..=9)).collect();
    let total: u64 = numerators.iter().sum();
    let mut weights = vec![Rat::zero(); n];
    for (k, &c) in cols[..support_size].iter().enumerate() {
        weights[c] = rat(numerators[k] as i64, total as i64);
    }
    Configuration::new(weights).expect("normalized by construction")
}

/// Random constant mixture over at most `max_support` actions.
pub fn random_scheduler(rng: &mut ChaCha8Rng, n_actions: usize, max_support: usize) -> Scheduler {
    let support_size = rng.gen_range(1..=max_support.min(n_actions));
    let mut actions: Vec<usize> = (0..n_actions).collect();
    for i in 0..support_size {
        let j = rng.gen_range(i..n_actions);
        actions.swap(i, j);
    }
    let numerators: Vec<u64> = (0..support_size).map(|_| rng.gen_range(1..=9)).collect();
    let total: u64 = numerators.iter().sum();
    let pairs = actions[..support_size]
        .iter()
        .enumerate()
        .map(|(k, &a)| (ActionId(a), rat(numerators[k] as i64, total as i64)));
    Scheduler::ConstantMixed(Dist::new(pairs).expect("normalized by construction"))
}

/// Estimated branch count of the heaviest closed-form enumeration for the
/// instance; suites resample when this exceeds their budget.
pub fn branch_estimate(m: &MdpModel, sched: &Scheduler, d: &Configuration) -> usize {
    let action_dist = match sched {
        Scheduler::ConstantMixed(dist) => dist.clone(),
        _ => return usize::MAX,
    };
    let mut total: usize = 1;
    for q in d.support() {
        for (a, _) in action_dist.iter() {
            let nonzero = m.row(q, *a).iter().filter(|p| !p.is_zero()).count();
            total = total.saturating_mul(nonzero.max(1));
        }
    }
    total
}

/// Mean successor configuration of a one-step distribution.
pub fn mean_configuration(step: &Dist<Configuration>, n: usize) -> Vec<Rat> {
    let mut acc = vec![Rat::zero(); n];
    for (c, w) in step.iter() {
        for (j, p) in c.weights().iter().enumerate() {
            acc[j] += w.clone() * p;
        }
    }
    acc
}
