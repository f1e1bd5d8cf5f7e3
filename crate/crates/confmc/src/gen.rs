//! Benchmark model generators: the three-state toy, the casino and exam
//! models, and the subset-sum family whose exact reachability probability is
//! known in closed form.

use num::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Configuration, MdpModel, StateId};
use crate::rat::{rat, rat_int, Rat};
use crate::target::TargetSet;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("target sum {target} exceeds the set total {total}")]
    TargetTooLarge { target: u64, total: u64 },
    #[error("subset-sum input set must be nonempty with positive entries")]
    BadSet,
}

/// The three-state, two-action toy MDP: q0 branches to q1/q2 under both
/// actions (a: half/half, b: 1/10 vs 9/10), q1 and q2 are absorbing.
pub fn table1() -> MdpModel {
    let m_a = vec![
        vec![rat_int(0), rat(1, 2), rat(1, 2)],
        vec![rat_int(0), rat_int(1), rat_int(0)],
        vec![rat_int(0), rat_int(0), rat_int(1)],
    ];
    let m_b = vec![
        vec![rat_int(0), rat(1, 10), rat(9, 10)],
        vec![rat_int(0), rat_int(1), rat_int(0)],
        vec![rat_int(0), rat_int(0), rat_int(1)],
    ];
    MdpModel::new(
        vec!["q0".into(), "q1".into(), "q2".into()],
        vec!["a".into(), "b".into()],
        vec![m_a, m_b],
    )
    .expect("fixture is stochastic")
}

/// A random stochastic row over `n` columns restricted to `support`:
/// positive numerators over a common denominator, exact by construction.
fn random_row(rng: &mut ChaCha8Rng, n: usize, support: &[usize]) -> Vec<Rat> {
    let numerators: Vec<u64> = support.iter().map(|_| rng.gen_range(1..=9)).collect();
    let total: u64 = numerators.iter().sum();
    let mut row = vec![Rat::zero(); n];
    for (&col, &w) in support.iter().zip(&numerators) {
        row[col] = rat(w as i64, total as i64);
    }
    row
}

fn identity(n: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { rat_int(1) } else { rat_int(0) })
                .collect()
        })
        .collect()
}

/// Casino model: a play state `P` offering `keep` (which fixes every state)
/// and bets `b_1..b_n`, each distributing the fund over reward states
/// `R_1..R_m` with seeded probabilities. Reward states return to `P` under
/// the bets by default, or absorb when `return_to_play` is false.
pub fn gen_casino(n_games: usize, m_rewards: usize, return_to_play: bool, seed: u64) -> MdpModel {
    assert!(n_games >= 1 && m_rewards >= 1);
    let n = 1 + m_rewards;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state_names: Vec<String> = std::iter::once("P".to_string())
        .chain((1..=m_rewards).map(|j| format!("R{j}")))
        .collect();
    let action_names: Vec<String> = std::iter::once("keep".to_string())
        .chain((1..=n_games).map(|i| format!("b{i}")))
        .collect();

    let mut matrices = vec![identity(n)];
    let reward_cols: Vec<usize> = (1..n).collect();
    for _ in 0..n_games {
        let mut mat = Vec::with_capacity(n);
        mat.push(random_row(&mut rng, n, &reward_cols));
        for j in 1..n {
            let mut row = vec![Rat::zero(); n];
            if return_to_play {
                row[0] = rat_int(1);
            } else {
                row[j] = rat_int(1);
            }
            mat.push(row);
        }
        matrices.push(mat);
    }
    MdpModel::new(state_names, action_names, matrices).expect("rows are stochastic by construction")
}

/// Exam model: a reservoir state `R` keeps mass with probability `decay` and
/// releases the rest onto absorbing grade states with seeded per-problem-set
/// weights.
pub fn gen_exam(n_sets: usize, n_grades: usize, decay: &Rat, seed: u64) -> MdpModel {
    assert!(n_sets >= 1 && n_grades >= 1);
    assert!(decay > &Rat::zero() && decay < &rat_int(1));
    let n = 1 + n_grades;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state_names: Vec<String> = std::iter::once("R".to_string())
        .chain((1..=n_grades).map(|j| format!("grade{j}")))
        .collect();
    let action_names: Vec<String> = (1..=n_sets).map(|i| format!("P{i}")).collect();

    let grade_cols: Vec<usize> = (1..n).collect();
    let release = rat_int(1) - decay.clone();
    let mut matrices = Vec::with_capacity(n_sets);
    for _ in 0..n_sets {
        let weights = random_row(&mut rng, n, &grade_cols);
        let mut r_row = vec![Rat::zero(); n];
        r_row[0] = decay.clone();
        for j in 1..n {
            r_row[j] = release.clone() * &weights[j];
        }
        let mut mat = vec![r_row];
        for j in 1..n {
            let mut row = vec![Rat::zero(); n];
            row[j] = rat_int(1);
            mat.push(row);
        }
        matrices.push(mat);
    }
    MdpModel::new(state_names, action_names, matrices).expect("rows are stochastic by construction")
}

/// Subset-sum reachability instance: states `[n] ∪ {⊤,⊥}` under a single
/// action, each `i` moving to ⊤/⊥ with probability 1/2. Starting from
/// `d0(i) = a_i/Σa`, the exact mass-scheduler/chance-transition probability
/// of hitting the single target configuration with `d(⊤) = T/Σa` equals
/// (number of subsets summing to T) / 2^n.
pub fn gen_subsetsum(
    set: &[u64],
    target: u64,
) -> Result<(MdpModel, Configuration, TargetSet, Rat), GenError> {
    if set.is_empty() || set.contains(&0) {
        return Err(GenError::BadSet);
    }
    let total: u64 = set.iter().sum();
    if target > total {
        return Err(GenError::TargetTooLarge { target, total });
    }
    let n = set.len();
    let n_states = n + 2;
    let top = n;
    let bot = n + 1;

    let mut state_names: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    state_names.push("top".into());
    state_names.push("bot".into());

    let mut mat = Vec::with_capacity(n_states);
    for _ in 0..n {
        let mut row = vec![Rat::zero(); n_states];
        row[top] = rat(1, 2);
        row[bot] = rat(1, 2);
        mat.push(row);
    }
    let mut top_row = vec![Rat::zero(); n_states];
    top_row[top] = rat_int(1);
    mat.push(top_row);
    let mut bot_row = vec![Rat::zero(); n_states];
    bot_row[bot] = rat_int(1);
    mat.push(bot_row);

    let model = MdpModel::new(state_names, vec!["step".into()], vec![mat])
        .expect("rows are stochastic by construction");

    let mut weights = vec![Rat::zero(); n_states];
    for (i, &a) in set.iter().enumerate() {
        weights[i] = rat(a as i64, total as i64);
    }
    let d0 = Configuration::new(weights).expect("normalized by the set total");

    let mut target_weights = vec![Rat::zero(); n_states];
    target_weights[top] = rat(target as i64, total as i64);
    target_weights[bot] = rat_int(1) - rat(target as i64, total as i64);
    let target_cfg = Configuration::new(target_weights).expect("two-point configuration");

    let xi = Rat::new(1.into(), num::BigInt::from(2u32).pow(n as u32));
    Ok((model, d0, TargetSet::explicit(vec![target_cfg]), xi))
}

/// Brute-force count of subsets of `set` summing to `target`.
pub fn subset_count(set: &[u64], target: u64) -> u64 {
    let mut count = 0u64;
    for mask in 0u64..(1u64 << set.len()) {
        let sum: u64 = set
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &a)| a)
            .sum();
        if sum == target {
            count += 1;
        }
    }
    count
}

/// The initial configuration every generated casino/exam instance starts
/// from: all mass on the first state.
pub fn initial_dirac(m: &MdpModel) -> Configuration {
    Configuration::dirac(StateId(0), m.n_states())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn casino_is_deterministic_and_stochastic() {
        let a = gen_casino(5, 2, true, 7);
        let b = gen_casino(5, 2, true, 7);
        assert_eq!(a, b);
        assert!(a.validate().is_ok());
        assert_eq!(a.n_states(), 3);
        assert_eq!(a.n_actions(), 6);
        let c = gen_casino(5, 2, true, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn casino_single_game_single_reward_is_forced() {
        let m = gen_casino(1, 1, true, 0);
        assert_eq!(m.row(StateId(0), crate::model::ActionId(1)), &[rat_int(0), rat_int(1)]);
    }

    #[test]
    fn exam_rows_follow_decay() {
        let m = gen_exam(1, 1, &rat(1, 2), 3);
        assert_eq!(
            m.row(StateId(0), crate::model::ActionId(0)),
            &[rat(1, 2), rat(1, 2)]
        );
        let m2 = gen_exam(5, 2, &rat(1, 2), 42);
        assert!(m2.validate().is_ok());
        assert_eq!(m2, gen_exam(5, 2, &rat(1, 2), 42));
    }

    #[test]
    fn subsetsum_shape_and_errors() {
        let (m, d0, _, xi) = gen_subsetsum(&[1, 2, 3], 3).unwrap();
        assert!(m.validate().is_ok());
        assert_eq!(m.n_states(), 5);
        assert_eq!(d0.weight(StateId(0)), &rat(1, 6));
        assert_eq!(xi, rat(1, 8));
        assert!(matches!(
            gen_subsetsum(&[2, 2], 5),
            Err(GenError::TargetTooLarge { .. })
        ));
        assert!(gen_subsetsum(&[], 1).is_err());
    }

    #[test]
    fn subset_count_examples() {
        assert_eq!(subset_count(&[1, 2, 3], 3), 2);
        assert_eq!(subset_count(&[1], 1), 1);
        assert_eq!(subset_count(&[2, 2], 5), 0);
    }
}
