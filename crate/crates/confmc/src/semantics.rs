//! The unified semantics: nested-distribution operators, pre-configurations,
//! the four chance/mass classifiers, and config-MC one-step transitions.
//!
//! Every one-step transition is computed twice: compositionally (classifier
//! applied to the pre-configuration) and through the per-semantics closed
//! form. On generic instances the two are asserted equal; see
//! [`config_step`] for the degenerate case where the pre-configuration's
//! canonical merging loses the state identity that the closed forms keep.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num::Zero;
use thiserror::Error;

use crate::dist::Dist;
use crate::model::{couple, ActionId, Configuration, MdpModel, StateId};
use crate::rat::Rat;
use crate::scheduler::{Scheduler, SchedulerError};

/// Default cap on exact branch enumeration (functions enumerated by the
/// order-swap operator and the closed forms).
pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("branch enumeration would produce {0} branches (cap {1})")]
    BranchExplosion(usize, usize),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

/// Which of the two probability sources is chance- vs mass-interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SemanticsId {
    /// Chance scheduler, chance transitions: the conventional MDP view.
    CsCt,
    /// Chance scheduler, mass transitions.
    CsMt,
    /// Mass scheduler, chance transitions.
    MsCt,
    /// Mass scheduler, mass transitions: the distribution-transformer view.
    MsMt,
}

impl SemanticsId {
    pub const ALL: [SemanticsId; 4] = [
        SemanticsId::CsCt,
        SemanticsId::CsMt,
        SemanticsId::MsCt,
        SemanticsId::MsMt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SemanticsId::CsCt => "csct",
            SemanticsId::CsMt => "csmt",
            SemanticsId::MsCt => "msct",
            SemanticsId::MsMt => "msmt",
        }
    }
}

impl fmt::Display for SemanticsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SemanticsId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csct" => Ok(SemanticsId::CsCt),
            "csmt" => Ok(SemanticsId::CsMt),
            "msct" => Ok(SemanticsId::MsCt),
            "msmt" => Ok(SemanticsId::MsMt),
            other => Err(format!("unknown semantics {other:?}")),
        }
    }
}

/// The three-layer distribution produced by one scheduler query: outer layer
/// indexed by scheduler branch, middle by configuration mass, inner by
/// transition target.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PreConfiguration(pub Dist<Dist<Dist<StateId>>>);

/// One-step successor distribution of a config MC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigStepResult {
    pub successors: Dist<Configuration>,
}

/// Dirac operator: the trivial distribution at `x`.
pub fn eta<T: Ord>(x: T) -> Dist<T> {
    Dist::dirac(x)
}

/// Suppression operator: flattens two probabilistic layers into one,
/// `result(x) = Σ_i a_i·b_{ix}`.
pub fn mu<T: Ord + Clone>(dd: &Dist<Dist<T>>) -> Dist<T> {
    let mut acc: BTreeMap<T, Rat> = BTreeMap::new();
    for (inner, a) in dd.iter() {
        for (x, b) in inner.iter() {
            *acc.entry(x.clone()).or_insert_with(Rat::zero) += a.clone() * b;
        }
    }
    Dist::new(acc).expect("flattening preserves total mass")
}

/// Order-swap operator: the input's outer layer is mass-interpreted and its
/// inner layer chance-interpreted; the output swaps them. For input
/// `Σ_i a_i |Σ_x b_{ix} |x⟩⟩` it enumerates every choice function `f` over
/// the outer support and returns `Σ_f (Π_i b_{i,f(i)}) |Σ_i a_i |f(i)⟩⟩`.
pub fn lambda_op<T: Ord + Clone>(dd: &Dist<Dist<T>>) -> Result<Dist<Dist<T>>, SemanticsError> {
    lambda_op_capped(dd, DEFAULT_BRANCH_CAP)
}

pub fn lambda_op_capped<T: Ord + Clone>(
    dd: &Dist<Dist<T>>,
    cap: usize,
) -> Result<Dist<Dist<T>>, SemanticsError> {
    let branches: Vec<(&Dist<T>, &Rat)> = dd.iter().collect();
    let mut total: usize = 1;
    for (inner, _) in &branches {
        total = total.saturating_mul(inner.support_len());
        if total > cap {
            return Err(SemanticsError::BranchExplosion(total, cap));
        }
    }

    let supports: Vec<Vec<(&T, &Rat)>> = branches.iter().map(|(d, _)| d.iter().collect()).collect();
    let mut acc: BTreeMap<Dist<T>, Rat> = BTreeMap::new();
    let mut choice = vec![0usize; branches.len()];
    loop {
        let mut weight = Rat::from_integer(1.into());
        let mut mass: BTreeMap<T, Rat> = BTreeMap::new();
        for (i, (_, a_i)) in branches.iter().enumerate() {
            let (target, b) = supports[i][choice[i]];
            weight *= (*b).clone();
            *mass.entry(target.clone()).or_insert_with(Rat::zero) += (*a_i).clone();
        }
        let mass_dist = Dist::new(mass).expect("outer weights sum to 1");
        *acc.entry(mass_dist).or_insert_with(Rat::zero) += weight;

        // Advance the mixed-radix choice counter.
        let mut i = 0;
        loop {
            if i == branches.len() {
                let out = Dist::new(acc).expect("choice-function weights sum to 1");
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < supports[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Extracts the pre-configuration of an MDP under a scheduler: for history
/// ending in `d`, returns `Σ_a σ(history)(a) |Σ_q d(q) |δ(q,a)⟩⟩`.
pub fn delta_sigma(
    m: &MdpModel,
    sigma: &Scheduler,
    history: &[Configuration],
) -> Result<PreConfiguration, SemanticsError> {
    let action_dist = sigma.eval(history)?;
    let d = history.last().expect("eval enforces nonempty history");
    let outer = Dist::new(action_dist.iter().map(|(a, w)| {
        let middle = Dist::new(
            d.support()
                .map(|q| (m.row_dist(q, *a), d.weight(q).clone())),
        )
        .expect("configuration masses sum to 1");
        (middle, w.clone())
    }))
    .expect("scheduler output is a distribution");
    Ok(PreConfiguration(outer))
}

fn densify(d: &Dist<Dist<StateId>>, n_states: usize) -> Dist<Configuration> {
    d.pushforward(|inner| Configuration::from_dist(inner, n_states))
}

/// Applies a chance/mass classifier to a pre-configuration, yielding the
/// one-step distribution over successor configurations.
pub fn classify(
    s: SemanticsId,
    t: &PreConfiguration,
    n_states: usize,
) -> Result<Dist<Configuration>, SemanticsError> {
    classify_capped(s, t, n_states, DEFAULT_BRANCH_CAP)
}

pub fn classify_capped(
    s: SemanticsId,
    t: &PreConfiguration,
    n_states: usize,
    cap: usize,
) -> Result<Dist<Configuration>, SemanticsError> {
    let t = &t.0;
    match s {
        // μ ∘ Dλ: swap each scheduler branch, then merge scheduler and
        // transition chances.
        SemanticsId::CsCt => {
            let swapped = map_dist(t, |middle| lambda_op_capped(middle, cap))?;
            Ok(densify(&mu(&swapped), n_states))
        }
        // Dμ: each scheduler branch flattens its mass layers.
        SemanticsId::CsMt => Ok(densify(&t.pushforward(mu), n_states)),
        // Dμ ∘ λ ∘ Dλ: swap transitions inside each branch, swap the
        // scheduler layer outward, then flatten each mass distribution.
        SemanticsId::MsCt => {
            let swapped = map_dist(t, |middle| lambda_op_capped(middle, cap))?;
            let outer_swapped = lambda_op_capped(&swapped, cap)?;
            Ok(densify(
                &outer_swapped.pushforward(mu),
                n_states,
            ))
        }
        // η ∘ μ ∘ μ: everything is mass; the unique successor is the mean.
        SemanticsId::MsMt => {
            let flat = mu(&mu(t));
            Ok(Dist::dirac(Configuration::from_dist(&flat, n_states)))
        }
    }
}

fn map_dist<T: Ord + Clone, U: Ord>(
    d: &Dist<T>,
    mut f: impl FnMut(&T) -> Result<U, SemanticsError>,
) -> Result<Dist<U>, SemanticsError> {
    let mut pairs = Vec::with_capacity(d.support_len());
    for (x, w) in d.iter() {
        pairs.push((f(x)?, w.clone()));
    }
    Ok(Dist::new(pairs).expect("mapping preserves weights"))
}

/// Iterates over all choice functions from a list of index sets, calling the
/// visitor with the chosen (target, probability) per slot.
fn for_each_choice(
    supports: &[Vec<(StateId, Rat)>],
    cap: usize,
    mut visit: impl FnMut(&[usize]),
) -> Result<(), SemanticsError> {
    let mut total: usize = 1;
    for s in supports {
        total = total.saturating_mul(s.len());
        if total > cap {
            return Err(SemanticsError::BranchExplosion(total, cap));
        }
    }
    let mut choice = vec![0usize; supports.len()];
    loop {
        visit(&choice);
        let mut i = 0;
        loop {
            if i == supports.len() {
                return Ok(());
            }
            choice[i] += 1;
            if choice[i] < supports[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn row_support(m: &MdpModel, q: StateId, a: ActionId) -> Vec<(StateId, Rat)> {
    m.row(q, a)
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_zero())
        .map(|(j, p)| (StateId(j), p.clone()))
        .collect()
}

/// Closed-form one-step transition: chance scheduler, chance transitions.
/// Enumerates per-action choice functions over the configuration's support
/// (states without mass marginalize out by stochasticity).
pub fn closed_csct(
    m: &MdpModel,
    action_dist: &Dist<ActionId>,
    d: &Configuration,
    cap: usize,
) -> Result<Dist<Configuration>, SemanticsError> {
    let support: Vec<StateId> = d.support().collect();
    let mut acc: BTreeMap<Configuration, Rat> = BTreeMap::new();
    for (a, sw) in action_dist.iter() {
        let supports: Vec<Vec<(StateId, Rat)>> =
            support.iter().map(|&q| row_support(m, q, *a)).collect();
        for_each_choice(&supports, cap, |choice| {
            let mut weight = sw.clone();
            let mut mass = vec![Rat::zero(); m.n_states()];
            for (i, &q) in support.iter().enumerate() {
                let (target, p) = &supports[i][choice[i]];
                weight *= p.clone();
                mass[target.0] += d.weight(q).clone();
            }
            let cfg = Configuration::new(mass).expect("pushforward of a configuration");
            *acc.entry(cfg).or_insert_with(Rat::zero) += weight;
        })?;
    }
    Ok(Dist::new(acc).expect("branch weights sum to 1"))
}

/// Closed-form one-step transition: mass scheduler, chance transitions.
/// Enumerates choice functions over the support of the coupling
/// `d ⊗ σ(d)`.
pub fn closed_msct(
    m: &MdpModel,
    action_dist: &Dist<ActionId>,
    d: &Configuration,
    cap: usize,
) -> Result<Dist<Configuration>, SemanticsError> {
    let coupling = couple(d, action_dist);
    let pairs: Vec<(StateId, ActionId)> = coupling.iter().map(|(k, _)| *k).collect();
    let supports: Vec<Vec<(StateId, Rat)>> =
        pairs.iter().map(|&(q, a)| row_support(m, q, a)).collect();
    let mut acc: BTreeMap<Configuration, Rat> = BTreeMap::new();
    for_each_choice(&supports, cap, |choice| {
        let mut weight = Rat::from_integer(1.into());
        let mut mass = vec![Rat::zero(); m.n_states()];
        for (i, key) in pairs.iter().enumerate() {
            let (target, p) = &supports[i][choice[i]];
            weight *= p.clone();
            mass[target.0] += coupling.prob(key);
        }
        let cfg = Configuration::new(mass).expect("pushforward of the coupling");
        *acc.entry(cfg).or_insert_with(Rat::zero) += weight;
    })?;
    Ok(Dist::new(acc).expect("branch weights sum to 1"))
}

/// Closed-form one-step transition: chance scheduler, mass transitions.
/// Each action deterministically maps `d` to `M_a^T d`.
pub fn closed_csmt(
    m: &MdpModel,
    action_dist: &Dist<ActionId>,
    d: &Configuration,
) -> Dist<Configuration> {
    Dist::new(
        action_dist
            .iter()
            .map(|(a, w)| (m.apply_transposed(*a, d), w.clone())),
    )
    .expect("scheduler weights sum to 1")
}

/// Closed-form one-step transition: mass scheduler, mass transitions. The
/// single successor is `Σ_a σ(d)(a)·M_a^T d`.
pub fn closed_msmt(
    m: &MdpModel,
    action_dist: &Dist<ActionId>,
    d: &Configuration,
) -> Dist<Configuration> {
    let n = m.n_states();
    let mut mass = vec![Rat::zero(); n];
    for (a, w) in action_dist.iter() {
        let image = m.apply_transposed(*a, d);
        for (j, p) in image.weights().iter().enumerate() {
            mass[j] += w.clone() * p;
        }
    }
    Dist::dirac(Configuration::new(mass).expect("convex combination of configurations"))
}

/// Whether the compositional route through the pre-configuration keeps every
/// chance event separate for this instance: no two positive-mass states
/// share a transition row under any played action, and no two played
/// actions produce the same middle layer. On such instances the classifier
/// compositions provably coincide with the closed forms.
pub fn is_generic_instance(
    m: &MdpModel,
    action_dist: &Dist<ActionId>,
    d: &Configuration,
) -> bool {
    let support: Vec<StateId> = d.support().collect();
    let mut middles: BTreeSet<Vec<Dist<StateId>>> = BTreeSet::new();
    for (a, _) in action_dist.iter() {
        let rows: Vec<Dist<StateId>> = support.iter().map(|&q| m.row_dist(q, *a)).collect();
        let mut distinct = rows.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() != rows.len() {
            return false;
        }
        if !middles.insert(rows) {
            return false;
        }
    }
    true
}

/// One step of the config MC: the closed forms of the chosen semantics,
/// cross-checked against the classifier composition whenever the instance
/// is generic (see [`is_generic_instance`]; on degenerate instances the
/// canonical pre-configuration has already merged distinct chance events
/// and the closed forms are authoritative).
pub fn config_step(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    history: &[Configuration],
) -> Result<ConfigStepResult, SemanticsError> {
    config_step_capped(m, sigma, s, history, DEFAULT_BRANCH_CAP)
}

pub fn config_step_capped(
    m: &MdpModel,
    sigma: &Scheduler,
    s: SemanticsId,
    history: &[Configuration],
    cap: usize,
) -> Result<ConfigStepResult, SemanticsError> {
    let action_dist = sigma.eval(history)?;
    let d = history.last().expect("eval enforces nonempty history");
    let closed = match s {
        SemanticsId::CsCt => closed_csct(m, &action_dist, d, cap)?,
        SemanticsId::MsCt => closed_msct(m, &action_dist, d, cap)?,
        SemanticsId::CsMt => closed_csmt(m, &action_dist, d),
        SemanticsId::MsMt => closed_msmt(m, &action_dist, d),
    };

    let check = match s {
        SemanticsId::CsCt | SemanticsId::MsCt => is_generic_instance(m, &action_dist, d),
        SemanticsId::CsMt | SemanticsId::MsMt => true,
    };
    if check {
        let compositional = classify_capped(s, &delta_sigma(m, sigma, history)?, m.n_states(), cap)?;
        assert_eq!(
            compositional, closed,
            "classifier composition diverged from the closed form on a generic instance ({s})"
        );
    }

    Ok(ConfigStepResult { successors: closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::table1;
    use crate::rat::{rat, rat_int};

    fn table1_sched() -> Scheduler {
        Scheduler::ConstantMixed(
            Dist::new([(ActionId(0), rat(2, 5)), (ActionId(1), rat(3, 5))]).unwrap(),
        )
    }

    fn cfg(entries: &[(i64, i64)]) -> Configuration {
        Configuration::new(entries.iter().map(|&(n, d)| rat(n, d)).collect()).unwrap()
    }

    #[test]
    fn eta_is_dirac_and_mu_inverts_it() {
        assert_eq!(eta(StateId(0)), Dist::dirac(StateId(0)));
        let d = Dist::new([(StateId(0), rat(1, 3)), (StateId(1), rat(2, 3))]).unwrap();
        assert_eq!(mu(&eta(d.clone())), d);
    }

    #[test]
    fn mu_flattens_by_the_defining_sum() {
        let inner1 = Dist::new([("a", rat(1, 2)), ("b", rat(1, 2))]).unwrap();
        let inner2 = Dist::dirac("a");
        let dd = Dist::new([(inner1, rat(1, 2)), (inner2, rat(1, 2))]).unwrap();
        let flat = mu(&dd);
        assert_eq!(flat.prob(&"a"), rat(3, 4));
        assert_eq!(flat.prob(&"b"), rat(1, 4));
    }

    #[test]
    fn lambda_on_single_branch_spreads_inner_chances() {
        let inner = Dist::new([("x", rat(1, 4)), ("y", rat(3, 4))]).unwrap();
        let dd = Dist::dirac(inner);
        let out = lambda_op(&dd).unwrap();
        assert_eq!(out.prob(&Dist::dirac("x")), rat(1, 4));
        assert_eq!(out.prob(&Dist::dirac("y")), rat(3, 4));
    }

    #[test]
    fn lambda_with_all_dirac_inners_is_a_pushforward() {
        let dd = Dist::new([
            (Dist::dirac("x"), rat(1, 3)),
            (Dist::dirac("y"), rat(2, 3)),
        ])
        .unwrap();
        let out = lambda_op(&dd).unwrap();
        let expected = Dist::new([("x", rat(1, 3)), ("y", rat(2, 3))]).unwrap();
        assert_eq!(out, Dist::dirac(expected));
    }

    #[test]
    fn lambda_enumerates_choice_functions() {
        // {1/2·|{x:1/2,y:1/2}⟩, 1/2·|{x:1}⟩}: two choice functions have
        // positive weight, one concentrating everything on x.
        let half = Dist::new([("x", rat(1, 2)), ("y", rat(1, 2))]).unwrap();
        let dd = Dist::new([(half.clone(), rat(1, 2)), (Dist::dirac("x"), rat(1, 2))]).unwrap();
        let out = lambda_op(&dd).unwrap();
        assert_eq!(out.support_len(), 2);
        assert_eq!(out.prob(&Dist::dirac("x")), rat(1, 2));
        assert_eq!(out.prob(&half), rat(1, 2));
    }

    #[test]
    fn lambda_branch_cap_trips() {
        let inner = Dist::new([("x", rat(1, 2)), ("y", rat(1, 2))]).unwrap();
        let dd = Dist::new([
            (inner.clone(), rat(1, 2)),
            (Dist::new([("x", rat(1, 3)), ("z", rat(2, 3))]).unwrap(), rat(1, 2)),
        ])
        .unwrap();
        assert!(matches!(
            lambda_op_capped(&dd, 3),
            Err(SemanticsError::BranchExplosion(4, 3))
        ));
    }

    #[test]
    fn delta_sigma_table1_from_dirac() {
        let m = table1();
        let sched = table1_sched();
        let d0 = Configuration::dirac(StateId(0), 3);
        let t = delta_sigma(&m, &sched, &[d0]).unwrap().0;
        assert_eq!(t.support_len(), 2);
        // Each branch is Dirac at the corresponding matrix row of q0.
        let row_a = Dist::new([(StateId(1), rat(1, 2)), (StateId(2), rat(1, 2))]).unwrap();
        let row_b = Dist::new([(StateId(1), rat(1, 10)), (StateId(2), rat(9, 10))]).unwrap();
        assert_eq!(t.prob(&Dist::dirac(row_a)), rat(2, 5));
        assert_eq!(t.prob(&Dist::dirac(row_b)), rat(3, 5));
    }

    #[test]
    fn delta_sigma_pure_scheduler_gives_dirac_outer() {
        let m = table1();
        let d0 = Configuration::dirac(StateId(0), 3);
        let t = delta_sigma(&m, &Scheduler::pure(ActionId(0)), &[d0]).unwrap().0;
        assert!(t.is_dirac());
    }

    #[test]
    fn delta_sigma_uniform_absorbing_states() {
        let m = table1();
        let d = cfg(&[(0, 1), (1, 2), (1, 2)]);
        let t = delta_sigma(&m, &Scheduler::pure(ActionId(0)), &[d]).unwrap().0;
        let middle = Dist::new([
            (Dist::dirac(StateId(1)), rat(1, 2)),
            (Dist::dirac(StateId(2)), rat(1, 2)),
        ])
        .unwrap();
        assert_eq!(t, Dist::dirac(middle));
    }

    #[test]
    fn classify_table1_all_semantics() {
        let m = table1();
        let d0 = Configuration::dirac(StateId(0), 3);
        let t = delta_sigma(&m, &table1_sched(), &[d0]).unwrap();

        let msmt = classify(SemanticsId::MsMt, &t, 3).unwrap();
        assert_eq!(msmt, Dist::dirac(cfg(&[(0, 1), (13, 50), (37, 50)])));

        let csmt = classify(SemanticsId::CsMt, &t, 3).unwrap();
        assert_eq!(csmt.prob(&cfg(&[(0, 1), (1, 2), (1, 2)])), rat(2, 5));
        assert_eq!(csmt.prob(&cfg(&[(0, 1), (1, 10), (9, 10)])), rat(3, 5));

        let csct = classify(SemanticsId::CsCt, &t, 3).unwrap();
        assert_eq!(csct.prob(&cfg(&[(0, 1), (1, 1), (0, 1)])), rat(13, 50));
        assert_eq!(csct.prob(&cfg(&[(0, 1), (0, 1), (1, 1)])), rat(37, 50));

        let msct = classify(SemanticsId::MsCt, &t, 3).unwrap();
        assert_eq!(msct.support_len(), 4);
        assert_eq!(msct.prob(&cfg(&[(0, 1), (1, 1), (0, 1)])), rat(1, 20));
        assert_eq!(msct.prob(&cfg(&[(0, 1), (2, 5), (3, 5)])), rat(9, 20));
        assert_eq!(msct.prob(&cfg(&[(0, 1), (3, 5), (2, 5)])), rat(1, 20));
        assert_eq!(msct.prob(&cfg(&[(0, 1), (0, 1), (1, 1)])), rat(9, 20));
    }

    #[test]
    fn config_step_matches_classify_and_closed_forms() {
        let m = table1();
        let d0 = Configuration::dirac(StateId(0), 3);
        let sched = table1_sched();
        for s in SemanticsId::ALL {
            let step = config_step(&m, &sched, s, std::slice::from_ref(&d0)).unwrap();
            let t = delta_sigma(&m, &sched, std::slice::from_ref(&d0)).unwrap();
            assert_eq!(step.successors, classify(s, &t, 3).unwrap());
        }
    }

    #[test]
    fn csmt_action_word_single_matrix_application() {
        let m = table1();
        let d0 = Configuration::dirac(StateId(0), 3);
        let word = Scheduler::ActionWord {
            word: vec![ActionId(1)],
            default: ActionId(1),
        };
        let step = config_step(&m, &word, SemanticsId::CsMt, &[d0]).unwrap();
        assert_eq!(
            step.successors,
            Dist::dirac(cfg(&[(0, 1), (1, 10), (9, 10)]))
        );
    }

    #[test]
    fn msmt_single_successor_is_the_mean() {
        let m = table1();
        let d = cfg(&[(1, 2), (1, 4), (1, 4)]);
        let sched = table1_sched();
        let step = config_step(&m, &sched, SemanticsId::MsMt, std::slice::from_ref(&d)).unwrap();
        let expected = closed_msmt(&m, &sched.eval(std::slice::from_ref(&d)).unwrap(), &d);
        assert_eq!(step.successors, expected);
        assert!(step.successors.is_dirac());
    }

    #[test]
    fn csmt_outer_support_bounded_by_actions() {
        let m = table1();
        let d = cfg(&[(1, 3), (1, 3), (1, 3)]);
        let step = config_step(&m, &table1_sched(), SemanticsId::CsMt, &[d]).unwrap();
        assert!(step.successors.support_len() <= m.n_actions());
    }

    /// The canonical pre-configuration merges states that share a row, so
    /// the classifier composition coarsens relative to the closed forms on
    /// such degenerate instances; the closed forms keep the states separate.
    #[test]
    fn merged_rows_coarsen_the_compositional_route() {
        let half = vec![rat(1, 2), rat(1, 2)];
        let m = MdpModel::new(
            vec!["x".into(), "y".into()],
            vec!["a".into()],
            vec![vec![half.clone(), half]],
        )
        .unwrap();
        let d = cfg(&[(1, 2), (1, 2)]);
        let sched = Scheduler::pure(ActionId(0));
        let action_dist = sched.eval(std::slice::from_ref(&d)).unwrap();
        assert!(!is_generic_instance(&m, &action_dist, &d));

        let closed = closed_csct(&m, &action_dist, &d, DEFAULT_BRANCH_CAP).unwrap();
        assert_eq!(closed.prob(&cfg(&[(1, 1), (0, 1)])), rat(1, 4));
        assert_eq!(closed.prob(&cfg(&[(1, 2), (1, 2)])), rat(1, 2));
        assert_eq!(closed.prob(&cfg(&[(0, 1), (1, 1)])), rat(1, 4));

        let t = delta_sigma(&m, &sched, std::slice::from_ref(&d)).unwrap();
        let compositional = classify(SemanticsId::CsCt, &t, 2).unwrap();
        assert_eq!(compositional.prob(&cfg(&[(1, 1), (0, 1)])), rat(1, 2));
        assert_eq!(compositional.prob(&cfg(&[(0, 1), (1, 1)])), rat(1, 2));
        assert_ne!(compositional, closed);

        // The one-step means still agree: merging only regroups mass.
        let mean = |dist: &Dist<Configuration>| -> Vec<Rat> {
            let mut acc = vec![Rat::zero(); 2];
            for (c, w) in dist.iter() {
                for (j, p) in c.weights().iter().enumerate() {
                    acc[j] += w.clone() * p;
                }
            }
            acc
        };
        assert_eq!(mean(&compositional), mean(&closed));
    }

    #[test]
    fn dirac_preservation_under_csct() {
        let m = table1();
        let sched = table1_sched();
        for q in 0..3 {
            let d = Configuration::dirac(StateId(q), 3);
            let step = config_step(&m, &sched, SemanticsId::CsCt, std::slice::from_ref(&d)).unwrap();
            for (succ, _) in step.successors.iter() {
                assert!(succ.is_dirac());
            }
            // On Dirac configurations the successor law is the conventional
            // MDP step Σ_a σ(a)·δ(q,a)(q').
            let action_dist = sched.eval(std::slice::from_ref(&d)).unwrap();
            let mut expected = vec![Rat::zero(); 3];
            for (a, w) in action_dist.iter() {
                for (j, p) in m.row(StateId(q), *a).iter().enumerate() {
                    expected[j] += w.clone() * p;
                }
            }
            for (j, e) in expected.iter().enumerate() {
                let succ = Configuration::dirac(StateId(j), 3);
                assert_eq!(step.successors.prob(&succ), e.clone());
            }
        }
    }

    #[test]
    fn semantics_id_round_trips_strings() {
        for s in SemanticsId::ALL {
            assert_eq!(s.as_str().parse::<SemanticsId>().unwrap(), s);
        }
        assert!("xyz".parse::<SemanticsId>().is_err());
        let _ = rat_int(0);
    }
}
