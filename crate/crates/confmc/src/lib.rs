//! Configuration Markov chains for MDPs under the four chance/mass semantics.
//!
//! An MDP together with a scheduler and a choice of semantics (how scheduler
//! and transition probabilities are interpreted: as random events or as mass
//! splitting) induces a Markov chain over *configurations* — probability
//! distributions over the MDP's states. This crate provides:
//!
//! - exact-rational value types (distributions, configurations, MDPs,
//!   schedulers) and the nested-distribution operators the semantics are
//!   built from ([`semantics`]);
//! - a bounded exact forward explorer and Monte-Carlo simulator that serve
//!   as the ground-truth oracle ([`explore`]);
//! - an antichain-based backward-reachability algorithm for the
//!   chance-scheduler/mass-transition semantics ([`antichain`]);
//! - template-based synthesis of scheduler + scaled-submartingale
//!   certificates for the mass-scheduler/chance-transition semantics
//!   ([`synthesis`]);
//! - JSON model/query serialization, benchmark generators, and the CLI
//!   driver ([`io`], [`gen`]).
//!
//! All semantic computation is exact (arbitrary-precision rationals);
//! floating point appears nowhere in the semantics path.

pub mod antichain;
pub mod dist;
pub mod explore;
pub mod gen;
pub mod io;
pub mod lp;
pub mod model;
pub mod poly;
pub mod rat;
pub mod scheduler;
pub mod semantics;
pub mod synthesis;
pub mod target;

pub use dist::{Dist, DistError};
pub use model::{ActionId, Configuration, MdpModel, ModelError, StateId, Vec01};
pub use rat::Rat;
pub use scheduler::{Scheduler, SchedulerError};
pub use semantics::{ConfigStepResult, PreConfiguration, SemanticsError, SemanticsId};
pub use target::TargetSet;

/// Tool version reported by the CLI and embedded in result records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
