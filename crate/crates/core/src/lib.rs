//! Policy synthesis for finite-horizon MDPs whose state distribution must stay
//! below per-state density caps at every epoch.
//!
//! * [`unconstrained`]: classic backward induction plus a brute-force oracle.
//! * [`constrained`]: stage-wise maximin LPs producing a randomized Markov policy
//!   that keeps every safe density safe, with a certified reward lower bound,
//!   and the variant that projects toward the unconstrained optimum.
//! * [`density`]: exact density propagation, expected reward, Monte Carlo.
//! * [`gridworld`]: grid navigation instances.
//! * [`lp`]: the dense simplex behind the stage LPs.
//! * [`io`]: JSON model/policy files and CSV outputs.

pub mod constrained;
pub mod density;
pub mod error;
pub mod gridworld;
pub mod io;
pub mod lp;
pub mod matrix;
pub mod model;
pub mod par;
pub mod rng;
pub mod unconstrained;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ConstraintSpec, MdpModel, ModelParts, Policy, PolicyKind, Stagewise, StageValues};
pub use par::Execution;
