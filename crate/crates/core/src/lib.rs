//! Revenue-optimal mechanisms for selling information to a decision maker
//! with a binary action and an affine private-type payoff.
//!
//! The seller owns the realization of a payoff-relevant state `q`; the buyer
//! privately knows a type `t` and chooses between a passive action (payoff 0)
//! and an active action (payoff `v(q,t) = v1(q)*t + v0(q)`). A mechanism is a
//! menu of experiments: for each reported type, a probability `pi(q,t)` of
//! recommending the active action in state `q`, plus an upfront payment
//! `p(t)`.
//!
//! The crate computes the optimal menu in closed form via threshold policies
//! on the state ratio `rho(q) = v0(q)/v1(q)` and boundary virtual values of
//! the type distribution, verifies arbitrary menus against the feasibility
//! characterization (monotone weighted probability, utility identity,
//! endpoint IR, nonnegative payments, pairwise IC, obedience), and
//! cross-checks revenue against a brute-force LP oracle on small instances.

pub mod corpus;
pub mod feasibility;
pub mod lp_oracle;
pub mod model;
pub mod optimal_mechanism;
pub mod single_menu;
pub mod virtual_value;

pub use feasibility::{revenue, FeasibilityReport};
pub use model::{Instance, Mechanism, StateSpace, TypeGrid};
pub use optimal_mechanism::{solve, CaseLabel, CaseTag, Solution, ThresholdPolicy};
pub use virtual_value::VirtualCurve;
