//! Nash equilibria of a dynamic social-distancing game on SIR dynamics.
//!
//! A continuum of players, split into finitely many types, chooses a
//! piecewise-constant socialization level in `[u_min, u_max]` on each of N
//! decision intervals. Players interact only through two aggregates per
//! interval (the mean action and the infected density in public places), so
//! each player's problem reduces to a scalar-parameterized threshold rule and
//! equilibria are found by minimizing a gap function over N fractions.
//!
//! - [`model`]: scenarios and player types.
//! - [`dynamics`]: grouped SIR integration and the coupling aggregates.
//! - [`best_response`]: exact best responses and the value function `f(A)`.
//! - [`equilibrium`]: chain profiles, the gap function, the multi-start
//!   solver and the full complementarity check.

pub mod best_response;
pub mod dynamics;
pub mod equilibrium;
pub mod model;

pub use best_response::{best_response, BestResponse};
pub use dynamics::{simulate, AggregatePath, Group, GroupProfile, TrajectoryBundle};
pub use equilibrium::{evaluate_h, solve_equilibrium, EquilibriumResult, SearchOptions};
pub use model::{PlayerType, Scenario, ScenarioParams};
