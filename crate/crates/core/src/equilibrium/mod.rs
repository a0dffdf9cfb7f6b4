//! Equilibrium computation through the reduced fraction coordinates `rho`.
//!
//! A profile is summarized by `rho_k`, the mass of players playing `u_max`
//! at step k. [`evaluate_h`] maps `rho` to its chain profile, simulates the
//! epidemic and returns the mass-weighted cost gap `H(rho)`, which vanishes
//! exactly at Nash equilibria. [`solve_equilibrium`] minimizes `H` over
//! `[0, 1]^N` and [`verify_ncp`] re-checks small instances over the full
//! action set.

mod chain;
mod gap;
mod ncp;
mod ordered;
mod search;

use rayon::prelude::*;
use thiserror::Error;

use crate::best_response::BestResponseError;
use crate::dynamics::{simulate, DynamicsError, GroupProfile, TrajectoryBundle};
use crate::model::Scenario;

pub use chain::{chain_actions, precedes, rho_to_pi, ChainProfile};
pub use gap::{evaluate_h, GapEntry, GapReport};
pub use ncp::{verify_ncp, Coordinate, FullProfile, NcpReport, NCP_MAX_STEPS};
pub use search::{argmin_by_value, compass_search, start_points, CompassOptions, CompassOutcome};

/// Default absolute tolerance on `H` for declaring an equilibrium.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Maximum number of restricted solves per start.
const MAX_PRICING_ROUNDS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("rho has {len} entries, scenario has {steps} steps")]
    RhoLength { len: usize, steps: usize },
    #[error("rho[{index}] = {value} lies outside [0, 1]")]
    RhoRange { index: usize, value: f64 },
    #[error("full enumeration limited to {max} steps, got {steps}")]
    TooManySteps { steps: usize, max: usize },
    #[error("group {group} action is not a vertex of {{u_min, u_max}}^N")]
    NotVertex { group: usize },
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("at least one start is required")]
    NoStarts,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    BestResponse(#[from] BestResponseError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iters: 20_000,
            tol: DEFAULT_TOL,
            seed: 0,
            initial_step: 0.25,
            min_step: 1e-6,
        }
    }
}

/// Best point reached from one start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartRecord {
    pub start: Vec<f64>,
    pub rho: Vec<f64>,
    pub h: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub rho: Vec<f64>,
    pub gap: GapReport,
    pub chain: ChainProfile,
    pub trajectory: TrajectoryBundle,
    /// Realized cost of every group of `chain.groups`.
    pub group_costs: Vec<f64>,
    /// Mass-weighted realized cost per type.
    pub type_costs: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
    pub seed: u64,
    pub best_start: usize,
    pub starts: Vec<StartRecord>,
}

impl EquilibriumResult {
    pub fn h(&self) -> f64 {
        self.gap.h
    }

    /// `sum_j m_j J_j`.
    pub fn mean_cost(&self, sc: &Scenario) -> f64 {
        sc.types()
            .iter()
            .zip(&self.type_costs)
            .map(|(t, c)| t.mass * c)
            .sum()
    }
}

/// Minimizes `H` by multi-start local search.
///
/// Every start runs a compass search on `H`. Near an equilibrium `H` behaves
/// like a maximum of affine pieces and coordinate polling stalls, so the
/// stalled point seeds a column-generation solve of the game restricted to a
/// growing finite action set. Starts run concurrently. Returns the first
/// start (in start order) that reaches `opts.tol`, or the lowest-`H` point
/// over all starts if none does; `converged` reports whether the result meets
/// `opts.tol`.
pub fn solve_equilibrium(
    sc: &Scenario,
    opts: &SearchOptions,
) -> Result<EquilibriumResult, EquilibriumError> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(EquilibriumError::Tolerance(opts.tol));
    }
    if opts.starts == 0 {
        return Err(EquilibriumError::NoStarts);
    }
    let starts = start_points(sc.steps(), opts.starts, opts.seed);
    let outcomes = starts
        .par_iter()
        .map(|x0| local_search(sc, x0, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let best = outcomes
        .iter()
        .position(|o| o.value <= opts.tol)
        .or_else(|| argmin_by_value(&outcomes))
        .expect("at least one start");

    let rho = outcomes[best].x.clone();
    let chain = ChainProfile::new(&rho, sc)?;
    let gap = gap::gap_of_chain(&chain, sc)?;
    let trajectory = simulate(sc, &chain.groups)?;
    let group_costs = realized_group_costs(sc, &chain.groups, &trajectory);
    let type_costs = type_mean_costs(sc, &chain.groups, &group_costs);

    let records = starts
        .into_iter()
        .zip(outcomes)
        .map(|(start, o)| StartRecord {
            start,
            rho: o.x,
            h: o.value,
            iterations: o.iterations,
            evaluations: o.evaluations,
            trace: o.trace,
        })
        .collect();

    Ok(EquilibriumResult {
        converged: gap.h <= opts.tol,
        rho,
        gap,
        chain,
        trajectory,
        group_costs,
        type_costs,
        tol: opts.tol,
        seed: opts.seed,
        best_start: best,
        starts: records,
    })
}

/// Compass search from `x0`, finished by column generation from the point
/// the compass stalls at.
fn local_search(
    sc: &Scenario,
    x0: &[f64],
    opts: &SearchOptions,
) -> Result<CompassOutcome, EquilibriumError> {
    let h = |rho: &[f64]| evaluate_h(rho, sc).map(|r| r.h);
    let compass = CompassOptions {
        initial_step: opts.initial_step,
        min_step: opts.min_step,
        max_iters: opts.max_iters,
        target: opts.tol,
        ..CompassOptions::default()
    };
    let mut out = compass_search(h, x0, &compass)?;
    if out.value > opts.tol {
        let (x, value) = ordered::refine(&out.x, sc, opts.tol, MAX_PRICING_ROUNDS)?;
        if value < out.value {
            out.trace.push(value);
            out.x = x;
            out.value = value;
        }
    }
    Ok(out)
}

/// Realized cost `G (1 - S(T)) - s sum_k v_k u_bar_k` of every group.
pub fn realized_group_costs(
    sc: &Scenario,
    gp: &GroupProfile,
    trajectory: &TrajectoryBundle,
) -> Vec<f64> {
    let u_bar = &trajectory.aggregates.u_bar;
    gp.groups
        .iter()
        .zip(trajectory.final_susceptible())
        .map(|(g, s_end)| {
            let t = &sc.types()[g.type_index];
            let social: f64 = g.action.iter().zip(u_bar).map(|(v, u)| v * u).sum();
            t.g * (1.0 - s_end) - t.s * social
        })
        .collect()
}

/// Mass-weighted mean of group costs per type.
pub fn type_mean_costs(sc: &Scenario, gp: &GroupProfile, group_costs: &[f64]) -> Vec<f64> {
    let mut totals = vec![0.0; sc.types().len()];
    for (g, c) in gp.groups.iter().zip(group_costs) {
        totals[g.type_index] += g.mass * c;
    }
    totals
        .iter()
        .zip(sc.types())
        .map(|(total, t)| total / t.mass)
        .collect()
}
