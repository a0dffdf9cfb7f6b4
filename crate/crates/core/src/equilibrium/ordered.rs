//! Equilibria of the game restricted to a finite action set, grown by
//! column generation.
//!
//! For a fixed set `A` of vertex actions shared by all types, the restricted
//! game is a smooth complementarity problem in the masses `w[j][i]`:
//!
//! `w >= 0`, `c_j(a_i) - lambda_j >= 0`, `w[j][i] (c_j(a_i) - lambda_j) = 0`,
//! `sum_i w[j][i] = m_j`,
//!
//! with `c_j = F_j / b_j` the scaled auxiliary cost. It is solved by a
//! semismooth Newton method on the Fischer-Burmeister reformulation; the
//! aggregate sensitivities come from finite differences and the cost
//! sensitivities are analytic. After each solve every type's exact best
//! response is priced against the restricted optimum `lambda_j` and added
//! to `A` if it is strictly cheaper. When no type can improve, the restricted
//! solution is an equilibrium of the full game.

use nalgebra::{DMatrix, DVector};

use crate::best_response::{auxiliary_cost, best_response};
use crate::dynamics::{aggregates_unchecked, AggregatePath, Group, GroupProfile};
use crate::model::Scenario;

use super::chain::ChainProfile;
use super::gap::evaluate_h;
use super::EquilibriumError;

const FD_STEP: f64 = 1e-6;
const MAX_NEWTON_ITERS: usize = 300;
const MAX_BACKTRACKS: usize = 30;
const ARMIJO: f64 = 1e-4;
/// A best response enters the action set only if it beats the restricted
/// optimum (in scaled cost) by more than this.
const PRICING_TOL: f64 = 1e-15;
/// Newton stops once every Fischer-Burmeister residual is this small.
const RESIDUAL_TOL: f64 = 1e-14;

/// `rho_k`: total mass of the actions playing `u_max` at step `k`.
fn rho_from_masses(w: &[Vec<f64>], actions: &[Vec<f64>], sc: &Scenario) -> Vec<f64> {
    (0..sc.steps())
        .map(|k| {
            let mass: f64 = w
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(actions)
                        .filter(|(_, a)| a[k] == sc.u_max())
                        .map(|(m, _)| m.max(0.0))
                        .sum::<f64>()
                })
                .sum();
            mass.clamp(0.0, 1.0)
        })
        .collect()
}

/// Fischer-Burmeister function and its partial derivatives.
fn fischer_burmeister(a: f64, b: f64) -> (f64, f64, f64) {
    let r = a.hypot(b);
    if r < 1e-300 {
        let d = std::f64::consts::FRAC_1_SQRT_2 - 1.0;
        return (0.0, d, d);
    }
    (r - a - b, a / r - 1.0, b / r - 1.0)
}

struct Restricted<'a> {
    sc: &'a Scenario,
    actions: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Restricted<'_> {
    /// Index of `action` in the action set, appending it (with zero mass for
    /// every type) if new.
    fn column(&mut self, action: &[f64], w: &mut [Vec<f64>]) -> usize {
        if let Some(i) = self.actions.iter().position(|a| a == action) {
            return i;
        }
        self.actions.push(action.to_vec());
        for row in w.iter_mut() {
            row.push(0.0);
        }
        self.actions.len() - 1
    }

    fn types(&self) -> usize {
        self.b.len()
    }

    fn width(&self) -> usize {
        self.actions.len()
    }

    fn aggregates(&self, w: &[Vec<f64>]) -> Result<AggregatePath, EquilibriumError> {
        let mut groups = Vec::new();
        for (j, row) in w.iter().enumerate() {
            for (i, &mass) in row.iter().enumerate() {
                if mass > 0.0 {
                    groups.push(Group {
                        type_index: j,
                        action: self.actions[i].clone(),
                        mass,
                    });
                }
            }
        }
        Ok(aggregates_unchecked(self.sc, &GroupProfile::new(groups))?)
    }

    /// Stacked unknowns `z = (w[0][..], ..., w[M-1][..], lambda)`.
    fn split(&self, z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let width = self.width();
        let w = z[..self.types() * width]
            .chunks(width)
            .map(|c| c.to_vec())
            .collect();
        (w, z[self.types() * width..].to_vec())
    }

    fn scaled_costs(&self, agg: &AggregatePath) -> Vec<Vec<f64>> {
        self.b
            .iter()
            .map(|&bj| {
                self.actions
                    .iter()
                    .map(|a| auxiliary_cost(bj, a, agg, self.sc.r()) / bj)
                    .collect()
            })
            .collect()
    }

    fn residual(&self, z: &[f64]) -> Result<Vec<f64>, EquilibriumError> {
        let (w, lambda) = self.split(z);
        let positive: Vec<Vec<f64>> = w
            .iter()
            .map(|r| r.iter().map(|v| v.max(0.0)).collect())
            .collect();
        let costs = self.scaled_costs(&self.aggregates(&positive)?);
        let mut out = Vec::with_capacity(z.len());
        for j in 0..self.types() {
            for i in 0..self.width() {
                out.push(fischer_burmeister(w[j][i], costs[j][i] - lambda[j]).0);
            }
        }
        for (row, t) in w.iter().zip(self.sc.types()) {
            out.push(row.iter().sum::<f64>() - t.mass);
        }
        Ok(out)
    }

    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, EquilibriumError> {
        let (w, lambda) = self.split(z);
        let (m, width, n) = (self.types(), self.width(), self.sc.steps());
        let positive: Vec<Vec<f64>> = w
            .iter()
            .map(|r| r.iter().map(|v| v.max(0.0)).collect())
            .collect();
        let base = self.aggregates(&positive)?;
        let costs = self.scaled_costs(&base);

        // d(aggregates) / d(w[j][i]) by finite differences.
        let mut d_agg = DMatrix::zeros(2 * n, m * width);
        for j in 0..m {
            for i in 0..width {
                // Negative masses are clamped to zero, so they do not move
                // the aggregates.
                if w[j][i] < 0.0 {
                    continue;
                }
                // Central differences where the mass can move both ways.
                let mut up = positive.clone();
                up[j][i] += FD_STEP;
                let hi = self.aggregates(&up)?;
                let (lo, span) = if positive[j][i] >= FD_STEP {
                    let mut down = positive.clone();
                    down[j][i] -= FD_STEP;
                    (self.aggregates(&down)?, 2.0 * FD_STEP)
                } else {
                    (base.clone(), FD_STEP)
                };
                let col = j * width + i;
                for k in 0..n {
                    d_agg[(k, col)] = (hi.u_bar[k] - lo.u_bar[k]) / span;
                    d_agg[(n + k, col)] = (hi.infected_public[k] - lo.infected_public[k]) / span;
                }
            }
        }
        // d(scaled cost) / d(aggregates), analytic.
        let mut d_cost = DMatrix::zeros(m * width, 2 * n);
        for (j, &bj) in self.b.iter().enumerate() {
            for (i, a) in self.actions.iter().enumerate() {
                let exposure: f64 = a
                    .iter()
                    .zip(&base.infected_public)
                    .map(|(v, f)| v * f)
                    .sum();
                let decay = (-self.sc.r() * exposure).exp();
                for k in 0..n {
                    d_cost[(j * width + i, k)] = -a[k] / bj;
                    d_cost[(j * width + i, n + k)] = self.sc.r() * a[k] * decay;
                }
            }
        }
        let d_c_dw = &d_cost * &d_agg;

        let mut jac = DMatrix::zeros(z.len(), z.len());
        for j in 0..m {
            for i in 0..width {
                let row = j * width + i;
                let (_, da, db) = fischer_burmeister(w[j][i], costs[j][i] - lambda[j]);
                for col in 0..m * width {
                    jac[(row, col)] = db * d_c_dw[(row, col)];
                }
                jac[(row, row)] += da;
                jac[(row, m * width + j)] = -db;
            }
            for i in 0..width {
                jac[(m * width + j, j * width + i)] = 1.0;
            }
        }
        Ok(jac)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn half_norm2(v: &[f64]) -> f64 {
    0.5 * v.iter().map(|x| x * x).sum::<f64>()
}

/// Semismooth Newton solve of the restricted game from masses `w`.
/// Returns the final (non-negative) masses.
fn solve_restricted(game: &Restricted, w: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EquilibriumError> {
    let costs = game.scaled_costs(&game.aggregates(w)?);
    let mut z: Vec<f64> = w.iter().flatten().copied().collect();
    z.extend(
        costs
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)),
    );

    let mut phi = game.residual(&z)?;
    for _ in 0..MAX_NEWTON_ITERS {
        if max_abs(&phi) <= RESIDUAL_TOL {
            break;
        }
        let jac = game.jacobian(&z)?;
        let rhs = -DVector::from_column_slice(&phi);
        let step = match jac.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => match jac.svd(true, true).solve(&rhs, 1e-14) {
                Ok(s) => s,
                Err(_) => break,
            },
        };
        let merit = half_norm2(&phi);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            let trial_phi = game.residual(&trial)?;
            if half_norm2(&trial_phi) <= (1.0 - 2.0 * ARMIJO * t) * merit {
                accepted = Some((trial, trial_phi));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, trial_phi)) = accepted else {
            break;
        };
        z = trial;
        phi = trial_phi;
    }
    let (w, _) = game.split(&z);
    Ok(w.into_iter()
        .map(|row| row.into_iter().map(|v| v.max(0.0)).collect())
        .collect())
}

/// Column generation from the chain profile of `rho`.
///
/// Returns the best point found and its `H`, stopping once `H <= target`,
/// when no type has an improving action, or after `max_rounds` solves.
pub(crate) fn refine(
    rho: &[f64],
    sc: &Scenario,
    target: f64,
    max_rounds: usize,
) -> Result<(Vec<f64>, f64), EquilibriumError> {
    let chain = ChainProfile::new(rho, sc)?;
    let mut best = (rho.to_vec(), evaluate_h(rho, sc)?.h);
    let mut game = Restricted {
        sc,
        actions: Vec::new(),
        b: sc.b_values(),
    };
    let mut w: Vec<Vec<f64>> = vec![Vec::new(); sc.types().len()];
    for g in &chain.groups.groups {
        let i = game.column(&g.action, &mut w);
        w[g.type_index][i] += g.mass;
    }

    let bounds = sc.bounds();
    for _ in 0..max_rounds {
        w = solve_restricted(&game, &w)?;
        let candidate = rho_from_masses(&w, &game.actions, sc);
        let h = evaluate_h(&candidate, sc)?.h;
        if h < best.1 {
            best = (candidate, h);
        }
        if best.1 <= target {
            break;
        }
        // Pricing: add every type's best response that beats the restricted optimum.
        let agg = game.aggregates(&w)?;
        let costs = game.scaled_costs(&agg);
        let mut added = false;
        for (j, bj) in sc.b_values().into_iter().enumerate() {
            let restricted_min = costs[j].iter().copied().fold(f64::INFINITY, f64::min);
            let br = best_response(bj, &agg, &bounds, sc.r());
            if br.cost / bj < restricted_min - PRICING_TOL && !game.actions.contains(&br.action) {
                game.column(&br.action, &mut w);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    Ok(best)
}
