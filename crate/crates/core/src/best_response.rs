//! Exact best responses of a single player against fixed aggregates.
//!
//! The auxiliary cost of an action vector `v` is
//! `-b exp(-r sum_k v_k If_k) - sum_k v_k u_bar_k`. Its minimizers are threshold
//! actions: `v_k = u_max` iff `u_bar_k / If_k > lambda` for a threshold drawn from
//! the finite set of ratios (plus zero). Enumerating those N+1 candidates gives
//! the optimum; [`brute_force_best_response`] enumerates all `2^N` vertices and
//! serves as the independent check.

use std::cmp::Ordering;

use thiserror::Error;

use crate::dynamics::AggregatePath;
use crate::model::ActionBounds;

/// Largest horizon accepted by [`brute_force_best_response`].
pub const BRUTE_FORCE_MAX_STEPS: usize = 20;
/// Ratios closer than this (relative) collapse into one threshold.
const RATIO_MERGE_RTOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BestResponseError {
    #[error("brute force limited to {max} steps, got {steps}")]
    TooManySteps { steps: usize, max: usize },
}

/// One threshold candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub threshold: f64,
    pub action: Vec<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub action: Vec<f64>,
    pub cost: f64,
    pub threshold: f64,
    /// Every evaluated candidate, in ascending threshold order.
    pub candidates: Vec<Candidate>,
}

/// Benefit-to-risk ratio `u_bar_k / If_k`; `+inf` for steps without exposure.
pub fn step_ratios(agg: &AggregatePath) -> Vec<f64> {
    agg.u_bar
        .iter()
        .zip(&agg.infected_public)
        .map(|(&u, &inf)| if inf > 0.0 { u / inf } else { f64::INFINITY })
        .collect()
}

/// Sorted distinct finite ratios plus zero.
pub fn candidate_thresholds(agg: &AggregatePath) -> Vec<f64> {
    let mut ratios: Vec<f64> = step_ratios(agg)
        .into_iter()
        .filter(|r| r.is_finite())
        .collect();
    ratios.push(0.0);
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));

    // Each cluster is represented by its largest member so that the whole
    // cluster switches together under the `ratio <= threshold` rule.
    let mut out: Vec<f64> = Vec::with_capacity(ratios.len());
    for r in ratios {
        match out.last_mut() {
            Some(last) if (r - *last).abs() <= RATIO_MERGE_RTOL * r.abs().max(last.abs()) => {
                *last = r;
            }
            _ => out.push(r),
        }
    }
    out
}

/// `u_max` where the ratio strictly exceeds `threshold`, `u_min` elsewhere.
pub fn threshold_action(agg: &AggregatePath, threshold: f64, bounds: &ActionBounds) -> Vec<f64> {
    step_ratios(agg)
        .into_iter()
        .map(|ratio| {
            if ratio > threshold {
                bounds.u_max
            } else {
                bounds.u_min
            }
        })
        .collect()
}

pub fn auxiliary_cost(b: f64, action: &[f64], agg: &AggregatePath, r: f64) -> f64 {
    let (exposure, benefit) = action
        .iter()
        .zip(agg.infected_public.iter().zip(&agg.u_bar))
        .fold((0.0, 0.0), |(e, g), (&v, (&inf, &u))| {
            (e + v * inf, g + v * u)
        });
    -b * (-r * exposure).exp() - benefit
}

/// Threshold enumeration over at most N+1 candidates.
///
/// Equal-cost candidates resolve to the larger threshold, i.e. the more
/// cautious action.
pub fn best_response(b: f64, agg: &AggregatePath, bounds: &ActionBounds, r: f64) -> BestResponse {
    let candidates: Vec<Candidate> = candidate_thresholds(agg)
        .into_iter()
        .map(|threshold| {
            let action = threshold_action(agg, threshold, bounds);
            let cost = auxiliary_cost(b, &action, agg, r);
            Candidate {
                threshold,
                action,
                cost,
            }
        })
        .collect();
    let best = candidates.iter().enumerate().fold(0, |best, (idx, c)| {
        if c.cost <= candidates[best].cost {
            idx
        } else {
            best
        }
    });
    let Candidate {
        threshold,
        ref action,
        cost,
    } = candidates[best];
    BestResponse {
        action: action.clone(),
        cost,
        threshold,
        candidates,
    }
}

/// Minimum of the auxiliary cost over every vertex of `{u_min, u_max}^N`.
///
/// Vertex `mask` plays `u_max` at step `k` iff bit `k` is set. Candidates are
/// listed by mask and carry `NaN` thresholds.
pub fn brute_force_best_response(
    b: f64,
    agg: &AggregatePath,
    bounds: &ActionBounds,
    r: f64,
) -> Result<BestResponse, BestResponseError> {
    let n = agg.steps();
    if n > BRUTE_FORCE_MAX_STEPS {
        return Err(BestResponseError::TooManySteps {
            steps: n,
            max: BRUTE_FORCE_MAX_STEPS,
        });
    }
    let candidates: Vec<Candidate> = (0u32..1 << n)
        .map(|mask| {
            let action = vertex_action(mask as u64, n, bounds);
            let cost = auxiliary_cost(b, &action, agg, r);
            Candidate {
                threshold: f64::NAN,
                action,
                cost,
            }
        })
        .collect();
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.partial_cmp(&b.1.cost).unwrap_or(Ordering::Equal))
        .map(|(i, _)| i)
        .expect("at least one vertex");
    Ok(BestResponse {
        action: candidates[best].action.clone(),
        cost: candidates[best].cost,
        threshold: f64::NAN,
        candidates,
    })
}

/// Action vector encoded by a bit mask (bit k set means `u_max` at step k).
pub fn vertex_action(mask: u64, steps: usize, bounds: &ActionBounds) -> Vec<f64> {
    (0..steps)
        .map(|k| {
            if mask >> k & 1 == 1 {
                bounds.u_max
            } else {
                bounds.u_min
            }
        })
        .collect()
}

/// `f(A) = min { -sum v_k u_bar_k : r sum v_k If_k = A }` on `[A_min, A_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffineValue {
    /// Breakpoints from `A_min` to `A_max`, inclusive.
    pub breakpoints: Vec<f64>,
    /// `f` at each breakpoint.
    pub values: Vec<f64>,
    /// Slope of the piece between consecutive breakpoints.
    pub slopes: Vec<f64>,
}

impl PiecewiseAffineValue {
    pub fn a_min(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn a_max(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty breakpoints")
    }

    pub fn pieces(&self) -> usize {
        self.slopes.len()
    }

    /// `f(a)`; `+inf` outside the feasible range.
    pub fn eval(&self, a: f64) -> f64 {
        if !(self.a_min()..=self.a_max()).contains(&a) {
            return f64::INFINITY;
        }
        let idx = self
            .breakpoints
            .partition_point(|&x| x <= a)
            .saturating_sub(1)
            .min(self.slopes.len().saturating_sub(1));
        if self.slopes.is_empty() {
            return self.values[0];
        }
        self.values[idx] + self.slopes[idx] * (a - self.breakpoints[idx])
    }

    /// Minimum of `-b exp(-A) + f(A)`; attained at a breakpoint because the
    /// first term is concave and `f` is affine between breakpoints.
    pub fn composite_min(&self, b: f64) -> f64 {
        self.breakpoints
            .iter()
            .zip(&self.values)
            .map(|(&a, &f)| -b * (-a).exp() + f)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds `f` by switching steps to `u_max` in order of decreasing ratio.
///
/// Steps without exposure are pinned at `u_max`: they shift `f` by a constant
/// and leave `A` unchanged. Steps with equal ratios share one piece.
pub fn f_breakpoints(agg: &AggregatePath, bounds: &ActionBounds, r: f64) -> PiecewiseAffineValue {
    let ratios = step_ratios(agg);
    let span = bounds.u_max - bounds.u_min;

    let mut order: Vec<usize> = (0..agg.steps())
        .filter(|&k| ratios[k].is_finite())
        .collect();
    order.sort_by(|&a, &b| ratios[b].partial_cmp(&ratios[a]).unwrap_or(Ordering::Equal));

    let total_exposure: f64 = agg.infected_public.iter().sum();
    let mut a = r * bounds.u_min * total_exposure;
    let mut f: f64 = (0..agg.steps())
        .map(|k| {
            let v = if ratios[k].is_finite() {
                bounds.u_min
            } else {
                bounds.u_max
            };
            -v * agg.u_bar[k]
        })
        .sum();

    let mut breakpoints = vec![a];
    let mut values = vec![f];
    let mut slopes: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let ratio = ratios[order[i]];
        let (mut d_a, mut d_f) = (0.0, 0.0);
        while i < order.len() && ratios[order[i]] == ratio {
            let k = order[i];
            d_a += r * span * agg.infected_public[k];
            d_f -= span * agg.u_bar[k];
            i += 1;
        }
        a += d_a;
        f += d_f;
        breakpoints.push(a);
        values.push(f);
        slopes.push(-ratio / r);
    }
    // Pin the right end exactly to r * u_max * sum If.
    if let Some(last) = breakpoints.last_mut() {
        if !slopes.is_empty() {
            *last = r * bounds.u_max * total_exposure;
        }
    }
    PiecewiseAffineValue {
        breakpoints,
        values,
        slopes,
    }
}
