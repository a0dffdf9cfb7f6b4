//! Grouped SIR dynamics with piecewise-constant actions.
//!
//! Every group `g` carries a type, an action vector and a mass `mu_g`. On the
//! interval `[t_k, t_{k+1})` the group states follow
//!
//! ```text
//! S_g' = -r v_gk S_g If
//! I_g' =  r v_gk S_g If - alpha_g I_g
//! z'   =  If,             If = sum_g mu_g v_gk I_g
//! ```
//!
//! integrated with classical RK4 at a fixed step. The auxiliary state `z`
//! yields the per-interval exposure integral `If_k = z(t_{k+1}) - z(t_k)`.

use thiserror::Error;

use crate::model::Scenario;

/// States may leave `[0, 1]` by this much before the integration is aborted.
pub const BLOWUP_SLACK: f64 = 1e-6;
const MASS_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("group {group} refers to type {type_index}, scenario has {types} types")]
    UnknownType {
        group: usize,
        type_index: usize,
        types: usize,
    },
    #[error("group {group} has {len} actions, scenario has {steps} steps")]
    ActionLength {
        group: usize,
        len: usize,
        steps: usize,
    },
    #[error("group {group} action {value} at step {step} lies outside [u_min, u_max]")]
    ActionRange {
        group: usize,
        step: usize,
        value: f64,
    },
    #[error("group {group} has invalid mass {mass}")]
    Mass { group: usize, mass: f64 },
    #[error("type {type_index} group masses sum to {sum}, type mass is {expected}")]
    TypeMass {
        type_index: usize,
        sum: f64,
        expected: f64,
    },
    #[error("step index {index} out of range for {steps} steps")]
    StepIndex { index: usize, steps: usize },
    #[error(
        "state left the unit box at t={time} (group {group}, value {value}); increase substeps"
    )]
    Blowup { time: f64, group: usize, value: f64 },
}

/// A block of players sharing a type and an action vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub type_index: usize,
    pub action: Vec<f64>,
    pub mass: f64,
}

/// Population split into groups of identical (type, action).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupProfile {
    pub groups: Vec<Group>,
}

impl GroupProfile {
    pub fn new(groups: Vec<Group>) -> Self {
        Self { groups }
    }

    /// Every type plays the same action with its full mass.
    pub fn uniform(sc: &Scenario, action: &[f64]) -> Self {
        Self::new(
            sc.types()
                .iter()
                .enumerate()
                .map(|(j, t)| Group {
                    type_index: j,
                    action: action.to_vec(),
                    mass: t.mass,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn validate(&self, sc: &Scenario) -> Result<(), DynamicsError> {
        let n = sc.steps();
        let types = sc.types();
        let mut per_type = vec![0.0; types.len()];
        let (lo, hi) = (sc.u_min(), sc.u_max());
        for (g, group) in self.groups.iter().enumerate() {
            if group.type_index >= types.len() {
                return Err(DynamicsError::UnknownType {
                    group: g,
                    type_index: group.type_index,
                    types: types.len(),
                });
            }
            if group.action.len() != n {
                return Err(DynamicsError::ActionLength {
                    group: g,
                    len: group.action.len(),
                    steps: n,
                });
            }
            if let Some((step, &value)) = group
                .action
                .iter()
                .enumerate()
                .find(|(_, &v)| !(lo..=hi).contains(&v))
            {
                return Err(DynamicsError::ActionRange {
                    group: g,
                    step,
                    value,
                });
            }
            if !(group.mass.is_finite() && group.mass >= 0.0) {
                return Err(DynamicsError::Mass {
                    group: g,
                    mass: group.mass,
                });
            }
            per_type[group.type_index] += group.mass;
        }
        for (j, (sum, t)) in per_type.iter().zip(types).enumerate() {
            if (sum - t.mass).abs() > MASS_SUM_TOL {
                return Err(DynamicsError::TypeMass {
                    type_index: j,
                    sum: *sum,
                    expected: t.mass,
                });
            }
        }
        Ok(())
    }
}

/// Per-interval coupling aggregates shared by all players.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePath {
    /// `u_bar_k`: integral of `kappa + mean action` over interval k.
    pub u_bar: Vec<f64>,
    /// `If_k`: integral of the infected density in public places over interval k.
    pub infected_public: Vec<f64>,
}

impl AggregatePath {
    pub fn new(u_bar: Vec<f64>, infected_public: Vec<f64>) -> Self {
        assert_eq!(u_bar.len(), infected_public.len());
        Self {
            u_bar,
            infected_public,
        }
    }

    pub fn steps(&self) -> usize {
        self.u_bar.len()
    }
}

/// Sampled group trajectories plus the aggregates they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    /// Sample instants, one per substep including both ends.
    pub times: Vec<f64>,
    /// `susceptible[g][m]` is `S_g(times[m])`.
    pub susceptible: Vec<Vec<f64>>,
    pub infected: Vec<Vec<f64>>,
    /// Population infected mass `sum_g mu_g I_g` at each sample.
    pub total_infected: Vec<f64>,
    pub aggregates: AggregatePath,
}

impl TrajectoryBundle {
    /// Sample index of the decision instant `t_k`.
    pub fn sample_index(&self, sc: &Scenario, k: usize) -> usize {
        k * sc.substeps()
    }

    /// Final susceptible probability of each group.
    pub fn final_susceptible(&self) -> Vec<f64> {
        self.susceptible
            .iter()
            .map(|s| *s.last().expect("trajectory has samples"))
            .collect()
    }
}

/// `step_length * (kappa + sum_g mu_g v_gk)`.
pub fn mean_action(sc: &Scenario, gp: &GroupProfile, k: usize) -> Result<f64, DynamicsError> {
    if k >= sc.steps() {
        return Err(DynamicsError::StepIndex {
            index: k,
            steps: sc.steps(),
        });
    }
    Ok(mean_action_unchecked(sc, gp, k))
}

fn mean_action_unchecked(sc: &Scenario, gp: &GroupProfile, k: usize) -> f64 {
    let mean: f64 = gp.groups.iter().map(|g| g.mass * g.action[k]).sum();
    sc.step_length() * (sc.kappa() + mean)
}

/// Integrates the grouped dynamics and records every substep.
pub fn simulate(sc: &Scenario, gp: &GroupProfile) -> Result<TrajectoryBundle, DynamicsError> {
    gp.validate(sc)?;
    let samples = sc.steps() * sc.substeps() + 1;
    let mut rec = Recorder {
        times: Vec::with_capacity(samples),
        susceptible: vec![Vec::with_capacity(samples); gp.len()],
        infected: vec![Vec::with_capacity(samples); gp.len()],
        total: Vec::with_capacity(samples),
    };
    let aggregates = integrate(sc, gp, Some(&mut rec))?;
    Ok(TrajectoryBundle {
        times: rec.times,
        susceptible: rec.susceptible,
        infected: rec.infected,
        total_infected: rec.total,
        aggregates,
    })
}

/// Same integration as [`simulate`] without storing trajectories.
pub fn aggregates(sc: &Scenario, gp: &GroupProfile) -> Result<AggregatePath, DynamicsError> {
    gp.validate(sc)?;
    integrate(sc, gp, None)
}

/// [`aggregates`] without validation, for internal callers whose group
/// masses do not (yet) sum to the type masses.
pub(crate) fn aggregates_unchecked(
    sc: &Scenario,
    gp: &GroupProfile,
) -> Result<AggregatePath, DynamicsError> {
    integrate(sc, gp, None)
}

struct Recorder {
    times: Vec<f64>,
    susceptible: Vec<Vec<f64>>,
    infected: Vec<Vec<f64>>,
    total: Vec<f64>,
}

impl Recorder {
    fn push(&mut self, t: f64, s: &[f64], i: &[f64], mass: &[f64]) {
        self.times.push(t);
        for (g, (&sg, &ig)) in s.iter().zip(i).enumerate() {
            self.susceptible[g].push(sg);
            self.infected[g].push(ig);
        }
        self.total
            .push(mass.iter().zip(i).map(|(m, x)| m * x).sum());
    }
}

/// Right-hand side for one interval with fixed per-group coefficients.
fn rhs(
    s: &[f64],
    i: &[f64],
    weight: &[f64],
    rv: &[f64],
    alpha: &[f64],
    ds: &mut [f64],
    di: &mut [f64],
) -> f64 {
    let infected_public: f64 = weight.iter().zip(i).map(|(w, x)| w * x).sum();
    for g in 0..s.len() {
        let flow = rv[g] * s[g] * infected_public;
        ds[g] = -flow;
        di[g] = flow - alpha[g] * i[g];
    }
    infected_public
}

fn integrate(
    sc: &Scenario,
    gp: &GroupProfile,
    mut recorder: Option<&mut Recorder>,
) -> Result<AggregatePath, DynamicsError> {
    let n = sc.steps();
    let m = sc.substeps();
    let h = sc.step_length() / m as f64;
    let ng = gp.len();
    let types = sc.types();

    let mass: Vec<f64> = gp.groups.iter().map(|g| g.mass).collect();
    let alpha: Vec<f64> = gp
        .groups
        .iter()
        .map(|g| types[g.type_index].alpha)
        .collect();
    let mut s: Vec<f64> = gp.groups.iter().map(|g| types[g.type_index].s0).collect();
    let mut i: Vec<f64> = gp.groups.iter().map(|g| types[g.type_index].i0).collect();
    let mut z = 0.0;

    let mut weight = vec![0.0; ng];
    let mut rv = vec![0.0; ng];
    let mut ks = [vec![0.0; ng], vec![0.0; ng], vec![0.0; ng], vec![0.0; ng]];
    let mut ki = [vec![0.0; ng], vec![0.0; ng], vec![0.0; ng], vec![0.0; ng]];
    let mut s_tmp = vec![0.0; ng];
    let mut i_tmp = vec![0.0; ng];

    let mut u_bar = Vec::with_capacity(n);
    let mut infected_public = Vec::with_capacity(n);

    if let Some(rec) = recorder.as_deref_mut() {
        rec.push(0.0, &s, &i, &mass);
    }

    for k in 0..n {
        for (g, group) in gp.groups.iter().enumerate() {
            let v = group.action[k];
            weight[g] = group.mass * v;
            rv[g] = sc.r() * v;
        }
        u_bar.push(mean_action_unchecked(sc, gp, k));
        let z_start = z;
        for sub in 0..m {
            let [k1s, k2s, k3s, k4s] = &mut ks;
            let [k1i, k2i, k3i, k4i] = &mut ki;

            let z1 = rhs(&s, &i, &weight, &rv, &alpha, k1s, k1i);
            for g in 0..ng {
                s_tmp[g] = s[g] + 0.5 * h * k1s[g];
                i_tmp[g] = i[g] + 0.5 * h * k1i[g];
            }
            let z2 = rhs(&s_tmp, &i_tmp, &weight, &rv, &alpha, k2s, k2i);
            for g in 0..ng {
                s_tmp[g] = s[g] + 0.5 * h * k2s[g];
                i_tmp[g] = i[g] + 0.5 * h * k2i[g];
            }
            let z3 = rhs(&s_tmp, &i_tmp, &weight, &rv, &alpha, k3s, k3i);
            for g in 0..ng {
                s_tmp[g] = s[g] + h * k3s[g];
                i_tmp[g] = i[g] + h * k3i[g];
            }
            let z4 = rhs(&s_tmp, &i_tmp, &weight, &rv, &alpha, k4s, k4i);

            for g in 0..ng {
                s[g] += h / 6.0 * (k1s[g] + 2.0 * k2s[g] + 2.0 * k3s[g] + k4s[g]);
                i[g] += h / 6.0 * (k1i[g] + 2.0 * k2i[g] + 2.0 * k3i[g] + k4i[g]);
            }
            z += h / 6.0 * (z1 + 2.0 * z2 + 2.0 * z3 + z4);

            let t = sc.decision_time(k) + (sub + 1) as f64 * h;
            check_box(t, &s, &i)?;
            if let Some(rec) = recorder.as_deref_mut() {
                rec.push(t, &s, &i, &mass);
            }
        }
        infected_public.push(z - z_start);
    }

    Ok(AggregatePath {
        u_bar,
        infected_public,
    })
}

fn check_box(time: f64, s: &[f64], i: &[f64]) -> Result<(), DynamicsError> {
    let outside = |x: f64| !(-BLOWUP_SLACK..=1.0 + BLOWUP_SLACK).contains(&x);
    for (group, (&sg, &ig)) in s.iter().zip(i).enumerate() {
        for value in [sg, ig] {
            if outside(value) {
                return Err(DynamicsError::Blowup { time, group, value });
            }
        }
    }
    Ok(())
}
