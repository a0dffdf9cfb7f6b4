//! Complementarity check over the full action set `{u_min, u_max}^N`.
//!
//! Independent of the threshold machinery: every type's optimum is found by
//! enumerating all `2^N` vertex actions.

use crate::best_response::{auxiliary_cost, vertex_action};
use crate::dynamics::{aggregates, Group, GroupProfile};
use crate::model::Scenario;

use super::EquilibriumError;

/// Largest horizon accepted by [`verify_ncp`].
pub const NCP_MAX_STEPS: usize = 12;

/// Mass of every (type, vertex action) pair; `masses[j][mask]`, where bit `k`
/// of `mask` set means `u_max` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullProfile {
    pub steps: usize,
    pub masses: Vec<Vec<f64>>,
}

impl FullProfile {
    pub fn from_groups(gp: &GroupProfile, sc: &Scenario) -> Result<Self, EquilibriumError> {
        let n = sc.steps();
        if n > NCP_MAX_STEPS {
            return Err(EquilibriumError::TooManySteps {
                steps: n,
                max: NCP_MAX_STEPS,
            });
        }
        gp.validate(sc)?;
        let mut masses = vec![vec![0.0; 1 << n]; sc.types().len()];
        for (g, group) in gp.groups.iter().enumerate() {
            let mask =
                action_mask(&group.action, sc).ok_or(EquilibriumError::NotVertex { group: g })?;
            masses[group.type_index][mask] += group.mass;
        }
        Ok(Self { steps: n, masses })
    }

    /// Each type spreads its mass evenly over all actions.
    pub fn uniform(sc: &Scenario) -> Result<Self, EquilibriumError> {
        let n = sc.steps();
        if n > NCP_MAX_STEPS {
            return Err(EquilibriumError::TooManySteps {
                steps: n,
                max: NCP_MAX_STEPS,
            });
        }
        let count = 1usize << n;
        Ok(Self {
            steps: n,
            masses: sc
                .types()
                .iter()
                .map(|t| vec![t.mass / count as f64; count])
                .collect(),
        })
    }

    pub fn to_groups(&self, sc: &Scenario) -> GroupProfile {
        let bounds = sc.bounds();
        let mut groups = Vec::new();
        for (j, row) in self.masses.iter().enumerate() {
            for (mask, &mass) in row.iter().enumerate() {
                if mass > 0.0 {
                    groups.push(Group {
                        type_index: j,
                        action: vertex_action(mask as u64, self.steps, &bounds),
                        mass,
                    });
                }
            }
        }
        GroupProfile::new(groups)
    }
}

fn action_mask(action: &[f64], sc: &Scenario) -> Option<usize> {
    let mut mask = 0usize;
    for (k, &v) in action.iter().enumerate() {
        if v == sc.u_max() {
            mask |= 1 << k;
        } else if v != sc.u_min() {
            return None;
        }
    }
    Some(mask)
}

/// One (type, action) coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub type_index: usize,
    pub mask: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcpReport {
    pub tol: f64,
    /// Smallest mass entry (nonnegativity).
    pub min_mass: f64,
    /// Smallest `Phi = F - delta` entry.
    pub min_phi: f64,
    /// `pi . Phi(pi)`.
    pub complementarity: f64,
    /// `min over vertices pi' of (pi' - pi) . F(pi)`.
    pub vi_residual: f64,
    /// Coordinate with the largest `pi * Phi`.
    pub worst: Coordinate,
    /// Cheapest action of the worst coordinate's type.
    pub best_alternative: Coordinate,
    /// Per-type optimum from full enumeration.
    pub optima: Vec<f64>,
    pub passed: bool,
}

pub fn verify_ncp(
    pi: &FullProfile,
    sc: &Scenario,
    tol: f64,
) -> Result<NcpReport, EquilibriumError> {
    let n = sc.steps();
    if n > NCP_MAX_STEPS || pi.steps != n {
        return Err(EquilibriumError::TooManySteps {
            steps: pi.steps.max(n),
            max: NCP_MAX_STEPS,
        });
    }
    let agg = aggregates(sc, &pi.to_groups(sc))?;
    let bounds = sc.bounds();
    let b = sc.b_values();

    let costs: Vec<Vec<f64>> = b
        .iter()
        .map(|&bj| {
            (0..1u64 << n)
                .map(|mask| auxiliary_cost(bj, &vertex_action(mask, n, &bounds), &agg, sc.r()))
                .collect()
        })
        .collect();

    let mut optima = Vec::with_capacity(b.len());
    let mut argmins = Vec::with_capacity(b.len());
    for row in &costs {
        let (l, &v) = row
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .expect("non-empty action set");
        optima.push(v);
        argmins.push(l);
    }

    let mut min_mass = f64::INFINITY;
    let mut min_phi = f64::INFINITY;
    let mut complementarity = 0.0;
    let mut pi_dot_f = 0.0;
    let mut worst = (
        f64::NEG_INFINITY,
        Coordinate {
            type_index: 0,
            mask: 0,
        },
    );
    for (j, (row, masses)) in costs.iter().zip(&pi.masses).enumerate() {
        for (mask, (&f, &p)) in row.iter().zip(masses).enumerate() {
            let phi = f - optima[j];
            min_mass = min_mass.min(p);
            min_phi = min_phi.min(phi);
            complementarity += p * phi;
            pi_dot_f += p * f;
            if p * phi > worst.0 {
                worst = (
                    p * phi,
                    Coordinate {
                        type_index: j,
                        mask,
                    },
                );
            }
        }
    }
    // The minimizing vertex puts each type's full mass on its cheapest action.
    let vertex_dot_f: f64 = sc
        .types()
        .iter()
        .zip(&optima)
        .map(|(t, &d)| t.mass * d)
        .sum();
    let vi_residual = vertex_dot_f - pi_dot_f;

    let passed =
        min_mass >= 0.0 && min_phi >= -tol && complementarity.abs() <= tol && vi_residual >= -tol;
    Ok(NcpReport {
        tol,
        min_mass,
        min_phi,
        complementarity,
        vi_residual,
        worst: worst.1,
        best_alternative: Coordinate {
            type_index: worst.1.type_index,
            mask: argmins[worst.1.type_index],
        },
        optima,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PlayerType, ScenarioParams};

    fn toy(b: f64, steps: usize) -> Scenario {
        Scenario::new(
            ScenarioParams {
                r: 1.0,
                kappa: 1.0,
                u_min: 0.4,
                u_max: 0.75,
                steps,
                step_length: 1.0,
                substeps: 32,
            },
            vec![PlayerType {
                mass: 1.0,
                s0: 0.95,
                i0: 0.05,
                alpha: 0.5,
                g: b / 0.95,
                s: 1.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn dominated_profile_flags_all_max_deviation() {
        let sc = toy(1e-9, 3);
        let gp = GroupProfile::uniform(&sc, &[0.4; 3]);
        let pi = FullProfile::from_groups(&gp, &sc).unwrap();
        let report = verify_ncp(&pi, &sc, 1e-8).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst.mask, 0);
        assert_eq!(report.best_alternative.mask, 0b111);
        assert!(report.complementarity > 0.0);
    }

    #[test]
    fn uniform_profile_is_not_equilibrium() {
        let sc = toy(50.0, 2);
        let pi = FullProfile::uniform(&sc).unwrap();
        let report = verify_ncp(&pi, &sc, 1e-8).unwrap();
        assert!(report.complementarity > 0.0);
        assert!((report.vi_residual + report.complementarity).abs() < 1e-12);
        assert!(report.min_phi >= 0.0);
        assert!(!report.passed);
    }

    #[test]
    fn rejects_long_horizons_and_non_vertices() {
        let sc = toy(50.0, 13);
        let gp = GroupProfile::uniform(&sc, &[0.4; 13]);
        assert!(matches!(
            FullProfile::from_groups(&gp, &sc),
            Err(EquilibriumError::TooManySteps { .. })
        ));
        let sc = toy(50.0, 2);
        let gp = GroupProfile::uniform(&sc, &[0.4, 0.5]);
        assert!(matches!(
            FullProfile::from_groups(&gp, &sc),
            Err(EquilibriumError::NotVertex { .. })
        ));
    }
}
