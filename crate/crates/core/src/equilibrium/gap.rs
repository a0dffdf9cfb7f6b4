use crate::best_response::{auxiliary_cost, best_response};
use crate::dynamics::{aggregates, AggregatePath};
use crate::model::Scenario;

use super::chain::ChainProfile;
use super::EquilibriumError;

/// Cost gap of one positive-mass (type, chain action) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GapEntry {
    pub type_index: usize,
    /// 1-based chain index of the action.
    pub chain_index: usize,
    pub mass: f64,
    /// Auxiliary cost of the action.
    pub cost: f64,
    /// Best achievable auxiliary cost for the type.
    pub optimum: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// Mass-weighted sum of gaps; zero exactly at an equilibrium.
    pub h: f64,
    pub entries: Vec<GapEntry>,
    /// Per-type optimum of the auxiliary cost.
    pub optima: Vec<f64>,
    pub aggregates: AggregatePath,
}

/// Gap function at `rho` together with its decomposition.
pub fn evaluate_h(rho: &[f64], sc: &Scenario) -> Result<GapReport, EquilibriumError> {
    let chain = ChainProfile::new(rho, sc)?;
    gap_of_chain(&chain, sc)
}

pub(crate) fn gap_of_chain(
    chain: &ChainProfile,
    sc: &Scenario,
) -> Result<GapReport, EquilibriumError> {
    let agg = aggregates(sc, &chain.groups)?;
    let bounds = sc.bounds();
    let b = sc.b_values();
    let optima: Vec<f64> = b
        .iter()
        .map(|&bj| best_response(bj, &agg, &bounds, sc.r()).cost)
        .collect();

    let entries: Vec<GapEntry> = chain
        .groups
        .groups
        .iter()
        .zip(&chain.chain_index)
        .map(|(g, &n)| {
            let cost = auxiliary_cost(b[g.type_index], &g.action, &agg, sc.r());
            let optimum = optima[g.type_index];
            GapEntry {
                type_index: g.type_index,
                chain_index: n,
                mass: g.mass,
                cost,
                optimum,
                gap: cost - optimum,
            }
        })
        .collect();
    let h = entries.iter().map(|e| e.mass * e.gap).sum();
    Ok(GapReport {
        h,
        entries,
        optima,
        aggregates: agg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PlayerType, ScenarioParams};

    fn single(b: f64, steps: usize) -> Scenario {
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
    fn negligible_risk_all_social_is_equilibrium() {
        let sc = single(1e-9, 3);
        let report = evaluate_h(&[1.0; 3], &sc).unwrap();
        assert!(report.h.abs() <= 1e-9);
        assert_eq!(report.entries.len(), 1);
    }

    #[test]
    fn decomposition_sums_to_h() {
        let sc = single(50.0, 3);
        let report = evaluate_h(&[0.2, 0.9, 0.5], &sc).unwrap();
        let total: f64 = report.entries.iter().map(|e| e.mass * e.gap).sum();
        assert!((total - report.h).abs() <= 1e-12);
        assert!(report.entries.iter().all(|e| e.gap >= -1e-9));
        assert!(report.h >= -1e-9);
    }
}
