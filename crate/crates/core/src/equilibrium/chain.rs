//! Reduced representation of a population profile by per-step fractions.
//!
//! Players are laid on `[0, 1)` in ascending-b order and player `i` plays
//! `u_max` at step `k` iff `i < rho_k`. Sorting the fractions gives nested
//! sets of socializing players, so only N+1 chain actions ever carry mass.

use std::cmp::Ordering;

use crate::dynamics::{Group, GroupProfile};
use crate::model::{ActionBounds, Scenario};

use super::EquilibriumError;

/// Fractions `rho` with their chain actions and induced groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainProfile {
    pub rho: Vec<f64>,
    /// Step indices `k_1, ..., k_N` sorting `rho` ascending (stable).
    pub order: Vec<usize>,
    /// Chain actions `v^1 >= v^2 >= ... >= v^{N+1}`; `actions[n - 1]` is `v^n`.
    pub actions: Vec<Vec<f64>>,
    /// Positive-mass (type, chain action) groups.
    pub groups: GroupProfile,
    /// 1-based chain index `n` of every entry of `groups`.
    pub chain_index: Vec<usize>,
}

impl ChainProfile {
    pub fn new(rho: &[f64], sc: &Scenario) -> Result<Self, EquilibriumError> {
        check_rho(rho, sc.steps())?;
        let order = sort_order(rho);
        let actions = chain_actions_sorted(rho, &order, &sc.bounds());
        let (groups, chain_index) = groups_from_order(rho, &order, &actions, sc);
        Ok(Self {
            rho: rho.to_vec(),
            order,
            actions,
            groups,
            chain_index,
        })
    }
}

pub(crate) fn check_rho(rho: &[f64], steps: usize) -> Result<(), EquilibriumError> {
    if rho.len() != steps {
        return Err(EquilibriumError::RhoLength {
            len: rho.len(),
            steps,
        });
    }
    if let Some((index, &value)) = rho
        .iter()
        .enumerate()
        .find(|(_, &x)| !(0.0..=1.0).contains(&x))
    {
        return Err(EquilibriumError::RhoRange { index, value });
    }
    Ok(())
}

fn sort_order(rho: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[a].partial_cmp(&rho[b]).unwrap_or(Ordering::Equal));
    order
}

fn chain_actions_sorted(rho: &[f64], order: &[usize], bounds: &ActionBounds) -> Vec<Vec<f64>> {
    let mut actions: Vec<Vec<f64>> = order
        .iter()
        .map(|&kn| {
            let level = rho[kn];
            rho.iter()
                .map(|&x| {
                    if x >= level {
                        bounds.u_max
                    } else {
                        bounds.u_min
                    }
                })
                .collect()
        })
        .collect();
    actions.push(vec![bounds.u_min; rho.len()]);
    actions
}

/// The N+1 chain actions induced by `rho`, most social first.
pub fn chain_actions(rho: &[f64], bounds: &ActionBounds) -> Vec<Vec<f64>> {
    chain_actions_sorted(rho, &sort_order(rho), bounds)
}

/// Mass of every (type, chain action) pair: the overlap of the type's player
/// interval with `[rho_{k_{n-1}}, rho_{k_n})`, with `rho_{k_0} = 0` and
/// `rho_{k_{N+1}} = 1`.
pub fn rho_to_pi(rho: &[f64], sc: &Scenario) -> Result<GroupProfile, EquilibriumError> {
    Ok(ChainProfile::new(rho, sc)?.groups)
}

fn groups_from_order(
    rho: &[f64],
    order: &[usize],
    actions: &[Vec<f64>],
    sc: &Scenario,
) -> (GroupProfile, Vec<usize>) {
    let mut edges = Vec::with_capacity(order.len() + 2);
    edges.push(0.0);
    edges.extend(order.iter().map(|&k| rho[k]));
    edges.push(1.0);

    let boundaries = sc.boundaries();
    let mut groups = Vec::new();
    let mut chain_index = Vec::new();
    for j in 0..boundaries.len() {
        let (lo, hi) = boundaries.interval(j);
        for n in 1..edges.len() {
            let mass = edges[n].min(hi) - edges[n - 1].max(lo);
            if mass > 0.0 {
                groups.push(Group {
                    type_index: j,
                    action: actions[n - 1].clone(),
                    mass,
                });
                chain_index.push(n);
            }
        }
    }
    (GroupProfile::new(groups), chain_index)
}

/// True when `a <= b` componentwise.
pub fn precedes(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PlayerType, ScenarioParams};

    const M: f64 = 0.75;
    const LO: f64 = 0.4;

    fn scenario(masses: &[f64], steps: usize) -> Scenario {
        let types = masses
            .iter()
            .enumerate()
            .map(|(j, &mass)| PlayerType {
                mass,
                s0: 0.99,
                i0: 0.01,
                alpha: 1.0 / 6.0,
                g: 100.0 * (j + 1) as f64,
                s: 1.0,
            })
            .collect();
        Scenario::new(
            ScenarioParams {
                r: 0.4,
                kappa: 3.0,
                u_min: LO,
                u_max: M,
                steps,
                step_length: 1.0,
                substeps: 8,
            },
            types,
        )
        .unwrap()
    }

    fn actions_from(pattern: &str) -> Vec<f64> {
        pattern
            .chars()
            .map(|c| if c == 'M' { M } else { LO })
            .collect()
    }

    const EXAMPLE_RHO: [f64; 5] = [0.8, 0.45, 0.2, 0.4, 0.55];

    #[test]
    fn example_chain_actions() {
        let bounds = ActionBounds {
            u_min: LO,
            u_max: M,
        };
        let got = chain_actions(&EXAMPLE_RHO, &bounds);
        let want: Vec<_> = ["MMMMM", "MMmMM", "MMmmM", "MmmmM", "Mmmmm", "mmmmm"]
            .iter()
            .map(|p| actions_from(p))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn example_masses() {
        let sc = scenario(&[0.3, 0.3, 0.4], 5);
        let chain = ChainProfile::new(&EXAMPLE_RHO, &sc).unwrap();
        let got: Vec<(usize, usize, f64)> = chain
            .groups
            .groups
            .iter()
            .zip(&chain.chain_index)
            .map(|(g, &n)| (g.type_index, n, g.mass))
            .collect();
        let want = [
            (0, 1, 0.2),
            (0, 2, 0.1),
            (1, 2, 0.1),
            (1, 3, 0.05),
            (1, 4, 0.1),
            (1, 5, 0.05),
            (2, 5, 0.2),
            (2, 6, 0.2),
        ];
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_eq!((g.0, g.1), (w.0, w.1));
            assert!((g.2 - w.2).abs() < 1e-12, "{got:?}");
        }
        let total: f64 = got.iter().map(|g| g.2).sum();
        assert!((total - 1.0).abs() < 1e-12);
        chain.groups.validate(&sc).unwrap();
    }

    #[test]
    fn equal_rho_gives_two_actions() {
        let sc = scenario(&[1.0], 4);
        let chain = ChainProfile::new(&[0.3; 4], &sc).unwrap();
        assert_eq!(chain.groups.len(), 2);
        let masses: Vec<f64> = chain.groups.groups.iter().map(|g| g.mass).collect();
        assert!((masses[0] - 0.3).abs() < 1e-15 && (masses[1] - 0.7).abs() < 1e-15);
        assert_eq!(chain.groups.groups[0].action, vec![M; 4]);
        assert_eq!(chain.groups.groups[1].action, vec![LO; 4]);
    }

    #[test]
    fn increasing_rho_gives_suffix_sets() {
        let bounds = ActionBounds {
            u_min: LO,
            u_max: M,
        };
        let rho = [0.1, 0.2, 0.3, 0.4];
        let acts = chain_actions(&rho, &bounds);
        for (n, a) in acts.iter().enumerate().take(4) {
            let want: Vec<f64> = (0..4).map(|k| if k >= n { M } else { LO }).collect();
            assert_eq!(a, &want);
        }
    }

    #[test]
    fn extreme_rho() {
        let sc = scenario(&[0.4, 0.6], 3);
        let ones = rho_to_pi(&[1.0; 3], &sc).unwrap();
        assert_eq!(ones.len(), 2);
        assert!(ones.groups.iter().all(|g| g.action == vec![M; 3]));
        let zeros = rho_to_pi(&[0.0; 3], &sc).unwrap();
        assert_eq!(zeros.len(), 2);
        assert!(zeros.groups.iter().all(|g| g.action == vec![LO; 3]));
    }

    #[test]
    fn rejects_bad_rho() {
        let sc = scenario(&[1.0], 3);
        assert!(matches!(
            rho_to_pi(&[0.1, 1.2, 0.0], &sc),
            Err(EquilibriumError::RhoRange { index: 1, .. })
        ));
        assert!(matches!(
            rho_to_pi(&[0.1], &sc),
            Err(EquilibriumError::RhoLength { .. })
        ));
    }

    #[test]
    fn tie_order_does_not_change_groups() {
        let sc = scenario(&[0.3, 0.3, 0.4], 5);
        let rho = [0.5, 0.2, 0.5, 0.7, 0.2];
        let bounds = sc.bounds();
        let stable = sort_order(&rho);
        // Reverse the order inside each block of tied values.
        let mut swapped = stable.clone();
        swapped.swap(0, 1);
        swapped.swap(2, 3);
        assert_eq!(rho[swapped[0]], rho[stable[0]]);
        assert_eq!(rho[swapped[2]], rho[stable[2]]);
        let build = |order: &[usize]| {
            let actions = chain_actions_sorted(&rho, order, &bounds);
            groups_from_order(&rho, order, &actions, &sc)
        };
        assert_eq!(build(&stable), build(&swapped));
    }
}
