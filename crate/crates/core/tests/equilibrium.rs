mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use sirgame::equilibrium::{
    chain_actions, precedes, rho_to_pi, verify_ncp, ChainProfile, FullProfile,
};
use sirgame::{evaluate_h, solve_equilibrium, PlayerType, Scenario, ScenarioParams, SearchOptions};

fn rho(steps: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(0.0..=1.0f64, steps)
}

/// Smallest distance between two coordinates of `x` or between a coordinate
/// and a type boundary.
fn separation(x: &[f64], sc: &Scenario) -> f64 {
    let mut points: Vec<f64> = x.to_vec();
    points.extend_from_slice(sc.boundaries().edges());
    points.sort_by(f64::total_cmp);
    points
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn ncp_report(rho: &[f64], sc: &Scenario, tol: f64) -> sirgame::equilibrium::NcpReport {
    let pi = FullProfile::from_groups(&rho_to_pi(rho, sc).unwrap(), sc).unwrap();
    verify_ncp(&pi, sc, tol).unwrap()
}

/// Single type, one unit interval; `b = 30` gives an interior equilibrium.
fn one_step_toy() -> Scenario {
    Scenario::new(
        ScenarioParams {
            r: 1.0,
            kappa: 1.0,
            u_min: 0.4,
            u_max: 0.75,
            steps: 1,
            step_length: 1.0,
            substeps: 64,
        },
        vec![PlayerType {
            mass: 1.0,
            s0: 0.9,
            i0: 0.1,
            alpha: 0.5,
            g: 30.0 / 0.9,
            s: 1.0,
        }],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gap_is_nonnegative(x in rho(13)) {
        let sc = common::six_types_quarter();
        let report = evaluate_h(&x, &sc).unwrap();
        prop_assert!(report.h >= -1e-9);
        prop_assert!(report.entries.iter().all(|e| e.gap >= -1e-9));
        let sum: f64 = report.entries.iter().map(|e| e.mass * e.gap).sum();
        prop_assert!((sum - report.h).abs() <= 1e-12 * report.h.abs().max(1.0));
    }

    #[test]
    fn reduced_gap_equals_full_complementarity(x in rho(3)) {
        for sc in [common::toy(3), common::two_type_toy(3)] {
            let h = evaluate_h(&x, &sc).unwrap().h;
            let full = ncp_report(&x, &sc, 1e-6).complementarity;
            prop_assert!((h - full).abs() <= 1e-10, "{h} vs {full}");
        }
    }

    #[test]
    fn chain_profiles_are_nested_and_conserve_mass(x in rho(13)) {
        let sc = common::six_types_quarter();
        let chain = ChainProfile::new(&x, &sc).unwrap();
        prop_assert_eq!(chain.actions.len(), x.len() + 1);
        prop_assert!(chain.actions.windows(2).all(|w| precedes(&w[1], &w[0])));
        prop_assert_eq!(&chain.actions, &chain_actions(&x, &sc.bounds()));
        prop_assert!(chain.groups.groups.len() <= sc.types().len() + x.len() + 1);
        let mut per_type = vec![0.0; sc.types().len()];
        for g in &chain.groups.groups {
            prop_assert!(g.mass > 0.0 && g.mass <= 1.0);
            per_type[g.type_index] += g.mass;
        }
        for (m, t) in per_type.iter().zip(sc.types()) {
            prop_assert!((m - t.mass).abs() <= 1e-12);
        }
        // Fractions are recovered from the groups.
        for (k, &xk) in x.iter().enumerate() {
            let playing: f64 = chain
                .groups
                .groups
                .iter()
                .filter(|g| g.action[k] == sc.u_max())
                .map(|g| g.mass)
                .sum();
            prop_assert!((playing - xk).abs() <= 1e-12);
        }
    }

    #[test]
    fn gap_is_continuous_off_ties(x in rho(13), dir in vec(-1.0..1.0f64, 13)) {
        let sc = common::six_types_quarter();
        prop_assume!(separation(&x, &sc) > 1e-4);
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let y: Vec<f64> = x
            .iter()
            .zip(&dir)
            .map(|(a, d)| (a + 1e-6 * d / norm).clamp(0.0, 1.0))
            .collect();
        let (hx, hy) = (evaluate_h(&x, &sc).unwrap().h, evaluate_h(&y, &sc).unwrap().h);
        // Costs are at most a few thousand, so 1e4 bounds the slope.
        prop_assert!((hx - hy).abs() <= 1e4 * 1e-6, "{hx} vs {hy}");
    }
}

#[test]
fn one_step_equilibrium_matches_grid_search() {
    let sc = one_step_toy();
    let res = solve_equilibrium(
        &sc,
        &SearchOptions {
            tol: 1e-12,
            ..SearchOptions::default()
        },
    )
    .unwrap();
    assert!(res.converged, "H = {}", res.h());
    let grid = 10_000;
    let (best, _) = (0..=grid)
        .map(|i| {
            let x = i as f64 / grid as f64;
            (x, evaluate_h(&[x], &sc).unwrap().h)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!(
        best > 0.01 && best < 0.99,
        "equilibrium should mix, grid gives {best}"
    );
    assert!(
        (res.rho[0] - best).abs() <= 1.0 / grid as f64,
        "{} vs {best}",
        res.rho[0]
    );
}

#[test]
fn small_equilibria_pass_the_full_check() {
    let cases = [
        (common::toy(3), 1e-8),
        (common::toy_with_b(4, 120.0), 1e-6),
        (common::two_type_toy(5), 1e-6),
        (common::symmetric_with_b(350.0).truncated(10).unwrap(), 1e-6),
    ];
    for (sc, tol) in cases {
        let res = solve_equilibrium(&sc, &SearchOptions::default()).unwrap();
        assert!(res.converged, "H = {}", res.h());
        let report = ncp_report(&res.rho, &sc, tol);
        assert!(report.passed, "{report:?}");
        for e in &res.gap.entries {
            assert!(e.gap <= 1e-6, "{e:?}");
        }
    }
}

#[test]
fn solve_is_deterministic_across_thread_counts() {
    let sc = common::two_type_toy(6);
    let opts = SearchOptions {
        starts: 6,
        seed: 11,
        ..SearchOptions::default()
    };
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| solve_equilibrium(&sc, &opts).unwrap());
    let parallel = solve_equilibrium(&sc, &opts).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(parallel.seed, 11);
    assert_eq!(parallel.starts.len(), 6);
}

#[test]
fn negligible_risk_means_no_distancing() {
    let sc = common::symmetric_with_b(1e-9);
    let res = solve_equilibrium(&sc, &SearchOptions::default()).unwrap();
    assert!(res.h() <= 1e-9);
    assert!(res.rho.iter().all(|&x| x >= 0.99));
}

#[test]
fn failing_tolerance_is_reported() {
    let sc = common::two_type_toy(5);
    let res = solve_equilibrium(
        &sc,
        &SearchOptions {
            starts: 1,
            tol: 1e-300,
            max_iters: 3,
            ..SearchOptions::default()
        },
    )
    .unwrap();
    assert_eq!(res.converged, res.h() <= 1e-300);
    assert!(solve_equilibrium(
        &sc,
        &SearchOptions {
            tol: 0.0,
            ..SearchOptions::default()
        }
    )
    .is_err());
    assert!(solve_equilibrium(
        &sc,
        &SearchOptions {
            starts: 0,
            ..SearchOptions::default()
        }
    )
    .is_err());
}
