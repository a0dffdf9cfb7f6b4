//! Scenarios and random instances shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use sirgame::model::ActionBounds;
use sirgame::{AggregatePath, PlayerType, Scenario, ScenarioParams};

pub const BOUNDS: ActionBounds = ActionBounds {
    u_min: 0.4,
    u_max: 0.75,
};

/// Single-type 13-week scenario (time in days, weekly decisions).
pub fn symmetric() -> Scenario {
    Scenario::from_toml_str(include_str!("../../../../scenarios/symmetric.toml"))
        .expect("bundled scenario is valid")
}

/// [`symmetric`] with the infection disutility set so that `b = S0 G / s`.
pub fn symmetric_with_b(b: f64) -> Scenario {
    let base = symmetric();
    let mut t = base.types()[0].clone();
    t.g = b * t.s / t.s0;
    Scenario::new(base.params(), vec![t]).expect("valid scenario")
}

pub fn six_types_quarter() -> Scenario {
    Scenario::from_toml_str(include_str!("../../../../scenarios/six_types_quarter.toml"))
        .expect("bundled scenario is valid")
}

pub fn six_types_year() -> Scenario {
    Scenario::from_toml_str(include_str!("../../../../scenarios/six_types_year.toml"))
        .expect("bundled scenario is valid")
}

/// Single-type toy with `steps` unit-length intervals and `b = 50`.
pub fn toy(steps: usize) -> Scenario {
    toy_with_b(steps, 50.0)
}

pub fn toy_with_b(steps: usize, b: f64) -> Scenario {
    let s0 = 0.95;
    Scenario::new(
        ScenarioParams {
            r: 1.0,
            kappa: 1.0,
            u_min: BOUNDS.u_min,
            u_max: BOUNDS.u_max,
            steps,
            step_length: 1.0,
            substeps: 64,
        },
        vec![PlayerType {
            mass: 1.0,
            s0,
            i0: 0.05,
            alpha: 0.5,
            g: b / s0,
            s: 1.0,
        }],
    )
    .expect("valid toy scenario")
}

/// Two-type toy used where heterogeneity matters.
pub fn two_type_toy(steps: usize) -> Scenario {
    let base = toy(steps);
    let t = base.types()[0].clone();
    let mut a = t.clone();
    let mut b = t;
    a.mass = 0.4;
    a.g = 20.0 / a.s0;
    b.mass = 0.6;
    b.g = 80.0 / b.s0;
    Scenario::new(base.params(), vec![a, b]).expect("valid toy scenario")
}

/// Aggregates with `u_bar_k` in `[0.5, 5]` and `If_k` in `[0.01, 0.5]`.
pub fn random_aggregates(rng: &mut impl Rng, steps: usize) -> AggregatePath {
    AggregatePath::new(
        (0..steps).map(|_| rng.gen_range(0.5..5.0)).collect(),
        (0..steps).map(|_| rng.gen_range(0.01..0.5)).collect(),
    )
}

pub fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * a.abs().max(b.abs())
}
