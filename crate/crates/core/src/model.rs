//! Game data model: player types, scenarios and the scenario file format.
//!
//! A scenario file is a TOML document:
//!
//! ```toml
//! r = 0.4            # transmission coefficient
//! kappa = 3.0        # outing-desire constant
//! u_min = 0.4
//! u_max = 0.75
//! steps = 13         # number of decision intervals
//! step_length = 7.0  # optional, default 1
//! substeps = 64      # optional, RK4 steps per interval, default 64
//!
//! [[type]]
//! mass = 1.0
//! s0 = 0.99
//! i0 = 0.01
//! alpha = 0.16666666666666666
//! g = 200.0
//! s = 1.0
//! ```
//!
//! Types are re-sorted by ascending `b = s0 * g / s` when the scenario is built.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default duration of a decision interval.
pub const DEFAULT_STEP_LENGTH: f64 = 1.0;
/// Default number of RK4 steps per decision interval.
pub const DEFAULT_SUBSTEPS: usize = 64;

const MASS_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read scenario file")]
    Io(#[from] std::io::Error),
    #[error("failed to parse scenario")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize scenario")]
    Serialize(#[from] toml::ser::Error),
    #[error("scenario has no player types")]
    NoTypes,
    #[error("type masses sum to {0}, expected 1")]
    MassSum(f64),
    #[error("action bounds must satisfy 0 < u_min < u_max <= 1, got u_min={u_min}, u_max={u_max}")]
    ActionBounds { u_min: f64, u_max: f64 },
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: String, value: f64 },
    #[error("type {index}: initial probabilities invalid (s0={s0}, i0={i0})")]
    InitialState { index: usize, s0: f64, i0: f64 },
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("types {first} and {second} share the same b = {b}; merge them into one type")]
    DuplicateB { first: usize, second: usize, b: f64 },
}

/// One class of players sharing initial state, vulnerability and sociability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerType {
    pub mass: f64,
    pub s0: f64,
    pub i0: f64,
    pub alpha: f64,
    pub g: f64,
    pub s: f64,
}

impl PlayerType {
    /// Scalar `S0 * G / s` that fully determines the type's best response.
    pub fn b(&self) -> f64 {
        b_parameter(self)
    }

    fn validate(&self, index: usize) -> Result<(), ModelError> {
        let name = |f: &str| format!("type {index} {f}");
        positive(&name("mass"), self.mass)?;
        positive(&name("alpha"), self.alpha)?;
        positive(&name("g"), self.g)?;
        positive(&name("s"), self.s)?;
        let prob = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !prob(self.s0) || !prob(self.i0) || self.s0 + self.i0 > 1.0 + 1e-15 {
            return Err(ModelError::InitialState {
                index,
                s0: self.s0,
                i0: self.i0,
            });
        }
        Ok(())
    }
}

pub fn b_parameter(t: &PlayerType) -> f64 {
    t.s0 * t.g / t.s
}

fn positive(field: &str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositive {
            field: field.to_string(),
            value,
        })
    }
}

/// Minimum and maximum admissible action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBounds {
    pub u_min: f64,
    pub u_max: f64,
}

/// On-disk representation; validated into a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    r: f64,
    kappa: f64,
    u_min: f64,
    u_max: f64,
    steps: usize,
    #[serde(default = "default_step_length")]
    step_length: f64,
    #[serde(default = "default_substeps")]
    substeps: usize,
    #[serde(rename = "type")]
    types: Vec<PlayerType>,
}

fn default_step_length() -> f64 {
    DEFAULT_STEP_LENGTH
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

/// Validated game parameters. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    r: f64,
    kappa: f64,
    u_min: f64,
    u_max: f64,
    steps: usize,
    step_length: f64,
    substeps: usize,
    types: Vec<PlayerType>,
}

/// Builder-style parameters for [`Scenario::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub r: f64,
    pub kappa: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub steps: usize,
    pub step_length: f64,
    pub substeps: usize,
}

impl Scenario {
    pub fn new(params: ScenarioParams, types: Vec<PlayerType>) -> Result<Self, ModelError> {
        let ScenarioParams {
            r,
            kappa,
            u_min,
            u_max,
            steps,
            step_length,
            substeps,
        } = params;
        positive("r", r)?;
        positive("kappa", kappa)?;
        positive("step_length", step_length)?;
        if !(u_min.is_finite() && u_max.is_finite() && 0.0 < u_min && u_min < u_max && u_max <= 1.0)
        {
            return Err(ModelError::ActionBounds { u_min, u_max });
        }
        if steps == 0 {
            return Err(ModelError::ZeroCount("steps"));
        }
        if substeps == 0 {
            return Err(ModelError::ZeroCount("substeps"));
        }
        if types.is_empty() {
            return Err(ModelError::NoTypes);
        }
        for (i, t) in types.iter().enumerate() {
            t.validate(i)?;
        }
        let total: f64 = types.iter().map(|t| t.mass).sum();
        if (total - 1.0).abs() > MASS_SUM_TOL {
            return Err(ModelError::MassSum(total));
        }

        let mut indexed: Vec<(usize, PlayerType)> = types.into_iter().enumerate().collect();
        indexed.sort_by(|a, b| a.1.b().partial_cmp(&b.1.b()).unwrap_or(Ordering::Equal));
        for pair in indexed.windows(2) {
            if pair[0].1.b() == pair[1].1.b() {
                let (first, second) = if pair[0].0 < pair[1].0 {
                    (pair[0].0, pair[1].0)
                } else {
                    (pair[1].0, pair[0].0)
                };
                return Err(ModelError::DuplicateB {
                    first,
                    second,
                    b: pair[0].1.b(),
                });
            }
        }

        Ok(Self {
            r,
            kappa,
            u_min,
            u_max,
            steps,
            step_length,
            substeps,
            types: indexed.into_iter().map(|(_, t)| t).collect(),
        })
    }

    pub fn from_toml_str(source: &str) -> Result<Self, ModelError> {
        let file: ScenarioFile = toml::from_str(source)?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn from_file(file: ScenarioFile) -> Result<Self, ModelError> {
        Self::new(
            ScenarioParams {
                r: file.r,
                kappa: file.kappa,
                u_min: file.u_min,
                u_max: file.u_max,
                steps: file.steps,
                step_length: file.step_length,
                substeps: file.substeps,
            },
            file.types,
        )
    }

    pub fn to_toml_string(&self) -> Result<String, ModelError> {
        let file = ScenarioFile {
            r: self.r,
            kappa: self.kappa,
            u_min: self.u_min,
            u_max: self.u_max,
            steps: self.steps,
            step_length: self.step_length,
            substeps: self.substeps,
            types: self.types.clone(),
        };
        Ok(toml::to_string(&file)?)
    }

    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            r: self.r,
            kappa: self.kappa,
            u_min: self.u_min,
            u_max: self.u_max,
            steps: self.steps,
            step_length: self.step_length,
            substeps: self.substeps,
        }
    }

    /// Copy of this scenario with a different maximum action.
    pub fn with_u_max(&self, u_max: f64) -> Result<Self, ModelError> {
        Self::new(
            ScenarioParams {
                u_max,
                ..self.params()
            },
            self.types.clone(),
        )
    }

    pub fn with_substeps(&self, substeps: usize) -> Result<Self, ModelError> {
        Self::new(
            ScenarioParams {
                substeps,
                ..self.params()
            },
            self.types.clone(),
        )
    }

    /// Copy restricted to the first `steps` decision intervals.
    pub fn truncated(&self, steps: usize) -> Result<Self, ModelError> {
        Self::new(
            ScenarioParams {
                steps,
                ..self.params()
            },
            self.types.clone(),
        )
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn u_min(&self) -> f64 {
        self.u_min
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn bounds(&self) -> ActionBounds {
        ActionBounds {
            u_min: self.u_min,
            u_max: self.u_max,
        }
    }

    /// Number of decision intervals N.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_length(&self) -> f64 {
        self.step_length
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Time horizon `N * step_length`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.step_length
    }

    /// Decision instant `t_k`.
    pub fn decision_time(&self, k: usize) -> f64 {
        k as f64 * self.step_length
    }

    /// Types in ascending order of `b`.
    pub fn types(&self) -> &[PlayerType] {
        &self.types
    }

    pub fn b_values(&self) -> Vec<f64> {
        self.types.iter().map(PlayerType::b).collect()
    }

    pub fn boundaries(&self) -> TypeBoundaries {
        TypeBoundaries::new(&self.types)
    }
}

/// Cumulative positions of the types on the player interval `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeBoundaries(Vec<f64>);

impl TypeBoundaries {
    fn new(types: &[PlayerType]) -> Self {
        let mut edges = Vec::with_capacity(types.len() + 1);
        let mut acc = 0.0;
        edges.push(acc);
        for t in types {
            acc += t.mass;
            edges.push(acc);
        }
        // The mass sum is within 1e-12 of one; pin the last edge.
        if let Some(last) = edges.last_mut() {
            *last = 1.0;
        }
        Self(edges)
    }

    /// Edges `0 = i_0 < i_1 < ... < i_M = 1`.
    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    /// Half-open player interval `[i_{j}, i_{j+1})` of type `j` (0-based).
    pub fn interval(&self, j: usize) -> (f64, f64) {
        (self.0[j], self.0[j + 1])
    }

    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_type() -> PlayerType {
        PlayerType {
            mass: 1.0,
            s0: 0.99,
            i0: 0.01,
            alpha: 1.0 / 6.0,
            g: 200.0,
            s: 1.0,
        }
    }

    fn params() -> ScenarioParams {
        ScenarioParams {
            r: 0.4,
            kappa: 3.0,
            u_min: 0.4,
            u_max: 0.75,
            steps: 13,
            step_length: 1.0,
            substeps: 64,
        }
    }

    #[test]
    fn single_type_scenario() {
        let sc = Scenario::new(params(), vec![base_type()]).unwrap();
        assert_eq!(sc.steps(), 13);
        assert!((sc.b_values()[0] - 198.0).abs() < 1e-12);
    }

    #[test]
    fn b_parameter_examples() {
        assert!((b_parameter(&base_type()) - 198.0).abs() < 1e-12);
        let zero = PlayerType {
            s0: 0.0,
            i0: 0.0,
            ..base_type()
        };
        assert_eq!(b_parameter(&zero), 0.0);
        let vulnerable = PlayerType {
            s0: 1.0,
            i0: 0.0,
            g: 3200.0,
            ..base_type()
        };
        assert_eq!(b_parameter(&vulnerable), 3200.0);
    }

    #[test]
    fn rejects_bad_mass_sum() {
        let a = PlayerType {
            mass: 0.6,
            ..base_type()
        };
        let b = PlayerType {
            mass: 0.5,
            g: 400.0,
            ..base_type()
        };
        assert!(matches!(
            Scenario::new(params(), vec![a, b]),
            Err(ModelError::MassSum(_))
        ));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let p = ScenarioParams {
            u_min: 0.8,
            u_max: 0.75,
            ..params()
        };
        assert!(matches!(
            Scenario::new(p, vec![base_type()]),
            Err(ModelError::ActionBounds { .. })
        ));
    }

    #[test]
    fn rejects_non_positive_rates() {
        let p = ScenarioParams { r: 0.0, ..params() };
        assert!(matches!(
            Scenario::new(p, vec![base_type()]),
            Err(ModelError::NonPositive { .. })
        ));
        let t = PlayerType {
            alpha: -1.0,
            ..base_type()
        };
        assert!(matches!(
            Scenario::new(params(), vec![t]),
            Err(ModelError::NonPositive { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_b_with_pair() {
        let a = PlayerType {
            mass: 0.5,
            ..base_type()
        };
        let b = PlayerType {
            mass: 0.25,
            g: 400.0,
            s: 2.0,
            ..base_type()
        };
        let c = PlayerType {
            mass: 0.25,
            g: 50.0,
            ..base_type()
        };
        match Scenario::new(params(), vec![a, c, b]) {
            Err(ModelError::DuplicateB { first, second, .. }) => {
                assert_eq!((first, second), (0, 2));
            }
            other => panic!("expected duplicate b error, got {other:?}"),
        }
    }

    #[test]
    fn sorts_types_by_b() {
        let hi = PlayerType {
            mass: 0.3,
            g: 800.0,
            ..base_type()
        };
        let lo = PlayerType {
            mass: 0.7,
            g: 100.0,
            ..base_type()
        };
        let sc = Scenario::new(params(), vec![hi.clone(), lo.clone()]).unwrap();
        assert_eq!(sc.types(), &[lo, hi]);
        let edges = sc.boundaries();
        assert_eq!(edges.edges(), &[0.0, 0.7, 1.0]);
    }

    #[test]
    fn parses_toml_with_defaults() {
        let src = r#"
            r = 0.4
            kappa = 3.0
            u_min = 0.4
            u_max = 0.75
            steps = 13

            [[type]]
            mass = 1.0
            s0 = 0.99
            i0 = 0.01
            alpha = 0.16666666666666666
            g = 200.0
            s = 1.0
        "#;
        let sc = Scenario::from_toml_str(src).unwrap();
        assert_eq!(sc.step_length(), DEFAULT_STEP_LENGTH);
        assert_eq!(sc.substeps(), DEFAULT_SUBSTEPS);
        assert!((sc.b_values()[0] - 198.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unparseable_and_unknown_keys() {
        assert!(matches!(
            Scenario::from_toml_str("r = ["),
            Err(ModelError::Parse(_))
        ));
        let src = "r = 1\nkappa = 1\nu_min = 0.4\nu_max = 0.75\nsteps = 2\nbogus = 3\n\
                   [[type]]\nmass = 1\ns0 = 1\ni0 = 0\nalpha = 1\ng = 1\ns = 1\n";
        assert!(matches!(
            Scenario::from_toml_str(src),
            Err(ModelError::Parse(_))
        ));
    }

    #[test]
    fn boundaries_match_masses() {
        let types: Vec<_> = [0.5, 0.1, 0.1, 0.1, 0.1, 0.1]
            .iter()
            .zip([100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0])
            .map(|(&mass, g)| PlayerType {
                mass,
                g,
                ..base_type()
            })
            .collect();
        let sc = Scenario::new(params(), types).unwrap();
        let edges = sc.boundaries();
        assert_eq!(edges.len(), 6);
        for (j, t) in sc.types().iter().enumerate() {
            let (lo, hi) = edges.interval(j);
            assert!((hi - lo - t.mass).abs() < 1e-15);
        }
        assert_eq!(*edges.edges().last().unwrap(), 1.0);
    }
}
