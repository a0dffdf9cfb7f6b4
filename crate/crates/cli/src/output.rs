//! Output files and the run manifest.
//!
//! Numbers are written in Rust's shortest round-trip form, so re-running a
//! manifest reproduces every file byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sirgame::model::ActionBounds;
use sirgame::{PlayerType, Scenario, TrajectoryBundle};

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "group_id", "type_id", "S", "I"];
pub const AGGREGATE_HEADER: [&str; 4] = ["k", "u_bar_k", "I_f_k", "total_infected_at_t_k"];
pub const RHO_HEADER: [&str; 2] = ["k", "rho"];
pub const INFECTED_HEADER: [&str; 2] = ["t", "total_infected"];
pub const GROUP_HEADER: [&str; 5] = ["group_id", "type_id", "chain_index", "mass", "action"];
pub const CANDIDATE_HEADER: [&str; 4] = ["threshold", "cost", "optimal", "action"];
pub const SWEEP_RHO_HEADER: [&str; 3] = ["u_max", "k", "rho"];
pub const SWEEP_INFECTED_HEADER: [&str; 3] = ["u_max", "t", "total_infected"];

/// Compact, lossless rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `M` where the action is at `u_max`, `m` where it is at `u_min`, `?`
/// elsewhere.
pub fn action_pattern(action: &[f64], bounds: &ActionBounds) -> String {
    action
        .iter()
        .map(|&v| {
            if v == bounds.u_max {
                'M'
            } else if v == bounds.u_min {
                'm'
            } else {
                '?'
            }
        })
        .collect()
}

/// Files written by one run, in creation order.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot write {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }

    /// Writes the manifest last; it lists every other file of the set.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<()> {
        manifest.outputs = self.files.clone();
        manifest.outputs.push(MANIFEST.to_string());
        self.json(MANIFEST, &manifest)
    }

    pub fn trajectories(&mut self, tr: &TrajectoryBundle, type_ids: &[usize]) -> Result<()> {
        let rows = tr
            .susceptible
            .iter()
            .zip(&tr.infected)
            .enumerate()
            .flat_map(|(g, (s, i))| {
                let type_id = type_ids[g];
                tr.times
                    .iter()
                    .zip(s.iter().zip(i))
                    .map(move |(&t, (&sv, &iv))| {
                        vec![num(t), g.to_string(), type_id.to_string(), num(sv), num(iv)]
                    })
            });
        self.csv("trajectories.csv", &TRAJECTORY_HEADER, rows)
    }

    pub fn aggregates(&mut self, sc: &Scenario, tr: &TrajectoryBundle) -> Result<()> {
        let agg = &tr.aggregates;
        let rows = (0..sc.steps()).map(|k| {
            vec![
                k.to_string(),
                num(agg.u_bar[k]),
                num(agg.infected_public[k]),
                num(tr.total_infected[tr.sample_index(sc, k)]),
            ]
        });
        self.csv("aggregates.csv", &AGGREGATE_HEADER, rows)
    }

    pub fn infected(&mut self, tr: &TrajectoryBundle) -> Result<()> {
        let rows = tr
            .times
            .iter()
            .zip(&tr.total_infected)
            .map(|(&t, &i)| vec![num(t), num(i)]);
        self.csv("infected.csv", &INFECTED_HEADER, rows)
    }

    pub fn rho(&mut self, rho: &[f64]) -> Result<()> {
        let rows = rho
            .iter()
            .enumerate()
            .map(|(k, &x)| vec![k.to_string(), num(x)]);
        self.csv("rho.csv", &RHO_HEADER, rows)
    }
}

pub const MANIFEST: &str = "manifest.json";

/// Resolved scenario as recorded in the manifest (types in ascending-b order).
#[derive(Debug, Serialize)]
pub struct ScenarioRecord {
    pub r: f64,
    pub kappa: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub steps: usize,
    pub step_length: f64,
    pub substeps: usize,
    pub types: Vec<PlayerType>,
    pub b: Vec<f64>,
}

impl From<&Scenario> for ScenarioRecord {
    fn from(sc: &Scenario) -> Self {
        let p = sc.params();
        Self {
            r: p.r,
            kappa: p.kappa,
            u_min: p.u_min,
            u_max: p.u_max,
            steps: p.steps,
            step_length: p.step_length,
            substeps: p.substeps,
            types: sc.types().to_vec(),
            b: sc.b_values(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub scenario_path: Option<String>,
    pub scenario: Option<ScenarioRecord>,
    pub seed: u64,
    pub tol: f64,
    pub starts: usize,
    pub substeps: Option<usize>,
    /// Subcommand-specific arguments.
    pub arguments: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(
        subcommand: &'static str,
        global: &crate::GlobalArgs,
        scenario: Option<&Scenario>,
        arguments: serde_json::Value,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            scenario_path: global.scenario.as_ref().map(|p| p.display().to_string()),
            scenario: scenario.map(ScenarioRecord::from),
            seed: global.seed,
            tol: global.tol,
            starts: global.starts,
            substeps: global.substeps,
            arguments,
            outputs: Vec::new(),
        }
    }
}
