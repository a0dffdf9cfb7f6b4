//! Subcommand implementations.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sirgame::equilibrium::{verify_ncp, ChainProfile, FullProfile, NCP_MAX_STEPS};
use sirgame::model::ActionBounds;
use sirgame::{
    best_response as respond, simulate as integrate, solve_equilibrium, AggregatePath,
    EquilibriumResult, GroupProfile, Scenario, SearchOptions,
};

use crate::output::{
    action_pattern, num, Manifest, OutputSet, CANDIDATE_HEADER, GROUP_HEADER,
    SWEEP_INFECTED_HEADER, SWEEP_RHO_HEADER,
};
use crate::{GlobalArgs, Outcome};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fractions playing u_max per step, comma-separated (default: all ones).
    #[arg(long, value_delimiter = ',', conflicts_with = "rho_file")]
    pub rho: Option<Vec<f64>>,
    /// CSV with columns `k,rho`, as written by `solve`.
    #[arg(long)]
    pub rho_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BestResponseArgs {
    /// CSV with columns `k,u_bar_k,I_f_k` (extra columns are ignored).
    #[arg(long)]
    pub aggregates: PathBuf,
    /// Scalar `b = S0 G / s` of the responding player.
    #[arg(long)]
    pub b: f64,
    /// Transmission coefficient (default: from --scenario).
    #[arg(long)]
    pub r: Option<f64>,
    /// Minimum action (default: from --scenario).
    #[arg(long)]
    pub u_min: Option<f64>,
    /// Maximum action (default: from --scenario).
    #[arg(long)]
    pub u_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Equilibrium JSON written by `solve`.
    #[arg(long)]
    pub equilibrium: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Maximum actions to solve for.
    #[arg(required = false)]
    pub u_max: Vec<f64>,
}

fn load_scenario(global: &GlobalArgs) -> Result<Scenario> {
    let path = global
        .scenario
        .as_ref()
        .context("--scenario is required for this subcommand")?;
    let sc = Scenario::load(path).with_context(|| format!("scenario {}", path.display()))?;
    match global.substeps {
        Some(n) => Ok(sc.with_substeps(n)?),
        None => Ok(sc),
    }
}

fn search_options(global: &GlobalArgs) -> Result<SearchOptions> {
    ensure!(
        global.tol > 0.0,
        "--tol must be positive, got {}",
        global.tol
    );
    ensure!(global.starts >= 1, "--starts must be at least 1");
    Ok(SearchOptions {
        starts: global.starts,
        tol: global.tol,
        seed: global.seed,
        ..SearchOptions::default()
    })
}

fn type_ids(gp: &GroupProfile) -> Vec<usize> {
    gp.groups.iter().map(|g| g.type_index).collect()
}

#[derive(Debug, Deserialize)]
struct RhoRow {
    k: usize,
    rho: f64,
}

fn read_rho(path: &PathBuf, steps: usize) -> Result<Vec<f64>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rho = vec![f64::NAN; steps];
    for row in reader.deserialize() {
        let row: RhoRow = row.with_context(|| format!("malformed row in {}", path.display()))?;
        ensure!(
            row.k < steps,
            "step {} out of range in {}",
            row.k,
            path.display()
        );
        rho[row.k] = row.rho;
    }
    if let Some(k) = rho.iter().position(|x| x.is_nan()) {
        bail!("{} has no value for step {k}", path.display());
    }
    Ok(rho)
}

fn group_rows(chain: &ChainProfile, bounds: &ActionBounds) -> Vec<Vec<String>> {
    chain
        .groups
        .groups
        .iter()
        .zip(&chain.chain_index)
        .enumerate()
        .map(|(g, (group, n))| {
            vec![
                g.to_string(),
                group.type_index.to_string(),
                n.to_string(),
                num(group.mass),
                action_pattern(&group.action, bounds),
            ]
        })
        .collect()
}

pub fn simulate(global: &GlobalArgs, args: &SimulateArgs) -> Result<Outcome> {
    let sc = load_scenario(global)?;
    let rho = match (&args.rho, &args.rho_file) {
        (Some(rho), _) => rho.clone(),
        (None, Some(path)) => read_rho(path, sc.steps())?,
        (None, None) => vec![1.0; sc.steps()],
    };
    let chain = ChainProfile::new(&rho, &sc)?;
    let tr = integrate(&sc, &chain.groups)?;

    let mut out = OutputSet::create(&global.out_dir)?;
    out.csv(
        "groups.csv",
        &GROUP_HEADER,
        group_rows(&chain, &sc.bounds()),
    )?;
    out.aggregates(&sc, &tr)?;
    out.infected(&tr)?;
    out.trajectories(&tr, &type_ids(&chain.groups))?;
    out.finish(Manifest::new(
        "simulate",
        global,
        Some(&sc),
        json!({ "rho": rho }),
    ))?;
    Ok(Outcome::Success)
}

#[derive(Debug, Deserialize)]
struct AggregateRow {
    k: usize,
    u_bar_k: f64,
    #[serde(rename = "I_f_k")]
    i_f_k: f64,
}

fn read_aggregates(path: &PathBuf) -> Result<AggregatePath> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows: Vec<AggregateRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .with_context(|| format!("malformed row in {}", path.display()))?;
    ensure!(!rows.is_empty(), "{} has no rows", path.display());
    rows.sort_by_key(|r| r.k);
    for (i, row) in rows.iter().enumerate() {
        ensure!(
            row.k == i,
            "{}: steps must be 0..N without gaps",
            path.display()
        );
        ensure!(
            row.u_bar_k > 0.0 && row.i_f_k >= 0.0,
            "{}: step {} needs u_bar_k > 0 and I_f_k >= 0",
            path.display(),
            row.k
        );
    }
    Ok(AggregatePath::new(
        rows.iter().map(|r| r.u_bar_k).collect(),
        rows.iter().map(|r| r.i_f_k).collect(),
    ))
}

pub fn best_response(global: &GlobalArgs, args: &BestResponseArgs) -> Result<Outcome> {
    let scenario = match &global.scenario {
        Some(_) => Some(load_scenario(global)?),
        None => None,
    };
    let pick = |flag: Option<f64>, name: &str, from: fn(&Scenario) -> f64| -> Result<f64> {
        flag.or(scenario.as_ref().map(from))
            .with_context(|| format!("--{name} is required without --scenario"))
    };
    let r = pick(args.r, "r", Scenario::r)?;
    let bounds = ActionBounds {
        u_min: pick(args.u_min, "u-min", Scenario::u_min)?,
        u_max: pick(args.u_max, "u-max", Scenario::u_max)?,
    };
    ensure!(r > 0.0, "--r must be positive, got {r}");
    ensure!(
        0.0 < bounds.u_min && bounds.u_min < bounds.u_max,
        "action bounds must satisfy 0 < u_min < u_max"
    );
    ensure!(args.b >= 0.0, "--b must be non-negative, got {}", args.b);
    let agg = read_aggregates(&args.aggregates)?;
    let br = respond(args.b, &agg, &bounds, r);

    let rows: Vec<Vec<String>> = br
        .candidates
        .iter()
        .map(|c| {
            vec![
                num(c.threshold),
                num(c.cost),
                (c.action == br.action).to_string(),
                action_pattern(&c.action, &bounds),
            ]
        })
        .collect();
    let mut stdout = csv::Writer::from_writer(std::io::stdout());
    stdout.write_record(CANDIDATE_HEADER)?;
    for row in &rows {
        stdout.write_record(row)?;
    }
    stdout.flush()?;

    let mut out = OutputSet::create(&global.out_dir)?;
    out.csv("best_response.csv", &CANDIDATE_HEADER, rows)?;
    let arguments = json!({
        "aggregates": args.aggregates.display().to_string(),
        "b": args.b,
        "r": r,
        "u_min": bounds.u_min,
        "u_max": bounds.u_max,
    });
    out.finish(Manifest::new(
        "best-response",
        global,
        scenario.as_ref(),
        arguments,
    ))?;
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct GroupRecord {
    group_id: usize,
    type_id: usize,
    chain_index: usize,
    mass: f64,
    action: String,
    auxiliary_cost: f64,
    optimum: f64,
    gap: f64,
    realized_cost: f64,
}

#[derive(Debug, Serialize)]
struct StartSummary {
    start: Vec<f64>,
    rho: Vec<f64>,
    h: f64,
    iterations: usize,
    evaluations: usize,
}

#[derive(Debug, Serialize)]
struct EquilibriumFile {
    converged: bool,
    h: f64,
    tol: f64,
    seed: u64,
    rho: Vec<f64>,
    type_b: Vec<f64>,
    type_costs: Vec<f64>,
    mean_cost: f64,
    peak_infected: f64,
    groups: Vec<GroupRecord>,
    best_start: usize,
    starts: Vec<StartSummary>,
}

fn peak(res: &EquilibriumResult) -> f64 {
    res.trajectory
        .total_infected
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

fn equilibrium_file(sc: &Scenario, res: &EquilibriumResult) -> EquilibriumFile {
    let bounds = sc.bounds();
    let groups = res
        .chain
        .groups
        .groups
        .iter()
        .zip(&res.gap.entries)
        .zip(&res.group_costs)
        .enumerate()
        .map(|(g, ((group, entry), &realized))| GroupRecord {
            group_id: g,
            type_id: group.type_index,
            chain_index: entry.chain_index,
            mass: group.mass,
            action: action_pattern(&group.action, &bounds),
            auxiliary_cost: entry.cost,
            optimum: entry.optimum,
            gap: entry.gap,
            realized_cost: realized,
        })
        .collect();
    EquilibriumFile {
        converged: res.converged,
        h: res.h(),
        tol: res.tol,
        seed: res.seed,
        rho: res.rho.clone(),
        type_b: sc.b_values(),
        type_costs: res.type_costs.clone(),
        mean_cost: res.mean_cost(sc),
        peak_infected: peak(res),
        groups,
        best_start: res.best_start,
        starts: res
            .starts
            .iter()
            .map(|s| StartSummary {
                start: s.start.clone(),
                rho: s.rho.clone(),
                h: s.h,
                iterations: s.iterations,
                evaluations: s.evaluations,
            })
            .collect(),
    }
}

pub fn solve(global: &GlobalArgs) -> Result<Outcome> {
    let sc = load_scenario(global)?;
    let opts = search_options(global)?;
    let res = solve_equilibrium(&sc, &opts)?;

    let mut out = OutputSet::create(&global.out_dir)?;
    out.json("equilibrium.json", &equilibrium_file(&sc, &res))?;
    out.rho(&res.rho)?;
    out.infected(&res.trajectory)?;
    out.aggregates(&sc, &res.trajectory)?;
    out.trajectories(&res.trajectory, &type_ids(&res.chain.groups))?;
    out.finish(Manifest::new("solve", global, Some(&sc), json!({})))?;

    eprintln!(
        "H = {:e} ({} tol {:e})",
        res.h(),
        if res.converged { "within" } else { "above" },
        opts.tol
    );
    Ok(if res.converged {
        Outcome::Success
    } else {
        Outcome::ToleranceMiss
    })
}

#[derive(Debug, Deserialize)]
struct SavedEquilibrium {
    rho: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct NcpFile {
    passed: bool,
    tol: f64,
    min_mass: f64,
    min_phi: f64,
    complementarity: f64,
    vi_residual: f64,
    worst_type: usize,
    worst_action: String,
    best_alternative: String,
    optima: Vec<f64>,
}

pub fn verify(global: &GlobalArgs, args: &VerifyArgs) -> Result<Outcome> {
    let sc = load_scenario(global)?;
    ensure!(
        global.tol > 0.0,
        "--tol must be positive, got {}",
        global.tol
    );
    ensure!(
        sc.steps() <= NCP_MAX_STEPS,
        "verify enumerates all 2^N actions and is limited to N <= {NCP_MAX_STEPS}, scenario has N = {}",
        sc.steps()
    );
    let text = std::fs::read_to_string(&args.equilibrium)
        .with_context(|| format!("cannot read {}", args.equilibrium.display()))?;
    let saved: SavedEquilibrium = serde_json::from_str(&text)
        .with_context(|| format!("malformed {}", args.equilibrium.display()))?;
    ensure!(
        saved.rho.len() == sc.steps(),
        "equilibrium has {} steps, scenario has {}",
        saved.rho.len(),
        sc.steps()
    );
    let chain = ChainProfile::new(&saved.rho, &sc)?;
    let pi = FullProfile::from_groups(&chain.groups, &sc)?;
    let report = verify_ncp(&pi, &sc, global.tol)?;
    let bounds = sc.bounds();
    let pattern = |mask: usize| {
        action_pattern(
            &sirgame::best_response::vertex_action(mask as u64, sc.steps(), &bounds),
            &bounds,
        )
    };

    let mut out = OutputSet::create(&global.out_dir)?;
    out.json(
        "ncp.json",
        &NcpFile {
            passed: report.passed,
            tol: report.tol,
            min_mass: report.min_mass,
            min_phi: report.min_phi,
            complementarity: report.complementarity,
            vi_residual: report.vi_residual,
            worst_type: report.worst.type_index,
            worst_action: pattern(report.worst.mask),
            best_alternative: pattern(report.best_alternative.mask),
            optima: report.optima.clone(),
        },
    )?;
    let arguments = json!({ "equilibrium": args.equilibrium.display().to_string() });
    out.finish(Manifest::new("verify", global, Some(&sc), arguments))?;

    eprintln!(
        "NCP {}: pi.Phi = {:e}, min Phi = {:e}, VI residual = {:e}",
        if report.passed { "passed" } else { "failed" },
        report.complementarity,
        report.min_phi,
        report.vi_residual
    );
    Ok(if report.passed {
        Outcome::Success
    } else {
        Outcome::ToleranceMiss
    })
}

pub fn sweep_um(global: &GlobalArgs, args: &SweepArgs) -> Result<Outcome> {
    let sc = load_scenario(global)?;
    let opts = search_options(global)?;
    ensure!(
        !args.u_max.is_empty(),
        "sweep-um needs at least one u_max value"
    );
    for &um in &args.u_max {
        ensure!(
            um > sc.u_min(),
            "u_max = {um} must exceed u_min = {}",
            sc.u_min()
        );
    }

    let types = sc.types().len();
    let mut header = vec![
        "u_max".to_string(),
        "status".into(),
        "h".into(),
        "mean_cost".into(),
    ];
    header.extend((0..types).map(|j| format!("cost_type_{j}")));
    let mut cost_rows = Vec::new();
    let mut rho_rows = Vec::new();
    let mut infected_rows = Vec::new();
    let mut all_converged = true;
    for &um in &args.u_max {
        let point = sc
            .with_u_max(um)
            .map_err(anyhow::Error::from)
            .and_then(|s| Ok((solve_equilibrium(&s, &opts)?, s)));
        match point {
            Ok((res, point_sc)) => {
                all_converged &= res.converged;
                let status = if res.converged {
                    "converged"
                } else {
                    "tolerance_miss"
                };
                let mut row = vec![
                    num(um),
                    status.to_string(),
                    num(res.h()),
                    num(res.mean_cost(&point_sc)),
                ];
                row.extend(res.type_costs.iter().map(|&c| num(c)));
                cost_rows.push(row);
                rho_rows.extend(
                    res.rho
                        .iter()
                        .enumerate()
                        .map(|(k, &x)| vec![num(um), k.to_string(), num(x)]),
                );
                infected_rows.extend(
                    res.trajectory
                        .times
                        .iter()
                        .zip(&res.trajectory.total_infected)
                        .map(|(&t, &i)| vec![num(um), num(t), num(i)]),
                );
            }
            Err(err) => {
                all_converged = false;
                eprintln!("u_max = {um}: {err:#}");
                let mut row = vec![num(um), "error".to_string(), String::new(), String::new()];
                row.extend(std::iter::repeat_n(String::new(), types));
                cost_rows.push(row);
            }
        }
    }

    let mut out = OutputSet::create(&global.out_dir)?;
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("sweep_costs.csv", &header, cost_rows)?;
    out.csv("sweep_rho.csv", &SWEEP_RHO_HEADER, rho_rows)?;
    out.csv("sweep_infected.csv", &SWEEP_INFECTED_HEADER, infected_rows)?;
    out.finish(Manifest::new(
        "sweep-um",
        global,
        Some(&sc),
        json!({ "u_max": args.u_max }),
    ))?;
    Ok(if all_converged {
        Outcome::Success
    } else {
        Outcome::ToleranceMiss
    })
}
