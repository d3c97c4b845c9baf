//! Command-line driver: configuration, verification suites and tables.

mod config;
mod output;
mod suites;

pub use config::{ExperimentConfig, Format, ToySpace};
pub use output::{fmt_sig, Cell, Table};
pub use suites::{run_all, run_suites, Check, Suite};

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::bunce_deddens::{BdTower, NormTermConvention};
use crate::error::Result;
use crate::ou_core::{
    finite_space, kantorovich, kantorovich_exact_finite, stage_space, state_net, DeskQMSpace, FiniteMetric, Structure,
};
use crate::tunnels::{baire_lipschitz_check, distq_chain_bound};

#[derive(Debug, Parser)]
#[command(name = "bdqm", version, about = "Quantum metric experiments on Bunce-Deddens stages")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_stage: Option<usize>,
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run every invariant suite; exit 1 if any check fails.
    Verify,
    /// Stage constants and chained bounds, one row per stage.
    StageTable,
    /// Baire-space Lipschitz experiment for the configured pairs.
    Baire,
    /// Monge-Kantorovich distances on the configured toy space.
    Kantorovich,
}

/// Exit status for a command-line run.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.max_stage {
        cfg.max_stage = m;
    }
    if let Some(c) = cli.cutoff {
        cfg.cutoff = c;
    }
    if let Some(f) = cli.format {
        cfg.format = Some(f);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command and maps the outcome to an exit status. Diagnostics go
/// to stderr.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bdqm: {}", e);
            return exit::CONFIG;
        }
    };
    match execute(cli.command, &cfg) {
        Ok((text, passed)) => match write_output(&cfg, &text) {
            Ok(()) if passed => exit::PASS,
            Ok(()) => exit::FAILURE,
            Err(e) => {
                eprintln!("bdqm: {}", e);
                exit::CONFIG
            }
        },
        Err(e) => {
            eprintln!("bdqm: {}", e);
            exit::FAILURE
        }
    }
}

fn write_output(cfg: &ExperimentConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Output text and whether every check passed.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<(String, bool)> {
    match command {
        Command::Verify => verify(cfg),
        Command::StageTable => Ok((render(cfg, Format::Csv, "stage_table", &stage_table(cfg)?)?, true)),
        Command::Baire => {
            let (table, passed) = baire_table(cfg)?;
            Ok((render(cfg, Format::Csv, "baire", &table)?, passed))
        }
        Command::Kantorovich => {
            let (table, passed) = kantorovich_table(cfg)?;
            Ok((render(cfg, Format::Csv, "kantorovich", &table)?, passed))
        }
    }
}

fn config_value(cfg: &ExperimentConfig) -> Result<Value> {
    Ok(serde_json::to_value(cfg)?)
}

/// Readings of the constants that the numbers depend on.
fn conventions(cfg: &ExperimentConfig) -> Value {
    let coefficient = match cfg.norm_term {
        NormTermConvention::Corrected => "2^m * |a - E(a)|",
        NormTermConvention::Literal => "2^-m * |a - E(a)|",
    };
    let unitary = if cfg.uncorrected_unitary_bound {
        "sqrt((2m^2+3m+1)/(6m))"
    } else {
        "2pi * sqrt((2m^2+3m+1)/(6m))"
    };
    json!({
        "norm_term": coefficient,
        "unitary_lipschitz_bound": unitary,
        "k_m": "max(1, (1 + 2 l(U_{m-1})) / sigma_m)",
        "baire_indexing": "entries indexed from 1; d = 2^-f at the first differing index f",
    })
}

fn render(cfg: &ExperimentConfig, default: Format, name: &str, table: &Table) -> Result<String> {
    Ok(match cfg.format.unwrap_or(default) {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let v = json!({
                "command": name,
                "config": config_value(cfg)?,
                "conventions": conventions(cfg),
                "rows": table.to_json_rows(),
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
    })
}

fn verify(cfg: &ExperimentConfig) -> Result<(String, bool)> {
    let checks = run_all(cfg)?;
    let passed = checks.iter().all(|c| c.passed);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let v = json!({
                "command": "verify",
                "config": config_value(cfg)?,
                "conventions": conventions(cfg),
                "passed": passed,
                "failed": checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect::<Vec<_>>(),
                "checks": checks,
            });
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => {
            let mut t = Table::new(vec!["name", "passed", "value", "bound", "slack", "error"]);
            for c in &checks {
                t.push(vec![
                    c.name.as_str().into(),
                    c.passed.into(),
                    c.value.into(),
                    c.bound.into(),
                    c.slack.into(),
                    c.error.clone().into(),
                ]);
            }
            t.to_csv()
        }
    };
    Ok((text, passed))
}

pub fn stage_table(cfg: &ExperimentConfig) -> Result<Table> {
    let tower = BdTower::new(cfg.sigma.prefix(cfg.max_stage)?, cfg.grid, cfg.norm_term)?;
    let mut t = Table::new(vec![
        "m",
        "boxtimes_sigma_m",
        "lip_u_prev",
        "k_m",
        "kappa_m",
        "beta_m",
        "consecutive_bound",
        "tail_bound",
    ]);
    for m in 0..=cfg.max_stage {
        let c = tower.stage_constants(m)?;
        t.push(vec![
            m.into(),
            tower.boxtimes(m)?.into(),
            c.lip_u_prev.into(),
            c.k.into(),
            c.kappa.into(),
            c.beta.into(),
            (4.0 * c.beta).into(),
            distq_chain_bound(tower.sigma(), m, m)?.tail.constant.into(),
        ]);
    }
    Ok(t)
}

pub fn baire_table(cfg: &ExperimentConfig) -> Result<(Table, bool)> {
    let mut t = Table::new(vec![
        "x",
        "y",
        "first_difference",
        "d_N",
        "chain_bound",
        "lipschitz_bound",
        "ratio",
        "prefix_bound",
        "prefix_equal",
        "evaluator_discrepancy",
        "passed",
    ]);
    let mut all = true;
    for (x, y) in &cfg.baire_pairs {
        let depth = x.len().max(y.len());
        let r = baire_lipschitz_check(x, y, depth, 2, cfg.seed)?;
        all &= r.passed;
        t.push(vec![
            r.x.clone().into(),
            r.y.clone().into(),
            r.distance.first_difference.into(),
            r.distance.value.into(),
            r.chain_bound.into(),
            r.lipschitz_bound.into(),
            r.ratio.into(),
            r.prefix_bound.into(),
            r.distance.prefix_equal.into(),
            r.max_evaluator_discrepancy.into(),
            r.passed.into(),
        ]);
    }
    Ok((t, all))
}

fn toy_space(cfg: &ExperimentConfig) -> Result<DeskQMSpace> {
    match &cfg.toy {
        ToySpace::Line { points } => Ok(finite_space(FiniteMetric::from_line(points)?)),
        ToySpace::Metric { distances } => Ok(finite_space(FiniteMetric::new(distances.clone())?)),
        ToySpace::Stage { stage, lip } => {
            let tower = Arc::new(BdTower::new(cfg.sigma.prefix(cfg.max_stage)?, cfg.grid, cfg.norm_term)?);
            stage_space(tower, *stage, cfg.cutoff, *lip)
        }
    }
}

/// All pairs `i ≤ j` of the toy's state net. Finite spaces get the exact
/// transport value alongside; stage spaces get a radius check on rows
/// against the reference state.
pub fn kantorovich_table(cfg: &ExperimentConfig) -> Result<(Table, bool)> {
    let space = toy_space(cfg)?;
    let net = state_net(&space, &cfg.net);
    let metric = match space.structure().as_ref() {
        Structure::Finite(d) => Some(d.clone()),
        _ => None,
    };
    let reference = space.reference_state();
    let mut t = Table::new(vec!["phi", "psi", "engine", "oracle", "abs_error", "spread", "radius_ok", "status"]);
    let mut all = true;
    for i in 0..net.len() {
        for j in i..net.len() {
            let (phi, psi) = (&net[i], &net[j]);
            let row = kantorovich(&space, phi, psi, &cfg.kantorovich).and_then(|k| {
                let oracle = match &metric {
                    Some(d) => Some(kantorovich_exact_finite(d, &phi.weights, &psi.weights)?),
                    None => None,
                };
                Ok((k, oracle))
            });
            match row {
                Ok((k, oracle)) => {
                    let err = oracle.map(|o| (k.value - o).abs());
                    let radius_ok = match space.radius() {
                        Some(r) if phi.label == reference.label || psi.label == reference.label => Some(k.value <= r + 1e-6),
                        _ => None,
                    };
                    let ok = err.is_none_or(|e| e <= 1e-3 * oracle.unwrap_or(0.0).max(1.0)) && radius_ok != Some(false);
                    all &= ok;
                    t.push(vec![
                        phi.label.as_str().into(),
                        psi.label.as_str().into(),
                        k.value.into(),
                        oracle.into(),
                        err.into(),
                        k.spread.into(),
                        radius_ok.into(),
                        if ok { "ok" } else { "mismatch" }.into(),
                    ]);
                }
                Err(e) => {
                    all = false;
                    t.push(vec![
                        phi.label.as_str().into(),
                        psi.label.as_str().into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        format!("error: {}", e).into(),
                    ]);
                }
            }
        }
    }
    Ok((t, all))
}

