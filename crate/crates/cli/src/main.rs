//! Command-line driver: run evolutions, verify trajectory directories,
//! sweep viscosity parameters with arc-length rescaling, and audit the
//! incremental solver against the homogeneous brute-force oracle.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 check failure.

use clap::{Parser, Subcommand};
use gdplast_core::config::RunConfig;
use gdplast_core::diagnostics;
use gdplast_core::error::Error;
use gdplast_core::evolution::{self, run_evolution, Trajectory};
use gdplast_core::io;
use gdplast_core::rescale::{arclength_parametrize, check_bv_conditions, eps_limit_compare};
use gdplast_core::state::State;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gdplast", about = "Quasistatic gradient-damage / strain-gradient-plasticity solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one evolution (energetic or viscous per the config) and write the
    /// trajectory files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a trajectory directory; nonzero exit iff any check fails.
    Check {
        /// Trajectory directory written by `run`.
        dir: PathBuf,
    },
    /// Run the viscous sweep, rescale each trajectory by arc length, check
    /// the Balanced Viscosity conditions and compare across ε.
    SweepEps {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rescale an existing trajectory directory and emit the report.
    Rescale { dir: PathBuf },
    /// Compare the incremental solver against the brute-force oracle on one
    /// homogeneous step.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Target time of the single step (defaults to t_final).
        #[arg(long)]
        t: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::ConfigField { .. } | Error::Parse { .. } => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Run { config, out } => cmd_run(cli, config, out.as_deref()),
        Command::Check { dir } => cmd_check(cli, dir),
        Command::SweepEps { config, out } => cmd_sweep(cli, config, out.as_deref()),
        Command::Rescale { dir } => cmd_rescale(cli, dir),
        Command::Oracle { config, t } => cmd_oracle(cli, config, *t),
    }
}

fn run_one(cfg: &RunConfig, eps: f64) -> Result<(Trajectory, gdplast_core::FeSpace), Error> {
    let fe = cfg.fe_space()?;
    let law = cfg.material_law()?;
    let load = cfg.load_program()?;
    let traj = run_evolution(&load, &law, &fe, cfg.k, eps, &cfg.solver_config())?;
    Ok((traj, fe))
}

fn summarize(traj: &Trajectory) -> String {
    let final_energy = traj
        .records
        .last()
        .map(|r| r.energy.total)
        .unwrap_or(traj.initial_energy.total);
    let dissipation = traj.cumulative_dissipation(traj.records.len());
    let max_slack = traj
        .records
        .iter()
        .map(|r| r.inequality_slack)
        .fold(f64::NEG_INFINITY, f64::max);
    format!(
        "final_energy={final_energy:.6e} total_dissipation={dissipation:.6e} max_slack={max_slack:.6e}"
    )
}

fn cmd_run(cli: &Cli, config: &Path, out: Option<&Path>) -> Result<ExitCode, Error> {
    let mut cfg = load_config(config, cli)?;
    if let Some(dir) = out {
        cfg.output_dir = dir.display().to_string();
    }
    let (traj, fe) = run_one(&cfg, cfg.epsilon)?;
    let dir = PathBuf::from(&cfg.output_dir);
    io::write_trajectory(&dir, &cfg, &traj, &fe)?;
    if !cli.quiet {
        println!("{}", summarize(&traj));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(cli: &Cli, dir: &Path) -> Result<ExitCode, Error> {
    let (cfg, traj, fe, law) = io::read_trajectory(dir)?;
    let load = cfg.load_program()?;
    let checks = diagnostics::run_all_checks(&traj, &load, &law, &fe, cfg.seed)?;
    std::fs::write(dir.join("checks.csv"), io::checks_csv(&checks))?;
    let mut failed = false;
    for c in &checks {
        if !cli.quiet || !c.pass {
            println!(
                "{} {}: residual {:.3e} tol {:.3e} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.residual,
                c.tolerance,
                c.location
            );
        }
        failed |= !c.pass;
    }
    Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn cmd_sweep(cli: &Cli, config: &Path, out: Option<&Path>) -> Result<ExitCode, Error> {
    let mut cfg = load_config(config, cli)?;
    if let Some(dir) = out {
        cfg.output_dir = dir.display().to_string();
    }
    let sweep = if cfg.eps_sweep.is_empty() {
        vec![cfg.epsilon]
    } else {
        cfg.eps_sweep.clone()
    };
    if sweep.iter().any(|&e| e <= 0.0) {
        return Err(Error::Config("sweep-eps needs positive viscosities".into()));
    }
    let base = PathBuf::from(&cfg.output_dir);

    // Fan the runs out concurrently; each ε writes into its own subtree.
    let runs: Vec<Result<(f64, Trajectory), Error>> = sweep
        .par_iter()
        .map(|&eps| run_one(&cfg, eps).map(|(t, _)| (eps, t)))
        .collect();
    let fe = cfg.fe_space()?;
    let law = cfg.material_law()?;

    let mut rescaled = Vec::new();
    for r in runs {
        let (eps, traj) = r?;
        let sub = base.join(format!("eps_{eps:e}"));
        let mut sub_cfg = cfg.clone();
        sub_cfg.epsilon = eps;
        io::write_trajectory(&sub, &sub_cfg, &traj, &fe)?;
        let rt = arclength_parametrize(&traj, cfg.rescale_grid)?;
        let threshold = cfg.plateau_threshold_or_default(traj.t_final / rt.total_s);
        let scale = traj.energy_scale();
        let report = check_bv_conditions(&rt, &law, &fe, threshold, 1e-6 * scale)?;
        std::fs::write(sub.join("rescaled.csv"), io::rescaled_csv(&rt))?;
        std::fs::write(sub.join("bv_report.txt"), io::bv_report_text(&report))?;
        if !cli.quiet {
            println!(
                "eps={eps:.3e} S={:.6e} psi_outside={:.3e} balance_slack_min={:.3e} plateaus={}",
                rt.total_s,
                report.psi_outside_plateaus,
                report.balance_slack_min,
                report.plateaus.len()
            );
        }
        rescaled.push(rt);
    }
    if rescaled.len() >= 2 {
        let refs: Vec<&_> = rescaled.iter().collect();
        let distances = eps_limit_compare(&refs, &fe, 256)?;
        let mut table = String::from("# eps_a,eps_b,sup_distance\n");
        for (i, d) in distances.iter().enumerate() {
            table.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", sweep[i], sweep[i + 1], d));
            if !cli.quiet {
                println!("distance eps {:.3e} -> {:.3e}: {d:.6e}", sweep[i], sweep[i + 1]);
            }
        }
        std::fs::write(base.join("eps_compare.csv"), table)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_rescale(cli: &Cli, dir: &Path) -> Result<ExitCode, Error> {
    let (cfg, traj, fe, law) = io::read_trajectory(dir)?;
    let rt = arclength_parametrize(&traj, cfg.rescale_grid)?;
    let threshold = cfg.plateau_threshold_or_default(traj.t_final / rt.total_s);
    let scale = traj.energy_scale();
    let report = check_bv_conditions(&rt, &law, &fe, threshold, 1e-6 * scale)?;
    std::fs::write(dir.join("rescaled.csv"), io::rescaled_csv(&rt))?;
    std::fs::write(dir.join("bv_report.txt"), io::bv_report_text(&report))?;
    if !cli.quiet {
        println!(
            "S={:.6e} psi_outside={:.3e} balance_slack_min={:.3e} plateaus={}",
            rt.total_s,
            report.psi_outside_plateaus,
            report.balance_slack_min,
            report.plateaus.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(cli: &Cli, config: &Path, t: Option<f64>) -> Result<ExitCode, Error> {
    let mut cfg = load_config(config, cli)?;
    cfg.mesh_kind = "homogeneous".into();
    let fe = cfg.fe_space()?;
    let law = cfg.material_law()?;
    let load = cfg.load_program()?;
    let t_new = t.unwrap_or(cfg.t_final).clamp(0.0, cfg.t_final);
    let tau = cfg.t_final / cfg.k as f64;
    let prev = State::sound(&fe);
    let (solver_energy, oracle_energy, gap) = evolution::oracle_compare(
        &prev,
        &load,
        t_new,
        cfg.epsilon,
        tau,
        &law,
        &fe,
        &cfg.solver_config(),
    )?;
    if !cli.quiet {
        println!("solver={solver_energy:.9e} oracle={oracle_energy:.9e} relative_gap={gap:.3e}");
    }
    Ok(ExitCode::SUCCESS)
}
