//! Command-line driver.
//!
//! Exit codes: 0 run completed (an abort verdict is data, not an error) or
//! every check passed, 1 invariant or study failure, 2 configuration or
//! I/O error, 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chemoflux::experiments::{self, StudyResult, StudyVerdict};
use chemoflux::io::config::parse_config_with_overrides;
use chemoflux::io::{csv, snapshot};
use chemoflux::{Error, RunConfig, RunVerdict};

#[derive(Parser)]
#[command(name = "chemoflux", version, about = "Flux-limited chemotaxis simulator")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct Overrides {
    /// Replace a configuration entry, e.g. `--override model.chi=5`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    list: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write monitors and the final field.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a prepackaged study and write its table.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Integrate one trajectory and evaluate every invariant.
    Check {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    /// Regularized runs against the unregularized one.
    Reg,
    /// Boundedness over `study.p_list` and the grid levels in `study.cells_list`.
    Sweep,
    /// Observed order over `study.cells_list`.
    Mesh,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotConverged { .. } | Error::NonFinite { .. } => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path)?;
    Ok(parse_config_with_overrides(&text, overrides)?)
}

fn prepare_output(cfg: &RunConfig) -> Result<&Path, Error> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.txt"), cfg.render())?;
    Ok(dir)
}

fn simulate(cfg: &RunConfig) -> Result<(experiments::Trajectory, &Path), Error> {
    let dir = prepare_output(cfg)?;
    let traj = experiments::simulate(cfg)?;
    csv::write_monitor_csv(&traj.records, &dir.join("monitors.csv"))?;
    snapshot::write_snapshot(&traj.outcome.state.u, &cfg.grid, &dir.join("final_u.bin"))?;
    let s = &traj.outcome.state;
    let summary = format!(
        "t_final,steps,initial_mass,final_mass,max_u,min_u,verdict\n{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
        s.t,
        s.step_count,
        traj.initial_mass,
        traj.records.last().map_or(f64::NAN, |r| r.mass),
        s.u.max(),
        s.u.min(),
        traj.outcome.verdict
    );
    fs::write(dir.join("summary.csv"), summary)?;
    Ok((traj, dir))
}

fn report_run(traj: &experiments::Trajectory) -> u8 {
    let out = &traj.outcome;
    println!("verdict {} at t = {} after {} steps", out.verdict, out.state.t, out.state.step_count);
    if let Some(m) = &out.message {
        eprintln!("{m}");
    }
    if out.verdict == RunVerdict::SolverFailure {
        EXIT_SOLVER
    } else {
        0
    }
}

fn cmd_run(cfg: &RunConfig) -> Result<u8, Error> {
    let (traj, _) = simulate(cfg)?;
    Ok(report_run(&traj))
}

fn cmd_check(cfg: &RunConfig) -> Result<u8, Error> {
    let (traj, dir) = simulate(cfg)?;
    let code = report_run(&traj);
    let report = traj.report.to_string();
    fs::write(dir.join("report.txt"), &report)?;
    print!("{report}");
    if code != 0 {
        return Ok(code);
    }
    Ok(if traj.report.all_pass() { 0 } else { EXIT_FAILURE })
}

fn cmd_study(kind: StudyKind, cfg: &RunConfig) -> Result<u8, Error> {
    let dir = prepare_output(cfg)?;
    let st = &cfg.study;
    let result: StudyResult = match kind {
        StudyKind::Reg => experiments::regularization_study(cfg, &st.n_list, st.t_eval)?,
        StudyKind::Sweep => {
            let axes = cfg.grid.kind.axes();
            let grids: Vec<_> =
                st.cells_list.iter().map(|&n| chemoflux::GridSpec { cells: vec![n; axes], ..cfg.grid.clone() }).collect();
            experiments::exponent_sweep(cfg, &st.p_list, &grids, cfg.t_end)?
        }
        StudyKind::Mesh => experiments::mesh_convergence(cfg, &st.cells_list, st.t_eval, st.mesh_kind)?,
    };
    let path = dir.join(format!("study_{}.csv", result.name));
    csv::write_study_csv(&result, &path)?;
    println!("study {} verdict {} ({} rows) -> {}", result.name, result.verdict, result.rows.len(), path.display());
    Ok(if result.verdict == StudyVerdict::Fail { EXIT_FAILURE } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, local) = match &cli.command {
        Command::Run { config, overrides }
        | Command::Check { config, overrides }
        | Command::Study { config, overrides, .. } => (config, overrides),
    };
    let all: Vec<String> = cli.overrides.list.iter().chain(&local.list).cloned().collect();
    let cfg = match load(path, &all) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match cli.command {
        Command::Run { .. } => cmd_run(&cfg),
        Command::Check { .. } => cmd_check(&cfg),
        Command::Study { kind, .. } => cmd_study(kind, &cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
