use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hysfem::fem::Mesh;
use hysfem::harness::{
    bench_solvers, load_toml, preisach_demo, run_case, run_h_study, run_tau_study, write_bench_outputs,
    write_demo_outputs, write_step_reports, BenchConfig, ErrorTable, PreisachDemoConfig, StudyConfig,
};

/// Parabolic problems with hysteresis: convergence studies, solver comparison
/// and the scalar Preisach loop.
#[derive(Parser, Debug)]
#[command(name = "hysfem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one case and write the final state and per-step solver counters.
    RunCase(ConfigArgs),
    /// Spatial convergence study.
    StudyH(ConfigArgs),
    /// Temporal convergence study.
    StudyTau(ConfigArgs),
    /// Compare the nonlinear solvers on the 3D Preisach problem.
    BenchSolvers(ConfigArgs),
    /// Scalar Preisach loop under the two-tone excitation.
    PreisachDemo(ConfigArgs),
    /// Print vertex and element counts of a uniform mesh.
    MeshInfo {
        #[arg(long)]
        dim: usize,
        /// Cells per side.
        #[arg(long)]
        n: usize,
    },
}

#[derive(clap::Args, Debug)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn created(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("cannot create {}", path.display()))
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn study_config(args: &ConfigArgs) -> Result<StudyConfig> {
    let mut cfg: StudyConfig = load_toml(&args.config)?;
    if args.output_dir.is_some() {
        cfg.output_dir = args.output_dir.clone();
    }
    Ok(cfg)
}

fn write_table(table: &ErrorTable, path: &Path) -> Result<()> {
    table.save(path)?;
    for row in &table.rows {
        let order = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!(
            "level {} N={} K={}  l2 {:.3e} ({})  h1 {:.3e} ({})",
            row.level,
            row.n,
            row.k,
            row.l2,
            order(row.l2_order),
            row.h1,
            order(row.h1_order)
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::MeshInfo { dim, n } => {
            let mesh = Mesh::uniform(dim, n)?;
            println!("{} vertices", mesh.num_vertices());
            println!("{} elements", mesh.num_elements());
        }
        Command::RunCase(args) => {
            let cfg = study_config(&args)?;
            let dir = cfg.output_dir();
            make_dir(&dir)?;
            let (driver, traj) = run_case(&cfg)?;
            let tag = format!("case{}", cfg.case.number());
            for s in traj.snapshots.iter().chain(std::iter::once(&traj.final_state)) {
                let path = dir.join(format!("{tag}_step{}.csv", s.step));
                driver.write_snapshot_csv(s, BufWriter::new(created(&path)?))?;
                println!("wrote {}", path.display());
            }
            let path = dir.join(format!("{tag}_steps.csv"));
            write_step_reports(&traj.reports, BufWriter::new(created(&path)?))?;
            let its: usize = traj.reports.iter().map(|r| r.nonlinear_iterations).sum();
            println!("{} steps, {} nonlinear iterations", traj.reports.len(), its);
            println!("wrote {}", path.display());
        }
        Command::StudyH(args) => {
            let cfg = study_config(&args)?;
            let dir = cfg.output_dir();
            make_dir(&dir)?;
            let table = run_h_study(&cfg)?;
            write_table(&table, &dir.join(format!("case{}_h.csv", cfg.case.number())))?;
        }
        Command::StudyTau(args) => {
            let cfg = study_config(&args)?;
            let dir = cfg.output_dir();
            make_dir(&dir)?;
            let table = run_tau_study(&cfg)?;
            write_table(&table, &dir.join(format!("case{}_tau.csv", cfg.case.number())))?;
        }
        Command::BenchSolvers(args) => {
            let mut cfg: BenchConfig = load_toml(&args.config)?;
            if args.output_dir.is_some() {
                cfg.output_dir = args.output_dir.clone();
            }
            let report = bench_solvers(&cfg)?;
            for r in &report.rows {
                let status = if r.converged { "ok" } else { "DNF" };
                println!(
                    "{:<16} {:>4} {:>5} nonlinear its {:>7} linear its {:>8.3} s",
                    r.solver,
                    status,
                    r.nonlinear_iterations,
                    r.linear_iterations,
                    r.wall_time.as_secs_f64()
                );
            }
            if let Some(d) = report.max_disagreement() {
                println!("max disagreement {d:.3e}");
            }
            for p in write_bench_outputs(&report, &cfg.output_dir())? {
                println!("wrote {}", p.display());
            }
        }
        Command::PreisachDemo(args) => {
            let mut cfg: PreisachDemoConfig = load_toml(&args.config)?;
            if args.output_dir.is_some() {
                cfg.output_dir = args.output_dir.clone();
            }
            let report = preisach_demo(&cfg)?;
            println!("loop height {:.6e}", report.loop_height);
            println!("closure gap {:.3e}", report.closure_gap);
            println!("symmetry error {:.3e}", report.symmetry_error);
            println!("envelope violation {:.3e}", report.envelope_violation);
            for p in write_demo_outputs(&report, &cfg.output_dir())? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
