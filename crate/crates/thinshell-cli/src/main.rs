use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thinshell::harness::{io, run_convergence_study, run_property_suite, shell_run, sphere_run, StudyConfig, SuiteOptions};
use thinshell::shell_solver::FlowMode;
use thinshell::Result;

#[derive(Parser)]
#[command(name = "thinshell", version, about = "Thin spherical shell to sphere convergence toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the property suite; exits 1 if any check fails.
    Check {
        /// "all" or one group name.
        #[arg(long, default_value = "all")]
        select: String,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Single sphere run; writes sphere.csv.
    Sphere {
        /// Wiener path index for stochastic runs.
        #[arg(long, default_value_t = 0)]
        path_id: u64,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Single shell run at one ε; writes shell.csv.
    Shell {
        /// Shell thickness; defaults to the first entry of the ε list.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        path_id: u64,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// ε sweep; writes report.json and errors.csv.
    Converge {
        /// Worker threads (does not affect the output).
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[command(flatten)]
        study: StudyArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stokes,
    Nse,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON file with StudyConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    stochastic: bool,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    moment_p: Option<f64>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn resolve(&self) -> Result<StudyConfig> {
        let mut c = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        if let Some(v) = &self.eps_list {
            c.eps_list = v.clone();
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(lmax, nr, nu, dt, t_final, paths, seed, moment_p);
        if let Some(m) = self.mode {
            c.mode = match m {
                Mode::Stokes => FlowMode::Stokes,
                Mode::Nse => FlowMode::Nse,
            };
        }
        c.stochastic |= self.stochastic;
        if let Some(o) = &self.out {
            c.out = Some(o.display().to_string());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(cfg: &StudyConfig) -> Option<PathBuf> {
    cfg.out.as_ref().map(PathBuf::from)
}

fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            fs::write(d.join(name), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Check { select, study } => {
            let c = study.resolve()?;
            let opts = SuiteOptions { seed: c.seed, eps_list: c.eps_list.clone(), moment_p: c.moment_p };
            let report = run_property_suite(&select, &opts)?;
            print!("{}", report.table());
            if let Some(d) = out_dir(&c) {
                emit(Some(&d), "check.json", &report.to_json()?)?;
            }
            let failed = report.failures().len();
            println!("{} checks, {} failed", report.checks.len(), failed);
            Ok(failed == 0)
        }
        Command::Sphere { path_id, study } => {
            let c = study.resolve()?;
            let tr = sphere_run(&c, path_id)?;
            emit(out_dir(&c).as_deref(), "sphere.csv", &io::sphere_csv(&tr.samples))?;
            Ok(true)
        }
        Command::Shell { eps, path_id, study } => {
            let c = study.resolve()?;
            let eps = eps.unwrap_or(c.eps_list[0]);
            let tr = shell_run(&c, eps, path_id)?;
            emit(out_dir(&c).as_deref(), "shell.csv", &io::shell_csv(&tr.samples, eps))?;
            Ok(true)
        }
        Command::Converge { workers, study } => {
            let c = study.resolve()?;
            let out = run_convergence_study(&c, workers)?;
            match out_dir(&c) {
                Some(d) => {
                    io::write_study(&d, &out)?;
                    eprintln!("wrote {}", d.display());
                }
                None => print!("{}", out.report.to_json()?),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
