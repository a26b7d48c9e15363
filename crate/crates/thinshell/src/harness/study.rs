//! ε-sweep: shell runs against one sphere reference per Wiener path.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::fit::{fit_rate, RateFit};
use crate::error::{Error, Result};
use crate::noise::{sample_path, NoiseModel, WienerPath};
use crate::shell::ShellGeometry;
use crate::shell_solver::{pollution, FlowMode, ShellBasis, ShellSolver, ShellSolverConfig, ShellTrajectory};
use crate::sphere::{DivFreeSpectral, NormKind, SphereGrid};
use crate::sphere_solver::{SphereSolver, SphereSolverConfig, SphereTrajectory};

/// Self-consistency runs must reproduce the sphere trajectory to this level.
pub const SELF_CONSISTENCY_TOL: f64 = 1e-10;

const CONVERGENCE_MODE: &str = "pathwise: shell and sphere share one Wiener path per path_id; the thin-shell \
     limit holds in law along subsequences, and this coupled experiment probes a stronger mode";
const UNIQUENESS: &str = "shell martingale solutions are not known to be unique; each trajectory is one \
     consistent realization";
const SOLUTION_NOTION: &str = "solvers produce strong pathwise approximations of weak-in-time martingale solutions";

/// One row of errors.csv.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub eps: f64,
    pub path_id: u64,
    pub t: f64,
    pub err_l2: f64,
    pub err_dainv: f64,
    pub energy_sphere: f64,
    pub energy_mean: f64,
    pub energy_fluct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub git_hash: String,
    pub seed: u64,
    pub noise_seed: u64,
    pub paths: usize,
    pub convergence_mode: String,
    pub uniqueness: String,
    pub solution_notion: String,
    pub no_convergence_rate: f64,
    pub self_consistency_tol: f64,
}

/// Per-ε aggregates. Stochastic values are root-mean-square over paths
/// (errors) or path means (energies).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub eps: f64,
    pub ok_paths: usize,
    pub failures: Vec<String>,
    /// sup_t ‖α_ε − u‖_{L²(S²)}.
    pub sup_l2: Option<f64>,
    /// (∫₀ᵀ ‖α_ε − u‖² dt)^{1/2}.
    pub int_l2: Option<f64>,
    /// sup_t ‖α_ε − u‖_{D(A⁻¹)}.
    pub sup_dainv: Option<f64>,
    /// sup_t ‖β̃_ε‖².
    pub fluct_sup_energy: Option<f64>,
    /// ν∫₀ᵀ ‖curl β̃_ε‖² dt.
    pub fluct_dissipation: Option<f64>,
    /// ½ sup‖β̃‖² + ν∫‖curl β̃‖².
    pub fluct_total: Option<f64>,
    /// (C₁² + C₂/ν + C₃)·ε with C₁² = ‖ũ₀‖²/ε, C₂ = ν·(1/ν)∫‖f̃‖²_{V′}/ε,
    /// C₃ = ∫‖G̃‖²/ε.
    pub fluct_bound: Option<f64>,
    /// ν∫‖curl β̃‖² / ε.
    pub fluct_dissipation_ratio: Option<f64>,
    /// E sup_t ‖β̃_ε‖^p / ε^{p/2}.
    pub moment: Option<f64>,
    /// Mean |discrete energy identity residual| of the shell runs.
    pub energy_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub sup_l2: RateFit,
    pub int_l2: RateFit,
    pub sup_dainv: RateFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyChecks {
    pub all_finite: bool,
    pub sup_l2_strictly_decreasing: bool,
    pub int_l2_decreasing: bool,
    /// sup_t D(A⁻¹) error ≤ ½ sup_t L² error in every run.
    pub dainv_le_half_l2: bool,
    pub fluct_within_bound: bool,
    /// max over ε of the moment ≤ 2 × its value at the largest ε.
    pub moment_bounded: bool,
    pub self_consistent: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSummary {
    pub ok_paths: usize,
    pub failures: Vec<String>,
    pub energy_final: Option<f64>,
    pub energy_residual: Option<f64>,
    /// Deterministic runs only: sup ‖u(t+θ) − u(t)‖_{D(A⁻¹)}/θ^{1/2}.
    pub equicontinuity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: Metadata,
    pub config: StudyConfig,
    pub sphere: SphereSummary,
    pub entries: Vec<EpsEntry>,
    pub fits: Fits,
    pub checks: StudyChecks,
}

impl ConvergenceReport {
    /// Canonical serialization written to report.json.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub struct StudyOutput {
    pub report: ConvergenceReport,
    pub rows: Vec<ErrorRow>,
}

/// `git rev-parse HEAD` of the working directory, or "unknown".
pub fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

struct Shared {
    cfg: StudyConfig,
    grid: Arc<SphereGrid>,
    u0: DivFreeSpectral,
    forcing: Option<DivFreeSpectral>,
    noise: Option<NoiseModel>,
}

struct CellResult {
    rows: Vec<ErrorRow>,
    sup_l2: f64,
    int_l2_sq: f64,
    sup_dainv: f64,
    fluct_sup: f64,
    fluct_dissipation: f64,
    bound: f64,
    energy_residual: f64,
}

impl Shared {
    fn new(cfg: &StudyConfig) -> Result<Self> {
        cfg.validate()?;
        let forcing = if cfg.forcing.is_empty() { None } else { Some(DivFreeSpectral::from_modes(cfg.lmax, &cfg.forcing)?) };
        let noise = if cfg.stochastic && cfg.noise.n > 0 {
            Some(NoiseModel::from_modes(cfg.lmax, &cfg.noise.modes)?)
        } else {
            None
        };
        Ok(Shared {
            cfg: cfg.clone(),
            grid: Arc::new(SphereGrid::new(cfg.lmax + 1)),
            u0: DivFreeSpectral::from_modes(cfg.lmax, &cfg.initial)?,
            forcing,
            noise,
        })
    }

    fn path(&self, path_id: u64) -> Result<Option<WienerPath>> {
        match &self.noise {
            Some(n) => Ok(Some(sample_path(self.cfg.noise_seed(), path_id, n.n(), self.cfg.dt, self.cfg.nsteps())?)),
            None => Ok(None),
        }
    }

    fn sphere_run(&self, path_id: u64) -> Result<SphereTrajectory> {
        let c = &self.cfg;
        let mut sc = SphereSolverConfig::new(c.lmax, c.nu, c.dt, c.t_final);
        sc.nonlinear = c.mode == FlowMode::Nse;
        sc.scheme = c.scheme;
        sc.forcing = self.forcing.clone();
        sc.noise = self.noise.clone();
        sc.sample_every = c.sample_every;
        let path = self.path(path_id)?;
        SphereSolver::new(sc)?.run(&self.u0, path.as_ref())
    }

    fn shell_config(&self) -> ShellSolverConfig {
        let c = &self.cfg;
        let mut sc = ShellSolverConfig::new(c.nu, c.dt, c.t_final);
        sc.mode = c.mode;
        sc.scheme = c.scheme;
        sc.forcing = self.forcing.clone();
        sc.noise = self.noise.clone();
        sc.noise_pollution = c.noise_pollution;
        sc.sample_every = c.sample_every;
        sc
    }

    fn cell(&self, eps: f64, path_id: u64, sphere: &SphereTrajectory) -> Result<CellResult> {
        let c = &self.cfg;
        let geom = Arc::new(ShellGeometry::new(eps, c.nr, self.grid.clone())?);
        let times: Vec<f64> = sphere.samples.iter().map(|s| s.t).collect();
        // α_ε, ‖M̃u‖², ‖Ñu‖² per sample, plus the run-level quantities.
        let (alpha, mean_e, fluct_e, fluct_diss, bound, residual) = if c.self_consistency {
            let basis = ShellBasis::new(geom, c.lmax)?;
            let mut alpha = Vec::new();
            let mut me = Vec::new();
            let mut fe = Vec::new();
            for u in &sphere.states {
                let cf = basis.lift(u);
                alpha.push(basis.mean_stream(&cf));
                me.push(basis.energy(&cf));
                fe.push(basis.energy(&basis.fluctuation(&cf)));
            }
            (alpha, me, fe, 0.0, 0.0, 0.0)
        } else {
            let solver = ShellSolver::new(geom, c.lmax, self.shell_config())?;
            let b = solver.basis();
            let mut c0 = b.lift(&self.u0);
            if c.initial_pollution != 0.0 {
                c0.axpy(c.initial_pollution * eps, &pollution(b, &self.u0));
            }
            let path = self.path(path_id)?;
            let tr = solver.run_shell(c0, path.as_ref(), false)?;
            let last = tr.samples.last().expect("non-empty trajectory");
            let l = &last.ledger;
            let bound = tr.initial_energy + l.forcing_dual + l.noise_qv;
            let diss = l.fluct_dissipation;
            let res = tr.energy_residual().abs();
            let me = tr.samples.iter().map(|s| s.mean_energy).collect();
            let fe = tr.samples.iter().map(|s| s.fluct_energy).collect();
            (tr.alpha, me, fe, diss, bound, res)
        };
        if alpha.len() != sphere.states.len() {
            return Err(Error::Consistency("shell and sphere sample times differ".into()));
        }
        let mut rows = Vec::with_capacity(alpha.len());
        let (mut sup_l2, mut sup_dainv, mut int_sq) = (0.0f64, 0.0f64, 0.0);
        for (k, (a, u)) in alpha.iter().zip(&sphere.states).enumerate() {
            let d = a.sub(u);
            let e2 = d.norm(NormKind::L2S2);
            let ea = d.norm(NormKind::DaInv);
            sup_l2 = sup_l2.max(e2);
            sup_dainv = sup_dainv.max(ea);
            if k > 0 {
                let prev = rows.last().map(|r: &ErrorRow| r.err_l2).unwrap_or(0.0);
                int_sq += 0.5 * (times[k] - times[k - 1]) * (prev * prev + e2 * e2);
            }
            rows.push(ErrorRow {
                eps,
                path_id,
                t: times[k],
                err_l2: e2,
                err_dainv: ea,
                energy_sphere: sphere.samples[k].energy,
                energy_mean: mean_e[k],
                energy_fluct: fluct_e[k],
            });
        }
        let fluct_sup = fluct_e.iter().fold(0.0f64, |m, v| m.max(*v));
        Ok(CellResult {
            rows,
            sup_l2,
            int_l2_sq: int_sq,
            sup_dainv,
            fluct_sup,
            fluct_dissipation: fluct_diss,
            bound,
            energy_residual: residual,
        })
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn rms(v: &[f64]) -> Option<f64> {
    mean(&v.iter().map(|x| x * x).collect::<Vec<_>>()).map(f64::sqrt)
}

fn aggregate(eps: f64, p: f64, cells: &[(u64, std::result::Result<CellResult, String>)]) -> EpsEntry {
    let ok: Vec<&CellResult> = cells.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let failures = cells
        .iter()
        .filter_map(|(id, r)| r.as_ref().err().map(|e| format!("eps {eps}, path {id}: {e}")))
        .collect();
    let col = |f: &dyn Fn(&CellResult) -> f64| ok.iter().map(|c| f(c)).collect::<Vec<f64>>();
    let fluct_sup = mean(&col(&|c| c.fluct_sup));
    let fluct_diss = mean(&col(&|c| c.fluct_dissipation));
    EpsEntry {
        eps,
        ok_paths: ok.len(),
        failures,
        sup_l2: rms(&col(&|c| c.sup_l2)),
        int_l2: mean(&col(&|c| c.int_l2_sq)).map(f64::sqrt),
        sup_dainv: rms(&col(&|c| c.sup_dainv)),
        fluct_sup_energy: fluct_sup,
        fluct_dissipation: fluct_diss,
        fluct_total: mean(&col(&|c| 0.5 * c.fluct_sup + c.fluct_dissipation)),
        fluct_bound: mean(&col(&|c| c.bound)),
        fluct_dissipation_ratio: fluct_diss.map(|d| d / eps),
        moment: mean(&col(&|c| c.fluct_sup.powf(p / 2.0))).map(|m| m / eps.powf(p / 2.0)),
        energy_residual: mean(&col(&|c| c.energy_residual)),
    }
}

fn strictly_decreasing(v: &[Option<f64>]) -> bool {
    v.iter().all(|x| x.is_some()) && v.windows(2).all(|w| w[1].unwrap() < w[0].unwrap())
}

fn fit_column(entries: &[EpsEntry], f: impl Fn(&EpsEntry) -> Option<f64>) -> RateFit {
    let mut e = Vec::new();
    let mut v = Vec::new();
    for x in entries {
        if let Some(y) = f(x) {
            e.push(x.eps);
            v.push(y);
        }
    }
    fit_rate(&e, &v)
}

fn finite_entry(e: &EpsEntry) -> bool {
    [
        e.sup_l2,
        e.int_l2,
        e.sup_dainv,
        e.fluct_sup_energy,
        e.fluct_dissipation,
        e.fluct_total,
        e.fluct_bound,
        e.fluct_dissipation_ratio,
        e.moment,
        e.energy_residual,
    ]
    .iter()
    .all(|x| x.map_or(true, f64::is_finite))
}

/// One sphere run with the study's data, driven by path `path_id` when
/// the study is stochastic.
pub fn sphere_run(cfg: &StudyConfig, path_id: u64) -> Result<SphereTrajectory> {
    Shared::new(cfg)?.sphere_run(path_id)
}

/// One shell run at `eps` with the study's lifted (and optionally
/// polluted) data.
pub fn shell_run(cfg: &StudyConfig, eps: f64, path_id: u64) -> Result<ShellTrajectory> {
    let shared = Shared::new(cfg)?;
    let geom = Arc::new(ShellGeometry::new(eps, cfg.nr, shared.grid.clone())?);
    let solver = ShellSolver::new(geom, cfg.lmax, shared.shell_config())?;
    let b = solver.basis();
    let mut c0 = b.lift(&shared.u0);
    if cfg.initial_pollution != 0.0 {
        c0.axpy(cfg.initial_pollution * eps, &pollution(b, &shared.u0));
    }
    let path = shared.path(path_id)?;
    solver.run_shell(c0, path.as_ref(), false)
}

/// Run the sweep on a pool of `workers` threads. The report does not depend
/// on `workers`.
pub fn run_convergence_study(cfg: &StudyConfig, workers: usize) -> Result<StudyOutput> {
    let shared = Shared::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let npaths = cfg.path_count() as u64;
    pool.install(|| {
        let spheres: Vec<std::result::Result<SphereTrajectory, String>> =
            (0..npaths).into_par_iter().map(|id| shared.sphere_run(id).map_err(|e| e.to_string())).collect();
        let cells: Vec<(usize, u64)> =
            (0..cfg.eps_list.len()).flat_map(|i| (0..npaths).map(move |p| (i, p))).collect();
        let results: Vec<std::result::Result<CellResult, String>> = cells
            .par_iter()
            .map(|&(i, p)| match &spheres[p as usize] {
                Ok(s) => shared.cell(cfg.eps_list[i], p, s).map_err(|e| e.to_string()),
                Err(e) => Err(format!("sphere reference failed: {e}")),
            })
            .collect();
        Ok(assemble(cfg, &spheres, &cells, results))
    })
}

fn assemble(
    cfg: &StudyConfig,
    spheres: &[std::result::Result<SphereTrajectory, String>],
    cells: &[(usize, u64)],
    results: Vec<std::result::Result<CellResult, String>>,
) -> StudyOutput {
    let mut grouped: Vec<Vec<(u64, std::result::Result<CellResult, String>)>> =
        (0..cfg.eps_list.len()).map(|_| Vec::new()).collect();
    for (&(i, p), r) in cells.iter().zip(results) {
        grouped[i].push((p, r));
    }
    let mut dainv_ok = true;
    let mut self_ok = true;
    for g in &grouped {
        for (_, r) in g {
            if let Ok(c) = r {
                dainv_ok &= c.sup_dainv <= 0.5 * c.sup_l2 + 1e-300;
                self_ok &= c.sup_l2 <= SELF_CONSISTENCY_TOL;
            }
        }
    }
    let entries: Vec<EpsEntry> =
        cfg.eps_list.iter().zip(&grouped).map(|(&e, g)| aggregate(e, cfg.moment_p, g)).collect();
    let mut rows: Vec<ErrorRow> = Vec::new();
    for g in grouped {
        for (_, r) in g {
            if let Ok(c) = r {
                rows.extend(c.rows);
            }
        }
    }
    let ok_spheres: Vec<&SphereTrajectory> = spheres.iter().filter_map(|s| s.as_ref().ok()).collect();
    let sphere = SphereSummary {
        ok_paths: ok_spheres.len(),
        failures: spheres
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().err().map(|e| format!("path {i}: {e}")))
            .collect(),
        energy_final: mean(&ok_spheres.iter().map(|s| s.samples.last().unwrap().energy).collect::<Vec<_>>()),
        energy_residual: mean(&ok_spheres.iter().map(|s| s.energy_residual().abs()).collect::<Vec<_>>()),
        equicontinuity: if cfg.stochastic { None } else { ok_spheres.first().map(|s| s.equicontinuity(1)) },
    };
    let fits = Fits {
        sup_l2: fit_column(&entries, |e| e.sup_l2),
        int_l2: fit_column(&entries, |e| e.int_l2),
        sup_dainv: fit_column(&entries, |e| e.sup_dainv),
    };
    let fluct_within_bound =
        entries.iter().all(|e| matches!((e.fluct_total, e.fluct_bound), (Some(t), Some(b)) if t <= b));
    let moments: Vec<Option<f64>> = entries.iter().map(|e| e.moment).collect();
    let moment_bounded = match moments.first().copied().flatten() {
        Some(m0) => moments.iter().all(|m| m.map_or(false, |m| m <= 2.0 * m0.max(f64::MIN_POSITIVE))),
        None => false,
    };
    let checks = StudyChecks {
        all_finite: entries.iter().all(finite_entry),
        sup_l2_strictly_decreasing: strictly_decreasing(&entries.iter().map(|e| e.sup_l2).collect::<Vec<_>>()),
        int_l2_decreasing: strictly_decreasing(&entries.iter().map(|e| e.int_l2).collect::<Vec<_>>()),
        dainv_le_half_l2: dainv_ok,
        fluct_within_bound,
        moment_bounded,
        self_consistent: cfg.self_consistency.then_some(self_ok),
    };
    let metadata = Metadata {
        git_hash: git_hash(),
        seed: cfg.seed,
        noise_seed: cfg.noise_seed(),
        paths: cfg.path_count(),
        convergence_mode: CONVERGENCE_MODE.into(),
        uniqueness: UNIQUENESS.into(),
        solution_notion: SOLUTION_NOTION.into(),
        no_convergence_rate: super::fit::NO_CONVERGENCE_RATE,
        self_consistency_tol: SELF_CONSISTENCY_TOL,
    };
    let report = ConvergenceReport { metadata, config: cfg.clone(), sphere, entries, fits, checks };
    StudyOutput { report, rows }
}
