//! Experiment driver: level sweeps, iteration tables, field exports and
//! run manifests.

pub mod export;
pub mod raster;

use clap::{Parser, ValueEnum};
use fascd::problem::{sia_problem, SiaParams};
use fascd::{CycleConfig, DualVector, NodalFunction, ProblemKind, SolveMode, VIProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("raster {path}: {msg}")]
    Raster { path: PathBuf, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Solver(#[from] fascd::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Vcycle,
    Fmg,
    RsOnly,
    /// V-cycles without up-smoothing.
    V10,
    /// V-cycles without down-smoothing.
    V01,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Vcycle => "vcycle",
            Mode::Fmg => "fmg",
            Mode::RsOnly => "rs-only",
            Mode::V10 => "v10",
            Mode::V01 => "v01",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    None,
    CsvGrid,
    VtkLegacy,
}

impl ExportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ExportFormat::None => "none",
            ExportFormat::CsvGrid => "csv-grid",
            ExportFormat::VtkLegacy => "vtk-legacy",
        }
    }
}

/// Named settings for the reported experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Table2Ball,
    Table2Spiral,
    Table2BallFmg,
    Table2SpiralFmg,
    Table3,
    Table3V10,
    Table3V01,
    Table3V11,
    Table4,
    Sia,
    SiaDome,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Table2Ball => "table2-ball",
            Preset::Table2Spiral => "table2-spiral",
            Preset::Table2BallFmg => "table2-ball-fmg",
            Preset::Table2SpiralFmg => "table2-spiral-fmg",
            Preset::Table3 => "table3",
            Preset::Table3V10 => "table3-v10",
            Preset::Table3V01 => "table3-v01",
            Preset::Table3V11 => "table3-v11",
            Preset::Table4 => "table4",
            Preset::Sia => "sia",
            Preset::SiaDome => "sia-dome",
        }
    }

    fn problem(self) -> ProblemKind {
        match self {
            Preset::Table2Ball | Preset::Table2BallFmg => ProblemKind::Ball,
            Preset::Table2Spiral | Preset::Table2SpiralFmg => ProblemKind::Spiral,
            Preset::Table3 | Preset::Table3V10 | Preset::Table3V01 | Preset::Table3V11 => ProblemKind::Plap1d,
            Preset::Table4 => ProblemKind::AdvDiff2d,
            Preset::Sia => ProblemKind::Sia2d,
            Preset::SiaDome => ProblemKind::SiaDome,
        }
    }

    fn levels(self) -> (usize, usize) {
        match self {
            Preset::Table2Ball | Preset::Table2Spiral | Preset::Table2BallFmg | Preset::Table2SpiralFmg => (1, 8),
            Preset::Table3 | Preset::Table3V10 | Preset::Table3V01 | Preset::Table3V11 => (1, 10),
            Preset::Table4 => (1, 5),
            Preset::Sia | Preset::SiaDome => (1, 4),
        }
    }

    fn mode(self) -> Mode {
        match self {
            Preset::Table2Ball | Preset::Table2Spiral | Preset::Table3V11 => Mode::Vcycle,
            Preset::Table3V10 => Mode::V10,
            Preset::Table3V01 => Mode::V01,
            _ => Mode::Fmg,
        }
    }

    fn tolerance(self) -> Option<f64> {
        matches!(self, Preset::Table2Ball | Preset::Table2Spiral).then_some(1e-12)
    }
}

/// Command-line flags; anything left unset comes from the preset, then the
/// problem defaults.
#[derive(Debug, Clone, Parser)]
#[command(name = "fascd", version, about = "FASCD multigrid for box-constrained variational inequalities")]
pub struct Cli {
    /// ball, spiral, plap1d, advdiff2d, sia2d or sia-dome
    #[arg(long)]
    pub problem: Option<ProblemKind>,
    /// Number of levels, or an inclusive range such as 1..8
    #[arg(long)]
    pub levels: Option<String>,
    /// Coarsest cells per axis: N or NxM
    #[arg(long)]
    pub coarse: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub down: Option<usize>,
    #[arg(long)]
    pub up: Option<usize>,
    #[arg(long)]
    pub rampv: Option<usize>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub stol: Option<f64>,
    #[arg(long)]
    pub max_cycles: Option<usize>,
    /// Newton iterations per smoother application
    #[arg(long)]
    pub newton_iters: Option<usize>,
    /// Krylov iterations per Newton step
    #[arg(long)]
    pub krylov_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub export: ExportFormat,
    /// Start V-cycles from a random admissible perturbation of the
    /// initial iterate
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bed elevation raster (csv-grid) for sia2d
    #[arg(long)]
    pub bed: Option<PathBuf>,
    /// Surface mass balance raster (csv-grid) for sia2d
    #[arg(long)]
    pub smb: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub problem: ProblemKind,
    /// Inclusive range of level counts.
    pub levels: (usize, usize),
    pub coarse: [usize; 2],
    pub mode: Mode,
    pub config: CycleConfig,
    pub preset: Option<Preset>,
    pub out_dir: PathBuf,
    pub export: ExportFormat,
    pub seed: Option<u64>,
    pub bed: Option<PathBuf>,
    pub smb: Option<PathBuf>,
}

pub fn parse_levels(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Spec(format!("bad --levels '{s}', want N or A..B"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(bad());
            }
            Ok((a, b))
        }
        None => {
            let n = num(s)?;
            Ok((n, n))
        }
    }
}

pub fn parse_coarse(s: &str, dim: usize) -> Result<[usize; 2]> {
    let bad = || CliError::Spec(format!("bad --coarse '{s}', want N or NxM"));
    let parts: Vec<usize> = s
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let c = match (parts.as_slice(), dim) {
        ([n], 1) => [*n, 0],
        ([n], _) => [*n, *n],
        ([n, m], 2) => [*n, *m],
        _ => return Err(CliError::Spec(format!("--coarse '{s}' does not fit a {dim}D problem"))),
    };
    if c[0] == 0 || (dim == 2 && c[1] == 0) {
        return Err(bad());
    }
    Ok(c)
}

impl Cli {
    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let problem = match (self.problem, self.preset) {
            (Some(p), _) => p,
            (None, Some(pre)) => pre.problem(),
            (None, None) => return Err(CliError::Spec("need --problem or --preset".into())),
        };
        let levels = match (&self.levels, self.preset) {
            (Some(s), _) => parse_levels(s)?,
            (None, Some(pre)) => pre.levels(),
            (None, None) => return Err(CliError::Spec("need --levels or --preset".into())),
        };
        let coarse = match &self.coarse {
            Some(s) => parse_coarse(s, problem.dim())?,
            None => problem.default_coarse(),
        };
        let mode = self.mode.or(self.preset.map(Preset::mode)).unwrap_or(Mode::Vcycle);
        let mut cfg = CycleConfig::preset(problem);
        match mode {
            Mode::V10 => {
                cfg.up = 0;
                cfg.max_cycles = 50;
            }
            Mode::V01 => {
                cfg.down = 0;
                cfg.max_cycles = 50;
            }
            _ => {}
        }
        if let Some(t) = self.preset.and_then(Preset::tolerance) {
            cfg.atol = t;
            cfg.rtol = t;
            cfg.stol = t;
        }
        cfg.down = self.down.unwrap_or(cfg.down);
        cfg.up = self.up.unwrap_or(cfg.up);
        cfg.rampv = self.rampv.unwrap_or(cfg.rampv);
        cfg.atol = self.atol.unwrap_or(cfg.atol);
        cfg.rtol = self.rtol.unwrap_or(cfg.rtol);
        cfg.stol = self.stol.unwrap_or(cfg.stol);
        cfg.max_cycles = self.max_cycles.unwrap_or(cfg.max_cycles);
        for sm in [&mut cfg.down_smoother, &mut cfg.up_smoother] {
            sm.newton_iters = self.newton_iters.unwrap_or(sm.newton_iters);
            sm.krylov_iters = self.krylov_iters.unwrap_or(sm.krylov_iters);
        }
        cfg.debug_checks = std::env::var("FASCD_DEBUG_ASSERT").is_ok_and(|v| v == "1");
        let spec = ExperimentSpec {
            problem,
            levels,
            coarse,
            mode,
            config: cfg,
            preset: self.preset,
            out_dir: self.out_dir,
            export: self.export,
            seed: self.seed,
            bed: self.bed,
            smb: self.smb,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if (self.bed.is_some() || self.smb.is_some()) && self.problem != ProblemKind::Sia2d {
            return Err(CliError::Spec("--bed and --smb apply only to sia2d".into()));
        }
        if self.problem.dim() == 1 && self.coarse[1] != 0 {
            return Err(CliError::Spec(format!("{} is 1D; --coarse takes one number", self.problem)));
        }
        if self.problem.dim() == 2 && self.coarse[1] == 0 {
            return Err(CliError::Spec(format!("{} is 2D; --coarse needs a nonzero y count", self.problem)));
        }
        if self.mode == Mode::Vcycle || self.mode == Mode::V10 || self.mode == Mode::V01 {
            if self.config.down + self.config.up == 0 {
                return Err(CliError::Spec("a V-cycle needs down + up >= 1".into()));
            }
        }
        self.config.validate(self.levels.1.max(1))?;
        Ok(())
    }

    pub fn build_problem(&self, levels: usize) -> Result<VIProblem> {
        let h = self.problem.hierarchy(levels, Some(self.coarse))?;
        if self.problem != ProblemKind::Sia2d || (self.bed.is_none() && self.smb.is_none()) {
            return Ok(self.problem.build(levels, Some(self.coarse))?);
        }
        let base = self.problem.build(levels, Some(self.coarse))?;
        let top = h.finest();
        let level = h.level(top);
        let bed = match &self.bed {
            Some(p) => raster::Raster::read(p)?.sample_nodes(level),
            None => base.lower().to_vec(),
        };
        let smb = match &self.smb {
            Some(p) => {
                let r = raster::Raster::read(p)?;
                let mut out = vec![0.0; level.num_vertices()];
                let tables = fascd::problem::assembly::ElementTables::new(level);
                fascd::problem::assembly::assemble_load(level, &tables, &|x| r.sample(x), &mut out);
                DualVector::from_values(top, out)
            }
            None => base.source().clone(),
        };
        Ok(sia_problem(h, SiaParams::default(), NodalFunction::from_values(top, bed), smb)?)
    }
}

/// One row of the iterations table.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub levels: usize,
    pub m: usize,
    pub cycles: usize,
    pub residual: f64,
    pub rate: f64,
    pub seconds: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<LevelRow>,
}

impl RunReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

fn random_start(problem: &VIProblem, seed: u64) -> NodalFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0 = problem.initial_iterate();
    let top = problem.finest();
    let mask = problem.dirichlet_mask(top);
    let scale = 0.1 * (1.0 + fascd::function::norm_inf(w0));
    let (lo, hi) = (problem.lower(), problem.upper());
    let v = (0..w0.len())
        .map(|p| {
            if mask[p] {
                return w0[p];
            }
            let x = w0[p] + scale * rng.gen_range(-1.0..1.0);
            x.max(lo.get(p)).min(hi.get(p))
        })
        .collect();
    NodalFunction::from_values(top, v)
}

fn solve_level(spec: &ExperimentSpec, problem: &VIProblem) -> fascd::Result<fascd::Solution> {
    let cfg = &spec.config;
    match spec.mode {
        Mode::Fmg => fascd::fmg(problem, cfg),
        Mode::RsOnly => fascd::rs_only(problem, cfg),
        Mode::Vcycle | Mode::V10 | Mode::V01 => match spec.seed {
            Some(seed) => fascd::solve_vcycles(problem, &random_start(problem, seed), cfg),
            None => fascd::solve(problem, SolveMode::VCycle, cfg),
        },
    }
}

/// Runs the level sweep, writing `iterations.csv`, `manifest.txt` and any
/// field exports into the output directory.  Non-convergence is reported
/// in the rows rather than as an error.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir).map_err(io_err(&spec.out_dir))?;
    let mut rows = Vec::new();
    for levels in spec.levels.0..=spec.levels.1 {
        let problem = spec.build_problem(levels)?;
        let m = problem.level(problem.finest()).num_vertices();
        let t0 = Instant::now();
        let result = solve_level(spec, &problem);
        let seconds = t0.elapsed().as_secs_f64();
        let row = match &result {
            Ok(sol) => LevelRow {
                levels,
                m,
                cycles: sol.stats.cycles,
                residual: sol.stats.final_residual(),
                rate: sol.stats.rate(),
                seconds,
                converged: true,
            },
            Err(fascd::Error::NotConverged { cycles, residual }) => LevelRow {
                levels,
                m,
                cycles: *cycles,
                residual: *residual,
                rate: f64::NAN,
                seconds,
                converged: false,
            },
            Err(e) => return Err(CliError::Solver(e.clone())),
        };
        if let (Ok(sol), fmt) = (&result, spec.export) {
            if fmt != ExportFormat::None {
                let stem = format!("{}_L{levels}", spec.problem);
                export::export_fields(&sol.w, &problem, &spec.out_dir.join(stem), fmt)?;
            }
        }
        rows.push(row);
    }
    let report = RunReport { rows };
    write_file(&spec.out_dir.join("iterations.csv"), &iterations_csv(&report))?;
    write_file(&spec.out_dir.join("manifest.txt"), &manifest(spec, &report))?;
    Ok(report)
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn iterations_csv(report: &RunReport) -> String {
    let mut s = String::from("level,m_J,cycles,residual,rate,wall_time\n");
    for r in &report.rows {
        let cycles = if r.converged { r.cycles.to_string() } else { "NC".into() };
        let _ = writeln!(s, "{},{},{},{:e},{:e},{:.3}", r.levels, r.m, cycles, r.residual, r.rate, r.seconds);
    }
    s
}

/// Flat `key=value` echo of every resolved setting and the per-level
/// outcomes.
pub fn manifest(spec: &ExperimentSpec, report: &RunReport) -> String {
    let c = &spec.config;
    let mut kv: Vec<(String, String)> = vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("problem".into(), spec.problem.to_string()),
        ("preset".into(), spec.preset.map_or("none", Preset::name).into()),
        ("levels".into(), format!("{}..{}", spec.levels.0, spec.levels.1)),
        ("coarse".into(), format!("{}x{}", spec.coarse[0], spec.coarse[1])),
        ("mode".into(), spec.mode.name().into()),
        ("down".into(), c.down.to_string()),
        ("up".into(), c.up.to_string()),
        ("rampv".into(), c.rampv.to_string()),
        ("atol".into(), format!("{:e}", c.atol)),
        ("rtol".into(), format!("{:e}", c.rtol)),
        ("stol".into(), format!("{:e}", c.stol)),
        ("max_cycles".into(), c.max_cycles.to_string()),
        ("debug_checks".into(), c.debug_checks.to_string()),
    ];
    for (name, sm) in [("down_smoother", &c.down_smoother), ("up_smoother", &c.up_smoother), ("rs_only", &c.rs_only)] {
        kv.push((format!("{name}.newton_iters"), sm.newton_iters.to_string()));
        kv.push((format!("{name}.krylov"), format!("{:?}", sm.krylov).to_lowercase()));
        kv.push((format!("{name}.krylov_iters"), sm.krylov_iters.to_string()));
        kv.push((format!("{name}.preconditioner"), format!("{:?}", sm.preconditioner).to_lowercase()));
        kv.push((format!("{name}.line_search"), format!("{:?}", sm.line_search).to_lowercase()));
        kv.push((format!("{name}.active_tol"), format!("{:e}", sm.active_tol)));
    }
    kv.push(("coarse_solver.max_iters".into(), c.coarse.max_iters.to_string()));
    kv.push(("coarse_solver.rtol".into(), format!("{:e}", c.coarse.rtol)));
    kv.push(("coarse_solver.atol".into(), format!("{:e}", c.coarse.atol)));
    kv.push(("coarse_solver.line_search".into(), format!("{:?}", c.coarse.line_search).to_lowercase()));
    let quad = match (spec.problem.dim(), spec.problem) {
        (1, _) => "gauss-2",
        (_, ProblemKind::Sia2d | ProblemKind::SiaDome) => "gauss-2x2",
        _ => "edge-midpoint-3",
    };
    kv.push(("quadrature".into(), quad.into()));
    kv.push(("export".into(), spec.export.name().into()));
    kv.push(("seed".into(), spec.seed.map_or("none".into(), |s| s.to_string())));
    kv.push(("bed".into(), spec.bed.as_ref().map_or("default".into(), |p| p.display().to_string())));
    kv.push(("smb".into(), spec.smb.as_ref().map_or("default".into(), |p| p.display().to_string())));
    for r in &report.rows {
        let k = format!("result.levels_{}", r.levels);
        kv.push((format!("{k}.m_J"), r.m.to_string()));
        kv.push((format!("{k}.cycles"), r.cycles.to_string()));
        kv.push((format!("{k}.converged"), r.converged.to_string()));
    }
    kv.push(("converged".into(), report.all_converged().to_string()));
    let mut s = String::new();
    for (k, v) in kv {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}
