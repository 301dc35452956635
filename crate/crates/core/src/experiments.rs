//! Run configuration and the scripted studies behind the command-line tool.
//! Every study computes in parallel over seeds, collects results in seed
//! order and only then writes its files, so artifacts are byte-reproducible.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{audit_budget, gamma_of, BudgetReport, ParameterBudget};
use crate::error::{Error, Result};
use crate::gpam::{max_principle_monitor, solve_naive, solve_paracontrolled, solve_renormalized, ParaConfig, StepConfig};
use crate::heat::Trajectory;
use crate::inequality::{estimate_constant, registered_suite, EnsembleSpec, SweepReport};
use crate::io::{self, NormRow};
use crate::littlewood_paley::{DyadicPartition, PartitionMode};
use crate::noise::{enhance, sample_white_noise, CounterTerm, NoiseLevel};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{Grid, RealField};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "GPAM_OUTPUT_ROOT";

/// Name of the persisted effective configuration.
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub command: String,
    pub output: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { command: "solve".into(), output: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    /// `sharp` or `smooth` dyadic partition.
    pub partition: String,
    pub dt: f64,
    pub t_final: f64,
    pub save_every: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 128, partition: "sharp".into(), dt: 1e-2, t_final: 1.0, save_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// First seed; studies use `seed, seed + 1, ...`.
    pub seed: u64,
    pub seeds: u64,
    pub level: String,
    /// Level list for studies: `a..b` (inclusive), `a..=b` or `3,4,full`.
    pub levels: String,
    pub kappa: f64,
    /// Times at which enhanced bundles store the resonant term.
    pub times: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            seed: 0,
            seeds: 16,
            level: "full".into(),
            levels: "3..7".into(),
            kappa: 0.1,
            times: vec![0.25, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// `naive`, `renorm` or `para`.
    pub scheme: String,
    pub nonlinearity: String,
    /// Constant initial value.
    pub u0: f64,
    pub alpha: f64,
    /// Defaults to `(2 alpha + kappa - 1) / 2`.
    pub gamma: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    /// `R`; defaults to `j_max - 3`.
    pub cutoff: Option<i32>,
    /// `R1`; defaults to `j_max - 3`.
    pub split_cutoff: Option<i32>,
    pub diagnostics: bool,
    /// Seeds of a convergence study that also get a diagnostic paracontrolled run.
    pub diagnostic_seeds: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            scheme: "renorm".into(),
            nonlinearity: "sin".into(),
            u0: 0.0,
            alpha: 0.67,
            gamma: None,
            epsilon: 1e-3,
            delta: 0.101,
            cutoff: None,
            split_cutoff: None,
            diagnostics: true,
            diagnostic_seeds: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySection {
    pub seeds: u64,
    pub resolutions: Vec<usize>,
    /// Restrict the suite to these names; empty runs everything.
    pub only: Vec<String>,
}

impl Default for InequalitySection {
    fn default() -> Self {
        InequalitySection { seeds: 50, resolutions: vec![32, 64, 128], only: Vec::new() }
    }
}

/// Effective configuration of one command. The defaults
/// reproduce the flagship settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub grid: GridSection,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub inequality: InequalitySection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn gamma(&self) -> f64 {
        self.solver.gamma.unwrap_or_else(|| gamma_of(self.solver.alpha, self.noise.kappa))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.n)
    }

    pub fn partition(&self) -> Result<DyadicPartition> {
        let mode = match self.grid.partition.as_str() {
            "sharp" => PartitionMode::Sharp,
            "smooth" => PartitionMode::Smooth,
            other => return Err(Error::Config(format!("unknown partition '{other}'"))),
        };
        Ok(DyadicPartition::new(&self.grid()?, mode))
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec> {
        NonlinearitySpec::parse(&self.solver.nonlinearity)
    }

    pub fn level(&self) -> Result<NoiseLevel> {
        Ok(NoiseLevel::parse(&self.noise.level)?.clamp(self.grid()?.j_max()))
    }

    /// Study levels after clamping to the grid, duplicates removed.
    pub fn levels(&self) -> Result<Vec<NoiseLevel>> {
        parse_levels(&self.noise.levels, self.grid()?.j_max())
    }

    pub fn steps(&self) -> StepConfig {
        StepConfig::new(self.grid.dt, self.grid.t_final, self.grid.save_every)
    }

    pub fn budget(&self) -> ParameterBudget {
        ParameterBudget::new(self.noise.kappa, self.solver.alpha, self.solver.epsilon, self.solver.delta)
    }

    pub fn para(&self) -> Result<ParaConfig> {
        let d = ParaConfig::defaults(&self.grid()?);
        Ok(ParaConfig {
            cutoff: self.solver.cutoff.unwrap_or(d.cutoff),
            split_cutoff: self.solver.split_cutoff.unwrap_or(d.split_cutoff),
            diagnostics: self.solver.diagnostics,
            alpha: self.solver.alpha,
        })
    }

    /// Check every parameter against its admissible range; the budget audit
    /// must be computable, feasibility is reported but not required.
    pub fn validate(&self) -> Result<BudgetReport> {
        let g = self.grid()?;
        self.partition()?;
        self.nonlinearity()?.validate()?;
        self.level()?;
        self.levels()?;
        let s = &self.grid;
        if !(s.dt > 0.0 && s.t_final > 0.0 && s.dt <= s.t_final) || s.save_every == 0 {
            return Err(Error::Config("need 0 < dt <= t_final and save_every >= 1".into()));
        }
        if !(self.noise.kappa > 0.0 && self.noise.kappa < 1.0) {
            return Err(Error::Config(format!("kappa = {} not in (0, 1)", self.noise.kappa)));
        }
        if self.noise.seeds == 0 || self.inequality.seeds == 0 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if self.noise.times.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("noise times must be positive".into()));
        }
        if !self.solver.u0.is_finite() {
            return Err(Error::Config("u0 must be finite".into()));
        }
        let gamma = self.gamma();
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma = {gamma} not in [0, 1)")));
        }
        let jm = g.j_max();
        let p = self.para()?;
        for r in [p.cutoff, p.split_cutoff] {
            if r < -1 || r > jm {
                return Err(Error::Config(format!("cutoff {r} not in -1..={jm}")));
            }
        }
        if !["naive", "renorm", "para"].contains(&self.solver.scheme.as_str()) {
            return Err(Error::Config(format!("unknown scheme '{}'", self.solver.scheme)));
        }
        for &n in &self.inequality.resolutions {
            Grid::new(n)?;
        }
        audit_budget(&self.budget())
    }

    /// `run.output`, else `$GPAM_OUTPUT_ROOT/<command>`, else `gpam-output/<command>`.
    pub fn output_dir(&self) -> PathBuf {
        if let Some(o) = &self.run.output {
            return o.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("gpam-output"));
        root.join(&self.run.command)
    }

    /// Write `config.toml` into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<()> {
        io::write_text(&dir.join(CONFIG_FILE), &self.to_toml()?)
    }
}

/// Parse a level list and clamp it to `j_max` (levels at or above become `full`).
pub fn parse_levels(s: &str, j_max: i32) -> Result<Vec<NoiseLevel>> {
    let s = s.trim();
    let raw: Vec<NoiseLevel> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let parse = |x: &str| x.trim().parse::<i32>().map_err(|_| Error::Config(format!("bad level range '{s}'")));
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return Err(Error::Config(format!("empty level range '{s}'")));
        }
        (a..=b).map(NoiseLevel::Level).collect()
    } else {
        s.split(',').map(|x| NoiseLevel::parse(x.trim())).collect::<Result<_>>()?
    };
    let mut out: Vec<NoiseLevel> = Vec::new();
    for l in raw {
        if let NoiseLevel::Level(n) = l {
            if n < -1 {
                return Err(Error::Config(format!("noise level {n} < -1")));
            }
        }
        let l = l.clamp(j_max);
        if !out.contains(&l) {
            out.push(l);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Config("no levels".into()));
    }
    Ok(out)
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let x = q * (sorted.len() - 1) as f64;
    let (i, f) = (x.floor() as usize, x - x.floor());
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Run manifest for single solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub solver: String,
    pub nonlinearity: String,
    pub seed: u64,
    pub n: String,
    pub grid: usize,
    pub dt: f64,
    pub t_final: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub cutoff: i32,
    pub split_cutoff: i32,
    pub c_n_table: String,
    pub trajectory: String,
    pub ledger: Option<String>,
    pub budget: BudgetReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CounterRow {
    t: f64,
    c_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MaxPrincipleRow {
    seed: u64,
    level: String,
    t: f64,
    lhs: f64,
    rhs: f64,
    margin: f64,
}

const MP_HEADER: [&str; 6] = ["seed", "level", "t", "lhs", "rhs", "margin"];

/// Summary of a single solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub final_sup: f64,
    pub min_margin: Option<f64>,
    pub max_defect: Option<f64>,
}

fn constant_u0(cfg: &RunConfig, g: &Grid) -> RealField {
    RealField::constant(g, cfg.solver.u0)
}

/// `solve` and `max-principle`: one trajectory with manifest, counterterm
/// table and, for the paracontrolled scheme, ledger and monitor.
pub fn run_solve(cfg: &RunConfig, dir: &Path) -> Result<SolveSummary> {
    let budget = cfg.validate()?;
    let p = cfg.partition()?;
    let g = p.grid().clone();
    let nl = cfg.nonlinearity()?;
    let level = cfg.level()?;
    let steps = cfg.steps();
    let noise = sample_white_noise(&g, cfg.noise.seed).mollify(&p, level)?;
    let counter = CounterTerm::new(&p, level);
    let u0 = constant_u0(cfg, &g);
    let para = cfg.para()?;
    let mut summary = SolveSummary { final_sup: 0.0, min_margin: None, max_defect: None };
    let mut ledger_name = None;
    let mut mp_rows = Vec::new();
    let traj = match cfg.solver.scheme.as_str() {
        "naive" => solve_naive(&nl, &u0, &noise.field, &steps)?,
        "renorm" => solve_renormalized(&nl, &u0, &noise.field, &counter, &steps)?,
        _ => {
            let enh = enhance(&p, &noise, level, cfg.noise.kappa)?;
            let out = solve_paracontrolled(&nl, &u0, &enh, &steps, &para)?;
            summary.max_defect = Some(out.records.iter().map(|r| r.ansatz_defect).fold(0.0, f64::max));
            if para.diagnostics {
                let mon = max_principle_monitor(&out.records, cfg.gamma())?;
                summary.min_margin = Some(mon.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min));
                mp_rows = mon
                    .iter()
                    .map(|e| MaxPrincipleRow { seed: cfg.noise.seed, level: level.to_string(), t: e.t, lhs: e.lhs, rhs: e.rhs, margin: e.margin })
                    .collect();
            }
            std::fs::create_dir_all(dir)?;
            io::write_ledger(&dir.join("ledger.csv"), &out.ledger)?;
            ledger_name = Some("ledger.csv".to_string());
            out.trajectory
        }
    };
    summary.final_sup = traj.final_field().sup_norm();
    io::write_trajectory(&dir.join("trajectory"), &traj, Some(cfg.grid.dt), Some(cfg.gamma()))?;
    let table: Vec<CounterRow> = traj.times().iter().map(|&t| CounterRow { t, c_n: counter.at(t) }).collect();
    io::write_csv(&dir.join("c_n.csv"), &["t", "c_n"], &table)?;
    if cfg.solver.scheme == "para" && para.diagnostics {
        io::write_csv(&dir.join("max_principle.csv"), &MP_HEADER, &mp_rows)?;
    }
    let manifest = RunManifest {
        solver: cfg.solver.scheme.clone(),
        nonlinearity: nl.name().to_string(),
        seed: cfg.noise.seed,
        n: level.to_string(),
        grid: g.n(),
        dt: cfg.grid.dt,
        t_final: cfg.grid.t_final,
        kappa: cfg.noise.kappa,
        alpha: cfg.solver.alpha,
        gamma: cfg.gamma(),
        cutoff: para.cutoff,
        split_cutoff: para.split_cutoff,
        c_n_table: "c_n.csv".into(),
        trajectory: "trajectory".into(),
        ledger: ledger_name,
        budget,
    };
    io::write_json(&dir.join("run.json"), &manifest)?;
    cfg.persist(dir)?;
    Ok(summary)
}

/// `sample-noise`: the mollified field as `.pcf` and CSV plus its norm.
pub fn run_sample_noise(cfg: &RunConfig, dir: &Path) -> Result<f64> {
    cfg.validate()?;
    let p = cfg.partition()?;
    let level = cfg.level()?;
    let eta = sample_white_noise(p.grid(), cfg.noise.seed).mollify(&p, level)?.field;
    std::fs::create_dir_all(dir)?;
    io::write_field(&dir.join("eta.pcf"), &eta)?;
    io::write_field_csv(&dir.join("eta.csv"), &eta)?;
    let alpha = -1.0 - cfg.noise.kappa;
    let value = p.hoelder_norm(&eta, alpha)?;
    let row = NormRow { quantity: "eta".into(), alpha, gamma: 0.0, value, grid_n: p.grid().n(), seed: cfg.noise.seed };
    io::write_norm_report(&dir.join("norms.csv"), &[row])?;
    cfg.persist(dir)?;
    Ok(value)
}

/// `enhance`: the enhanced bundle and norms of its resonant term.
pub fn run_enhance(cfg: &RunConfig, dir: &Path) -> Result<Vec<NormRow>> {
    cfg.validate()?;
    let p = cfg.partition()?;
    let level = cfg.level()?;
    let enh = enhance(&p, &sample_white_noise(p.grid(), cfg.noise.seed), level, cfg.noise.kappa)?;
    io::write_enhanced(dir, &enh, &cfg.noise.times)?;
    let alpha = -2.0 * cfg.noise.kappa;
    let mut rows = Vec::new();
    for &t in &cfg.noise.times {
        let value = p.hoelder_norm(&enh.resonant_at(t)?, alpha)?;
        rows.push(NormRow { quantity: format!("resonant_renorm(t={t})"), alpha, gamma: 0.0, value, grid_n: p.grid().n(), seed: cfg.noise.seed });
    }
    io::write_norm_report(&dir.join("norms.csv"), &rows)?;
    cfg.persist(dir)?;
    Ok(rows)
}

/// One row of a convergence CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub level_pair: String,
    pub median_diff: f64,
    pub q25: f64,
    pub q75: f64,
    pub seeds: u64,
}

const PAIR_HEADER: [&str; 5] = ["level_pair", "median_diff", "q25", "q75", "seeds"];

impl PairStats {
    fn from(level_pair: String, diffs: &[f64]) -> PairStats {
        let s = sorted(diffs);
        PairStats { level_pair, median_diff: quantile(&s, 0.5), q25: quantile(&s, 0.25), q75: quantile(&s, 0.75), seeds: diffs.len() as u64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeedPairRow {
    seed: u64,
    level_pair: String,
    renorm_diff: f64,
    naive_diff: f64,
    naive_status: String,
}

/// Result of the level-convergence study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<String>,
    pub renorm: Vec<PairStats>,
    pub naive: Vec<PairStats>,
    /// Renormalized medians strictly decrease along the pairs.
    pub renorm_monotone: bool,
    /// Seeds whose naive differences fail to decrease strictly.
    pub naive_violations: u64,
    pub seeds: u64,
    /// Smallest maximum-principle margin over the diagnostic runs.
    pub min_margin: Option<f64>,
    pub diagnostic_runs: u64,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn pair_name(a: NoiseLevel, b: NoiseLevel) -> String {
    format!("{a}-{b}")
}

/// `convergence-study`: `||u^(n) - u^(n')||_{L^inf_T L^inf}` over consecutive
/// levels for the renormalized and the naive scheme, per seed, plus
/// diagnostic paracontrolled runs for the maximum principle.
pub fn convergence_study(cfg: &RunConfig, dir: &Path) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let p = cfg.partition()?;
    let g = p.grid().clone();
    let nl = cfg.nonlinearity()?;
    let levels = cfg.levels()?;
    if levels.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two levels".into()));
    }
    let steps = cfg.steps();
    let u0 = constant_u0(cfg, &g);
    let counters: Vec<CounterTerm> = levels.iter().map(|&l| CounterTerm::new(&p, l)).collect();
    let seeds: Vec<u64> = (0..cfg.noise.seeds).map(|i| cfg.noise.seed + i).collect();

    // Per seed: renormalized and naive differences over consecutive levels.
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<(Vec<f64>, Vec<f64>, Vec<String>)> {
            let noise = sample_white_noise(&g, seed);
            let mut ren: Vec<Trajectory> = Vec::new();
            let mut nai: Vec<Option<Trajectory>> = Vec::new();
            let mut status = Vec::new();
            for (l, c) in levels.iter().zip(&counters) {
                let eta = noise.mollify(&p, *l)?.field;
                ren.push(solve_renormalized(&nl, &u0, &eta, c, &steps)?);
                match solve_naive(&nl, &u0, &eta, &steps) {
                    Ok(t) => {
                        nai.push(Some(t));
                        status.push("ok".to_string());
                    }
                    Err(Error::BlowUp { t, .. }) => {
                        nai.push(None);
                        status.push(format!("blowup at t={t}"));
                    }
                    Err(e) => return Err(e),
                }
            }
            let rd = ren.windows(2).map(|w| w[0].sup_distance(&w[1])).collect::<Result<Vec<_>>>()?;
            let nd = nai
                .windows(2)
                .map(|w| match (&w[0], &w[1]) {
                    (Some(a), Some(b)) => a.sup_distance(b),
                    _ => Ok(f64::INFINITY),
                })
                .collect::<Result<Vec<_>>>()?;
            let st = (0..levels.len() - 1)
                .map(|i| if status[i] == "ok" && status[i + 1] == "ok" { "ok".to_string() } else { format!("{}; {}", status[i], status[i + 1]) })
                .collect();
            Ok((rd, nd, st))
        })
        .collect::<Result<Vec<_>>>()?;

    // Diagnostic paracontrolled runs at every level the enhancement admits.
    let para = ParaConfig { diagnostics: true, ..cfg.para()? };
    let diag_levels: Vec<NoiseLevel> = levels
        .iter()
        .copied()
        .filter(|l| matches!(l, NoiseLevel::Full) || matches!(l, NoiseLevel::Level(n) if *n <= p.j_max() - 2))
        .collect();
    let jobs: Vec<(u64, NoiseLevel)> = seeds
        .iter()
        .take(cfg.solver.diagnostic_seeds as usize)
        .flat_map(|&s| diag_levels.iter().map(move |&l| (s, l)))
        .collect();
    let gamma = cfg.gamma();
    let diag = jobs
        .par_iter()
        .map(|&(seed, l)| -> Result<Vec<MaxPrincipleRow>> {
            let enh = enhance(&p, &sample_white_noise(&g, seed), l, cfg.noise.kappa)?;
            let out = solve_paracontrolled(&nl, &u0, &enh, &steps, &para)?;
            Ok(max_principle_monitor(&out.records, gamma)?
                .into_iter()
                .map(|e| MaxPrincipleRow { seed, level: l.to_string(), t: e.t, lhs: e.lhs, rhs: e.rhs, margin: e.margin })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mp_rows: Vec<MaxPrincipleRow> = diag.into_iter().flatten().collect();
    let min_margin = if jobs.is_empty() { None } else { Some(mp_rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)) };

    let mut renorm = Vec::new();
    let mut naive = Vec::new();
    let mut rows = Vec::new();
    for i in 0..levels.len() - 1 {
        let name = pair_name(levels[i], levels[i + 1]);
        let rd: Vec<f64> = per_seed.iter().map(|s| s.0[i]).collect();
        let nd: Vec<f64> = per_seed.iter().map(|s| s.1[i]).collect();
        renorm.push(PairStats::from(name.clone(), &rd));
        naive.push(PairStats::from(name.clone(), &nd));
        for (k, s) in per_seed.iter().enumerate() {
            rows.push(SeedPairRow { seed: seeds[k], level_pair: name.clone(), renorm_diff: s.0[i], naive_diff: s.1[i], naive_status: s.2[i].clone() });
        }
    }
    let naive_violations = per_seed.iter().filter(|s| !strictly_decreasing(&s.1)).count() as u64;
    let report = ConvergenceReport {
        levels: levels.iter().map(|l| l.to_string()).collect(),
        renorm_monotone: strictly_decreasing(&renorm.iter().map(|r| r.median_diff).collect::<Vec<_>>()),
        renorm,
        naive,
        naive_violations,
        seeds: seeds.len() as u64,
        min_margin,
        diagnostic_runs: jobs.len() as u64,
    };
    std::fs::create_dir_all(dir)?;
    io::write_csv(&dir.join("convergence.csv"), &PAIR_HEADER, &report.renorm)?;
    io::write_csv(&dir.join("convergence_naive.csv"), &PAIR_HEADER, &report.naive)?;
    io::write_csv(&dir.join("per_seed.csv"), &["seed", "level_pair", "renorm_diff", "naive_diff", "naive_status"], &rows)?;
    io::write_csv(&dir.join("max_principle.csv"), &MP_HEADER, &mp_rows)?;
    io::write_json(&dir.join("summary.json"), &report)?;
    cfg.persist(dir)?;
    Ok(report)
}

/// Per-level row of the divergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub level: String,
    /// `c_n(t)` at the study time.
    pub c_n: f64,
    /// Median of `||I(eta_n) o eta_n||_{C^{-2 kappa}}`.
    pub raw_median: f64,
    /// Median of `||I(eta_n) o eta_n - c_n||_{C^{-2 kappa}}`.
    pub renorm_median: f64,
    /// Median of `||enh_n - enh_next||_{C^{-2 kappa}}` (renormalized terms); NaN on the last level.
    pub diff_median: f64,
    pub seeds: u64,
}

/// `I(eta_n)(t) o eta_n` with and without the counterterm, at level after level.
pub fn divergence_study(cfg: &RunConfig, levels: &[NoiseLevel], t: f64, dir: Option<&Path>) -> Result<Vec<DivergenceRow>> {
    cfg.validate()?;
    let p = cfg.partition()?;
    let g = p.grid().clone();
    let alpha = -2.0 * cfg.noise.kappa;
    let seeds: Vec<u64> = (0..cfg.noise.seeds).map(|i| cfg.noise.seed + i).collect();
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<(f64, f64, f64)>> {
            let noise = sample_white_noise(&g, seed);
            let mut res = Vec::new();
            let mut out = Vec::new();
            for &l in levels {
                let enh = enhance(&p, &noise, l, cfg.noise.kappa)?;
                let raw = enh.resonant_raw(t)?;
                let ren = raw.add(&RealField::constant(&g, -enh.c(t)))?;
                out.push((p.hoelder_norm(&raw, alpha)?, p.hoelder_norm(&ren, alpha)?, f64::NAN));
                res.push(ren);
            }
            for i in 0..levels.len().saturating_sub(1) {
                out[i].2 = p.hoelder_norm(&res[i].sub(&res[i + 1])?, alpha)?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let med = |f: &dyn Fn(&(f64, f64, f64)) -> f64, i: usize| quantile(&sorted(&per_seed.iter().map(|s| f(&s[i])).collect::<Vec<_>>()), 0.5);
    let rows: Vec<DivergenceRow> = levels
        .iter()
        .enumerate()
        .map(|(i, &l)| DivergenceRow {
            level: l.to_string(),
            c_n: CounterTerm::new(&p, l).at(t),
            raw_median: med(&|x| x.0, i),
            renorm_median: med(&|x| x.1, i),
            diff_median: if i + 1 < levels.len() { med(&|x| x.2, i) } else { f64::NAN },
            seeds: seeds.len() as u64,
        })
        .collect();
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        io::write_csv(&dir.join("divergence.csv"), &["level", "c_n", "raw_median", "renorm_median", "diff_median", "seeds"], &rows)?;
        cfg.persist(dir)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SuiteRow {
    spec: String,
    resolution: usize,
    max_ratio: f64,
    median_ratio: f64,
    slope: f64,
    pass: bool,
}

/// JSON summary of the inequality suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub all_pass: bool,
    pub reports: Vec<SweepReport>,
}

/// `inequality-suite`: every registered estimate (or the configured subset).
pub fn inequality_suite(cfg: &RunConfig, dir: Option<&Path>) -> Result<SuiteSummary> {
    cfg.validate()?;
    let ens = EnsembleSpec { resolutions: cfg.inequality.resolutions.clone(), seeds: cfg.inequality.seeds, seed_base: cfg.noise.seed };
    let suite: Vec<_> = registered_suite()
        .into_iter()
        .filter(|s| cfg.inequality.only.is_empty() || cfg.inequality.only.contains(&s.name))
        .collect();
    if suite.is_empty() {
        return Err(Error::Config("no estimate matches the selection".into()));
    }
    let reports = suite.into_iter().map(|s| estimate_constant(&s.with_ensemble(ens.clone()))).collect::<Result<Vec<_>>>()?;
    let summary = SuiteSummary { all_pass: reports.iter().all(|r| r.pass), reports };
    if let Some(dir) = dir {
        let rows: Vec<SuiteRow> = summary
            .reports
            .iter()
            .flat_map(|r| {
                r.per_resolution.iter().map(move |s| SuiteRow {
                    spec: r.name.clone(),
                    resolution: s.n,
                    max_ratio: s.max_ratio,
                    median_ratio: s.median_ratio,
                    slope: r.slope,
                    pass: r.pass,
                })
            })
            .collect();
        std::fs::create_dir_all(dir)?;
        io::write_csv(&dir.join("inequality_suite.csv"), &["spec", "resolution", "max_ratio", "median_ratio", "slope", "pass"], &rows)?;
        io::write_json(&dir.join("inequality_suite.json"), &summary)?;
        cfg.persist(dir)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.grid.n = 32;
        c.grid.dt = 0.05;
        c.grid.t_final = 0.2;
        c.noise.seeds = 3;
        c.noise.levels = "1..9".into();
        c.solver.u0 = 1.0;
        c.solver.diagnostic_seeds = 1;
        c
    }

    #[test]
    fn levels_clamp_and_dedupe() {
        let l = parse_levels("3..7", 5).unwrap();
        assert_eq!(l, vec![NoiseLevel::Level(3), NoiseLevel::Level(4), NoiseLevel::Full]);
        assert_eq!(parse_levels("full,2", 5).unwrap(), vec![NoiseLevel::Level(2), NoiseLevel::Full]);
        assert_eq!(parse_levels("1..=2", 5).unwrap().len(), 2);
        assert!(parse_levels("4..2", 5).is_err());
        assert!(parse_levels("x", 5).is_err());
    }

    #[test]
    fn toml_roundtrip_and_defaults() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        let partial = RunConfig::from_toml("[grid]\nn = 64\n").unwrap();
        assert_eq!(partial.grid.n, 64);
        assert_eq!(partial.noise.kappa, 0.1);
        assert!((partial.gamma() - (2.0 * 0.67 + 0.1 - 1.0) / 2.0).abs() < 1e-15);
        assert!(matches!(RunConfig::from_toml("[grid]\nbogus = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = small();
        c.noise.kappa = 1.5;
        assert!(c.validate().is_err());
        let mut c = small();
        c.solver.scheme = "rk4".into();
        assert!(c.validate().is_err());
        let mut c = small();
        c.grid.n = 30;
        assert!(c.validate().is_err());
        assert!(small().validate().unwrap().feasible);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.25), 1.75);
        assert_eq!(quantile(&s, 1.0), 4.0);
    }

    #[test]
    fn convergence_study_is_reproducible() {
        let c = small();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let r = convergence_study(&c, a.path()).unwrap();
        convergence_study(&c, b.path()).unwrap();
        assert_eq!(r.levels, vec!["1", "2", "full"]);
        assert_eq!(r.diagnostic_runs, 2);
        for f in ["convergence.csv", "convergence_naive.csv", "per_seed.csv", "max_principle.csv", "summary.json", "config.toml"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let text = std::fs::read_to_string(a.path().join("convergence.csv")).unwrap();
        assert!(text.starts_with("level_pair,median_diff,q25,q75,seeds\n1-2,"));
        let back = RunConfig::load(&a.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn para_solve_writes_ledger_and_monitor() {
        let mut c = small();
        c.solver.scheme = "para".into();
        let d = tempfile::tempdir().unwrap();
        let s = run_solve(&c, d.path()).unwrap();
        assert!(s.min_margin.unwrap() >= -1e-9);
        assert!(s.max_defect.unwrap() < 1e-10);
        for f in ["run.json", "ledger.csv", "max_principle.csv", "c_n.csv", "trajectory/manifest.json"] {
            assert!(d.path().join(f).exists(), "{f}");
        }
    }
}
