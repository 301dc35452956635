//! Command-line front end. Flags override values from `--config`; the
//! effective configuration is written next to every output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpam::experiments::{self, parse_levels, RunConfig};
use gpam::gpam::{audit_budget, ParameterBudget};
use gpam::noise::renorm_constant;
use gpam::{Error, Result};

#[derive(Parser)]
#[command(name = "gpam", version, about = "Paracontrolled calculus on the 2-torus and a renormalized gPAM solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Naive,
    Renorm,
    Para,
}

impl Scheme {
    fn name(self) -> &'static str {
        match self {
            Scheme::Naive => "naive",
            Scheme::Renorm => "renorm",
            Scheme::Para => "para",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample (and mollify) white noise.
    SampleNoise(Common),
    /// Write an enhanced-noise bundle.
    Enhance(Common),
    /// Print c_n(t).
    RenormConstant(Common),
    /// Solve the equation with the chosen scheme.
    Solve {
        scheme: Scheme,
        #[command(flatten)]
        common: Common,
    },
    /// Differences between consecutive noise levels over seeds.
    ConvergenceStudy(Common),
    /// Raw and renormalized resonant term across levels.
    DivergenceStudy(Common),
    /// Resolution sweeps of the registered estimates.
    InequalitySuite {
        #[command(flatten)]
        common: Common,
        /// Comma-separated estimate names.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// Comma-separated grid sizes.
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
    },
    /// Evaluate the exponent budget.
    AuditBudget(Common),
    /// Paracontrolled solve with the maximum-principle monitor.
    MaxPrinciple(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $GPAM_OUTPUT_ROOT/<command>).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Grid size.
    #[arg(long)]
    grid: Option<usize>,
    /// Dyadic partition: sharp or smooth.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T", alias = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    save_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    seeds: Option<u64>,
    /// Noise level: integer or `full`.
    #[arg(long = "n", alias = "level")]
    level: Option<String>,
    /// Level list, e.g. `3..7` or `3,4,full`.
    #[arg(long)]
    levels: Option<String>,
    /// Time for renorm-constant and divergence-study.
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated times for enhance.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Cutoff R.
    #[arg(long = "R")]
    cutoff: Option<i32>,
    /// Split cutoff R1.
    #[arg(long = "R1")]
    split_cutoff: Option<i32>,
    /// Nonlinearity: sin, tanh, c*tanh, const:c, linear:a.
    #[arg(long = "F")]
    nonlinearity: Option<String>,
    /// Constant initial value.
    #[arg(long)]
    u0: Option<f64>,
    /// Seeds of a convergence study that get a diagnostic paracontrolled run.
    #[arg(long)]
    diagnostic_seeds: Option<u64>,
    /// Disable the paracontrolled diagnostics.
    #[arg(long)]
    no_diagnostics: bool,
}

impl Common {
    fn config(&self, command: &str) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        c.run.command = command.to_string();
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        if let Some(o) = &self.output {
            c.run.output = Some(o.clone());
        }
        set!(self.grid => c.grid.n);
        set!(self.partition => c.grid.partition);
        set!(self.dt => c.grid.dt);
        set!(self.t_final => c.grid.t_final);
        set!(self.save_every => c.grid.save_every);
        set!(self.seed => c.noise.seed);
        set!(self.level => c.noise.level);
        set!(self.levels => c.noise.levels);
        set!(self.times => c.noise.times);
        set!(self.kappa => c.noise.kappa);
        set!(self.alpha => c.solver.alpha);
        set!(self.eps => c.solver.epsilon);
        set!(self.delta => c.solver.delta);
        set!(self.nonlinearity => c.solver.nonlinearity);
        set!(self.u0 => c.solver.u0);
        set!(self.diagnostic_seeds => c.solver.diagnostic_seeds);
        if command == "inequality-suite" {
            set!(self.seeds => c.inequality.seeds);
        } else {
            set!(self.seeds => c.noise.seeds);
        }
        if self.gamma.is_some() {
            c.solver.gamma = self.gamma;
        }
        if self.cutoff.is_some() {
            c.solver.cutoff = self.cutoff;
        }
        if self.split_cutoff.is_some() {
            c.solver.split_cutoff = self.split_cutoff;
        }
        if self.no_diagnostics {
            c.solver.diagnostics = false;
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SampleNoise(a) => {
            let c = a.config("sample-noise")?;
            let dir = c.output_dir();
            let v = experiments::run_sample_noise(&c, &dir)?;
            println!("eta_norm={v:?}");
            println!("output={}", dir.display());
        }
        Command::Enhance(a) => {
            let c = a.config("enhance")?;
            let dir = c.output_dir();
            for r in experiments::run_enhance(&c, &dir)? {
                println!("{}={:?}", r.quantity, r.value);
            }
            println!("output={}", dir.display());
        }
        Command::RenormConstant(a) => {
            let c = a.config("renorm-constant")?;
            c.validate()?;
            let t = a.t.unwrap_or(1.0);
            println!("{:?}", renorm_constant(&c.partition()?, c.level()?, t)?);
        }
        Command::Solve { scheme, common } => {
            let mut c = common.config("solve")?;
            c.solver.scheme = scheme.name().into();
            let dir = c.output_dir();
            let s = experiments::run_solve(&c, &dir)?;
            println!("final_sup={:?}", s.final_sup);
            if let Some(m) = s.min_margin {
                println!("min_margin={m:?}");
            }
            if let Some(d) = s.max_defect {
                println!("max_ansatz_defect={d:?}");
            }
            println!("output={}", dir.display());
        }
        Command::ConvergenceStudy(a) => {
            let c = a.config("convergence-study")?;
            let dir = c.output_dir();
            let r = experiments::convergence_study(&c, &dir)?;
            for p in &r.renorm {
                println!("{} median_diff={:?} q25={:?} q75={:?}", p.level_pair, p.median_diff, p.q25, p.q75);
            }
            println!("monotone={}", r.renorm_monotone);
            println!("naive_violations={}/{}", r.naive_violations, r.seeds);
            if let Some(m) = r.min_margin {
                println!("min_margin={m:?}");
            }
            println!("output={}", dir.display());
        }
        Command::DivergenceStudy(a) => {
            let c = a.config("divergence-study")?;
            let dir = c.output_dir();
            c.validate()?;
            let levels = parse_levels(&c.noise.levels, c.grid()?.j_max())?;
            let rows = experiments::divergence_study(&c, &levels, a.t.unwrap_or(1.0), Some(&dir))?;
            for r in rows {
                println!("level={} c_n={:?} raw={:?} renorm={:?} diff={:?}", r.level, r.c_n, r.raw_median, r.renorm_median, r.diff_median);
            }
            println!("output={}", dir.display());
        }
        Command::InequalitySuite { common, only, resolutions } => {
            let mut c = common.config("inequality-suite")?;
            if let Some(o) = only {
                c.inequality.only = o;
            }
            if let Some(r) = resolutions {
                c.inequality.resolutions = r;
            }
            let dir = c.output_dir();
            let s = experiments::inequality_suite(&c, Some(&dir))?;
            for r in &s.reports {
                println!("{} slope={:?} pass={}", r.name, r.slope, r.pass);
            }
            println!("all_pass={}", s.all_pass);
            println!("output={}", dir.display());
        }
        Command::AuditBudget(a) => {
            let c = a.config("audit-budget")?;
            let b = ParameterBudget::new(c.noise.kappa, c.solver.alpha, c.solver.epsilon, c.solver.delta);
            let r = audit_budget(&b)?;
            println!("feasible={}", r.feasible);
            println!("margin={:?}", r.margin);
            println!("gamma={:?}", r.gamma);
            println!("theta0={:?}", r.theta0);
            println!("theta1={:?}", r.theta1);
            println!("theta={:?}", r.theta);
            println!("big_theta={:?}", r.big_theta);
            println!("contraction={:?}", r.contraction);
            if let Some(reason) = &r.reason {
                println!("reason={reason}");
            }
        }
        Command::MaxPrinciple(a) => {
            let mut c = a.config("max-principle")?;
            c.solver.scheme = "para".into();
            c.solver.diagnostics = true;
            let dir = c.output_dir();
            let s = experiments::run_solve(&c, &dir)?;
            let m = s.min_margin.ok_or_else(|| Error::Stability("monitor produced no entries".into()))?;
            println!("min_margin={m:?}");
            println!("holds={}", m >= -1e-9);
            println!("output={}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
