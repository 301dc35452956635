//! Resolution sweeps that turn the `<~` estimates of the calculus into
//! falsifiable tests: the ratio left/right is sampled on Gaussian ensembles
//! coupled across grids and must not grow systematically with resolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::{duhamel, duhamel_commutator, heat, Trajectory};
use crate::littlewood_paley::{
    besov_from_blocks, c_norm, classical_hoelder, weighted_norms, BlockStack, DyadicPartition, Exponent,
};
use crate::nonlinearity::NonlinearitySpec;
use crate::paraproducts::{commutator, paralinearization_remainder, paraproduct, resonant};
use crate::rng::{counter_gaussian_pair, streams};
use crate::spectral::{Grid, RealField, C64};

/// Maximal admissible log2-slope of the max ratio against resolution.
pub const TREND_TOLERANCE: f64 = 0.1;

/// Gaussian field with spectral law `|k|^{-(regularity + 1)}`, so that its
/// samples sit in `C^regularity` up to logarithms. Coefficients are keyed by
/// wavenumber, hence coupled across grids. Nyquist modes vanish; the mean is
/// a standard Gaussian when `with_mean` is set and zero otherwise.
pub fn gaussian_field(grid: &Grid, regularity: f64, seed: u64, stream: u64, with_mean: bool) -> RealField {
    let s = regularity + 1.0;
    let mut c = vec![C64::new(0.0, 0.0); grid.len()];
    for idx in 0..grid.len() {
        if grid.is_nyquist(idx) {
            continue;
        }
        let (k1, k2) = grid.freq(idx);
        if k2 > 0 || (k2 == 0 && k1 > 0) {
            let (a, b) = counter_gaussian_pair(seed, stream, k1, k2);
            let amp = (grid.k2(idx) as f64).powf(-0.5 * s) * std::f64::consts::FRAC_1_SQRT_2;
            c[idx] = C64::new(a * amp, b * amp);
            c[grid.neg_index(idx)] = c[idx].conj();
        } else if k1 == 0 && k2 == 0 && with_mean {
            c[idx] = C64::new(counter_gaussian_pair(seed, stream, 0, 0).0, 0.0);
        }
    }
    RealField::from_spectral(grid, c).expect("hermitian coefficients")
}

/// Sampling law and sweep sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub resolutions: Vec<usize>,
    pub seeds: u64,
    pub seed_base: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { resolutions: vec![32, 64, 128], seeds: 50, seed_base: 0 }
    }
}

/// The estimate being probed, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimateKind {
    /// `||Delta_j P_t f||_inf <= C e^{-c 4^j t} ||Delta_j f||_inf`, `j >= 0`.
    HeatBlockDecay { rate: f64, taus: Vec<f64> },
    /// `||P_t f||_{theta+alpha} <= C t^{-theta/2} ||f||_alpha`.
    Smoothing { alpha: f64, thetas: Vec<f64>, times: Vec<f64> },
    /// `||P_t f||_inf <= C t^{theta/2} ||f||_theta`, `theta < 0`.
    LowRegularitySup { theta: f64, times: Vec<f64> },
    /// `||P_t f - f||_inf <= C t^{theta/2} ||f||_theta`, `0 < theta < 2`.
    Continuity { theta: f64, times: Vec<f64> },
    /// `||I f||_{S^{2-alpha,gamma}} <= C ||f||_{C^{-alpha,gamma}}`.
    Schauder { alpha: f64, gamma: f64, t_final: f64, dt: f64 },
    /// `||I f||_{S^{2-alpha}} <= C ||f||_{C^{-alpha+2gamma,gamma}}`.
    SchauderShifted { alpha: f64, gamma: f64, t_final: f64, dt: f64 },
    /// `||f||_alpha <= ||f||_{alpha1}^theta ||f||_{alpha2}^{1-theta}` with constant one.
    Interpolation { alpha1: f64, alpha2: f64, theta: f64 },
    /// `||f||_{S^{alpha,delta}} <= C ||f||_{S^{beta,delta1}}^theta ||f||_{L^inf_T}^{1-theta}`, `theta = alpha/beta`.
    SpaceTimeInterpolation { alpha: f64, beta: f64, delta1: f64, delta: f64, t_final: f64, dt: f64 },
    /// `||f < g||_beta <= C ||f||_inf ||g||_beta`.
    ParaproductBounded { beta: f64, constant_f: bool },
    /// `||f < g||_{alpha+beta} <= C ||f||_alpha ||g||_beta`, `alpha < 0`.
    ParaproductNegative { alpha: f64, beta: f64 },
    /// `||f o g||_{alpha+beta} <= C ||f||_alpha ||g||_beta`, `alpha + beta > 0`.
    Resonant { alpha: f64, beta: f64 },
    /// `||com(f,g,h)||_{alpha+beta+gamma} <= C ||f||_alpha ||g||_beta ||h||_gamma`.
    Commutator { alpha: f64, beta: f64, gamma: f64 },
    /// `||Delta_j (P_t(f<g) - f<P_t g)||_inf <= C t^{-delta/2} 2^{-(alpha+beta+delta)j} ||f||_alpha ||g||_beta`.
    HeatParaproductCommutator { alpha: f64, beta: f64, delta: f64, times: Vec<f64> },
    /// `||[I, f<]g||_{C^{alpha+beta+2,gamma}} <= C ||f||_{S^{alpha,gamma}} ||g||_{L^inf_T C^beta}`.
    DuhamelCommutator { alpha: f64, beta: f64, gamma: f64, t_final: f64, dt: f64 },
    /// `||Delta_{>R} f||_alpha <= C 2^{-R(beta-alpha)} ||f||_beta`, `alpha <= beta`.
    LocalizerHigh { alpha: f64, beta: f64 },
    /// `||Delta_{<=R} f||_beta <= C 2^{R(beta-alpha)} ||f||_alpha`, `alpha <= beta`.
    LocalizerLow { alpha: f64, beta: f64 },
    /// `||F(u) - F'(u) < u||_{2 alpha} <= C (||u||_alpha^2 + 1)` for normalized `u`, `F = sin`.
    Paralinearization { alpha: f64 },
    /// Two-sided equivalence of the classical and the block Hoelder norms.
    HoelderEquivalence { alpha: f64 },
}

/// One registered estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSpec {
    pub name: String,
    /// The inequality in words.
    pub statement: String,
    /// Hypotheses the parameters must satisfy.
    pub hypotheses: String,
    pub kind: EstimateKind,
    pub ensemble: EnsembleSpec,
}

/// Ratio statistics at one resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionStats {
    pub n: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
}

/// Outcome of a resolution sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub name: String,
    pub per_resolution: Vec<ResolutionStats>,
    /// Least-squares slope of `log2 max_ratio` against `log2 n`.
    pub slope: f64,
    pub pass: bool,
}

fn gate(ok: bool, msg: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}

fn time_params(t_final: f64, dt: f64) -> Result<()> {
    gate(t_final > 0.0 && dt > 0.0 && dt < t_final, "need 0 < dt < t_final")
}

impl EstimateKind {
    /// Reject parameters outside the estimate's hypotheses.
    pub fn validate(&self) -> Result<()> {
        use EstimateKind::*;
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            HeatBlockDecay { rate, taus } => gate(*rate > 0.0 && taus.iter().all(|&t| t >= 0.0), "rate > 0 and tau >= 0"),
            Smoothing { alpha, thetas, times } => {
                gate(alpha.is_finite() && thetas.iter().all(|&t| t > 0.0), "theta > 0")?;
                gate(times.iter().all(|&t| t > 0.0), "t > 0")
            }
            LowRegularitySup { theta, times } => {
                gate(*theta < 0.0, "theta < 0")?;
                gate(times.iter().all(|&t| t > 0.0), "t > 0")
            }
            Continuity { theta, times } => {
                gate(*theta > 0.0 && *theta < 2.0, "0 < theta < 2")?;
                gate(times.iter().all(|&t| t >= 0.0), "t >= 0")
            }
            Schauder { alpha, gamma, t_final, dt } => {
                gate(*alpha > 0.0 && *alpha < 2.0, "alpha in (0, 2)")?;
                gate((0.0..1.0).contains(gamma), "gamma in [0, 1)")?;
                time_params(*t_final, *dt)
            }
            SchauderShifted { alpha, gamma, t_final, dt } => {
                gate(*alpha > 0.0 && *alpha < 2.0, "alpha in (0, 2)")?;
                gate(*gamma > 0.0 && *gamma < 1.0, "gamma in (0, 1)")?;
                time_params(*t_final, *dt)
            }
            Interpolation { alpha1, alpha2, theta } => {
                gate(finite(&[*alpha1, *alpha2]) && (0.0..=1.0).contains(theta), "theta in [0, 1]")
            }
            SpaceTimeInterpolation { alpha, beta, delta1, delta, t_final, dt } => {
                gate(*alpha > 0.0 && alpha < beta && *beta <= 2.0, "0 < alpha < beta <= 2")?;
                let theta = alpha / beta;
                gate(*delta1 >= 0.0 && theta * delta1 <= *delta && *delta <= 1.0, "0 <= theta delta1 <= delta <= 1")?;
                gate(*delta1 < 1.0, "delta1 < 1")?;
                time_params(*t_final, *dt)
            }
            ParaproductBounded { beta, .. } => gate(beta.is_finite(), "beta finite"),
            ParaproductNegative { alpha, beta } => gate(*alpha < 0.0 && beta.is_finite(), "alpha < 0"),
            Resonant { alpha, beta } => gate(alpha + beta > 0.0, "alpha + beta > 0"),
            Commutator { alpha, beta, gamma } => {
                gate(*alpha > 0.0 && *alpha < 1.0, "alpha in (0, 1)")?;
                gate(alpha + beta + gamma > 0.0, "alpha + beta + gamma > 0")?;
                gate(beta + gamma < 0.0, "beta + gamma < 0")
            }
            HeatParaproductCommutator { alpha, beta, delta, times } => {
                gate(*alpha > 0.0 && *alpha < 1.0, "alpha in (0, 1)")?;
                gate(beta.is_finite() && *delta >= 0.0, "delta >= 0")?;
                gate(times.iter().all(|&t| t > 0.0), "t > 0")
            }
            DuhamelCommutator { alpha, beta, gamma, t_final, dt } => {
                gate(*alpha > 0.0 && *alpha < 1.0, "alpha in (0, 1)")?;
                gate(beta.is_finite() && (0.0..1.0).contains(gamma), "gamma in [0, 1)")?;
                time_params(*t_final, *dt)
            }
            LocalizerHigh { alpha, beta } | LocalizerLow { alpha, beta } => gate(alpha <= beta, "alpha <= beta"),
            Paralinearization { alpha } => gate(*alpha > 0.0 && *alpha < 1.0, "alpha in (0, 1)"),
            HoelderEquivalence { alpha } => gate(*alpha > 0.0 && *alpha < 1.0, "alpha in (0, 1)"),
        }
    }
}

impl EstimateSpec {
    pub fn new(name: &str, statement: &str, hypotheses: &str, kind: EstimateKind) -> EstimateSpec {
        EstimateSpec {
            name: name.into(),
            statement: statement.into(),
            hypotheses: hypotheses.into(),
            kind,
            ensemble: EnsembleSpec::default(),
        }
    }

    pub fn with_ensemble(mut self, ensemble: EnsembleSpec) -> EstimateSpec {
        self.ensemble = ensemble;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        gate(!self.ensemble.resolutions.is_empty() && self.ensemble.seeds > 0, "empty ensemble")?;
        for &n in &self.ensemble.resolutions {
            Grid::new(n)?;
        }
        Ok(())
    }

    /// All left/right ratios of one ensemble member at one resolution.
    pub fn ratios(&self, p: &DyadicPartition, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let out = sample_ratios(&self.kind, p, seed)?;
        if let Some(bad) = out.iter().find(|r| !r.is_finite()) {
            return Err(Error::NonFinite(format!("{}: ratio {bad}", self.name)));
        }
        Ok(out)
    }
}

fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

fn mesh(t_final: f64, dt: f64) -> Vec<f64> {
    let m = (t_final / dt).round() as usize;
    (0..=m).map(|i| i as f64 * dt).collect()
}

fn field(p: &DyadicPartition, reg: f64, seed: u64, role: u64) -> RealField {
    gaussian_field(p.grid(), reg, seed, streams::ENSEMBLE_BASE + role, false)
}

fn sup_over(traj: &Trajectory) -> f64 {
    traj.fields().iter().map(|f| f.sup_norm()).fold(0.0, f64::max)
}

fn sample_ratios(kind: &EstimateKind, p: &DyadicPartition, seed: u64) -> Result<Vec<f64>> {
    use EstimateKind::*;
    let norm = |f: &RealField, a: f64| p.hoelder_norm(f, a);
    let mut out = Vec::new();
    match kind {
        HeatBlockDecay { rate, taus } => {
            let f = field(p, 0.0, seed, 0);
            for j in 0..=p.j_max() {
                let b = p.block(&f, j)?;
                let bn = b.sup_norm();
                for &tau in taus {
                    let t = tau / 4f64.powi(j);
                    out.push(heat(&b, t)?.sup_norm() / ((-rate * tau).exp() * bn));
                }
            }
        }
        Smoothing { alpha, thetas, times } => {
            let f = field(p, *alpha, seed, 0);
            let fa = norm(&f, *alpha)?;
            for &t in times {
                let blocks = BlockStack::new(p, &heat(&f, t)?)?.norms(Exponent::Inf);
                for &th in thetas {
                    out.push(t.powf(th / 2.0) * besov_from_blocks(&blocks, alpha + th, Exponent::Inf) / fa);
                }
            }
        }
        LowRegularitySup { theta, times } => {
            let f = field(p, *theta, seed, 0);
            let ft = norm(&f, *theta)?;
            for &t in times {
                out.push(heat(&f, t)?.sup_norm() / (t.powf(theta / 2.0) * ft));
            }
        }
        Continuity { theta, times } => {
            let f = field(p, *theta, seed, 0);
            let ft = norm(&f, *theta)?;
            for &t in times.iter().filter(|&&t| t > 0.0) {
                out.push(heat(&f, t)?.sub(&f)?.sup_norm() / (t.powf(theta / 2.0) * ft));
            }
        }
        Schauder { alpha, gamma, t_final, dt } => {
            let g = field(p, -alpha, seed, 0);
            let f = singular_forcing(&g, *gamma, *t_final, *dt)?;
            let lhs = weighted_norms(&duhamel(&f)?, p, 2.0 - alpha, *gamma)?.s_norm;
            out.push(lhs / c_norm(&f, p, -alpha, *gamma)?);
        }
        SchauderShifted { alpha, gamma, t_final, dt } => {
            let reg = -alpha + 2.0 * gamma;
            let g = field(p, reg, seed, 0);
            let f = singular_forcing(&g, *gamma, *t_final, *dt)?;
            let lhs = weighted_norms(&duhamel(&f)?, p, 2.0 - alpha, 0.0)?.s_norm;
            out.push(lhs / c_norm(&f, p, reg, *gamma)?);
        }
        Interpolation { alpha1, alpha2, theta } => {
            let a = theta * alpha1 + (1.0 - theta) * alpha2;
            let f = field(p, a, seed, 0);
            out.push(interpolation_ratio(p, &f, *alpha1, *alpha2, *theta)?);
        }
        SpaceTimeInterpolation { alpha, beta, delta1, delta, t_final, dt } => {
            let f0 = field(p, beta + 0.1, seed, 0);
            let f1 = field(p, beta + 0.1, seed, 1);
            let traj = Trajectory::from_fn(mesh(*t_final, *dt), |t| {
                heat(&f0, t).unwrap().lincomb(1.0, &f1, (std::f64::consts::PI * t).sin()).unwrap()
            })?;
            let theta = alpha / beta;
            let lhs = weighted_norms(&traj, p, *alpha, *delta)?.s_norm;
            let hi = weighted_norms(&traj, p, *beta, *delta1)?.s_norm;
            out.push(lhs / (hi.powf(theta) * sup_over(&traj).powf(1.0 - theta)));
        }
        ParaproductBounded { beta, constant_f } => {
            let f = if *constant_f {
                RealField::constant(p.grid(), 1.0)
            } else {
                gaussian_field(p.grid(), 0.3, seed, streams::ENSEMBLE_BASE, true)
            };
            let g = field(p, *beta, seed, 1);
            out.push(norm(&paraproduct(p, &f, &g)?, *beta)? / (f.sup_norm() * norm(&g, *beta)?));
        }
        ParaproductNegative { alpha, beta } => {
            let (f, g) = (field(p, *alpha, seed, 0), field(p, *beta, seed, 1));
            out.push(norm(&paraproduct(p, &f, &g)?, alpha + beta)? / (norm(&f, *alpha)? * norm(&g, *beta)?));
        }
        Resonant { alpha, beta } => {
            let (f, g) = (field(p, *alpha, seed, 0), field(p, *beta, seed, 1));
            out.push(norm(&resonant(p, &f, &g)?, alpha + beta)? / (norm(&f, *alpha)? * norm(&g, *beta)?));
        }
        Commutator { alpha, beta, gamma } => {
            let (f, g, h) = (field(p, *alpha, seed, 0), field(p, *beta, seed, 1), field(p, *gamma, seed, 2));
            let c = commutator(p, &f, &g, &h)?;
            out.push(norm(&c, alpha + beta + gamma)? / (norm(&f, *alpha)? * norm(&g, *beta)? * norm(&h, *gamma)?));
        }
        HeatParaproductCommutator { alpha, beta, delta, times } => {
            let (f, g) = (field(p, *alpha, seed, 0), field(p, *beta, seed, 1));
            let rhs = norm(&f, *alpha)? * norm(&g, *beta)?;
            let fg = paraproduct(p, &f, &g)?;
            for &t in times {
                let d = heat(&fg, t)?.sub(&paraproduct(p, &f, &heat(&g, t)?)?)?;
                let blocks = BlockStack::new(p, &d)?.norms(Exponent::Inf);
                for (j, b) in p.levels().zip(blocks) {
                    out.push(t.powf(delta / 2.0) * 2f64.powf((alpha + beta + delta) * j as f64) * b / rhs);
                }
            }
        }
        DuhamelCommutator { alpha, beta, gamma, t_final, dt } => {
            let f0 = field(p, *alpha, seed, 0);
            let g0 = field(p, *beta, seed, 1);
            let times = mesh(*t_final, *dt);
            let f = Trajectory::from_fn(times.clone(), |t| f0.scale(1.0 + 0.5 * (2.0 * std::f64::consts::PI * t).sin()))?;
            let g = Trajectory::from_fn(times, |_| g0.clone())?;
            let c = duhamel_commutator(&f, &g, p)?;
            let lhs = c_norm(&c, p, alpha + beta + 2.0, *gamma)?;
            out.push(lhs / (weighted_norms(&f, p, *alpha, *gamma)?.s_norm * norm(&g0, *beta)?));
        }
        LocalizerHigh { alpha, beta } => {
            let f = field(p, *beta, seed, 0);
            let fb = norm(&f, *beta)?;
            for r in p.levels() {
                let lo = p.localize_high(&f, r as f64)?;
                out.push(2f64.powf(r as f64 * (beta - alpha)) * norm(&lo, *alpha)? / fb);
            }
        }
        LocalizerLow { alpha, beta } => {
            let f = field(p, *alpha, seed, 0);
            let fa = norm(&f, *alpha)?;
            for r in p.levels() {
                let lo = p.localize_low(&f, r as f64)?;
                out.push(norm(&lo, *beta)? / (2f64.powf(r as f64 * (beta - alpha)) * fa));
            }
        }
        Paralinearization { alpha } => {
            let v = field(p, *alpha, seed, 0);
            let u = v.scale(1.0 / norm(&v, *alpha)?);
            let r = paralinearization_remainder(p, &NonlinearitySpec::sin(), &u)?;
            out.push(norm(&r, 2.0 * alpha)? / (norm(&u, *alpha)?.powi(2) + 1.0));
        }
        HoelderEquivalence { alpha } => {
            let f = field(p, *alpha, seed, 0);
            let (a, b) = (classical_hoelder(&f, *alpha)?, norm(&f, *alpha)?);
            out.push((a / b).max(b / a));
        }
    }
    Ok(out)
}

/// `f(t) = t^{-gamma} (1 + sin(2 pi t) / 2) g`, with the singular value at
/// `t = 0` replaced by the one at the first positive mesh time.
fn singular_forcing(g: &RealField, gamma: f64, t_final: f64, dt: f64) -> Result<Trajectory> {
    Trajectory::from_fn(mesh(t_final, dt), |t| {
        let s = t.max(dt);
        g.scale(s.powf(-gamma) * (1.0 + 0.5 * (2.0 * std::f64::consts::PI * s).sin()))
    })
}

/// `||f||_alpha / (||f||_{alpha1}^theta ||f||_{alpha2}^{1-theta})` with
/// `alpha = theta alpha1 + (1-theta) alpha2`, from one set of block norms.
pub fn interpolation_ratio(p: &DyadicPartition, f: &RealField, alpha1: f64, alpha2: f64, theta: f64) -> Result<f64> {
    let blocks = p.block_norms(f, Exponent::Inf)?;
    let a = theta * alpha1 + (1.0 - theta) * alpha2;
    let lhs = besov_from_blocks(&blocks, a, Exponent::Inf);
    let rhs = besov_from_blocks(&blocks, alpha1, Exponent::Inf).powf(theta)
        * besov_from_blocks(&blocks, alpha2, Exponent::Inf).powf(1.0 - theta);
    Ok(lhs / rhs)
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn trend_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Sweep an estimate over its resolutions and seeds. Every member's ratios
/// are reduced to their maximum; per resolution the ensemble max and median
/// of those are reported, and the sweep passes when the log2 max ratio does
/// not grow faster than `TREND_TOLERANCE` per doubling.
pub fn estimate_constant(spec: &EstimateSpec) -> Result<SweepReport> {
    spec.validate()?;
    let mut per_resolution = Vec::new();
    for &n in &spec.ensemble.resolutions {
        let p = DyadicPartition::smooth(&Grid::new(n)?);
        let base = spec.ensemble.seed_base;
        let mut worst = (0..spec.ensemble.seeds)
            .into_par_iter()
            .map(|i| Ok(spec.ratios(&p, base + i)?.into_iter().fold(0.0, f64::max)))
            .collect::<Result<Vec<f64>>>()?;
        worst.sort_by(f64::total_cmp);
        per_resolution.push(ResolutionStats { n, max_ratio: *worst.last().unwrap(), median_ratio: median(&worst) });
    }
    let x: Vec<f64> = per_resolution.iter().map(|r| (r.n as f64).log2()).collect();
    let y: Vec<f64> = per_resolution.iter().map(|r| r.max_ratio.log2()).collect();
    let slope = trend_slope(&x, &y);
    Ok(SweepReport { name: spec.name.clone(), per_resolution, slope, pass: slope <= TREND_TOLERANCE })
}

/// The registered estimates, each naming the inequality and its hypotheses.
pub fn registered_suite() -> Vec<EstimateSpec> {
    use EstimateKind::*;
    let times = log_times(1e-3, 1.0, 13);
    let kinds: Vec<(&str, &str, &str, EstimateKind)> = vec![
        (
            "heat_block_decay",
            "||Delta_j P_t f||_inf <~ exp(-4^j t / 2) ||Delta_j f||_inf",
            "j >= 0, t >= 0",
            HeatBlockDecay { rate: 0.5, taus: vec![0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0] },
        ),
        (
            "heat_smoothing",
            "||P_t f||_{theta+alpha} <~ t^{-theta/2} ||f||_alpha",
            "theta > 0, t in (0, 1]",
            Smoothing { alpha: 0.3, thetas: vec![0.5, 1.0, 1.5], times: times.clone() },
        ),
        (
            "heat_low_regularity_sup",
            "||P_t f||_inf <~ t^{theta/2} ||f||_theta",
            "theta < 0, t in (0, 1]",
            LowRegularitySup { theta: -0.5, times: times.clone() },
        ),
        (
            "heat_continuity",
            "||P_t f - f||_inf <~ t^{theta/2} ||f||_theta",
            "0 < theta < 2, t in [0, 1]",
            Continuity { theta: 0.8, times: times.clone() },
        ),
        (
            "duhamel_schauder",
            "||I f||_{S^{2-alpha,gamma}_T} <~ ||f||_{C^{-alpha,gamma}_T}",
            "alpha in (0, 2), gamma in [0, 1)",
            Schauder { alpha: 0.5, gamma: 0.3, t_final: 0.25, dt: 5e-3 },
        ),
        (
            "duhamel_schauder_shifted",
            "||I f||_{S^{2-alpha}_T} <~ ||f||_{C^{-alpha+2gamma,gamma}_T}",
            "alpha in (0, 2), gamma in (0, 1)",
            SchauderShifted { alpha: 1.0, gamma: 0.25, t_final: 0.25, dt: 5e-3 },
        ),
        (
            "interpolation",
            "||f||_alpha <= ||f||_{alpha1}^theta ||f||_{alpha2}^{1-theta}",
            "alpha = theta alpha1 + (1-theta) alpha2, theta in [0, 1]",
            Interpolation { alpha1: -0.5, alpha2: 1.2, theta: 0.4 },
        ),
        (
            "space_time_interpolation",
            "||f||_{S^{alpha,delta}_T} <~ ||f||_{S^{beta,delta1}_T}^theta ||f||_{L^inf_T}^{1-theta}",
            "0 < alpha < beta <= 2, theta = alpha/beta, 0 <= theta delta1 <= delta <= 1",
            SpaceTimeInterpolation { alpha: 0.5, beta: 1.5, delta1: 0.3, delta: 0.1, t_final: 0.25, dt: 5e-3 },
        ),
        (
            "paraproduct_bounded",
            "||f < g||_beta <~ ||f||_inf ||g||_beta",
            "beta real",
            ParaproductBounded { beta: -0.5, constant_f: false },
        ),
        (
            "paraproduct_constant",
            "||1 < g||_beta <~ ||g||_beta",
            "beta real, f = 1",
            ParaproductBounded { beta: -0.5, constant_f: true },
        ),
        (
            "paraproduct_negative",
            "||f < g||_{alpha+beta} <~ ||f||_alpha ||g||_beta",
            "alpha < 0",
            ParaproductNegative { alpha: -0.5, beta: 0.3 },
        ),
        (
            "resonant_product",
            "||f o g||_{alpha+beta} <~ ||f||_alpha ||g||_beta",
            "alpha + beta > 0",
            Resonant { alpha: 0.8, beta: -0.5 },
        ),
        (
            "commutator",
            "||com(f,g,h)||_{alpha+beta+gamma} <~ ||f||_alpha ||g||_beta ||h||_gamma",
            "alpha in (0, 1), alpha + beta + gamma > 0, beta + gamma < 0",
            Commutator { alpha: 0.8, beta: 0.8, gamma: -1.2 },
        ),
        (
            "heat_paraproduct_commutator",
            "||Delta_j (P_t(f<g) - f<P_t g)||_inf <~ t^{-delta/2} 2^{-(alpha+beta+delta)j} ||f||_alpha ||g||_beta",
            "alpha in (0, 1), delta >= 0, t in (0, 1]",
            HeatParaproductCommutator { alpha: 0.5, beta: -0.5, delta: 1.0, times: log_times(1e-3, 1.0, 7) },
        ),
        (
            "duhamel_commutator",
            "||[I, f<]g||_{C^{alpha+beta+2,gamma}_T} <~ ||f||_{S^{alpha,gamma}_T} ||g||_{L^inf_T C^beta}",
            "alpha in (0, 1), gamma in [0, 1)",
            DuhamelCommutator { alpha: 0.5, beta: -1.1, gamma: 0.0, t_final: 0.25, dt: 5e-3 },
        ),
        (
            "localizer_high",
            "||Delta_{>R} f||_alpha <~ 2^{-R(beta-alpha)} ||f||_beta",
            "alpha <= beta",
            LocalizerHigh { alpha: -0.5, beta: 0.5 },
        ),
        (
            "localizer_low",
            "||Delta_{<=R} f||_beta <~ 2^{R(beta-alpha)} ||f||_alpha",
            "alpha <= beta",
            LocalizerLow { alpha: -0.5, beta: 0.5 },
        ),
        (
            "paralinearization",
            "||F(u) - F'(u) < u||_{2 alpha} <~ ||u||_alpha^2 + 1, F = sin",
            "alpha in (0, 1), ||u||_alpha = 1",
            Paralinearization { alpha: 0.75 },
        ),
        (
            "hoelder_equivalence",
            "||f||_{C^alpha} ~ ||f||_{B^alpha_{inf,inf}}",
            "alpha in (0, 1)",
            HoelderEquivalence { alpha: 0.5 },
        ),
    ];
    kinds.into_iter().map(|(n, s, h, k)| EstimateSpec::new(n, s, h, k)).collect()
}
