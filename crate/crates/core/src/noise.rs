//! Spatial white noise, its mollifications, the renormalization constant and
//! the enhanced pair `(eta_n, I(eta_n) o eta_n - c_n)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::{heat_integral, phi1};
use crate::littlewood_paley::{BlockStack, DyadicPartition};
use crate::paraproducts::{field_from_fine, res_fine};
use crate::rng::{counter_gaussian_pair, streams};
use crate::spectral::{Grid, RealField, C64};

/// Mollification level: `Delta_{<= n}` or every represented mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    Level(i32),
    Full,
}

impl NoiseLevel {
    pub fn parse(s: &str) -> Result<NoiseLevel> {
        if s == "full" {
            return Ok(NoiseLevel::Full);
        }
        s.parse::<i32>()
            .map(NoiseLevel::Level)
            .map_err(|_| Error::InvalidParameter(format!("noise level '{s}' is neither an integer nor 'full'")))
    }

    /// Keeps block `j`?
    pub fn keeps(self, j: i32) -> bool {
        match self {
            NoiseLevel::Full => true,
            NoiseLevel::Level(n) => j <= n,
        }
    }

    /// Level `n` clamped so that anything at or above `j_max` is the full field.
    pub fn clamp(self, j_max: i32) -> NoiseLevel {
        match self {
            NoiseLevel::Level(n) if n >= j_max => NoiseLevel::Full,
            l => l,
        }
    }
}

impl std::fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseLevel::Full => write!(f, "full"),
            NoiseLevel::Level(n) => write!(f, "{n}"),
        }
    }
}

/// One noise realization.
#[derive(Clone, Debug)]
pub struct NoiseSample {
    pub seed: u64,
    pub level: NoiseLevel,
    pub field: RealField,
}

/// Variance of every non-Nyquist, nonzero white-noise coefficient.
pub fn white_noise_variance() -> f64 {
    1.0 / (4.0 * PI * PI)
}

/// White noise with `eta_hat_k = (a + i b) / (2 pi sqrt 2)` on the half space
/// `k2 > 0` or `k2 = 0, k1 > 0`, conjugate on the other half, zero mean and
/// zero Nyquist modes. The draw for a wavenumber does not depend on `n`.
pub fn white_noise_coefficients(grid: &Grid, seed: u64) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); grid.len()];
    let s = 1.0 / (2.0 * PI * 2f64.sqrt());
    for idx in 0..grid.len() {
        if grid.is_nyquist(idx) {
            continue;
        }
        let (k1, k2) = grid.freq(idx);
        if k2 > 0 || (k2 == 0 && k1 > 0) {
            let (a, b) = counter_gaussian_pair(seed, streams::WHITE_NOISE, k1, k2);
            let z = C64::new(a * s, b * s);
            c[idx] = z;
            c[grid.neg_index(idx)] = z.conj();
        }
    }
    c
}

pub fn sample_white_noise(grid: &Grid, seed: u64) -> NoiseSample {
    let field = RealField::from_spectral_trusted(grid, white_noise_coefficients(grid, seed));
    NoiseSample { seed, level: NoiseLevel::Full, field }
}

impl NoiseSample {
    /// `Delta_{<= n} eta`.
    pub fn mollify(&self, p: &DyadicPartition, level: NoiseLevel) -> Result<NoiseSample> {
        let field = match level.clamp(p.j_max()) {
            NoiseLevel::Full => self.field.clone(),
            NoiseLevel::Level(n) => {
                if n < -1 {
                    return Err(Error::InvalidParameter(format!("noise level {n} < -1")));
                }
                p.localize_low(&self.field, n as f64)?
            }
        };
        Ok(NoiseSample { seed: self.seed, level, field })
    }

    /// `(-Laplacian)^s eta`, multiplier `|k|^{2s}`.
    pub fn fractional(&self, s: f64) -> NoiseSample {
        let field = self.field.multiplier(|a, b| {
            let q = (a * a + b * b) as f64;
            if q == 0.0 {
                0.0
            } else {
                q.powf(s)
            }
        });
        NoiseSample { seed: self.seed, level: self.level, field }
    }
}

/// `c_n(t)` as a sum over shells of equal `|k|^2`, precomputed once.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterTerm {
    pub level: NoiseLevel,
    /// `(|k|^2, weight)`; `c_n(t) = sum weight (1 - e^{-t q}) / q`.
    pub shells: Vec<(f64, f64)>,
}

impl CounterTerm {
    pub fn new(p: &DyadicPartition, level: NoiseLevel) -> CounterTerm {
        let g = p.grid();
        let level = level.clamp(p.j_max());
        let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
        for idx in 0..g.len() {
            let q = g.k2(idx);
            if q == 0 || g.is_nyquist(idx) {
                continue;
            }
            let mut diag = 0.0;
            let mut low = 0.0;
            for i in p.levels() {
                let ri = p.weight(i, idx);
                if ri == 0.0 {
                    continue;
                }
                if level.keeps(i) {
                    low += ri;
                }
                for j in (i - 1)..=(i + 1) {
                    if j >= -1 && j <= p.j_max() {
                        diag += ri * p.weight(j, idx);
                    }
                }
            }
            let w = white_noise_variance() * diag * low * low;
            if w != 0.0 {
                *shells.entry(q).or_insert(0.0) += w;
            }
        }
        CounterTerm { level, shells: shells.into_iter().map(|(q, w)| (q as f64, w)).collect() }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.shells.iter().map(|&(q, w)| w * phi1(q, t)).sum()
    }
}

/// `c_n(t)`; the expectation of `I(eta_n)(t) o eta_n`.
pub fn renorm_constant(p: &DyadicPartition, level: NoiseLevel, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be finite and >= 0")));
    }
    Ok(CounterTerm::new(p, level).at(t))
}

/// Mollified noise with what is needed to evaluate the renormalized resonant
/// term at any time.
#[derive(Clone)]
pub struct EnhancedNoise {
    pub partition: DyadicPartition,
    pub level: NoiseLevel,
    pub kappa: f64,
    pub seed: u64,
    pub eta: RealField,
    pub counter: CounterTerm,
    eta_stack: BlockStack,
}

impl std::fmt::Debug for EnhancedNoise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EnhancedNoise(n = {}, level = {}, seed = {})", self.eta.grid().n(), self.level, self.seed)
    }
}

/// Build the enhanced pair. Finite levels must leave two blocks of headroom,
/// `n <= j_max - 2`; `Full` is the all-modes anchor.
pub fn enhance(p: &DyadicPartition, noise: &NoiseSample, level: NoiseLevel, kappa: f64) -> Result<EnhancedNoise> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} not in (0, 1)")));
    }
    if let NoiseLevel::Level(n) = level {
        if n > p.j_max() - 2 {
            return Err(Error::Headroom(format!(
                "level {n} exceeds j_max - 2 = {} on grid {}",
                p.j_max() - 2,
                p.grid().n()
            )));
        }
    }
    let eta = noise.mollify(p, level)?.field;
    let eta_stack = BlockStack::new(p, &eta)?;
    Ok(EnhancedNoise { partition: p.clone(), level, kappa, seed: noise.seed, counter: CounterTerm::new(p, level), eta, eta_stack })
}

impl EnhancedNoise {
    /// `I(eta_n)(t)` in closed form.
    pub fn integrated(&self, t: f64) -> Result<RealField> {
        heat_integral(&self.eta, t)
    }

    pub fn c(&self, t: f64) -> f64 {
        self.counter.at(t)
    }

    /// Unrenormalized `I(eta_n)(t) o eta_n`.
    pub fn resonant_raw(&self, t: f64) -> Result<RealField> {
        let x = self.integrated(t)?;
        let sx = BlockStack::new(&self.partition, &x)?;
        Ok(field_from_fine(&self.partition, &res_fine(&sx, &self.eta_stack)))
    }

    /// `I(eta_n)(t) o eta_n - c_n(t)` given the block stack of `I(eta_n)(t)`.
    pub(crate) fn resonant_with(&self, t: f64, s_ieta: &BlockStack) -> RealField {
        let r = field_from_fine(&self.partition, &res_fine(s_ieta, &self.eta_stack));
        r.add(&RealField::constant(r.grid(), -self.c(t))).expect("same grid")
    }

    /// `I(eta_n)(t) o eta_n - c_n(t)`.
    pub fn resonant_at(&self, t: f64) -> Result<RealField> {
        let r = self.resonant_raw(t)?;
        r.add(&RealField::constant(r.grid(), -self.c(t)))
    }

    pub(crate) fn eta_stack(&self) -> &BlockStack {
        &self.eta_stack
    }
}
