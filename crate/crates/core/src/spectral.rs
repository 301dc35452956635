//! Uniform grid on the torus [0, 2pi)^2, FFT transforms, real fields and the
//! dealiased product.
//!
//! Layout is row-major with the row index along x2: `values[i2 * n + i1]` is the
//! value at `(2 pi i1 / n, 2 pi i2 / n)`. Spectral coefficients use the same
//! layout with `k_a` in `[-n/2, n/2)` and satisfy `f(x) = sum_k c_k e^{i k.x}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// In-place square 2D FFT over an m x m buffer.
struct Fft2 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(planner: &mut FftPlanner<f64>, m: usize) -> Self {
        Fft2 { m, fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) }
    }

    fn run(&self, data: &mut [C64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.m);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.m);
    }
}

fn transpose(data: &mut [C64], m: usize) {
    const B: usize = 32;
    for ib in (0..m).step_by(B) {
        for jb in (ib..m).step_by(B) {
            for i in ib..(ib + B).min(m) {
                let j0 = if ib == jb { i + 1 } else { jb };
                for j in j0..(jb + B).min(m) {
                    data.swap(i * m + j, j * m + i);
                }
            }
        }
    }
}

struct GridInner {
    n: usize,
    coarse: Fft2,
    fine: Fft2,
    // Fine-grid slots receiving each coarse mode when padding, with weights.
    pad_map: Vec<[(usize, f64); 4]>,
    pad_count: Vec<u8>,
}

/// Square periodic grid with cached FFT plans for sizes n and 2n.
#[derive(Clone)]
pub struct Grid(Arc<GridInner>);

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid({})", self.0.n)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n
    }
}

static GRIDS: OnceLock<Mutex<HashMap<usize, Grid>>> = OnceLock::new();

#[inline]
fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

impl Grid {
    /// Grids are interned per size, so repeated construction is cheap.
    pub fn new(n: usize) -> Result<Grid> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        if n > 1 << 14 {
            return Err(Error::InvalidGrid(format!("n = {n} is too large")));
        }
        let cache = GRIDS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().expect("grid cache poisoned");
        if let Some(g) = cache.get(&n) {
            return Ok(g.clone());
        }
        let mut planner = FftPlanner::new();
        let coarse = Fft2::new(&mut planner, n);
        let fine = Fft2::new(&mut planner, 2 * n);
        let h = (n / 2) as i64;
        let m = 2 * n;
        let mut pad_map = Vec::with_capacity(n * n);
        let mut pad_count = Vec::with_capacity(n * n);
        for idx in 0..n * n {
            let (k1, k2) = freq_of(idx, n);
            let t1: &[(i64, f64)] = if k1 == -h { &[(-h, 0.5), (h, 0.5)] } else { &[(k1, 1.0)] };
            let t2: &[(i64, f64)] = if k2 == -h { &[(-h, 0.5), (h, 0.5)] } else { &[(k2, 1.0)] };
            let mut slots = [(0usize, 0.0f64); 4];
            let mut c = 0;
            for &(a, wa) in t1 {
                for &(b, wb) in t2 {
                    slots[c] = (wrap(b, m) * m + wrap(a, m), wa * wb);
                    c += 1;
                }
            }
            pad_map.push(slots);
            pad_count.push(c as u8);
        }
        let g = Grid(Arc::new(GridInner { n, coarse, fine, pad_map, pad_count }));
        cache.insert(n, g.clone());
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    /// Number of grid points, n^2.
    pub fn len(&self) -> usize {
        self.0.n * self.0.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Finest dyadic block index, log2(n) - 2.
    pub fn j_max(&self) -> i32 {
        self.0.n.trailing_zeros() as i32 - 2
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.0.n as f64
    }

    /// Coordinates of point `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.0.n;
        let h = self.spacing();
        ((idx % n) as f64 * h, (idx / n) as f64 * h)
    }

    /// Wavenumber of spectral slot `idx`.
    #[inline]
    pub fn freq(&self, idx: usize) -> (i64, i64) {
        freq_of(idx, self.0.n)
    }

    /// Spectral slot of wavenumber `(k1, k2)` when it is represented.
    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        let h = (self.0.n / 2) as i64;
        if (-h..h).contains(&k1) && (-h..h).contains(&k2) {
            Some(wrap(k2, self.0.n) * self.0.n + wrap(k1, self.0.n))
        } else {
            None
        }
    }

    /// Slot holding `-k`.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.0.n;
        let (i1, i2) = (idx % n, idx / n);
        ((n - i2) % n) * n + (n - i1) % n
    }

    /// True when either component sits on the Nyquist line `-n/2`.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let n = self.0.n;
        idx % n == n / 2 || idx / n == n / 2
    }

    /// Squared modulus |k|^2 of slot `idx`.
    #[inline]
    pub fn k2(&self, idx: usize) -> i64 {
        let (a, b) = self.freq(idx);
        a * a + b * b
    }

    pub(crate) fn forward_raw(&self, data: &mut [C64]) {
        self.0.coarse.run(data, false)
    }

    /// Normalized coefficients of a real array.
    pub fn forward(&self, values: &[f64]) -> Vec<C64> {
        let mut d: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_raw(&mut d);
        let s = 1.0 / self.len() as f64;
        d.iter_mut().for_each(|c| *c *= s);
        d
    }

    /// Two real arrays through one complex transform.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let mut d: Vec<C64> = a.iter().zip(b).map(|(&x, &y)| C64::new(x, y)).collect();
        self.forward_raw(&mut d);
        split_pair(&d, self.0.n, 1.0 / self.len() as f64)
    }

    /// Real part of the synthesis of (Hermitian) coefficients.
    pub fn inverse(&self, coef: &[C64]) -> Vec<f64> {
        let mut d = coef.to_vec();
        self.0.coarse.run(&mut d, true);
        d.iter().map(|c| c.re).collect()
    }

    pub fn inverse_pair(&self, a: &[C64], b: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let mut d: Vec<C64> = a.iter().zip(b).map(|(&x, &y)| x + C64::new(-y.im, y.re)).collect();
        self.0.coarse.run(&mut d, true);
        (d.iter().map(|c| c.re).collect(), d.iter().map(|c| c.im).collect())
    }

    /// Embed coarse coefficients into the 2n spectrum (Nyquist split evenly).
    fn pad_into(&self, coef: &[C64], out: &mut [C64], rot: bool) {
        for (idx, &c) in coef.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let c = if rot { C64::new(-c.im, c.re) } else { c };
            let cnt = self.0.pad_count[idx] as usize;
            for &(slot, w) in &self.0.pad_map[idx][..cnt] {
                out[slot] += c * w;
            }
        }
    }

    /// Values of the trigonometric interpolant on the 2n grid.
    pub fn fine_values(&self, coef: &[C64]) -> Vec<f64> {
        let m = 2 * self.0.n;
        let mut d = vec![C64::new(0.0, 0.0); m * m];
        self.pad_into(coef, &mut d, false);
        self.0.fine.run(&mut d, true);
        d.iter().map(|c| c.re).collect()
    }

    /// Two interpolants on the 2n grid through one transform.
    pub fn fine_values_pair(&self, a: &[C64], b: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let m = 2 * self.0.n;
        let mut d = vec![C64::new(0.0, 0.0); m * m];
        self.pad_into(a, &mut d, false);
        self.pad_into(b, &mut d, true);
        self.0.fine.run(&mut d, true);
        (d.iter().map(|c| c.re).collect(), d.iter().map(|c| c.im).collect())
    }

    /// Project a real 2n-grid array onto the coarse spectrum. The +-n/2 modes of
    /// the fine spectrum fold onto the coarse Nyquist line.
    pub fn truncate_fine(&self, fine: &[f64]) -> Vec<C64> {
        let mut d: Vec<C64> = fine.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.0.fine.run(&mut d, false);
        self.fold(&d, 1.0 / d.len() as f64)
    }

    pub fn truncate_fine_pair(&self, a: &[f64], b: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let mut d: Vec<C64> = a.iter().zip(b).map(|(&x, &y)| C64::new(x, y)).collect();
        self.0.fine.run(&mut d, false);
        let m = 2 * self.0.n;
        let (za, zb) = split_pair(&d, m, 1.0 / d.len() as f64);
        (self.fold(&za, 1.0), self.fold(&zb, 1.0))
    }

    fn fold(&self, z: &[C64], scale: f64) -> Vec<C64> {
        let n = self.0.n;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for (idx, o) in out.iter_mut().enumerate() {
            let cnt = self.0.pad_count[idx] as usize;
            let mut s = C64::new(0.0, 0.0);
            for &(slot, _) in &self.0.pad_map[idx][..cnt] {
                s += z[slot];
            }
            *o = s * scale;
        }
        out
    }
}

fn freq_of(idx: usize, n: usize) -> (i64, i64) {
    let h = n / 2;
    let f = |i: usize| if i >= h { i as i64 - n as i64 } else { i as i64 };
    (f(idx % n), f(idx / n))
}

/// Unmix the transform of `a + i b` into the transforms of `a` and `b`.
fn split_pair(d: &[C64], m: usize, scale: f64) -> (Vec<C64>, Vec<C64>) {
    let mut a = vec![C64::new(0.0, 0.0); d.len()];
    let mut b = vec![C64::new(0.0, 0.0); d.len()];
    for idx in 0..d.len() {
        let (i1, i2) = (idx % m, idx / m);
        let nidx = ((m - i2) % m) * m + (m - i1) % m;
        let z = d[idx];
        let zc = d[nidx].conj();
        a[idx] = (z + zc) * (0.5 * scale);
        let diff = (z - zc) * (0.5 * scale);
        b[idx] = C64::new(diff.im, -diff.re);
    }
    (a, b)
}

struct FieldInner {
    grid: Grid,
    values: Vec<f64>,
    spectral: OnceLock<Vec<C64>>,
}

/// Real field on a grid. Cheap to clone; the spectral table is computed lazily
/// and cached.
#[derive(Clone)]
pub struct RealField(Arc<FieldInner>);

impl std::fmt::Debug for RealField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RealField(n = {}, mean = {:e})", self.grid().n(), self.mean())
    }
}

impl RealField {
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<RealField> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at index {i}")));
        }
        Ok(Self::raw(grid, values, None))
    }

    fn raw(grid: &Grid, values: Vec<f64>, spectral: Option<Vec<C64>>) -> RealField {
        let cell = OnceLock::new();
        if let Some(s) = spectral {
            let _ = cell.set(s);
        }
        RealField(Arc::new(FieldInner { grid: grid.clone(), values, spectral: cell }))
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> RealField {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.point(i);
                f(x, y)
            })
            .collect();
        Self::raw(grid, values, None)
    }

    pub fn zeros(grid: &Grid) -> RealField {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> RealField {
        let mut s = vec![C64::new(0.0, 0.0); grid.len()];
        s[0] = C64::new(c, 0.0);
        Self::raw(grid, vec![c; grid.len()], Some(s))
    }

    /// Field with the given coefficients after projecting onto Hermitian
    /// symmetry, `c_k <- (c_k + conj(c_{-k})) / 2`.
    pub fn from_spectral(grid: &Grid, mut coef: Vec<C64>) -> Result<RealField> {
        if coef.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coef.len()
            )));
        }
        if coef.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectral coefficient".into()));
        }
        hermitian_project(grid, &mut coef);
        let values = grid.inverse(&coef);
        Ok(Self::raw(grid, values, Some(coef)))
    }

    /// Like `from_spectral` for coefficients known to be finite.
    pub(crate) fn from_spectral_trusted(grid: &Grid, mut coef: Vec<C64>) -> RealField {
        hermitian_project(grid, &mut coef);
        let values = grid.inverse(&coef);
        Self::raw(grid, values, Some(coef))
    }

    /// Two fields from two coefficient tables through one transform.
    pub(crate) fn pair_from_spectral(grid: &Grid, mut a: Vec<C64>, mut b: Vec<C64>) -> (RealField, RealField) {
        hermitian_project(grid, &mut a);
        hermitian_project(grid, &mut b);
        let (va, vb) = grid.inverse_pair(&a, &b);
        (Self::raw(grid, va, Some(a)), Self::raw(grid, vb, Some(b)))
    }

    pub fn grid(&self) -> &Grid {
        &self.0.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn spectral(&self) -> &[C64] {
        self.0.spectral.get_or_init(|| self.0.grid.forward(&self.0.values))
    }

    pub(crate) fn has_spectral(&self) -> bool {
        self.0.spectral.get().is_some()
    }

    /// Fill the spectral caches of two fields with one transform.
    pub fn prime_pair(a: &RealField, b: &RealField) {
        if a.has_spectral() || b.has_spectral() || a.grid() != b.grid() {
            let _ = (a.spectral(), b.spectral());
            return;
        }
        let (sa, sb) = a.grid().forward_pair(a.values(), b.values());
        let _ = a.0.spectral.set(sa);
        let _ = b.0.spectral.set(sb);
    }

    pub fn mean(&self) -> f64 {
        if let Some(s) = self.0.spectral.get() {
            s[0].re
        } else {
            self.0.values.iter().sum::<f64>() / self.0.values.len() as f64
        }
    }

    /// Values on the 2x oversampled grid.
    pub fn fine_values(&self) -> Vec<f64> {
        self.grid().fine_values(self.spectral())
    }

    /// Sup norm over the 2x oversampled point set.
    pub fn sup_norm(&self) -> f64 {
        max_abs(&self.fine_values())
    }

    /// Max over the grid points only.
    pub fn grid_sup(&self) -> f64 {
        max_abs(self.values())
    }

    fn check(&self, other: &RealField) -> Result<()> {
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch(self.grid().n(), other.grid().n()));
        }
        Ok(())
    }

    /// `a * self + b * other`, carrying the spectral cache when both have one.
    pub fn lincomb(&self, a: f64, other: &RealField, b: f64) -> Result<RealField> {
        self.check(other)?;
        let values = self.values().iter().zip(other.values()).map(|(x, y)| a * x + b * y).collect();
        let spec = match (self.0.spectral.get(), other.0.spectral.get()) {
            (Some(s), Some(t)) => Some(s.iter().zip(t).map(|(x, y)| x * a + y * b).collect()),
            _ => None,
        };
        Ok(Self::raw(self.grid(), values, spec))
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> RealField {
        let values = self.values().iter().map(|x| a * x).collect();
        let spec = self.0.spectral.get().map(|s| s.iter().map(|x| x * a).collect());
        Self::raw(self.grid(), values, spec)
    }

    /// Sum of many fields, all on one grid.
    pub fn sum<'a>(grid: &Grid, terms: impl IntoIterator<Item = &'a RealField>) -> Result<RealField> {
        let mut acc = RealField::zeros(grid);
        for t in terms {
            acc = acc.add(t)?;
        }
        Ok(acc)
    }

    /// Apply a Fourier multiplier `m(k1, k2)`.
    pub fn multiplier(&self, m: impl Fn(i64, i64) -> f64) -> RealField {
        let g = self.grid();
        let coef = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (a, b) = g.freq(i);
                c * m(a, b)
            })
            .collect();
        Self::from_spectral_trusted(g, coef)
    }

    /// Spectral gradient; Nyquist modes are dropped so both components are real.
    pub fn gradient(&self) -> [RealField; 2] {
        let g = self.grid();
        let s = self.spectral();
        let mut d1 = vec![C64::new(0.0, 0.0); s.len()];
        let mut d2 = vec![C64::new(0.0, 0.0); s.len()];
        for i in 0..s.len() {
            if g.is_nyquist(i) {
                continue;
            }
            let (a, b) = g.freq(i);
            d1[i] = s[i] * C64::new(0.0, a as f64);
            d2[i] = s[i] * C64::new(0.0, b as f64);
        }
        let (a, b) = Self::pair_from_spectral(g, d1, d2);
        [a, b]
    }

    /// Grid-point L^2 distance scaled as a mean, sqrt(mean |f-g|^2).
    pub fn rms_diff(&self, other: &RealField) -> Result<f64> {
        self.check(other)?;
        let s: f64 = self.values().iter().zip(other.values()).map(|(x, y)| (x - y) * (x - y)).sum();
        Ok((s / self.values().len() as f64).sqrt())
    }

    /// Max grid-point difference.
    pub fn max_diff(&self, other: &RealField) -> Result<f64> {
        self.check(other)?;
        Ok(self.values().iter().zip(other.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    /// Resample onto another grid by spectral truncation or zero padding.
    /// Coarse Nyquist modes are split evenly when refining.
    pub fn resample(&self, target: &Grid) -> RealField {
        let (n, m) = (self.grid().n(), target.n());
        if n == m {
            return self.clone();
        }
        let src = self.spectral();
        let mut out = vec![C64::new(0.0, 0.0); target.len()];
        let hm = (m / 2) as i64;
        let hn = (n / 2) as i64;
        for (idx, &c) in src.iter().enumerate() {
            let (a, b) = self.grid().freq(idx);
            if m < n {
                if a.abs() <= hm && b.abs() <= hm {
                    // Fold +-m/2 onto the target Nyquist line.
                    let ti = target.index_of(wrap_half(a, hm), wrap_half(b, hm)).expect("in range");
                    out[ti] += c;
                }
            } else {
                let ta: &[(i64, f64)] = if a == -hn { &[(-hn, 0.5), (hn, 0.5)] } else { &[(a, 1.0)] };
                let tb: &[(i64, f64)] = if b == -hn { &[(-hn, 0.5), (hn, 0.5)] } else { &[(b, 1.0)] };
                for &(x, wx) in ta {
                    for &(y, wy) in tb {
                        out[target.index_of(x, y).expect("in range")] += c * (wx * wy);
                    }
                }
            }
        }
        Self::from_spectral_trusted(target, out)
    }

    /// True when every coefficient above `|k|^2 > bound` vanishes exactly.
    pub fn is_band_limited(&self, bound: i64) -> bool {
        let g = self.grid();
        self.spectral().iter().enumerate().all(|(i, c)| g.k2(i) <= bound || c.norm() == 0.0)
    }
}

fn wrap_half(k: i64, h: i64) -> i64 {
    if k == h {
        -h
    } else {
        k
    }
}

pub(crate) fn hermitian_project(grid: &Grid, coef: &mut [C64]) {
    let n = grid.len();
    for i in 0..n {
        let j = grid.neg_index(i);
        if j < i {
            continue;
        }
        if j == i {
            coef[i].im = 0.0;
        } else {
            let a = coef[i];
            let b = coef[j].conj();
            let m = (a + b) * 0.5;
            coef[i] = m;
            coef[j] = m.conj();
        }
    }
}

#[inline]
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dealiased product: both factors are zero-padded to 2n, multiplied
/// pointwise there and truncated back.
pub fn multiply(f: &RealField, g: &RealField) -> Result<RealField> {
    f.check(g)?;
    let grid = f.grid();
    let (a, b) = grid.fine_values_pair(f.spectral(), g.spectral());
    let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(RealField::from_spectral_trusted(grid, grid.truncate_fine(&prod)))
}

/// Pointwise composition on the 2n grid followed by truncation; two maps at once.
pub fn compose_pair(
    u: &RealField,
    f1: impl Fn(f64) -> f64,
    f2: impl Fn(f64) -> f64,
) -> Result<(RealField, RealField)> {
    compose_pair_fine(u.grid(), &u.fine_values(), f1, f2)
}

/// `compose_pair` from precomputed oversampled values of `u`.
pub fn compose_pair_fine(
    grid: &Grid,
    fine: &[f64],
    f1: impl Fn(f64) -> f64,
    f2: impl Fn(f64) -> f64,
) -> Result<(RealField, RealField)> {
    let a: Vec<f64> = fine.iter().map(|&x| f1(x)).collect();
    let b: Vec<f64> = fine.iter().map(|&x| f2(x)).collect();
    if a.iter().chain(&b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nonlinearity evaluated to a non-finite value".into()));
    }
    let (sa, sb) = grid.truncate_fine_pair(&a, &b);
    Ok(RealField::pair_from_spectral(grid, sa, sb))
}

/// Single composition, see `compose_pair`.
pub fn compose(u: &RealField, f: impl Fn(f64) -> f64) -> Result<RealField> {
    let grid = u.grid();
    let a: Vec<f64> = u.fine_values().iter().map(|&x| f(x)).collect();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nonlinearity evaluated to a non-finite value".into()));
    }
    Ok(RealField::from_spectral_trusted(grid, grid.truncate_fine(&a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trig(grid: &Grid, modes: &[(i64, i64, f64, f64)]) -> RealField {
        RealField::from_fn(grid, |x, y| {
            modes.iter().map(|&(a, b, c, s)| {
                let th = a as f64 * x + b as f64 * y;
                c * th.cos() + s * th.sin()
            }).sum()
        })
    }

    #[test]
    fn roundtrip_and_modes() {
        let g = Grid::new(16).unwrap();
        let f = trig(&g, &[(3, 0, 1.0, 0.0), (-2, 5, 0.0, 2.0)]);
        let s = f.spectral();
        let i = g.index_of(3, 0).unwrap();
        assert!((s[i].re - 0.5).abs() < 1e-14);
        let j = g.index_of(-2, 5).unwrap();
        assert!((s[j] - C64::new(0.0, -1.0)).norm() < 1e-14);
        let back = RealField::from_spectral(&g, s.to_vec()).unwrap();
        assert!(back.max_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn pair_transforms_match_single() {
        let g = Grid::new(32).unwrap();
        let a = trig(&g, &[(1, 2, 0.3, 0.1), (7, -4, 1.0, 0.5)]);
        let b = trig(&g, &[(0, 3, -0.2, 0.9), (-16, 5, 0.4, 0.0)]);
        let (sa, sb) = g.forward_pair(a.values(), b.values());
        for i in 0..g.len() {
            assert!((sa[i] - a.spectral()[i]).norm() < 1e-14);
            assert!((sb[i] - b.spectral()[i]).norm() < 1e-14);
        }
        let (va, vb) = g.inverse_pair(&sa, &sb);
        for i in 0..g.len() {
            assert!((va[i] - a.values()[i]).abs() < 1e-13);
            assert!((vb[i] - b.values()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn oversampled_sup_of_cosine() {
        let g = Grid::new(8).unwrap();
        let f = trig(&g, &[(4, 0, 1.0, 0.0)]);
        // cos(4 x) is the Nyquist mode on n = 8; its interpolant is cos(4 x).
        assert!((f.sup_norm() - 1.0).abs() < 1e-14);
        let h = trig(&g, &[(1, 1, 1.0, 0.0)]);
        assert!((h.sup_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_of_cosines_is_exact() {
        let g = Grid::new(16).unwrap();
        let f = trig(&g, &[(3, 0, 1.0, 0.0)]);
        let p = multiply(&f, &f).unwrap();
        let want = trig(&g, &[(0, 0, 0.5, 0.0), (6, 0, 0.5, 0.0)]);
        assert!(p.max_diff(&want).unwrap() < 1e-14);
        // 5 + 5 exceeds n/2 = 8 and is removed by truncation, not aliased.
        let f = trig(&g, &[(5, 0, 1.0, 0.0)]);
        let p = multiply(&f, &f).unwrap();
        assert!(p.max_diff(&RealField::constant(&g, 0.5)).unwrap() < 1e-14);
    }

    #[test]
    fn product_of_nyquist_modes_folds() {
        // cos(4x)^2 = 1/2 + cos(8x)/2 and |k| = 8 lies beyond the retained band.
        let g = Grid::new(8).unwrap();
        let f = trig(&g, &[(4, 0, 1.0, 0.0)]);
        let p = multiply(&f, &f).unwrap();
        assert!(p.max_diff(&RealField::constant(&g, 0.5)).unwrap() < 1e-14);
        let c = trig(&g, &[(1, 0, 1.0, 0.0)]);
        let q = multiply(&f, &c).unwrap();
        // cos4 cos1 = (cos3 + cos5)/2; cos5 is unrepresented and dropped.
        assert!(q.max_diff(&trig(&g, &[(3, 0, 0.5, 0.0)])).unwrap() < 1e-14);
    }

    #[test]
    fn identity_and_scaling() {
        let g = Grid::new(32).unwrap();
        let f = trig(&g, &[(1, 2, 0.3, 0.1), (15, -16, 1.0, 0.5), (-16, -16, 0.7, 0.0)]);
        let one = RealField::constant(&g, 1.0);
        assert!(multiply(&one, &f).unwrap().max_diff(&f).unwrap() < 1e-13);
        let two = RealField::constant(&g, 2.0);
        assert!(multiply(&two, &f).unwrap().max_diff(&f.scale(2.0)).unwrap() < 1e-13);
    }

    #[test]
    fn gradient_of_plane_wave() {
        let g = Grid::new(16).unwrap();
        let f = trig(&g, &[(2, 3, 0.0, 1.0)]);
        let [dx, dy] = f.gradient();
        assert!(dx.max_diff(&trig(&g, &[(2, 3, 2.0, 0.0)])).unwrap() < 1e-13);
        assert!(dy.max_diff(&trig(&g, &[(2, 3, 3.0, 0.0)])).unwrap() < 1e-13);
    }

    #[test]
    fn resample_roundtrip() {
        let g = Grid::new(16).unwrap();
        let h = Grid::new(32).unwrap();
        let f = trig(&g, &[(2, 3, 0.0, 1.0), (-8, 1, 0.6, 0.0), (-8, -8, 0.3, 0.0)]);
        let up = f.resample(&h);
        assert!((up.sup_norm() - f.sup_norm()).abs() < 1e-12);
        let down = up.resample(&g);
        assert!(down.max_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid::new(12).is_err());
        assert!(Grid::new(4).is_err());
        let g = Grid::new(8).unwrap();
        assert!(RealField::from_values(&g, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(RealField::from_values(&g, v), Err(Error::NonFinite(_))));
        let h = Grid::new(16).unwrap();
        assert!(multiply(&RealField::zeros(&g), &RealField::zeros(&h)).is_err());
    }

    fn band_limited(g: &Grid, seed: u64, kmax: i64) -> RealField {
        let mut c = vec![C64::new(0.0, 0.0); g.len()];
        for (i, v) in c.iter_mut().enumerate() {
            let (a, b) = g.freq(i);
            if a.abs() <= kmax && b.abs() <= kmax {
                let (x, y) = crate::rng::counter_gaussian_pair(seed, 77, a, b);
                *v = C64::new(x, y) / (1.0 + (a * a + b * b) as f64);
            }
        }
        RealField::from_spectral(g, c).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn product_commutes(s1 in 0u64..1000, s2 in 0u64..1000) {
            let g = Grid::new(32).unwrap();
            let f = band_limited(&g, s1, 16);
            let h = band_limited(&g, s2, 16);
            let a = multiply(&f, &h).unwrap();
            let b = multiply(&h, &f).unwrap();
            prop_assert!(a.max_diff(&b).unwrap() < 1e-14 * (1.0 + a.grid_sup()));
        }

        #[test]
        fn product_associative_below_sixth(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000) {
            let g = Grid::new(64).unwrap();
            let k = (g.n() / 6) as i64 - 1;
            let (f, h, w) = (band_limited(&g, s1, k), band_limited(&g, s2, k), band_limited(&g, s3, k));
            let a = multiply(&multiply(&f, &h).unwrap(), &w).unwrap();
            let b = multiply(&f, &multiply(&h, &w).unwrap()).unwrap();
            prop_assert!(a.max_diff(&b).unwrap() < 1e-12);
        }

        #[test]
        fn hermitian_projection_gives_real_values(s in 0u64..1000) {
            let g = Grid::new(16).unwrap();
            let c: Vec<C64> = (0..g.len()).map(|i| {
                let (a, b) = crate::rng::counter_gaussian_pair(s, 5, i as i64, 0);
                C64::new(a, b)
            }).collect();
            let f = RealField::from_spectral(&g, c).unwrap();
            let back = g.forward(f.values());
            for i in 0..g.len() {
                prop_assert!((back[i] - f.spectral()[i]).norm() < 1e-12);
            }
        }
    }
}
