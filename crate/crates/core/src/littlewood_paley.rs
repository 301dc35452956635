//! Dyadic partition of unity on the lattice, block projections, localizers
//! and Besov/Hoelder norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heat::Trajectory;
use crate::spectral::{max_abs, Grid, RealField, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMode {
    /// Indicator annuli `4^j < |k|^2 <= 4^{j+1}`.
    Sharp,
    /// Smooth radial bumps built from a C-infinity step.
    Smooth,
}

/// The smooth radial cutoff: 1 on `r <= 3/4`, 0 on `r >= 4/3`.
pub fn chi(r: f64) -> f64 {
    const A: f64 = 0.75;
    const B: f64 = 4.0 / 3.0;
    if r <= A {
        return 1.0;
    }
    if r >= B {
        return 0.0;
    }
    let x = (B - r) / (B - A);
    let e = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    let (p, q) = (e(x), e(1.0 - x));
    p / (p + q)
}

/// Partition `rho_{-1}, ..., rho_{j_max}` with the top block absorbing every
/// mode above `2^{j_max}` so that the blocks sum to one on the whole grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: Grid,
    mode: PartitionMode,
    j_max: i32,
    weights: Vec<Vec<f64>>,
    supports: Vec<Vec<usize>>,
}

impl DyadicPartition {
    pub fn new(grid: &Grid, mode: PartitionMode) -> DyadicPartition {
        let j_max = grid.j_max();
        let nl = (j_max + 2) as usize;
        let mut weights = vec![vec![0.0; grid.len()]; nl];
        for idx in 0..grid.len() {
            let q = grid.k2(idx);
            match mode {
                PartitionMode::Sharp => {
                    weights[(sharp_level(q, j_max) + 1) as usize][idx] = 1.0;
                }
                PartitionMode::Smooth => {
                    let r = (q as f64).sqrt();
                    let c = |j: i32| chi(r / 2f64.powi(j));
                    weights[0][idx] = c(0);
                    for j in 0..j_max {
                        weights[(j + 1) as usize][idx] = c(j + 1) - c(j);
                    }
                    weights[nl - 1][idx] = 1.0 - c(j_max);
                }
            }
        }
        let supports = weights
            .iter()
            .map(|w| w.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, _)| i).collect())
            .collect();
        DyadicPartition { grid: grid.clone(), mode, j_max, weights, supports }
    }

    pub fn sharp(grid: &Grid) -> DyadicPartition {
        Self::new(grid, PartitionMode::Sharp)
    }

    pub fn smooth(grid: &Grid) -> DyadicPartition {
        Self::new(grid, PartitionMode::Smooth)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mode(&self) -> PartitionMode {
        self.mode
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Block indices `-1..=j_max`.
    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.j_max
    }

    pub fn num_levels(&self) -> usize {
        self.weights.len()
    }

    fn slot(&self, j: i32) -> Result<usize> {
        if j < -1 || j > self.j_max {
            return Err(Error::InvalidParameter(format!("block index {j} outside -1..={}", self.j_max)));
        }
        Ok((j + 1) as usize)
    }

    /// `rho_j` evaluated at spectral slot `idx`.
    pub fn weight(&self, j: i32, idx: usize) -> f64 {
        self.weights[(j + 1) as usize][idx]
    }

    /// Spectral slots where `rho_j` is nonzero.
    pub fn support(&self, j: i32) -> &[usize] {
        &self.supports[(j + 1) as usize]
    }

    pub(crate) fn masked(&self, coef: &[C64], j: i32) -> Vec<C64> {
        let w = &self.weights[(j + 1) as usize];
        let mut out = vec![C64::new(0.0, 0.0); coef.len()];
        for &i in &self.supports[(j + 1) as usize] {
            out[i] = coef[i] * w[i];
        }
        out
    }

    /// Spectral multiplier `sum_{j in set} rho_j`.
    fn masked_sum(&self, coef: &[C64], keep: impl Fn(i32) -> bool) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); coef.len()];
        for j in self.levels().filter(|&j| keep(j)) {
            let w = &self.weights[(j + 1) as usize];
            for &i in &self.supports[(j + 1) as usize] {
                out[i] += coef[i] * w[i];
            }
        }
        out
    }

    fn check(&self, f: &RealField) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch(f.grid().n(), self.grid.n()));
        }
        Ok(())
    }

    /// Dyadic block `Delta_j f`.
    pub fn block(&self, f: &RealField, j: i32) -> Result<RealField> {
        self.check(f)?;
        self.slot(j)?;
        Ok(RealField::from_spectral_trusted(&self.grid, self.masked(f.spectral(), j)))
    }

    /// All blocks, lowest first.
    pub fn blocks(&self, f: &RealField) -> Result<Vec<RealField>> {
        self.levels().map(|j| self.block(f, j)).collect()
    }

    /// `Delta_{> R} f = sum_{j > R} Delta_j f`.
    pub fn localize_high(&self, f: &RealField, r: f64) -> Result<RealField> {
        self.check(f)?;
        Ok(RealField::from_spectral_trusted(&self.grid, self.masked_sum(f.spectral(), |j| j as f64 > r)))
    }

    /// `Delta_{<= R} f = sum_{j <= R} Delta_j f`.
    pub fn localize_low(&self, f: &RealField, r: f64) -> Result<RealField> {
        self.check(f)?;
        Ok(RealField::from_spectral_trusted(&self.grid, self.masked_sum(f.spectral(), |j| j as f64 <= r)))
    }

    /// `L^p` norms of every block; the sup is taken on the 2x oversampled
    /// grid and finite p uses the quadrature mean there.
    pub fn block_norms(&self, f: &RealField, p: Exponent) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok(BlockStack::new(self, f)?.norms(p))
    }

    /// `(sum_j (2^{alpha j} ||Delta_j f||_p)^q)^{1/q}`.
    pub fn besov_norm(&self, f: &RealField, alpha: f64, p: Exponent, q: Exponent) -> Result<f64> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        Ok(besov_from_blocks(&self.block_norms(f, p)?, alpha, q))
    }

    /// Besov-Hoelder norm `B^alpha_{inf,inf}`.
    pub fn hoelder_norm(&self, f: &RealField, alpha: f64) -> Result<f64> {
        self.besov_norm(f, alpha, Exponent::Inf, Exponent::Inf)
    }
}

/// Block containing `|k|^2 = q` in the sharp partition.
pub fn sharp_level(q: i64, j_max: i32) -> i32 {
    if q <= 1 {
        return -1;
    }
    let mut j = 0;
    while j < j_max && q > 1i64 << (2 * (j + 1)) {
        j += 1;
    }
    j
}

/// Lebesgue exponent restricted to the values the toolkit supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Inf,
}

impl Exponent {
    pub fn parse(s: &str) -> Result<Exponent> {
        match s {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "inf" | "infinity" => Ok(Exponent::Inf),
            _ => Err(Error::InvalidParameter(format!("exponent {s} not in {{1, 2, inf}}"))),
        }
    }

    fn lp(self, v: &[f64]) -> f64 {
        match self {
            Exponent::Inf => max_abs(v),
            Exponent::One => v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64,
            Exponent::Two => (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt(),
        }
    }
}

/// Combine block norms into a Besov norm.
pub fn besov_from_blocks(norms: &[f64], alpha: f64, q: Exponent) -> f64 {
    let terms = norms.iter().enumerate().map(|(s, &v)| 2f64.powf(alpha * (s as f64 - 1.0)) * v);
    match q {
        Exponent::Inf => terms.fold(0.0, f64::max),
        Exponent::One => terms.sum(),
        Exponent::Two => terms.map(|t| t * t).sum::<f64>().sqrt(),
    }
}

/// Oversampled physical values of every block of one field. Paraproducts and
/// norms are assembled from these without further inverse transforms.
#[derive(Clone)]
pub struct BlockStack {
    pub(crate) levels: Vec<Vec<f64>>,
}

impl BlockStack {
    pub fn new(p: &DyadicPartition, f: &RealField) -> Result<BlockStack> {
        p.check(f)?;
        let g = p.grid();
        let coef = f.spectral();
        let nl = p.num_levels();
        let mut levels = Vec::with_capacity(nl);
        let mut j = -1;
        while j <= p.j_max {
            let a = p.masked(coef, j);
            if j < p.j_max {
                let b = p.masked(coef, j + 1);
                let (va, vb) = g.fine_values_pair(&a, &b);
                levels.push(va);
                levels.push(vb);
                j += 2;
            } else {
                levels.push(g.fine_values(&a));
                j += 1;
            }
        }
        Ok(BlockStack { levels })
    }

    /// `a self + b other`; stacks are linear in the field.
    pub fn lincomb(&self, a: f64, other: &BlockStack, b: f64) -> BlockStack {
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            .collect();
        BlockStack { levels }
    }

    /// Oversampled values of `Delta_j f`.
    pub fn level(&self, j: i32) -> &[f64] {
        &self.levels[(j + 1) as usize]
    }

    pub fn norms(&self, p: Exponent) -> Vec<f64> {
        self.levels.iter().map(|v| p.lp(v)).collect()
    }

    /// Oversampled values of the whole field.
    pub fn total(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.levels[0].len()];
        for l in &self.levels {
            out.iter_mut().zip(l).for_each(|(o, v)| *o += v);
        }
        out
    }
}

/// Classical Hoelder norm `||f||_inf + sup |f(x)-f(y)| / |x-y|^alpha` over grid
/// points with the periodic distance, for `alpha` in (0, 1].
pub fn classical_hoelder(f: &RealField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("classical Hoelder exponent {alpha} not in (0, 1]")));
    }
    let g = f.grid();
    let n = g.n();
    let v = f.values();
    let h = g.spacing();
    let mut best = 0.0f64;
    for d2 in 0..n {
        for d1 in 0..n {
            if d1 == 0 && d2 == 0 {
                continue;
            }
            // Each displacement and its negative give the same quotient.
            if d2 > n / 2 || (d2 == 0 || d2 == n / 2) && d1 > n / 2 {
                continue;
            }
            let m1 = d1.min(n - d1) as f64;
            let m2 = d2.min(n - d2) as f64;
            let dist = h * (m1 * m1 + m2 * m2).sqrt();
            let mut m = 0.0f64;
            for i2 in 0..n {
                let r = i2 * n;
                let s = ((i2 + d2) % n) * n;
                for i1 in 0..n {
                    let a = v[r + i1];
                    let b = v[s + (i1 + d1) % n];
                    m = m.max((a - b).abs());
                }
            }
            best = best.max(m / dist.powf(alpha));
        }
    }
    Ok(f.grid_sup() + best)
}

/// Weighted space-time norms of a trajectory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedNormReport {
    pub alpha: f64,
    pub gamma: f64,
    /// `sup_t t^gamma ||f(t)||_{C^alpha}`.
    pub c_norm: f64,
    /// `sup_{s<t} s^gamma ||f(t)-f(s)||_inf / |t-s|^{alpha/2}`.
    pub hoelder_time: f64,
    /// `c_norm + hoelder_time`.
    pub s_norm: f64,
}

/// `sup_t t^gamma ||f(t)||_{C^alpha}` over the stored snapshots.
pub fn c_norm(traj: &Trajectory, p: &DyadicPartition, alpha: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let mut best = 0.0f64;
    for (t, f) in traj.iter() {
        let w = t.powf(gamma);
        if w == 0.0 {
            continue;
        }
        best = best.max(w * p.hoelder_norm(f, alpha)?);
    }
    Ok(best)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("time weight gamma = {gamma} not in [0, 1)")));
    }
    Ok(())
}

/// Weighted norms of a trajectory for `alpha` in (0, 2) and `gamma` in [0, 1).
pub fn weighted_norms(traj: &Trajectory, p: &DyadicPartition, alpha: f64, gamma: f64) -> Result<WeightedNormReport> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 2)")));
    }
    check_gamma(gamma)?;
    if traj.len() < 2 {
        return Err(Error::InvalidParameter("time-Hoelder norm needs at least two snapshots".into()));
    }
    let c = c_norm(traj, p, alpha, gamma)?;
    let h = time_hoelder(traj, alpha / 2.0, gamma)?;
    Ok(WeightedNormReport { alpha, gamma, c_norm: c, hoelder_time: h, s_norm: c + h })
}

/// `sup_{s<t} s^gamma ||f(t)-f(s)||_inf / |t-s|^beta` on the oversampled grid.
pub fn time_hoelder(traj: &Trajectory, beta: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let fine: Vec<Vec<f64>> = traj.fields().iter().map(|f| f.fine_values()).collect();
    let times = traj.times();
    let mut best = 0.0f64;
    for a in 0..times.len() {
        let w = times[a].powf(gamma);
        if w == 0.0 {
            continue;
        }
        for b in a + 1..times.len() {
            let d = fine[a].iter().zip(&fine[b]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            best = best.max(w * d / (times[b] - times[a]).powf(beta));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rough(g: &Grid, seed: u64) -> RealField {
        let c = (0..g.len())
            .map(|i| {
                let (a, b) = crate::rng::counter_gaussian_pair(seed, 31, i as i64, 1);
                C64::new(a, b)
            })
            .collect();
        RealField::from_spectral(g, c).unwrap()
    }

    #[test]
    fn sharp_levels_match_thresholds() {
        assert_eq!(sharp_level(0, 5), -1);
        assert_eq!(sharp_level(1, 5), -1);
        assert_eq!(sharp_level(2, 5), 0);
        assert_eq!(sharp_level(4, 5), 0);
        assert_eq!(sharp_level(5, 5), 1);
        assert_eq!(sharp_level(16, 5), 1);
        assert_eq!(sharp_level(17, 5), 2);
        assert_eq!(sharp_level(1024, 5), 4);
        assert_eq!(sharp_level(1025, 5), 5);
        assert_eq!(sharp_level(8192, 5), 5);
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        let mut prev = 1.0;
        for i in 0..200 {
            let r = 0.75 + i as f64 * (4.0 / 3.0 - 0.75) / 200.0;
            let c = chi(r);
            assert!(c <= prev && (0.0..=1.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn partitions_sum_to_one() {
        let g = Grid::new(64).unwrap();
        for mode in [PartitionMode::Sharp, PartitionMode::Smooth] {
            let p = DyadicPartition::new(&g, mode);
            for idx in 0..g.len() {
                let s: f64 = p.levels().map(|j| p.weight(j, idx)).sum();
                assert!((s - 1.0).abs() < 1e-14, "{mode:?} at {idx}: {s}");
            }
        }
    }

    #[test]
    fn smooth_blocks_overlap_neighbours_only() {
        let g = Grid::new(128).unwrap();
        let p = DyadicPartition::smooth(&g);
        for idx in 0..g.len() {
            let on: Vec<i32> = p.levels().filter(|&j| p.weight(j, idx) > 0.0).collect();
            assert!(on.len() <= 2);
            if on.len() == 2 {
                assert_eq!(on[1] - on[0], 1);
            }
        }
    }

    #[test]
    fn blocks_reconstruct_field() {
        let g = Grid::new(32).unwrap();
        let f = rough(&g, 1);
        for p in [DyadicPartition::sharp(&g), DyadicPartition::smooth(&g)] {
            let blocks = p.blocks(&f).unwrap();
            let sum = RealField::sum(&g, &blocks).unwrap();
            assert!(sum.max_diff(&f).unwrap() < 1e-12);
            let lo = p.localize_low(&f, 1.5).unwrap();
            let hi = p.localize_high(&f, 1.5).unwrap();
            assert!(lo.add(&hi).unwrap().max_diff(&f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn hoelder_norm_of_single_mode() {
        let g = Grid::new(64).unwrap();
        let f = RealField::from_fn(&g, |x, _| (5.0 * x).cos());
        let p = DyadicPartition::sharp(&g);
        // |k| = 5 lies in block 2 (16 < 25 <= 64): norm 2^{2 alpha}.
        let v = p.hoelder_norm(&f, 0.5).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        let l2 = p.besov_norm(&f, 0.0, Exponent::Two, Exponent::Two).unwrap();
        assert!((l2 - 0.5f64.sqrt()).abs() < 1e-12);
        let l1 = p.besov_norm(&f, 0.0, Exponent::One, Exponent::One).unwrap();
        assert!((l1 - 2.0 / std::f64::consts::PI).abs() < 1e-3);
    }

    #[test]
    fn classical_hoelder_of_plane_wave() {
        let g = Grid::new(32).unwrap();
        let f = RealField::from_fn(&g, |x, _| x.sin());
        let v = classical_hoelder(&f, 1.0).unwrap();
        // Lipschitz constant of sin is 1, approached at the smallest spacing.
        assert!(v > 1.99 && v <= 2.0 + 1e-12, "{v}");
        assert!(classical_hoelder(&f, 0.0).is_err());
    }

    #[test]
    fn weighted_norms_examples() {
        let g = Grid::new(16).unwrap();
        let p = DyadicPartition::sharp(&g);
        let gfield = RealField::from_fn(&g, |x, y| (x + 2.0 * y).cos());
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let traj = Trajectory::new(times.clone(), vec![gfield.clone(); times.len()]).unwrap();
        let r = weighted_norms(&traj, &p, 0.5, 0.0).unwrap();
        let want = p.hoelder_norm(&gfield, 0.5).unwrap();
        assert!((r.c_norm - want).abs() < 1e-14);
        assert!(r.hoelder_time.abs() < 1e-14);
        let one = RealField::constant(&g, 1.0);
        let lin = Trajectory::new(times.clone(), times.iter().map(|&t| one.scale(t)).collect()).unwrap();
        let r = weighted_norms(&lin, &p, 1.0, 0.0).unwrap();
        assert!((r.hoelder_time - 1.0).abs() < 1e-12, "{}", r.hoelder_time);
        let single = Trajectory::new(vec![0.0], vec![one]).unwrap();
        assert!(weighted_norms(&single, &p, 1.0, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn sharp_blocks_are_orthogonal(seed in 0u64..10_000) {
            let g = Grid::new(32).unwrap();
            let p = DyadicPartition::sharp(&g);
            let f = rough(&g, seed);
            let b = p.blocks(&f).unwrap();
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let ip: f64 = b[i].spectral().iter().zip(b[j].spectral()).map(|(x, y)| (x * y.conj()).re).sum();
                    if i != j {
                        prop_assert!(ip.abs() < 1e-14);
                    }
                }
            }
        }

        #[test]
        fn besov_norm_is_seminorm(seed in 0u64..10_000, a in -2.0f64..2.0, c in -3.0f64..3.0) {
            let g = Grid::new(32).unwrap();
            let p = DyadicPartition::sharp(&g);
            let f = rough(&g, seed);
            let h = rough(&g, seed + 1);
            let nf = p.hoelder_norm(&f, a).unwrap();
            let nh = p.hoelder_norm(&h, a).unwrap();
            let ns = p.hoelder_norm(&f.add(&h).unwrap(), a).unwrap();
            prop_assert!(ns <= (nf + nh) * (1.0 + 1e-12));
            let sc = p.hoelder_norm(&f.scale(c), a).unwrap();
            prop_assert!((sc - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf * c.abs()));
        }
    }
}
