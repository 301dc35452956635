//! Heat semigroup, discrete Duhamel operator, trajectories and the
//! transport-heat integrator.

use crate::error::{Error, Result};
use crate::littlewood_paley::DyadicPartition;
use crate::paraproducts::paraproduct;
use crate::spectral::{multiply, Grid, RealField, C64};

/// Time-indexed snapshots on one grid with strictly increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<RealField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<RealField>) -> Result<Trajectory> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "trajectory needs matching nonempty times/fields ({} vs {})",
                times.len(),
                fields.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("trajectory times must be finite, >= 0 and strictly increasing".into()));
        }
        let n = fields[0].grid().n();
        if let Some(f) = fields.iter().find(|f| f.grid().n() != n) {
            return Err(Error::GridMismatch(n, f.grid().n()));
        }
        Ok(Trajectory { times, fields })
    }

    /// Snapshots `f(t)` of a closure on the given times.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> RealField) -> Result<Trajectory> {
        let fields = times.iter().map(|&t| f(t)).collect();
        Self::new(times, fields)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[RealField] {
        &self.fields
    }

    pub fn final_field(&self) -> &RealField {
        self.fields.last().expect("nonempty")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &RealField)> {
        self.times.iter().copied().zip(self.fields.iter())
    }

    pub fn push(&mut self, t: f64, f: RealField) -> Result<()> {
        if t <= *self.times.last().expect("nonempty") {
            return Err(Error::InvalidParameter("times must increase".into()));
        }
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch(self.grid().n(), f.grid().n()));
        }
        self.times.push(t);
        self.fields.push(f);
        Ok(())
    }

    /// Apply `g` snapshot by snapshot.
    pub fn map(&self, g: impl Fn(f64, &RealField) -> Result<RealField>) -> Result<Trajectory> {
        let fields = self.iter().map(|(t, f)| g(t, f)).collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.times.clone(), fields)
    }

    /// Pointwise difference on a shared time mesh.
    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.same_mesh(other)?;
        let fields = self.fields.iter().zip(&other.fields).map(|(a, b)| a.sub(b)).collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.times.clone(), fields)
    }

    fn same_mesh(&self, other: &Trajectory) -> Result<()> {
        if self.times != other.times {
            return Err(Error::InvalidParameter("trajectories live on different time meshes".into()));
        }
        Ok(())
    }

    /// Subsequence of snapshots.
    pub fn select(&self, idx: &[usize]) -> Result<Trajectory> {
        Trajectory::new(idx.iter().map(|&i| self.times[i]).collect(), idx.iter().map(|&i| self.fields[i].clone()).collect())
    }

    /// `sup_t ||f(t) - g(t)||_inf` on the shared mesh, oversampled.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        self.same_mesh(other)?;
        let mut m = 0.0f64;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            m = m.max(a.sub(b)?.sup_norm());
        }
        Ok(m)
    }
}

#[inline]
fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("heat time t = {t} must be finite and >= 0")));
    }
    Ok(())
}

/// `(1 - e^{-h q}) / q`, equal to `h` at `q = 0`.
#[inline]
pub fn phi1(q: f64, h: f64) -> f64 {
    if q == 0.0 {
        h
    } else {
        -(-h * q).exp_m1() / q
    }
}

/// Heat semigroup `P_t f`, multiplier `e^{-|k|^2 t}`.
pub fn heat(f: &RealField, t: f64) -> Result<RealField> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let g = f.grid();
    let coef = f.spectral().iter().enumerate().map(|(i, &c)| c * (-(g.k2(i) as f64) * t).exp()).collect();
    Ok(RealField::from_spectral_trusted(g, coef))
}

/// `int_0^t P_s ds f`, the mild solution of `(d_t - Laplacian) v = f` with `f`
/// constant in time and `v(0) = 0`.
pub fn heat_integral(f: &RealField, t: f64) -> Result<RealField> {
    check_time(t)?;
    let g = f.grid();
    let coef = f.spectral().iter().enumerate().map(|(i, &c)| c * phi1(g.k2(i) as f64, t)).collect();
    Ok(RealField::from_spectral_trusted(g, coef))
}

/// One exponential Euler step in spectral space:
/// `P_h u + phi1(h) f`.
pub(crate) fn etd_step(grid: &Grid, u: &[C64], f: &[C64], h: f64) -> Vec<C64> {
    (0..u.len())
        .map(|i| {
            let q = grid.k2(i) as f64;
            u[i] * (-h * q).exp() + f[i] * phi1(q, h)
        })
        .collect()
}

/// Discrete Duhamel operator. The forcing is frozen at the left endpoint of
/// each mesh interval and integrated exactly, so time-constant forcing is
/// reproduced to rounding. Output shares the forcing's mesh; the value at
/// the first mesh time is zero.
pub fn duhamel(forcing: &Trajectory) -> Result<Trajectory> {
    let g = forcing.grid().clone();
    let times = forcing.times().to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut v = vec![C64::new(0.0, 0.0); g.len()];
    out.push(RealField::zeros(&g));
    for m in 0..times.len() - 1 {
        let h = times[m + 1] - times[m];
        v = etd_step(&g, &v, forcing.fields()[m].spectral(), h);
        out.push(RealField::from_spectral_trusted(&g, v.clone()));
    }
    Trajectory::new(times, out)
}

/// `I(f < g) - f < I(g)` on the shared mesh.
pub fn duhamel_commutator(f: &Trajectory, g: &Trajectory, p: &DyadicPartition) -> Result<Trajectory> {
    f.same_mesh(g)?;
    let fg = f.iter().zip(g.fields()).map(|((_, a), b)| paraproduct(p, a, b)).collect::<Result<Vec<_>>>()?;
    let i_fg = duhamel(&Trajectory::new(f.times().to_vec(), fg)?)?;
    let i_g = duhamel(g)?;
    let fields = f
        .fields()
        .iter()
        .zip(i_g.fields())
        .zip(i_fg.fields())
        .map(|((a, ig), ifg)| ifg.sub(&paraproduct(p, a, ig)?))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(f.times().to_vec(), fields)
}

/// Abort threshold for the transport-heat integrator.
pub const BLOWUP_NORM: f64 = 1e6;

/// Solve `(d_t - Laplacian) w = b . grad w + f` with
/// `w_{m+1} = P_h (w_m + h (b_m . grad w_m + f_m))`.
pub fn solve_transport_heat(b: &[Trajectory; 2], f: &Trajectory, w0: &RealField) -> Result<Trajectory> {
    b[0].same_mesh(f)?;
    b[1].same_mesh(f)?;
    if w0.grid() != f.grid() {
        return Err(Error::GridMismatch(w0.grid().n(), f.grid().n()));
    }
    let g = f.grid().clone();
    let times = f.times().to_vec();
    let mut w = w0.clone();
    let mut out = vec![w.clone()];
    for m in 0..times.len() - 1 {
        let h = times[m + 1] - times[m];
        let (b1, b2) = (&b[0].fields()[m], &b[1].fields()[m]);
        let bmax = b1.values().iter().zip(b2.values()).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
        let cfl = h * bmax * (g.n() / 2) as f64;
        if cfl > 1.0 {
            return Err(Error::Stability(format!("CFL number {cfl:.3} > 1 at t = {}", times[m])));
        }
        let [gx, gy] = w.gradient();
        let drift = multiply(b1, &gx)?.add(&multiply(b2, &gy)?)?;
        let rhs = w.lincomb(1.0, &drift.add(&f.fields()[m])?, h)?;
        w = heat(&rhs, h)?;
        let s = w.grid_sup();
        if !s.is_finite() || s > BLOWUP_NORM {
            return Err(Error::BlowUp { t: times[m + 1], what: format!("||w||_inf = {s:e}") });
        }
        out.push(w.clone());
    }
    Trajectory::new(times, out)
}

/// Constant `1 / (1 - gamma)` of the weighted maximum principle.
pub fn max_principle_constant(gamma: f64) -> f64 {
    1.0 / (1.0 - gamma)
}

/// Right side `||w0||_inf + C(gamma) t^{1-gamma} sup_{s<=t} s^gamma ||f(s)||_inf`
/// at every mesh time.
pub fn max_principle_bound(w0: &RealField, f: &Trajectory, gamma: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} not in [0, 1)")));
    }
    let w0s = w0.sup_norm();
    let mut sup = 0.0f64;
    Ok(f
        .iter()
        .map(|(t, fs)| {
            sup = sup.max(t.powf(gamma) * fs.sup_norm());
            w0s + max_principle_constant(gamma) * t.powf(1.0 - gamma) * sup
        })
        .collect())
}

/// Uniform mesh `0, h, ..., T` (the last point lands on `T`).
pub fn uniform_mesh(dt: f64, t_final: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_final > 0.0 && dt.is_finite() && t_final.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and T > 0 (dt = {dt}, T = {t_final})")));
    }
    let steps = (t_final / dt).round().max(1.0) as usize;
    Ok((0..=steps).map(|m| t_final * m as f64 / steps as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wave(g: &Grid, a: f64, b: f64) -> RealField {
        RealField::from_fn(g, move |x, y| (a * x + b * y).cos())
    }

    #[test]
    fn heat_decays_mode() {
        let g = Grid::new(16).unwrap();
        let f = wave(&g, 2.0, 1.0);
        let h = heat(&f, 0.3).unwrap();
        assert!(h.max_diff(&f.scale((-1.5f64).exp())).unwrap() < 1e-14);
        assert!(heat(&f, -1.0).is_err());
        assert!(heat(&f, 0.0).unwrap().max_diff(&f).unwrap() == 0.0);
    }

    #[test]
    fn duhamel_exact_for_constant_forcing() {
        let g = Grid::new(16).unwrap();
        let f = wave(&g, 1.0, 2.0).add(&RealField::constant(&g, 0.5)).unwrap();
        let mesh = uniform_mesh(0.1, 1.0).unwrap();
        let traj = Trajectory::from_fn(mesh, |_| f.clone()).unwrap();
        let v = duhamel(&traj).unwrap();
        for (t, vt) in v.iter() {
            let want = heat_integral(&f, t).unwrap();
            assert!(vt.max_diff(&want).unwrap() < 1e-14);
        }
    }

    #[test]
    fn duhamel_defect_is_first_order() {
        // Forcing cos(t) e: residual of d_t v - Laplacian v - f by central
        // differences shrinks linearly with the step.
        let g = Grid::new(16).unwrap();
        let e = wave(&g, 1.0, 1.0);
        let mut defects = vec![];
        for &dt in &[0.02, 0.01] {
            let mesh = uniform_mesh(dt, 1.0).unwrap();
            let f = Trajectory::from_fn(mesh, |t| e.scale(t.cos())).unwrap();
            let v = duhamel(&f).unwrap();
            let k = v.len() / 2;
            let dv = v.fields()[k + 1].sub(&v.fields()[k - 1]).unwrap().scale(1.0 / (2.0 * dt));
            let lap = v.fields()[k].multiplier(|a, b| -((a * a + b * b) as f64));
            let res = dv.sub(&lap).unwrap().sub(&f.fields()[k]).unwrap();
            defects.push(res.grid_sup());
        }
        let order = (defects[0] / defects[1]).log2();
        assert!((order - 1.0).abs() < 0.1, "{defects:?}");
    }

    #[test]
    fn trajectory_validation() {
        let g = Grid::new(8).unwrap();
        let z = RealField::zeros(&g);
        assert!(Trajectory::new(vec![0.0, 0.0], vec![z.clone(), z.clone()]).is_err());
        assert!(Trajectory::new(vec![], vec![]).is_err());
        let h = Grid::new(16).unwrap();
        assert!(Trajectory::new(vec![0.0, 1.0], vec![z, RealField::zeros(&h)]).is_err());
    }

    #[test]
    fn transport_cfl_and_blowup() {
        let g = Grid::new(16).unwrap();
        let mesh = uniform_mesh(0.1, 1.0).unwrap();
        let big = Trajectory::from_fn(mesh.clone(), |_| RealField::constant(&g, 10.0)).unwrap();
        let zero = Trajectory::from_fn(mesh.clone(), |_| RealField::zeros(&g)).unwrap();
        let w0 = wave(&g, 1.0, 0.0);
        assert!(matches!(solve_transport_heat(&[big, zero.clone()], &zero, &w0), Err(Error::Stability(_))));
        let huge = Trajectory::from_fn(mesh, |_| RealField::constant(&g, 1e8)).unwrap();
        assert!(matches!(solve_transport_heat(&[zero.clone(), zero], &huge, &w0), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn transport_by_constant_drift_translates() {
        // b constant: w(t) = P_t w0 shifted by b t, w0 = cos x gives e^{-t} cos(x + b t).
        let g = Grid::new(32).unwrap();
        let dt = 1e-3;
        let mesh = uniform_mesh(dt, 0.5).unwrap();
        let b1 = Trajectory::from_fn(mesh.clone(), |_| RealField::constant(&g, 1.0)).unwrap();
        let b2 = Trajectory::from_fn(mesh.clone(), |_| RealField::zeros(&g)).unwrap();
        let w = solve_transport_heat(&[b1, b2.clone()], &b2, &wave(&g, 1.0, 0.0)).unwrap();
        let want = RealField::from_fn(&g, |x, _| (-0.5f64).exp() * (x + 0.5).cos());
        assert!(w.final_field().max_diff(&want).unwrap() < 2e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn semigroup_property(s in 0.0f64..1.0, t in 0.0f64..1.0, seed in 0u64..1000) {
            let g = Grid::new(16).unwrap();
            let c = (0..g.len()).map(|i| {
                let (a, b) = crate::rng::counter_gaussian_pair(seed, 3, i as i64, 0);
                C64::new(a, b)
            }).collect();
            let f = RealField::from_spectral(&g, c).unwrap();
            let a = heat(&heat(&f, s).unwrap(), t).unwrap();
            let b = heat(&f, s + t).unwrap();
            prop_assert!(a.max_diff(&b).unwrap() < 1e-13);
        }

        #[test]
        fn heat_contracts_band_limited(seed in 0u64..1000, t in 0.0f64..1.0) {
            let g = Grid::new(32).unwrap();
            let c = (0..g.len()).map(|i| {
                let (k1, k2) = g.freq(i);
                if k1.abs() > 3 || k2.abs() > 3 { return C64::new(0.0, 0.0); }
                let (a, b) = crate::rng::counter_gaussian_pair(seed, 4, k1, k2);
                C64::new(a, b)
            }).collect();
            let f = RealField::from_spectral(&g, c).unwrap();
            let h = heat(&f, t).unwrap();
            // Sup over the oversampled grid approximates the continuum sup only
            // up to the sampling error of a degree-3 polynomial.
            prop_assert!(h.sup_norm() <= f.sup_norm() * 1.02);
        }
    }
}
