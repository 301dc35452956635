//! Solvers for `(d_t - Laplacian) u = F(u) eta`: the unrenormalized scheme,
//! the renormalized scheme with counterterm `-c_n(t) F(u) F'(u)`, and the
//! paracontrolled scheme with the cutoff ansatz
//! `u = F(u) < I(Delta_{>R} eta) + u1# + u2#`.

use serde::{Deserialize, Serialize};

use crate::budget::gamma_of;
use crate::error::{Error, Result};
use crate::heat::{etd_step, heat, heat_integral, max_principle_constant, phi1, uniform_mesh, Trajectory, BLOWUP_NORM};
use crate::littlewood_paley::{BlockStack, DyadicPartition};
use crate::noise::{CounterTerm, EnhancedNoise};
use crate::nonlinearity::NonlinearitySpec;
use crate::paraproducts::{field_from_fine, fields_from_fine, para_fine, res_fine};
use crate::spectral::{compose_pair, compose_pair_fine, max_abs, multiply, Grid, RealField, C64};

pub use crate::budget::{audit_budget, critical_kappa, kappa_threshold, BudgetReport, ParameterBudget};

/// Time stepping: uniform step `dt` up to `t_final`, a snapshot every
/// `save_every` steps plus the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub dt: f64,
    pub t_final: f64,
    pub save_every: usize,
}

impl StepConfig {
    pub fn new(dt: f64, t_final: f64, save_every: usize) -> StepConfig {
        StepConfig { dt, t_final, save_every }
    }

    pub fn mesh(&self) -> Result<Vec<f64>> {
        if self.save_every == 0 {
            return Err(Error::InvalidParameter("save_every must be >= 1".into()));
        }
        uniform_mesh(self.dt, self.t_final)
    }

    fn saves(&self, m: usize, last: usize) -> bool {
        m.is_multiple_of(self.save_every) || m == last
    }
}

fn check_finite(u: &[C64], t: f64) -> Result<()> {
    // Parseval bound on the sup norm is enough to detect runaway growth.
    let l1: f64 = u.iter().map(|c| c.norm()).sum();
    if !l1.is_finite() || l1 > BLOWUP_NORM {
        return Err(Error::BlowUp { t, what: format!("sum |u_hat| = {l1:e}") });
    }
    Ok(())
}

fn check_initial(u0: &RealField, eta: &RealField) -> Result<()> {
    if u0.grid() != eta.grid() {
        return Err(Error::GridMismatch(u0.grid().n(), eta.grid().n()));
    }
    Ok(())
}

/// Exponential Euler with forcing `N(t_m, u_m)`.
fn explicit_scheme(
    u0: &RealField,
    steps: &StepConfig,
    mut forcing: impl FnMut(f64, &RealField) -> Result<Vec<C64>>,
) -> Result<Trajectory> {
    let g = u0.grid().clone();
    let mesh = steps.mesh()?;
    let last = mesh.len() - 1;
    let mut u = u0.clone();
    let mut times = vec![0.0];
    let mut fields = vec![u.clone()];
    for m in 0..last {
        let (t, t1) = (mesh[m], mesh[m + 1]);
        let f = forcing(t, &u)?;
        let next = etd_step(&g, u.spectral(), &f, t1 - t);
        check_finite(&next, t1)?;
        u = RealField::from_spectral_trusted(&g, next);
        if steps.saves(m + 1, last) {
            times.push(t1);
            fields.push(u.clone());
        }
    }
    Trajectory::new(times, fields)
}

/// Padded values of `F(u)` and `F'(u)` used by the dealiased products.
fn composed(nl: &NonlinearitySpec, u: &RealField) -> Result<(Vec<f64>, Vec<f64>)> {
    let (f, df) = compose_pair(u, |x| nl.value(x), |x| nl.d1(x))?;
    Ok(u.grid().fine_values_pair(f.spectral(), df.spectral()))
}

/// `(a b, c d)` as dealiased products from padded values of `a` and `c`.
fn mul2(g: &Grid, a_fine: &[f64], b: &RealField, c_fine: &[f64], d: &RealField) -> (RealField, RealField) {
    let (bf, df) = g.fine_values_pair(b.spectral(), d.spectral());
    let x: Vec<f64> = a_fine.iter().zip(&bf).map(|(p, q)| p * q).collect();
    let y: Vec<f64> = c_fine.iter().zip(&df).map(|(p, q)| p * q).collect();
    let (sx, sy) = g.truncate_fine_pair(&x, &y);
    RealField::pair_from_spectral(g, sx, sy)
}

/// Unrenormalized scheme with forcing `F(u) eta`.
pub fn solve_naive(nl: &NonlinearitySpec, u0: &RealField, eta: &RealField, steps: &StepConfig) -> Result<Trajectory> {
    check_initial(u0, eta)?;
    let g = u0.grid().clone();
    let eta_fine = eta.fine_values();
    explicit_scheme(u0, steps, |_, u| {
        let (f, _) = compose_pair(u, |x| nl.value(x), |_| 0.0)?;
        let f_fine = f.fine_values();
        let prod: Vec<f64> = f_fine.iter().zip(&eta_fine).map(|(a, b)| a * b).collect();
        Ok(g.truncate_fine(&prod))
    })
}

/// Renormalized scheme with forcing `F(u) eta_n - c_n(t) F(u) F'(u)`.
pub fn solve_renormalized(
    nl: &NonlinearitySpec,
    u0: &RealField,
    eta: &RealField,
    counter: &CounterTerm,
    steps: &StepConfig,
) -> Result<Trajectory> {
    check_initial(u0, eta)?;
    let g = u0.grid().clone();
    let eta_fine = eta.fine_values();
    explicit_scheme(u0, steps, |t, u| {
        let (f_fine, df_fine) = composed(nl, u)?;
        let a: Vec<f64> = f_fine.iter().zip(&eta_fine).map(|(x, y)| x * y).collect();
        let b: Vec<f64> = f_fine.iter().zip(&df_fine).map(|(x, y)| x * y).collect();
        let (sa, sb) = g.truncate_fine_pair(&a, &b);
        let ct = counter.at(t);
        Ok(sa.iter().zip(&sb).map(|(x, y)| x - y * ct).collect())
    })
}

/// Options of the paracontrolled scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParaConfig {
    /// `R` in `Delta_{>R} eta`.
    pub cutoff: i32,
    /// `R1` in the split term `F F' Delta_{>R1}(I(eta) o eta)`.
    pub split_cutoff: i32,
    /// Track the split and the maximum-principle monitor.
    pub diagnostics: bool,
    /// Spatial regularity used by the norm ledger.
    pub alpha: f64,
}

impl ParaConfig {
    /// `R = R1 = j_max - 3`, `alpha = 0.67`.
    pub fn defaults(grid: &Grid) -> ParaConfig {
        let r = (grid.j_max() - 3).max(-1);
        ParaConfig { cutoff: r, split_cutoff: r, diagnostics: true, alpha: 0.67 }
    }
}

/// Snapshot of the decomposition.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub t: f64,
    pub u: RealField,
    /// `u - F(u) < I(Delta_{>R} eta)(t)`.
    pub u_sharp: RealField,
    pub u1_sharp: RealField,
    pub u2_sharp: RealField,
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub u_sup: f64,
    pub u2_sup: f64,
    /// Sup of the forcing of the u2# equation frozen on `[t, t + dt)`; NaN at the final time.
    pub f2_sup: f64,
    /// `||u - (F(u) < X + u1# + u2#)||_inf / max(1, ||u||_inf)`.
    pub ansatz_defect: f64,
}

/// One ledger line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerRow {
    pub time: f64,
    pub norm: String,
    pub value: f64,
    pub margin: Option<f64>,
}

pub struct ParaOutput {
    pub trajectory: Trajectory,
    pub states: Vec<SolverState>,
    pub records: Vec<StepRecord>,
    pub ledger: Vec<LedgerRow>,
    pub gamma: f64,
}

/// Paracontrolled scheme. Per step, with `X = I(Delta_{>R} eta)` in closed form
/// and `h = Delta_{>R} eta`:
/// the resonant product `F(u) o h` is assembled from the five renormalized
/// pieces, `u#` is advanced with the forcing `F > h + (F o h)_ren + F Delta_{<=R} eta`
/// and the increment `P(F < X_m) + phi1 (F < h) - F < X_{m+1}`, then
/// `u_{m+1} = F_m < X_{m+1} + u#_{m+1}`.
pub fn solve_paracontrolled(
    nl: &NonlinearitySpec,
    u0: &RealField,
    enh: &EnhancedNoise,
    steps: &StepConfig,
    cfg: &ParaConfig,
) -> Result<ParaOutput> {
    check_initial(u0, &enh.eta)?;
    let p = &enh.partition;
    let g = u0.grid().clone();
    let jm = p.j_max();
    if cfg.cutoff < -1 || cfg.cutoff > jm || cfg.split_cutoff < -1 || cfg.split_cutoff > jm {
        return Err(Error::InvalidParameter(format!("cutoffs must lie in -1..={jm}")));
    }
    let gamma = gamma_of(cfg.alpha, enh.kappa);
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside [0, 1)")));
    }
    let mesh = steps.mesh()?;
    let last = mesh.len() - 1;
    let st = |f: &RealField| BlockStack::new(p, f);
    let h = p.localize_high(&enh.eta, cfg.cutoff as f64)?;
    let l = p.localize_low(&enh.eta, cfg.cutoff as f64)?;
    let (sh, sl) = (st(&h)?, st(&l)?);
    let s_eta = enh.eta_stack();

    let mut u = u0.clone();
    let mut u2 = RealField::zeros(&g);
    let mut u1s = u0.clone();
    let mut states = Vec::new();
    let mut records = Vec::new();
    let mut times = vec![0.0];
    let mut fields = vec![u.clone()];
    let mut sf_prev: Option<BlockStack> = None;
    let mut sx = st(&RealField::zeros(&g))?;

    for m in 0..=last {
        let t = mesh[m];
        let su = st(&u)?;
        let u_fine = su.total();
        let (fu, dfu) = compose_pair_fine(&g, &u_fine, |x| nl.value(x), |x| nl.d1(x))?;
        let (sf, sdf) = (st(&fu)?, st(&dfu)?);
        let (f_fine, df_fine) = (sf.total(), sdf.total());
        let (u1, f_lt_h) = fields_from_fine(p, &para_fine(&sf, &sx), &para_fine(&sf, &sh));
        let u_sharp = u.sub(&u1)?;
        if let Some(fp) = &sf_prev {
            // Reprojection onto F(u_m) < X_m: u1# absorbs (F_{m-1} - F_m) < X_m.
            let d = fp.lincomb(1.0, &sf, -1.0);
            u1s = u1s.add(&field_from_fine(p, &para_fine(&d, &sx)))?;
        }
        let recomposed = u1.add(&u1s)?.add(&u2)?;
        let u_sup = max_abs(&u_fine);
        let defect = u.sub(&recomposed)?.sup_norm() / u_sup.max(1.0);
        if steps.saves(m, last) {
            states.push(SolverState { t, u: u.clone(), u_sharp: u_sharp.clone(), u1_sharp: u1s.clone(), u2_sharp: u2.clone() });
        }
        if m == last {
            records.push(StepRecord { t, u_sup, u2_sup: u2.sup_norm(), f2_sup: f64::NAN, ansatz_defect: defect });
            break;
        }
        let (t1, dt) = (mesh[m + 1], mesh[m + 1] - t);
        let sx1 = st(&heat_integral(&h, t1)?)?;
        let (f_gt_h, f_lt_x1) = fields_from_fine(p, &para_fine(&sh, &sf), &para_fine(&sf, &sx1));
        let su1 = st(&u1)?;
        // F' < u, whose stack also gives R(u) = F(u) - F'(u) < u by linearity.
        let s_pu = st(&field_from_fine(p, &para_fine(&sdf, &su)))?;
        let sr = sf.lincomb(1.0, &s_pu, -1.0);
        // (F' < u#) o h + (F' < u1) o h in one resonant product.
        let (r_h, pu_h) = fields_from_fine(p, &res_fine(&sr, &sh), &res_fine(&s_pu, &sh));
        let (u1_h, x_h) = fields_from_fine(p, &res_fine(&su1, &sh), &res_fine(&sx, &sh));
        // (X o h)_ren from the renormalized I(eta) o eta.
        let sxl = st(&heat_integral(&l, t)?)?;
        let res_t = enh.resonant_with(t, &sx.lincomb(1.0, &sxl, 1.0));
        let (xl_eta, x_l) = fields_from_fine(p, &res_fine(&sxl, s_eta), &res_fine(&sx, &sl));
        let xh_ren = res_t.sub(&xl_eta)?.sub(&x_l)?;
        let (f_xh, f_xh_ren) = mul2(&g, &f_fine, &x_h, &f_fine, &xh_ren);
        let com_fxh = u1_h.sub(&f_xh)?;
        let (df_u1h, df_com) = mul2(&g, &df_fine, &u1_h, &df_fine, &com_fxh);
        let (df_f_xh, f_l) = mul2(&g, &df_fine, &f_xh_ren, &f_fine, &l);
        // [(F' < u) o h]_ren = (F' < u#) o h + com(F', u1, h) + F' com(F, X, h) + F' F (X o h)_ren.
        let ren = pu_h.sub(&df_u1h)?.add(&df_com)?.add(&df_f_xh)?;
        let split = if cfg.diagnostics {
            let d = p.localize_high(&res_t, cfg.split_cutoff as f64)?;
            let fd = multiply(&fu, &d)?;
            let (a, _) = mul2(&g, &df_fine, &fd, &df_fine, &fd);
            a
        } else {
            RealField::zeros(&g)
        };
        let f1 = f_gt_h.add(&split)?;
        let f2 = r_h.add(&f_l)?.add(&ren)?.sub(&split)?;
        let k = heat(&u1, dt)?.lincomb(1.0, &f_lt_h.multiplier(|a, b| phi1((a * a + b * b) as f64, dt)), 1.0)?.sub(&f_lt_x1)?;
        let (u2_sup, f2_sup) = {
            let (a, b) = g.fine_values_pair(u2.spectral(), f2.spectral());
            (max_abs(&a), max_abs(&b))
        };
        records.push(StepRecord { t, u_sup, u2_sup, f2_sup, ansatz_defect: defect });
        let u2n = RealField::from_spectral_trusted(&g, etd_step(&g, u2.spectral(), f2.spectral(), dt));
        let u1n = RealField::from_spectral_trusted(&g, etd_step(&g, u1s.spectral(), f1.spectral(), dt)).add(&k)?;
        let u_next = f_lt_x1.add(&u1n.add(&u2n)?)?;
        check_finite(u_next.spectral(), t1)?;
        u = u_next;
        u2 = u2n;
        u1s = u1n;
        sf_prev = Some(sf);
        sx = sx1;
        if steps.saves(m + 1, last) {
            times.push(t1);
            fields.push(u.clone());
        }
    }
    let trajectory = Trajectory::new(times, fields)?;
    let ledger = build_ledger(p, &states, &records, &trajectory, cfg, gamma)?;
    Ok(ParaOutput { trajectory, states, records, ledger, gamma })
}

fn build_ledger(
    p: &DyadicPartition,
    states: &[SolverState],
    records: &[StepRecord],
    traj: &Trajectory,
    cfg: &ParaConfig,
    gamma: f64,
) -> Result<Vec<LedgerRow>> {
    let mp = max_principle_monitor(records, gamma)?;
    let mut rows = Vec::new();
    for s in states {
        let w = s.t.powf(gamma);
        rows.push(LedgerRow { time: s.t, norm: "u_Linf".into(), value: s.u.sup_norm(), margin: None });
        rows.push(LedgerRow { time: s.t, norm: "u_sharp_Linf".into(), value: s.u_sharp.sup_norm(), margin: None });
        rows.push(LedgerRow {
            time: s.t,
            norm: "t^gamma*u1_sharp_C^2alpha".into(),
            value: w * p.hoelder_norm(&s.u1_sharp, 2.0 * cfg.alpha)?,
            margin: None,
        });
        rows.push(LedgerRow { time: s.t, norm: "u2_sharp_Linf".into(), value: s.u2_sharp.sup_norm(), margin: None });
        if let Some(e) = mp.iter().find(|e| e.t == s.t) {
            rows.push(LedgerRow { time: s.t, norm: "max_principle".into(), value: e.lhs, margin: Some(e.margin) });
        }
    }
    if traj.len() >= 2 && cfg.alpha > 0.0 && cfg.alpha < 2.0 {
        let r = crate::littlewood_paley::weighted_norms(traj, p, cfg.alpha, gamma)?;
        let t = *traj.times().last().expect("nonempty");
        rows.push(LedgerRow { time: t, norm: "u_S^{alpha,gamma}".into(), value: r.s_norm, margin: None });
    }
    Ok(rows)
}

/// One time of the maximum-principle monitor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaxPrincipleEntry {
    pub t: f64,
    /// `sup_{s<=t} ||u2#(s)||_inf`.
    pub lhs: f64,
    /// `C(gamma) t^{1-gamma} sup_{s<=t} s^gamma ||f2(s)||_inf`, with `u2#(0) = 0`.
    pub rhs: f64,
    pub margin: f64,
}

/// Evaluate the weighted maximum principle with `b = 0` and `C = 1/(1-gamma)`
/// along the per-step records.
pub fn max_principle_monitor(records: &[StepRecord], gamma: f64) -> Result<Vec<MaxPrincipleEntry>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} not in [0, 1)")));
    }
    let c = max_principle_constant(gamma);
    let mut lhs = 0.0f64;
    let mut sup = 0.0f64;
    Ok(records
        .iter()
        .map(|r| {
            lhs = lhs.max(r.u2_sup);
            if r.f2_sup.is_finite() {
                sup = sup.max(r.t.powf(gamma) * r.f2_sup);
            }
            let rhs = c * r.t.powf(1.0 - gamma) * sup;
            MaxPrincipleEntry { t: r.t, lhs, rhs, margin: rhs - lhs }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{enhance, sample_white_noise, NoiseLevel};

    fn smooth_u0(g: &Grid) -> RealField {
        RealField::from_fn(g, |x, y| 0.5 * x.cos() + 0.3 * (x + y).sin())
    }

    #[test]
    fn constant_nonlinearity_is_exact() {
        // F = c: u = P_t u0 + c I(eta), reproduced exactly by the exponential step.
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let eta = sample_white_noise(&g, 3).mollify(&p, NoiseLevel::Level(2)).unwrap().field;
        let u0 = smooth_u0(&g);
        let steps = StepConfig::new(0.01, 0.5, 10);
        let tr = solve_naive(&NonlinearitySpec::constant(1.5), &u0, &eta, &steps).unwrap();
        for (t, u) in tr.iter() {
            let want = heat(&u0, t).unwrap().add(&heat_integral(&eta, t).unwrap().scale(1.5)).unwrap();
            assert!(u.max_diff(&want).unwrap() < 1e-13);
        }
    }

    #[test]
    fn zero_noise_recovers_heat_flow() {
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let zero = RealField::zeros(&g);
        let u0 = smooth_u0(&g);
        let noise = crate::noise::NoiseSample { seed: 0, level: NoiseLevel::Full, field: zero.clone() };
        let enh = enhance(&p, &noise, NoiseLevel::Full, 0.1).unwrap();
        let steps = StepConfig::new(0.01, 0.3, 5);
        let out = solve_paracontrolled(&NonlinearitySpec::sin(), &u0, &enh, &steps, &ParaConfig::defaults(&g)).unwrap();
        let want = heat(&u0, 0.3).unwrap();
        // The counterterm is not zero for zero noise, c_n F F' acts alone.
        let r = solve_renormalized(&NonlinearitySpec::sin(), &u0, &zero, &enh.counter, &steps).unwrap();
        assert!(out.trajectory.final_field().max_diff(r.final_field()).unwrap() < 1e-12);
        let nv = solve_naive(&NonlinearitySpec::sin(), &u0, &zero, &steps).unwrap();
        assert!(nv.final_field().max_diff(&want).unwrap() < 1e-14);
        for e in max_principle_monitor(&out.records, out.gamma).unwrap() {
            // Paired transforms leak rounding into the zero field.
            assert!(e.margin >= -1e-15, "{e:?}");
        }
    }

    #[test]
    fn paracontrolled_matches_renormalized() {
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let enh = enhance(&p, &sample_white_noise(&g, 7), NoiseLevel::Full, 0.1).unwrap();
        let u0 = smooth_u0(&g);
        let steps = StepConfig::new(0.01, 0.2, 4);
        let nl = NonlinearitySpec::sin();
        let a = solve_paracontrolled(&nl, &u0, &enh, &steps, &ParaConfig::defaults(&g)).unwrap();
        let b = solve_renormalized(&nl, &u0, &enh.eta, &enh.counter, &steps).unwrap();
        let d = a.trajectory.sup_distance(&b).unwrap();
        assert!(d < 1e-11, "{d}");
        for r in &a.records {
            assert!(r.ansatz_defect < 1e-12, "{r:?}");
        }
        for s in &a.states {
            let re = s.u_sharp.sub(&s.u1_sharp).unwrap().sub(&s.u2_sharp).unwrap();
            assert!(re.sup_norm() < 1e-12);
        }
        assert!(a.ledger.iter().any(|r| r.norm == "max_principle"));
    }

    #[test]
    fn blow_up_is_reported() {
        let g = Grid::new(16).unwrap();
        let u0 = RealField::constant(&g, 1.0);
        let eta = RealField::constant(&g, 50.0);
        let steps = StepConfig::new(0.01, 1.0, 10);
        let r = solve_naive(&NonlinearitySpec::linear(1.0), &u0, &eta, &steps);
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }

    #[test]
    fn monitor_trivial_case() {
        let recs = vec![
            StepRecord { t: 0.0, u_sup: 1.0, u2_sup: 0.0, f2_sup: 0.0, ansatz_defect: 0.0 },
            StepRecord { t: 0.5, u_sup: 1.0, u2_sup: 0.0, f2_sup: f64::NAN, ansatz_defect: 0.0 },
        ];
        let m = max_principle_monitor(&recs, 0.2).unwrap();
        assert!(m.iter().all(|e| e.margin == 0.0));
        assert!(max_principle_monitor(&recs, 1.0).is_err());
    }
}
