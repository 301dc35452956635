//! Exponent bookkeeping behind the a priori bound and the noise-regularity
//! threshold `4 kappa^2 - 7 kappa + 1 > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the a priori estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBudget {
    pub kappa: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Cutoff of the ansatz, `Delta_{>R} eta`.
    pub r: i32,
    /// Cutoff of the split, `Delta_{>R1}`.
    pub r1: i32,
}

/// Derived exponents and the contraction test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub gamma: f64,
    pub theta0: f64,
    pub theta1: f64,
    pub theta: f64,
    pub big_theta: f64,
    /// `Theta (1+delta)(1+eps) / (1 - delta + eps (1+delta))`.
    pub contraction: f64,
    pub margin: f64,
    pub feasible: bool,
    pub reason: Option<String>,
}

/// Smaller root of `4 k^2 - 7 k + 1`.
pub fn kappa_threshold() -> f64 {
    (7.0 - 33f64.sqrt()) / 8.0
}

/// Time weight `(2 alpha + kappa - 1) / 2`.
pub fn gamma_of(alpha: f64, kappa: f64) -> f64 {
    (2.0 * alpha + kappa - 1.0) / 2.0
}

impl ParameterBudget {
    pub fn new(kappa: f64, alpha: f64, epsilon: f64, delta: f64) -> ParameterBudget {
        ParameterBudget { kappa, alpha, epsilon, delta, r: 0, r1: 0 }
    }

    pub fn gamma(&self) -> f64 {
        gamma_of(self.alpha, self.kappa)
    }
}

/// Evaluate every exponent and the final contraction condition.
pub fn audit_budget(p: &ParameterBudget) -> Result<BudgetReport> {
    let ParameterBudget { kappa: k, alpha: a, epsilon: e, delta: d, .. } = *p;
    for (name, v) in [("kappa", k), ("alpha", a), ("epsilon", e), ("delta", d)] {
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite")));
        }
    }
    if k <= 0.0 || e < 0.0 || d < 0.0 || !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need kappa > 0, epsilon >= 0, delta >= 0, alpha in (0, 1); got {k}, {e}, {d}, {a}"
        )));
    }
    let gamma = gamma_of(a, k);
    let den0 = 2.0 * a - 1.0 + k;
    let den1 = a - 2.0 * k - e;
    let den = 2.0 - a - 2.0 * k + a * k + 0.5 * e * (3.0 * a - 1.0 + k);
    let theta0 = (k + e) / den0;
    let theta1 = (2.0 * k + e) / den1;
    let theta = a * (1.0 + k + e) / den;
    let den_t1 = (2.0 - 0.5 * e) * (1.0 - theta1) + a * theta1;
    let den_final = 1.0 - d + e * (1.0 + d);
    let mut reason = None;
    if den0 <= 0.0 || den1 <= 0.0 || den <= 0.0 {
        reason = Some("an exponent denominator is not positive".to_string());
    } else if theta1 >= 1.0 {
        reason = Some(format!("theta1 = {theta1} >= 1"));
    } else if theta0 >= 1.0 || theta0 + d > 1.0 {
        reason = Some(format!("theta0 + delta = {} > 1", theta0 + d));
    } else if den_t1 <= 0.0 || den_final <= 0.0 {
        reason = Some("final denominator is not positive".to_string());
    } else if !(0.0..1.0).contains(&gamma) {
        reason = Some(format!("gamma = {gamma} outside [0, 1)"));
    }
    if let Some(r) = reason {
        return Ok(BudgetReport {
            gamma,
            theta0,
            theta1,
            theta,
            big_theta: f64::NAN,
            contraction: f64::NAN,
            margin: f64::NAN,
            feasible: false,
            reason: Some(r),
        });
    }
    let big_theta = theta.max(d / (1.0 - theta0)).max(a * theta1 / den_t1);
    let contraction = big_theta * (1.0 + d) * (1.0 + e) / den_final;
    let margin = 1.0 - contraction;
    Ok(BudgetReport {
        gamma,
        theta0,
        theta1,
        theta,
        big_theta,
        contraction,
        margin,
        feasible: margin > 0.0,
        reason: if margin > 0.0 { None } else { Some("contraction condition fails".into()) },
    })
}

/// Largest kappa with nonnegative margin at `(alpha, epsilon, delta = kappa)`,
/// found by bisection on the audit itself.
pub fn critical_kappa(alpha: f64, epsilon: f64) -> Result<f64> {
    let m = |k: f64| -> Result<f64> {
        let r = audit_budget(&ParameterBudget::new(k, alpha, epsilon, k))?;
        Ok(if r.margin.is_nan() { -1.0 } else { r.margin })
    };
    let (mut lo, mut hi) = (1e-9, 0.3);
    if m(lo)? <= 0.0 || m(hi)? > 0.0 {
        return Err(Error::Precondition("margin does not change sign on (0, 0.3)".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
