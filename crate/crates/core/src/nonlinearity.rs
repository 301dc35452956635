//! Nonlinearities `F` with their first two derivatives.

use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar map with analytic `F'` and `F''`. Built-ins are validated on
/// construction; custom specs go through `validate`.
#[derive(Clone)]
pub struct NonlinearitySpec {
    name: String,
    bounded: bool,
    f: ScalarFn,
    d1: ScalarFn,
    d2: ScalarFn,
}

impl std::fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NonlinearitySpec({})", self.name)
    }
}

/// Interval and tolerance of the derivative check.
pub const CHECK_RANGE: f64 = 10.0;
pub const CHECK_TOL: f64 = 1e-6;

impl NonlinearitySpec {
    /// Custom nonlinearity; fails unless the derivatives pass the
    /// finite-difference check on `[-10, 10]`.
    pub fn new(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<NonlinearitySpec> {
        let s = NonlinearitySpec { name: name.to_string(), bounded: true, f: Arc::new(f), d1: Arc::new(d1), d2: Arc::new(d2) };
        s.validate()?;
        Ok(s)
    }

    pub fn sin() -> NonlinearitySpec {
        Self::new("sin", f64::sin, f64::cos, |x| -x.sin()).expect("sin passes")
    }

    /// `c tanh(u)`.
    pub fn tanh(c: f64) -> NonlinearitySpec {
        let mut s = Self::new(
            "tanh",
            move |x| c * x.tanh(),
            move |x| c / x.cosh().powi(2),
            move |x| -2.0 * c * x.tanh() / x.cosh().powi(2),
        )
        .expect("tanh passes");
        s.name = format!("{c}*tanh");
        s
    }

    pub fn constant(c: f64) -> NonlinearitySpec {
        let mut s = Self::new("const", move |_| c, |_| 0.0, |_| 0.0).expect("constant passes");
        s.name = format!("const({c})");
        s
    }

    /// `a u`; unbounded, so outside the class the well-posedness theory covers.
    pub fn linear(a: f64) -> NonlinearitySpec {
        let mut s = Self::new("linear", move |x| a * x, move |_| a, |_| 0.0).expect("linear passes");
        s.name = format!("linear({a})");
        s.bounded = false;
        s
    }

    /// Parse `sin`, `tanh`, `c*tanh`, `const:c`, `linear:a`.
    pub fn parse(s: &str) -> Result<NonlinearitySpec> {
        let s = s.trim();
        if s == "sin" {
            return Ok(Self::sin());
        }
        if s == "tanh" {
            return Ok(Self::tanh(1.0));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number in nonlinearity '{s}'")));
        if let Some(c) = s.strip_suffix("*tanh") {
            return Ok(Self::tanh(num(c)?));
        }
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(Self::constant(num(c)?));
        }
        if let Some(a) = s.strip_prefix("linear:") {
            return Ok(Self::linear(num(a)?));
        }
        Err(Error::InvalidParameter(format!("unknown nonlinearity '{s}' (sin, tanh, c*tanh, const:c, linear:a)")))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether `F` and its derivatives are bounded on the whole line.
    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        (self.d1)(x)
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        (self.d2)(x)
    }

    /// Central finite differences of `F` and `F'` against the supplied
    /// derivatives, relative tolerance 1e-6 on a fixed mesh of `[-10, 10]`.
    pub fn validate(&self) -> Result<()> {
        let h = 1e-4;
        for i in 0..=400 {
            let x = -CHECK_RANGE + 2.0 * CHECK_RANGE * i as f64 / 400.0;
            let vals = [self.value(x), self.d1(x), self.d2(x)];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("nonlinearity {} at {x}", self.name)));
            }
            let fd1 = (self.value(x + h) - self.value(x - h)) / (2.0 * h);
            let fd2 = (self.d1(x + h) - self.d1(x - h)) / (2.0 * h);
            for (fd, an, which) in [(fd1, vals[1], "F'"), (fd2, vals[2], "F''")] {
                if (fd - an).abs() > CHECK_TOL * (1.0 + an.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "{which} of {} disagrees with finite differences at {x}: {an} vs {fd}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_parse() {
        for s in ["sin", "tanh", "0.5*tanh", "const:2", "linear:0.3"] {
            let f = NonlinearitySpec::parse(s).unwrap();
            f.validate().unwrap();
        }
        assert!(!NonlinearitySpec::linear(1.0).is_bounded());
        assert!(NonlinearitySpec::sin().is_bounded());
        assert!(NonlinearitySpec::parse("exp").is_err());
    }

    #[test]
    fn wrong_derivative_rejected() {
        let bad = NonlinearitySpec::new("bad", f64::sin, f64::sin, |x| x.cos());
        assert!(bad.is_err());
        let nonfinite = NonlinearitySpec::new("inv", |x| 1.0 / x, |x| -1.0 / (x * x), |x| 2.0 / (x * x * x));
        assert!(nonfinite.is_err());
    }
}
