//! One-dimensional and separable Matérn kernels.

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::ln_bessel_k;

/// Regularity `nu` of a Matérn kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothness {
    Finite(f64),
    /// The `nu -> inf` limit, the squared exponential kernel.
    Gaussian,
}

impl Smoothness {
    pub const HALF: Smoothness = Smoothness::Finite(0.5);
    pub const THREE_HALVES: Smoothness = Smoothness::Finite(1.5);
    pub const FIVE_HALVES: Smoothness = Smoothness::Finite(2.5);

    pub fn value(self) -> f64 {
        match self {
            Smoothness::Finite(v) => v,
            Smoothness::Gaussian => f64::INFINITY,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Smoothness::Gaussian => f.write_str("inf"),
            Smoothness::Finite(v) => {
                let twice = 2.0 * v;
                if twice.fract() == 0.0 && twice % 2.0 == 1.0 && twice.abs() < 1e15 {
                    write!(f, "{}/2", twice as i64)
                } else {
                    write!(f, "{v}")
                }
            }
        }
    }
}

impl FromStr for Smoothness {
    type Err = Error;

    /// Accepts `inf`, plain decimals and fractions such as `5/2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "inf" | "Inf" | "infinity" | "gaussian") {
            return Ok(Smoothness::Gaussian);
        }
        let v = parse_fraction(s)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Parameter(format!("regularity must be positive, got {s}")));
        }
        Ok(Smoothness::Finite(v))
    }
}

pub(crate) fn parse_fraction(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            Ok(n / d)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Exponential,
    Matern32,
    Matern52,
    Matern72,
    Gaussian,
    /// `ln(2^{1-nu} / Gamma(nu))` cached for the Bessel route.
    General { log_norm: f64 },
}

/// Parameters of the one-dimensional Matérn kernel `phi_{nu,lambda}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams1D {
    nu: Smoothness,
    lambda: f64,
    sigma: f64,
    form: Form,
}

impl KernelParams1D {
    pub fn new(nu: Smoothness, lambda: f64, sigma: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter(format!("lengthscale must be positive, got {lambda}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter(format!("scale must be positive, got {sigma}")));
        }
        let form = match nu {
            Smoothness::Gaussian => Form::Gaussian,
            Smoothness::Finite(v) if !(v.is_finite() && v > 0.0) => {
                return Err(Error::Parameter(format!("regularity must be positive, got {v}")))
            }
            Smoothness::Finite(v) if v == 0.5 => Form::Exponential,
            Smoothness::Finite(v) if v == 1.5 => Form::Matern32,
            Smoothness::Finite(v) if v == 2.5 => Form::Matern52,
            Smoothness::Finite(v) if v == 3.5 => Form::Matern72,
            Smoothness::Finite(v) => Form::General { log_norm: general_log_norm(v) },
        };
        Ok(Self { nu, lambda, sigma, form })
    }

    /// Kernel with `sigma = 1`.
    pub fn unit(nu: Smoothness, lambda: f64) -> Result<Self> {
        Self::new(nu, lambda, 1.0)
    }

    pub fn nu(&self) -> Smoothness {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `phi(x, x')`. The diagonal returns `sigma^2` exactly.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let r = (x - y).abs();
        let s2 = self.sigma * self.sigma;
        if r == 0.0 {
            return Ok(s2);
        }
        let z = r / self.lambda;
        let v = match self.form {
            Form::Exponential => (-z).exp(),
            Form::Matern32 => {
                let t = 3f64.sqrt() * z;
                (1.0 + t) * (-t).exp()
            }
            Form::Matern52 => {
                let t = 5f64.sqrt() * z;
                (1.0 + t + t * t / 3.0) * (-t).exp()
            }
            Form::Matern72 => {
                let t = 7f64.sqrt() * z;
                (1.0 + t + 0.4 * t * t + t * t * t / 15.0) * (-t).exp()
            }
            Form::Gaussian => (-0.5 * z * z).exp(),
            Form::General { log_norm } => return self.eval_bessel(r, log_norm),
        };
        Ok(s2 * v)
    }

    /// `phi(x, x')` through the Bessel representation regardless of `nu`.
    ///
    /// This is the reference path for the half-integer closed forms.
    pub fn eval_general(&self, x: f64, y: f64) -> Result<f64> {
        let Smoothness::Finite(nu) = self.nu else {
            return Err(Error::Parameter("the Gaussian kernel has no Bessel form".into()));
        };
        let r = (x - y).abs();
        if r == 0.0 {
            return Ok(self.sigma * self.sigma);
        }
        self.eval_bessel(r, general_log_norm(nu))
    }

    fn eval_bessel(&self, r: f64, log_norm: f64) -> Result<f64> {
        let nu = self.nu.value();
        let z = (2.0 * nu).sqrt() * r / self.lambda;
        let ln = 2.0 * self.sigma.ln() + log_norm + nu * z.ln() + ln_bessel_k(nu, z)?;
        let v = ln.exp();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("Matérn kernel value not finite at r={r}")))
        }
    }
}

fn general_log_norm(nu: f64) -> f64 {
    (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu)
}

/// Product kernel `Phi(x, x') = prod_j phi_j(x_j, x'_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKernel {
    dims: Vec<KernelParams1D>,
}

impl SeparableKernel {
    pub fn new(dims: Vec<KernelParams1D>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Parameter("a separable kernel needs at least one dimension".into()));
        }
        Ok(Self { dims })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[KernelParams1D] {
        &self.dims
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = self.dims.len();
        if x.len() != d {
            return Err(Error::shape(d, x.len()));
        }
        if y.len() != d {
            return Err(Error::shape(d, y.len()));
        }
        let mut acc = 1.0;
        for ((k, &a), &b) in self.dims.iter().zip(x).zip(y) {
            acc *= k.eval(a, b)?;
        }
        Ok(acc)
    }

    /// `Phi(x, x) = prod_j sigma_j^2`.
    pub fn diagonal(&self) -> f64 {
        self.dims.iter().map(|k| k.sigma * k.sigma).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(nu: f64, lambda: f64) -> KernelParams1D {
        KernelParams1D::unit(Smoothness::Finite(nu), lambda).unwrap()
    }

    #[test]
    fn exponential_kernel_value() {
        let v = k(0.5, 1.0).eval(0.25, 0.0).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-15);
        assert!((v - 0.7788).abs() < 1e-4);
    }

    #[test]
    fn diagonal_is_sigma_squared() {
        for nu in [Smoothness::HALF, Smoothness::Finite(1.7), Smoothness::Gaussian] {
            let p = KernelParams1D::new(nu, 0.3, 1.5).unwrap();
            assert_eq!(p.eval(0.1, 0.1).unwrap(), 2.25);
        }
        assert_eq!(k(2.5, 4.0).eval(0.1, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn matern32_matches_bessel_route() {
        let p = k(1.5, 1.0);
        let t = 3f64.sqrt() * 0.3;
        let closed = (1.0 + t) * (-t).exp();
        assert!((p.eval(0.3, 0.0).unwrap() - closed).abs() < 1e-15);
        let general = p.eval_general(0.3, 0.0).unwrap();
        assert!(((general - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn separable_product() {
        let kern = SeparableKernel::new(vec![k(0.5, 1.0), k(0.5, 1.0)]).unwrap();
        let v = kern.eval(&[0.25, 0.25], &[0.0, 0.0]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(kern.eval(&[0.1, -0.2], &[0.1, -0.2]).unwrap(), kern.diagonal());
        assert!(matches!(kern.eval(&[0.0], &[0.0, 0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(KernelParams1D::new(Smoothness::HALF, 0.0, 1.0).is_err());
        assert!(KernelParams1D::new(Smoothness::HALF, 1.0, -1.0).is_err());
        assert!(KernelParams1D::new(Smoothness::Finite(0.0), 1.0, 1.0).is_err());
        assert!(SeparableKernel::new(vec![]).is_err());
    }

    #[test]
    fn smoothness_parsing_round_trips() {
        for s in ["1/2", "3/2", "5/2", "inf", "1.25"] {
            let nu: Smoothness = s.parse().unwrap();
            assert_eq!(nu.to_string(), s);
        }
        assert_eq!("2.5".parse::<Smoothness>().unwrap(), Smoothness::FIVE_HALVES);
        assert!("-1".parse::<Smoothness>().is_err());
        assert!("x/2".parse::<Smoothness>().is_err());
    }
}
