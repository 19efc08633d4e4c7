//! Closed-form leading-order bias of the DNN estimator.
//!
//! For a smooth regression function `mu` and covariate density `f`, the
//! expected DNN estimate at scale `s` is `mu(x) + c s^(-2/d) + o(s^(-2/d))`
//! with
//!
//! ```text
//! c = Gamma(2/d + 1) (f tr(mu'') + 2 mu'.f') / (2 d V_d^(2/d) f^(1 + 2/d))
//! ```
//!
//! and `V_d` the volume of the unit ball. These quantities serve as test
//! oracles for Monte Carlo measurements; they are not estimated from data.

use statrs::function::gamma::ln_gamma;

use crate::data::QueryPoint;
use crate::error::{Error, Result};

/// A data-generating process with closed-form derivatives.
pub trait AnalyticDgp {
    fn dim(&self) -> usize;
    fn mean(&self, x: &[f64]) -> f64;
    fn mean_grad(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `d x d` Hessian of the mean.
    fn mean_hess(&self, x: &[f64]) -> Vec<f64>;
    fn density(&self, x: &[f64]) -> f64;
    fn density_grad(&self, x: &[f64]) -> Vec<f64>;
    fn noise_sd(&self) -> f64;
}

/// Volume of the unit ball in `d` dimensions, `pi^(d/2) / Gamma(1 + d/2)`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(1.0 + h)).exp()
}

fn check_point(dgp: &dyn AnalyticDgp, x: &QueryPoint) -> Result<f64> {
    x.check_dim(dgp.dim())?;
    let f = dgp.density(x.coords());
    if f > 0.0 && f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Domain(format!(
            "density at {:?} is {f}, must be positive",
            x.coords()
        )))
    }
}

/// Coefficient `c` of the `s^(-2/d)` bias term at `x`.
pub fn bias_coefficient(dgp: &dyn AnalyticDgp, x: &QueryPoint) -> Result<f64> {
    let f = check_point(dgp, x)?;
    let p = x.coords();
    let d = dgp.dim();
    let df = d as f64;
    let hess = dgp.mean_hess(p);
    let trace: f64 = (0..d).map(|i| hess[i * d + i]).sum();
    let drift: f64 = dgp
        .mean_grad(p)
        .iter()
        .zip(dgp.density_grad(p))
        .map(|(a, b)| a * b)
        .sum();
    let numer = f * trace + 2.0 * drift;
    let log_denom =
        (2.0 * df).ln() + (2.0 / df) * unit_ball_volume(d).ln() + (1.0 + 2.0 / df) * f.ln();
    Ok(numer * (ln_gamma(2.0 / df + 1.0) - log_denom).exp())
}

/// Leading bias `c s^(-2/d)` of the DNN estimator at scale `s`.
pub fn leading_bias(dgp: &dyn AnalyticDgp, x: &QueryPoint, s: usize) -> Result<f64> {
    if s < 1 {
        return Err(Error::Domain("subsampling scale must be at least 1".into()));
    }
    let c = bias_coefficient(dgp, x)?;
    Ok(c * (s as f64).powf(-2.0 / dgp.dim() as f64))
}

/// Mismatch reported by [`check_derivatives`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeMismatch {
    pub what: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

const FD_STEP: f64 = 1e-5;
const FD_RTOL: f64 = 1e-4;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= FD_RTOL * analytic.abs().max(numeric.abs()).max(1.0)
}

fn central_grad(g: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + FD_STEP;
            let hi = g(&p);
            p[i] = x[i] - FD_STEP;
            let lo = g(&p);
            p[i] = x[i];
            (hi - lo) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Compares the closed-form gradients and Hessian of a DGP against central
/// finite differences at `x`.
pub fn check_derivatives(
    dgp: &dyn AnalyticDgp,
    x: &[f64],
) -> std::result::Result<(), DerivativeMismatch> {
    let d = dgp.dim();
    let checks: [(&'static str, Vec<f64>, Vec<f64>); 2] = [
        (
            "mean_grad",
            dgp.mean_grad(x),
            central_grad(&|p| dgp.mean(p), x),
        ),
        (
            "density_grad",
            dgp.density_grad(x),
            central_grad(&|p| dgp.density(p), x),
        ),
    ];
    for (what, analytic, numeric) in checks {
        for (i, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            if !close(*a, *n) {
                return Err(DerivativeMismatch {
                    what,
                    index: i,
                    analytic: *a,
                    numeric: *n,
                });
            }
        }
    }
    let hess = dgp.mean_hess(x);
    for j in 0..d {
        let col = central_grad(&|p| dgp.mean_grad(p)[j], x);
        for (i, n) in col.iter().enumerate() {
            let a = hess[i * d + j];
            if !close(a, *n) {
                return Err(DerivativeMismatch {
                    what: "mean_hess",
                    index: i * d + j,
                    analytic: a,
                    numeric: *n,
                });
            }
        }
    }
    Ok(())
}

/// Standard multivariate normal covariates with a user-supplied mean function.
pub struct GaussianDesign<M> {
    pub d: usize,
    pub noise_sd: f64,
    pub mean_fn: M,
}

/// Mean function with closed-form derivatives.
pub trait SmoothMean: Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    fn hess(&self, x: &[f64]) -> Vec<f64>;
}

impl<M: SmoothMean> AnalyticDgp for GaussianDesign<M> {
    fn dim(&self) -> usize {
        self.d
    }
    fn mean(&self, x: &[f64]) -> f64 {
        self.mean_fn.value(x)
    }
    fn mean_grad(&self, x: &[f64]) -> Vec<f64> {
        self.mean_fn.grad(x)
    }
    fn mean_hess(&self, x: &[f64]) -> Vec<f64> {
        self.mean_fn.hess(x)
    }
    fn density(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        (-0.5 * sq).exp() / (2.0 * std::f64::consts::PI).powf(self.d as f64 / 2.0)
    }
    fn density_grad(&self, x: &[f64]) -> Vec<f64> {
        let f = self.density(x);
        x.iter().map(|v| -v * f).collect()
    }
    fn noise_sd(&self) -> f64 {
        self.noise_sd
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-13);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-13);
        for d in 3..40 {
            let rec = unit_ball_volume(d - 2) * 2.0 * PI / d as f64;
            assert!(
                (unit_ball_volume(d) - rec).abs() <= 1e-12 * rec.max(1.0),
                "d={d}"
            );
        }
    }

    /// Affine mean over a uniform-like flat density: both bias sources vanish.
    struct Flat;
    impl AnalyticDgp for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn mean(&self, x: &[f64]) -> f64 {
            1.0 + 2.0 * x[0] - x[1]
        }
        fn mean_grad(&self, _: &[f64]) -> Vec<f64> {
            vec![2.0, -1.0]
        }
        fn mean_hess(&self, _: &[f64]) -> Vec<f64> {
            vec![0.0; 4]
        }
        fn density(&self, _: &[f64]) -> f64 {
            1.0
        }
        fn density_grad(&self, _: &[f64]) -> Vec<f64> {
            vec![0.0; 2]
        }
        fn noise_sd(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn linear_mean_flat_density_has_no_bias() {
        let x = QueryPoint::new(vec![0.3, 0.4]).unwrap();
        assert_eq!(bias_coefficient(&Flat, &x).unwrap(), 0.0);
        assert_eq!(leading_bias(&Flat, &x, 17).unwrap(), 0.0);
        assert!(check_derivatives(&Flat, x.coords()).is_ok());
    }

    struct Zero;
    impl AnalyticDgp for Zero {
        fn dim(&self) -> usize {
            1
        }
        fn mean(&self, x: &[f64]) -> f64 {
            x[0] * x[0]
        }
        fn mean_grad(&self, x: &[f64]) -> Vec<f64> {
            vec![2.0 * x[0]]
        }
        fn mean_hess(&self, _: &[f64]) -> Vec<f64> {
            vec![2.0]
        }
        fn density(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn density_grad(&self, _: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn noise_sd(&self) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_density_is_rejected() {
        let x = QueryPoint::new(vec![0.0]).unwrap();
        assert!(matches!(bias_coefficient(&Zero, &x), Err(Error::Domain(_))));
        assert!(leading_bias(&Flat, &QueryPoint::new(vec![0.0, 0.0]).unwrap(), 0).is_err());
    }

    /// Flags a deliberately wrong gradient.
    struct Wrong;
    impl AnalyticDgp for Wrong {
        fn dim(&self) -> usize {
            1
        }
        fn mean(&self, x: &[f64]) -> f64 {
            x[0].sin()
        }
        fn mean_grad(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0].sin()]
        }
        fn mean_hess(&self, x: &[f64]) -> Vec<f64> {
            vec![-x[0].sin()]
        }
        fn density(&self, _: &[f64]) -> f64 {
            1.0
        }
        fn density_grad(&self, _: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn noise_sd(&self) -> f64 {
            0.0
        }
    }

    #[test]
    fn finite_differences_catch_transcription_errors() {
        let err = check_derivatives(&Wrong, &[0.7]).unwrap_err();
        assert_eq!(err.what, "mean_grad");
    }
}
