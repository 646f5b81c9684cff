//! Gamma function and the two-parameter Mittag-Leffler function with a
//! matrix argument, `E_{α,β}(A t^α) = Σ_k A^k t^{αk} / Γ(kα + β)`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Largest argument for which `Γ(x)` is representable as an `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Truncation controls shared by every infinite series in the crate.
///
/// A series stops at the first index `K ≥ 1` whose term has max-abs-entry
/// norm below `tol`; reaching `max_terms` first is a non-convergence error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_terms: 2000,
        }
    }
}

impl SeriesConfig {
    pub fn new(tol: f64, max_terms: usize) -> Result<Self> {
        let cfg = Self { tol, max_terms };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "series tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_terms < 1 {
            return Err(Error::InvalidArgument("max_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// `Γ(x)` for real `x` away from the poles.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("gamma(NaN)".into()));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::GammaPole(x));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::GammaOverflow(x));
    }
    // Γ(n) for small integers is exact in f64.
    if x == x.floor() && x <= 23.0 {
        return Ok((1..x as u64).map(|k| k as f64).product());
    }
    Ok(libm::tgamma(x))
}

/// `1/Γ(x)`, which is entire: zero at the poles of `Γ`.
pub fn rgamma(x: f64) -> Result<f64> {
    match gamma(x) {
        Ok(g) => Ok(1.0 / g),
        Err(Error::GammaPole(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Scalar `E_{α,β}(z)` by forward summation, using the same truncation rule
/// as [`ml_matrix`].
pub fn ml_scalar(alpha: f64, beta: f64, z: f64, cfg: &SeriesConfig) -> Result<f64> {
    let m = ml_matrix(&Matrix::scalar(z), alpha, beta, 1.0, cfg)?;
    Ok(m.get(0, 0))
}

/// `E_{α,β}(A t^α)` for square `A` and `t ≥ 0`, without the `t^{β-1}` prefactor.
///
/// Powers of `A t^α` are accumulated forward; each term is divided by its own
/// `Γ(kα + β)` so no factorial-sized intermediates appear.
pub fn ml_matrix(a: &Matrix, alpha: f64, beta: f64, t: f64, cfg: &SeriesConfig) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("ml_matrix needs a square matrix".into()));
    }
    check_ml_params(alpha, beta)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("ml_matrix needs t >= 0, got {t}")));
    }
    cfg.validate()?;
    let n = a.rows();
    let at = a.scale(t.powf(alpha));
    let mut power = Matrix::identity(n);
    let mut sum = Matrix::identity(n).scale(rgamma(beta)?);
    let mut last_norm = f64::INFINITY;
    for k in 1..cfg.max_terms.max(2) {
        power = &power * &at;
        let term = power.scale(rgamma(k as f64 * alpha + beta)?);
        sum.add_scaled(1.0, &term);
        last_norm = term.max_abs();
        if last_norm < cfg.tol {
            return Ok(sum);
        }
        if !last_norm.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        max_terms: cfg.max_terms,
        last_norm,
    })
}

pub(crate) fn check_ml_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}
