//! Built-in vector-valued time functions for histories and forcings.
//!
//! Polynomial kinds carry an exact Caputo derivative (power rule after
//! re-expanding around the lower terminal); `sin` does not and relies on the
//! numeric fallback.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::rgamma;

/// A vector function of time, `R → R^n`.
pub type VecFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BuiltinFn {
    /// `c`
    Constant { value: Vec<f64> },
    /// `offset + slope t`
    Affine { offset: Vec<f64>, slope: Vec<f64> },
    /// `Σ_k coeffs[k] t^k`
    Poly { coeffs: Vec<Vec<f64>> },
    /// `amplitude ⊙ sin(frequency ⊙ t + phase)`
    Sin {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        phase: Vec<f64>,
    },
}

impl BuiltinFn {
    pub fn zero(n: usize) -> Self {
        BuiltinFn::Constant { value: vec![0.0; n] }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BuiltinFn::Constant { .. } => "constant",
            BuiltinFn::Affine { .. } => "affine",
            BuiltinFn::Poly { .. } => "poly",
            BuiltinFn::Sin { .. } => "sin",
        }
    }

    /// Output dimension, checking that all coefficient vectors agree.
    pub fn dim(&self) -> Result<usize> {
        let lens: Vec<usize> = match self {
            BuiltinFn::Constant { value } => vec![value.len()],
            BuiltinFn::Affine { offset, slope } => vec![offset.len(), slope.len()],
            BuiltinFn::Poly { coeffs } => coeffs.iter().map(Vec::len).collect(),
            BuiltinFn::Sin {
                amplitude,
                frequency,
                phase,
            } => vec![amplitude.len(), frequency.len(), phase.len()],
        };
        let n = *lens
            .first()
            .ok_or_else(|| Error::InvalidArgument(format!("{}: no coefficients", self.kind())))?;
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::DimensionMismatch(format!(
                "{}: coefficient vectors have lengths {lens:?}",
                self.kind()
            )));
        }
        let all_finite = match self {
            BuiltinFn::Constant { value } => value.iter().all(|v| v.is_finite()),
            BuiltinFn::Affine { offset, slope } => offset.iter().chain(slope).all(|v| v.is_finite()),
            BuiltinFn::Poly { coeffs } => coeffs.iter().flatten().all(|v| v.is_finite()),
            BuiltinFn::Sin {
                amplitude,
                frequency,
                phase,
            } => amplitude.iter().chain(frequency).chain(phase).all(|v| v.is_finite()),
        };
        if !all_finite {
            return Err(Error::InvalidArgument(format!("{}: non-finite coefficient", self.kind())));
        }
        Ok(n)
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            BuiltinFn::Sin {
                amplitude,
                frequency,
                phase,
            } => amplitude
                .iter()
                .zip(frequency)
                .zip(phase)
                .map(|((a, w), p)| a * (w * t + p).sin())
                .collect(),
            _ => self
                .polynomials()
                .expect("polynomial kind")
                .iter()
                .map(|p| poly_eval(p, t))
                .collect(),
        }
    }

    /// Per-component ascending coefficients, for the polynomial kinds.
    pub fn polynomials(&self) -> Option<Vec<Vec<f64>>> {
        let rows: Vec<Vec<f64>> = match self {
            BuiltinFn::Constant { value } => vec![value.clone()],
            BuiltinFn::Affine { offset, slope } => vec![offset.clone(), slope.clone()],
            BuiltinFn::Poly { coeffs } => coeffs.clone(),
            BuiltinFn::Sin { .. } => return None,
        };
        let n = rows.first().map_or(0, Vec::len);
        Some((0..n).map(|c| rows.iter().map(|r| r[c]).collect()).collect())
    }

    /// Exact Caputo derivative of order `alpha` with lower terminal `base`,
    /// evaluated at `t ≥ base`. `None` for kinds without a closed form.
    pub fn caputo(&self, alpha: f64, base: f64, t: f64) -> Option<Vec<f64>> {
        let polys = self.polynomials()?;
        let x = t - base;
        Some(
            polys
                .iter()
                .map(|p| {
                    let shifted = poly_shift(p, base);
                    shifted
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(k, d)| {
                            if *d == 0.0 {
                                return 0.0;
                            }
                            let kf = k as f64;
                            let fact = rgamma(kf + 1.0).map(|r| 1.0 / r).unwrap_or(f64::NAN);
                            let scale = fact * rgamma(kf + 1.0 - alpha).unwrap_or(0.0);
                            let pow = if x > 0.0 {
                                x.powf(kf - alpha)
                            } else if kf - alpha == 0.0 {
                                1.0
                            } else {
                                0.0
                            };
                            d * scale * pow
                        })
                        .sum()
                })
                .collect(),
        )
    }

    pub fn to_fn(&self) -> VecFn {
        let f = self.clone();
        Arc::new(move |t| f.eval(t))
    }

    pub fn caputo_fn(&self, alpha: f64, base: f64) -> Option<VecFn> {
        self.polynomials()?;
        let f = self.clone();
        Some(Arc::new(move |t| {
            f.caputo(alpha, base, t).expect("polynomial kind")
        }))
    }
}

/// Horner evaluation of ascending coefficients.
pub fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Coefficients of `q(x) = p(x + c)`.
pub fn poly_shift(p: &[f64], c: f64) -> Vec<f64> {
    // repeated synthetic division (Taylor shift)
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            q[k] += c * q[k + 1];
        }
    }
    q
}
