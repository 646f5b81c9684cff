//! Delayed Mittag-Leffler matrix function `E^B_{h,α,β}` and its delayed
//! perturbation `X^{A,B}_{h,α,β}`.
//!
//! For `(p-1)h < t ≤ ph`,
//!
//! ```text
//! X(t) = Σ_{i≥0} Σ_{j=0}^{p-1} Q_{i+1}(jh) (t - jh)^{iα+β-1} / Γ(iα+β)
//! ```
//!
//! with `X = Θ` on `[-h, 0)` and `X(0) = I`. With `β = α` it is the
//! fundamental matrix of `ᶜD^α y = A y(t) + B y(t-h)`; with `β = 1` it is the
//! response to a unit initial value.

use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::qtable::{build_qtable, commute_tol, QTable};
use crate::special::{check_ml_params, rgamma, SeriesConfig};

/// Uniform partition of the time axis into delay intervals `((p-1)h, ph]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    h: f64,
}

impl DelayGrid {
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("delay must be positive, got {h}")));
        }
        Ok(Self { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The integer `p` with `(p-1)h < t ≤ ph`; `p_of(0) = 0`.
    pub fn p_of(&self, t: f64) -> i64 {
        let h = self.h;
        let mut p = (t / h).ceil() as i64;
        while (p as f64) * h < t {
            p += 1;
        }
        while ((p - 1) as f64) * h >= t {
            p -= 1;
        }
        p
    }

    /// True when `t` coincides with a multiple of `h` up to `rel_tol * h`.
    pub fn is_breakpoint(&self, t: f64, rel_tol: f64) -> bool {
        let k = (t / self.h).round();
        (t - k * self.h).abs() <= rel_tol * self.h
    }
}

/// Delayed Mittag-Leffler matrix function `E^B_{h,α,β}(t)`.
///
/// Piecewise: `Θ` for `t ≤ -h`, `I (h+t)^{β-1}/Γ(β)` on `(-h, 0]`, and on
/// `((k-1)h, kh]` the finite sum `Σ_{m=0}^{k} B^m (t-(m-1)h)^{mα+β-1}/Γ(mα+β)`.
pub fn delayed_ml_e(
    b: &Matrix,
    h: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<Matrix> {
    if !b.is_square() {
        return Err(Error::DimensionMismatch("delayed_ml_e needs a square B".into()));
    }
    let grid = DelayGrid::new(h)?;
    check_ml_params(alpha, beta)?;
    cfg.validate()?;
    let n = b.rows();
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite, got {t}")));
    }
    if t <= -h {
        return Ok(Matrix::zeros(n, n));
    }
    let k = grid.p_of(t).max(0) as usize;
    let mut sum = Matrix::zeros(n, n);
    let mut power = Matrix::identity(n);
    for m in 0..=k {
        if m > 0 {
            power = &power * b;
        }
        let base = t - (m as f64 - 1.0) * h;
        let exponent = m as f64 * alpha + beta - 1.0;
        sum.add_scaled(power_term(base, exponent, t)? * rgamma(m as f64 * alpha + beta)?, &power);
    }
    Ok(sum)
}

/// `base^exponent`, where a non-positive base means the term is not active yet.
fn power_term(base: f64, exponent: f64, t: f64) -> Result<f64> {
    if base > 0.0 {
        Ok(base.powf(exponent))
    } else if base == 0.0 && exponent >= 0.0 {
        Ok(if exponent == 0.0 { 1.0 } else { 0.0 })
    } else if base == 0.0 {
        Err(Error::Singularity { t, exponent })
    } else {
        Ok(0.0)
    }
}

/// Delayed perturbation `X^{A,B}_{h,α,β}(t)` evaluated against a prebuilt
/// table. If the table is too small for `t` or for the requested accuracy a
/// larger one is built internally.
#[allow(clippy::too_many_arguments)]
pub fn delayed_perturbation_x(
    a: &Matrix,
    b: &Matrix,
    h: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    cfg: &SeriesConfig,
    qt: &QTable,
) -> Result<Matrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() || qt.n() != a.rows() {
        return Err(Error::DimensionMismatch(
            "A, B and the Q table must share one square dimension".into(),
        ));
    }
    let grid = DelayGrid::new(h)?;
    check_ml_params(alpha, beta)?;
    cfg.validate()?;
    if let Some(x) = eval_x(qt, grid, alpha, beta, t, cfg)? {
        return Ok(x);
    }
    let mut i_max = qt.i_max().max(8);
    let p_needed = grid.p_of(t).max(1) as usize;
    loop {
        i_max = (2 * i_max).min(cfg.max_terms + 1);
        let bigger = build_qtable(a, b, i_max, qt.p_max().max(p_needed))?;
        if let Some(x) = eval_x(&bigger, grid, alpha, beta, t, cfg)? {
            return Ok(x);
        }
    }
}

/// Evaluates `X(t)`; `Ok(None)` means the table has too few rows or columns.
fn eval_x(
    qt: &QTable,
    grid: DelayGrid,
    alpha: f64,
    beta: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<Option<Matrix>> {
    let n = qt.n();
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t must be finite, got {t}")));
    }
    if t < 0.0 {
        return Ok(Some(Matrix::zeros(n, n)));
    }
    if t == 0.0 {
        return Ok(Some(Matrix::identity(n)));
    }
    let h = grid.h();
    let p = grid.p_of(t) as usize;
    if p - 1 > qt.p_max() {
        return Ok(None);
    }
    let mut sum = Matrix::zeros(n, n);
    let mut largest = f64::INFINITY;
    for i in 0..cfg.max_terms {
        if i > qt.i_max() {
            return Ok(None);
        }
        let order = i as f64 * alpha + beta;
        let inv_gamma = rgamma(order)?;
        largest = 0.0;
        for j in 0..p.min(i + 1) {
            let norm = qt.norm(i, j);
            if norm == 0.0 {
                continue;
            }
            let c = power_term(t - j as f64 * h, order - 1.0, t)? * inv_gamma;
            sum.add_scaled(c, qt.get(i, j));
            largest = largest.max(norm * c.abs());
        }
        if !largest.is_finite() {
            break;
        }
        if i >= 1 && i + 1 >= p && largest < cfg.tol {
            return Ok(Some(sum));
        }
    }
    Err(Error::NonConvergence {
        max_terms: cfg.max_terms,
        last_norm: largest,
    }
    .at(t))
}

/// `X^{A,B}_{h,α,β}` bound to one `(A, B, h, α)` with a shared, growable
/// Q table.
///
/// Evaluation is safe from many threads; the table is only replaced (never
/// mutated) when a query needs more rows or delay columns.
#[derive(Debug)]
pub struct DelayedPerturbation {
    a: Matrix,
    b: Matrix,
    grid: DelayGrid,
    alpha: f64,
    cfg: SeriesConfig,
    table: RwLock<Arc<QTable>>,
}

impl DelayedPerturbation {
    pub fn new(a: Matrix, b: Matrix, h: f64, alpha: f64, cfg: SeriesConfig) -> Result<Self> {
        let grid = DelayGrid::new(h)?;
        check_ml_params(alpha, 1.0)?;
        cfg.validate()?;
        let table = build_qtable(&a, &b, 32, 4)?;
        Ok(Self {
            a,
            b,
            grid,
            alpha,
            cfg,
            table: RwLock::new(Arc::new(table)),
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn grid(&self) -> DelayGrid {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn series(&self) -> &SeriesConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// A table with at least `i_max` rows and `p_max` delay columns, doubling
    /// the current one as needed.
    pub fn table(&self, i_max: usize, p_max: usize) -> Result<Arc<QTable>> {
        {
            let cur = self.table.read().expect("q table lock poisoned");
            if cur.i_max() >= i_max && cur.p_max() >= p_max {
                return Ok(Arc::clone(&cur));
            }
        }
        let mut cur = self.table.write().expect("q table lock poisoned");
        if cur.i_max() < i_max || cur.p_max() < p_max {
            let mut new_i = cur.i_max().max(1);
            while new_i < i_max {
                new_i *= 2;
            }
            let mut new_p = cur.p_max().max(1);
            while new_p < p_max {
                new_p *= 2;
            }
            *cur = Arc::new(build_qtable(&self.a, &self.b, new_i, new_p)?);
        }
        Ok(Arc::clone(&cur))
    }

    /// `X^{A,B}_{h,α,β}(t)`.
    pub fn eval(&self, beta: f64, t: f64) -> Result<Matrix> {
        check_ml_params(self.alpha, beta)?;
        let p = self.grid.p_of(t).max(1) as usize;
        let mut table = self.table(0, p - 1)?;
        loop {
            if let Some(x) = eval_x(&table, self.grid, self.alpha, beta, t, &self.cfg)? {
                return Ok(x);
            }
            if table.i_max() > self.cfg.max_terms {
                return Err(Error::NonConvergence {
                    max_terms: self.cfg.max_terms,
                    last_norm: f64::NAN,
                }
                .at(t));
            }
            table = self.table(2 * table.i_max(), p - 1)?;
        }
    }
}

/// Both sides of the commuting-case identity
/// `X^{A,B}_{h,1,1}(t) = e^{At} e_h^{B₁(t-h)}` with `B₁ = e^{-Ah} B`.
pub fn reduction_check_commuting(
    a: &Matrix,
    b: &Matrix,
    h: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<(Matrix, Matrix)> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch("A and B must be square of equal size".into()));
    }
    let comm = a.commutator_norm(b)?;
    if comm > commute_tol(a, b) {
        return Err(Error::NonCommuting(comm));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let x = DelayedPerturbation::new(a.clone(), b.clone(), h, 1.0, *cfg)?;
    let lhs = x.eval(1.0, t)?;
    let b1 = &a.scale(-h).expm()? * b;
    let rhs = &a.scale(t).expm()? * &delayed_ml_e(&b1, h, 1.0, 1.0, t - h, cfg)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ml_matrix;

    const CFG: SeriesConfig = SeriesConfig {
        tol: 1e-15,
        max_terms: 2000,
    };

    #[test]
    fn p_of_half_open_intervals() {
        let g = DelayGrid::new(1.0).unwrap();
        assert_eq!(g.p_of(0.0), 0);
        assert_eq!(g.p_of(0.5), 1);
        assert_eq!(g.p_of(1.0), 1);
        assert_eq!(g.p_of(1.0 + 1e-12), 2);
        assert_eq!(g.p_of(-0.5), 0);
        let g = DelayGrid::new(0.2).unwrap();
        assert_eq!(g.p_of(0.6), 3);
        assert!(DelayGrid::new(0.0).is_err());
    }

    #[test]
    fn delayed_e_branches() {
        let b = Matrix::identity(2).scale(3.0);
        assert!(delayed_ml_e(&b, 1.0, 0.5, 0.7, -2.0, &CFG).unwrap().is_zero());
        assert!(delayed_ml_e(&b, 1.0, 0.5, 0.7, -1.0, &CFG).unwrap().is_zero());
        for t in [-0.9, -0.3, 0.0] {
            assert_eq!(delayed_ml_e(&b, 1.0, 0.5, 1.0, t, &CFG).unwrap(), Matrix::identity(2));
        }
    }

    #[test]
    fn delayed_exponential_partial_sum() {
        // 1 + 1.5 + 0.5²/2
        let e = delayed_ml_e(&Matrix::scalar(1.0), 1.0, 1.0, 1.0, 1.5, &CFG).unwrap();
        assert!((e.get(0, 0) - 2.625).abs() < 1e-15);
    }

    #[test]
    fn x_branches_at_and_below_zero() {
        let a = Matrix::from_rows(&[vec![0.1, 0.2], vec![-0.3, 0.4]]).unwrap();
        let b = Matrix::identity(2).scale(0.5);
        let x = DelayedPerturbation::new(a, b, 1.0, 0.5, CFG).unwrap();
        for t in [-1.0, -0.5, -1e-9] {
            assert!(x.eval(0.5, t).unwrap().is_zero());
        }
        assert_eq!(x.eval(0.5, 0.0).unwrap(), Matrix::identity(2));
    }

    #[test]
    fn x_pure_delay_reference() {
        // 1.25^{-1/2}/Γ(1/2) + 0.5, 40-digit reference
        let q = build_qtable(&Matrix::scalar(0.0), &Matrix::scalar(0.5), 4, 2).unwrap();
        let x = delayed_perturbation_x(
            &Matrix::scalar(0.0),
            &Matrix::scalar(0.5),
            1.0,
            0.5,
            0.5,
            1.25,
            &CFG,
            &q,
        )
        .unwrap();
        assert!((x.get(0, 0) - 1.004_626_504_404_032_009_6).abs() < 1e-14);
        let e = delayed_ml_e(&Matrix::scalar(0.5), 1.0, 0.5, 0.5, 0.25, &CFG).unwrap();
        assert!((x.get(0, 0) - e.get(0, 0)).abs() < 1e-14);
    }

    #[test]
    fn x_without_delay_is_classical() {
        let a = Matrix::from_rows(&[vec![-0.7, 0.4], vec![0.2, -0.1]]).unwrap();
        let x = DelayedPerturbation::new(a.clone(), Matrix::zeros(2, 2), 0.5, 0.6, CFG).unwrap();
        for t in [0.1, 0.5, 0.9, 1.7] {
            let lhs = x.eval(0.8, t).unwrap();
            let rhs = ml_matrix(&a, 0.6, 0.8, t, &CFG).unwrap().scale(t.powf(-0.2));
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn free_function_grows_short_table() {
        let a = Matrix::scalar(-0.8);
        let b = Matrix::scalar(0.4);
        let small = build_qtable(&a, &b, 2, 0).unwrap();
        let x = delayed_perturbation_x(&a, &b, 1.0, 0.5, 1.0, 2.5, &CFG, &small).unwrap();
        let y = DelayedPerturbation::new(a, b, 1.0, 0.5, CFG).unwrap().eval(1.0, 2.5).unwrap();
        assert!((x.get(0, 0) - y.get(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn commuting_identity_scalar() {
        let (lhs, rhs) =
            reduction_check_commuting(&Matrix::scalar(0.3), &Matrix::scalar(0.2), 1.0, 2.5, &CFG).unwrap();
        // e^{0.75}(1 + b₁·1.5 + b₁²·0.5²/2), b₁ = 0.2 e^{-0.3}
        let expect = 2.593_302_843_473_366_727_5;
        assert!((lhs.get(0, 0) - expect).abs() < 1e-13);
        assert!((rhs.get(0, 0) - expect).abs() < 1e-13);
    }

    #[test]
    fn commuting_identity_degenerate_cases() {
        let b = Matrix::from_rows(&[vec![0.4, 0.1], vec![0.0, 0.4]]).unwrap();
        let (lhs, rhs) = reduction_check_commuting(&Matrix::zeros(2, 2), &b, 1.0, 2.2, &CFG).unwrap();
        let e = delayed_ml_e(&b, 1.0, 1.0, 1.0, 1.2, &CFG).unwrap();
        assert!(lhs.max_abs_diff(&e).unwrap() < 1e-13);
        assert!(rhs.max_abs_diff(&e).unwrap() < 1e-13);

        let a = Matrix::from_rows(&[vec![-0.5, 0.3], vec![0.1, 0.2]]).unwrap();
        let (lhs, rhs) = reduction_check_commuting(&a, &Matrix::zeros(2, 2), 1.0, 2.2, &CFG).unwrap();
        let e = a.scale(2.2).expm().unwrap();
        assert!(lhs.max_abs_diff(&e).unwrap() < 1e-12);
        assert!(rhs.max_abs_diff(&e).unwrap() < 1e-12);
    }

    #[test]
    fn commuting_check_rejects_noncommuting() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            reduction_check_commuting(&a, &b, 1.0, 1.5, &CFG),
            Err(Error::NonCommuting(_))
        ));
    }

    #[test]
    fn continuous_across_breakpoints_for_beta_one() {
        let a = Matrix::from_rows(&[vec![-0.6, 0.2], vec![0.3, -0.4]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.5, -0.1], vec![0.2, 0.3]]).unwrap();
        let x = DelayedPerturbation::new(a, b, 1.0, 0.7, CFG).unwrap();
        for p in 1..4 {
            let t = p as f64;
            for beta in [1.0, 1.5] {
                let left = x.eval(beta, t).unwrap();
                let right = x.eval(beta, t + 4e-15).unwrap();
                assert!(left.max_abs_diff(&right).unwrap() < 1e-9, "t={t} beta={beta}");
            }
        }
    }
}
