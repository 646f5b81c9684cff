//! The matrix family `Q_{k}(s)` driving the delayed perturbation function.
//!
//! `Q_{k+1}(s) = A Q_k(s) + B Q_k(s - h)` with `Q_0 ≡ Θ`, `Q_k(-h) = Θ` and
//! `Q_1(0) = I`. Only `s = jh` matters, so cells are indexed by the integer
//! `j` and `h` never enters the table. `Q_{i+1}(jh)` is the sum of all words
//! of length `i` in `A` and `B` containing exactly `j` copies of `B`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Dense grid of `Q_{i+1}(jh)` for `0 ≤ i ≤ i_max`, `0 ≤ j ≤ p_max`.
#[derive(Debug, Clone)]
pub struct QTable {
    n: usize,
    i_max: usize,
    p_max: usize,
    cells: Vec<Matrix>,
    norms: Vec<f64>,
}

impl QTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn i_max(&self) -> usize {
        self.i_max
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// `Q_{i+1}(jh)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the table.
    pub fn get(&self, i: usize, j: usize) -> &Matrix {
        assert!(i <= self.i_max && j <= self.p_max, "Q cell ({i},{j}) outside table");
        &self.cells[i * (self.p_max + 1) + j]
    }

    pub fn try_get(&self, i: usize, j: usize) -> Result<&Matrix> {
        if i > self.i_max {
            return Err(Error::IndexOutOfRange { index: i, len: self.i_max + 1 });
        }
        if j > self.p_max {
            return Err(Error::IndexOutOfRange { index: j, len: self.p_max + 1 });
        }
        Ok(self.get(i, j))
    }

    /// Cached max-abs norm of `Q_{i+1}(jh)`.
    pub fn norm(&self, i: usize, j: usize) -> f64 {
        self.norms[i * (self.p_max + 1) + j]
    }
}

/// Builds `Q_{i+1}(jh)` for `i ≤ i_max`, `j ≤ p_max` from the recursion.
pub fn build_qtable(a: &Matrix, b: &Matrix, i_max: usize, p_max: usize) -> Result<QTable> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}; both must be square of equal size",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let width = p_max + 1;
    let mut cells = Vec::with_capacity((i_max + 1) * width);
    cells.push(Matrix::identity(n));
    cells.extend((1..width).map(|_| Matrix::zeros(n, n)));
    for i in 0..i_max {
        let prev = i * width;
        for j in 0..width {
            // cells beyond the diagonal are identically zero
            let next = if j > i + 1 {
                Matrix::zeros(n, n)
            } else {
                let mut q = a * &cells[prev + j];
                if j > 0 {
                    q.add_scaled(1.0, &(b * &cells[prev + j - 1]));
                }
                q
            };
            cells.push(next);
        }
    }
    let norms = cells.iter().map(Matrix::max_abs).collect();
    Ok(QTable {
        n,
        i_max,
        p_max,
        cells,
        norms,
    })
}

/// `C(i, j) A^{i-j} B^j`, the value of `Q_{i+1}(jh)` when `AB = BA`.
pub fn qtable_commuting_closed_form(a: &Matrix, b: &Matrix, i: usize, j: usize) -> Result<Matrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch("A and B must be square of equal size".into()));
    }
    let comm = a.commutator_norm(b)?;
    if comm > commute_tol(a, b) {
        return Err(Error::NonCommuting(comm));
    }
    if j > i {
        return Ok(Matrix::zeros(a.rows(), a.rows()));
    }
    Ok((&a.powi(i - j)? * &b.powi(j)?).scale(binomial(i, j)))
}

/// Tolerance for treating `AB - BA` as zero.
pub(crate) fn commute_tol(a: &Matrix, b: &Matrix) -> f64 {
    1e-12 * (a.max_abs() * b.max_abs()).max(1.0)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, m| acc * (n - m) as f64 / (m + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat2(v: [f64; 4]) -> Matrix {
        Matrix::new(2, 2, v.to_vec()).unwrap()
    }

    #[test]
    fn first_rows_match_table() {
        let a = mat2([0.3, -1.2, 0.7, 0.1]);
        let b = mat2([-0.4, 0.5, 0.9, 2.0]);
        let q = build_qtable(&a, &b, 4, 4).unwrap();
        let i2 = Matrix::identity(2);
        let z = Matrix::zeros(2, 2);
        assert_eq!(q.get(0, 0), &i2);
        assert_eq!(q.get(0, 1), &z);
        assert_eq!(q.get(0, 2), &z);
        assert_eq!(q.get(1, 0), &a);
        assert_eq!(q.get(1, 1), &b);
        let ab_ba = &(&a * &b) + &(&b * &a);
        assert!(q.get(2, 1).max_abs_diff(&ab_ba).unwrap() < 1e-15);
        let q42 = &(&a * &(&b * &b)) + &(&b * &ab_ba);
        assert!(q.get(3, 2).max_abs_diff(&q42).unwrap() < 1e-14);
    }

    #[test]
    fn commuting_scalar_examples() {
        let one = Matrix::scalar(1.0);
        assert_eq!(qtable_commuting_closed_form(&one, &one, 0, 0).unwrap(), one);
        let v = qtable_commuting_closed_form(&Matrix::scalar(2.0), &Matrix::scalar(3.0), 2, 1).unwrap();
        assert_eq!(v.get(0, 0), 12.0);
        let (a, b) = (Matrix::scalar(0.5), Matrix::scalar(0.25));
        let v = qtable_commuting_closed_form(&a, &b, 4, 2).unwrap();
        assert!((v.get(0, 0) - 0.093_75).abs() < 1e-16);
        let q = build_qtable(&a, &b, 4, 2).unwrap();
        assert!((q.get(4, 2).get(0, 0) - 0.093_75).abs() < 1e-16);
    }

    #[test]
    fn non_commuting_rejected() {
        let a = mat2([0.0, 1.0, 0.0, 0.0]);
        let b = mat2([0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            qtable_commuting_closed_form(&a, &b, 2, 1),
            Err(Error::NonCommuting(_))
        ));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(build_qtable(&Matrix::identity(2), &Matrix::identity(3), 2, 2).is_err());
        assert!(build_qtable(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3), 2, 2).is_err());
    }

    #[test]
    fn out_of_range_lookup() {
        let q = build_qtable(&Matrix::scalar(1.0), &Matrix::scalar(1.0), 2, 1).unwrap();
        assert!(q.try_get(3, 0).is_err());
        assert!(q.try_get(0, 2).is_err());
    }

    fn arb_mat2() -> impl Strategy<Value = Matrix> {
        prop::array::uniform4(-1.5f64..1.5).prop_map(mat2)
    }

    proptest! {
        #[test]
        fn edges_are_powers_and_upper_part_vanishes(a in arb_mat2(), b in arb_mat2()) {
            let q = build_qtable(&a, &b, 8, 10).unwrap();
            for i in 0..=8 {
                prop_assert!(q.get(i, 0).max_abs_diff(&a.powi(i).unwrap()).unwrap() < 1e-12);
                prop_assert!(q.get(i, i).max_abs_diff(&b.powi(i).unwrap()).unwrap() < 1e-12);
                for j in i + 1..=10 {
                    prop_assert!(q.get(i, j).is_zero());
                }
            }
        }

        #[test]
        fn commuting_case_matches_binomial(x in -1.5f64..1.5, y in -1.5f64..1.5, c in -1.0f64..1.0) {
            // B = c A + y I commutes with A = [[x, 1], [0, x]]
            let a = mat2([x, 1.0, 0.0, x]);
            let b = &a.scale(c) + &Matrix::identity(2).scale(y);
            let q = build_qtable(&a, &b, 8, 8).unwrap();
            for i in 0..=8 {
                for j in 0..=i {
                    let closed = qtable_commuting_closed_form(&a, &b, i, j).unwrap();
                    prop_assert!(q.get(i, j).max_abs_diff(&closed).unwrap() < 1e-10);
                }
            }
        }

        #[test]
        fn zero_delay_matrix_leaves_single_column(a in arb_mat2()) {
            let q = build_qtable(&a, &Matrix::zeros(2, 2), 6, 3).unwrap();
            for i in 0..=6 {
                for j in 1..=3 {
                    prop_assert!(q.get(i, j).is_zero());
                }
            }
        }

        #[test]
        fn zero_system_matrix_leaves_diagonal(b in arb_mat2()) {
            let q = build_qtable(&Matrix::zeros(2, 2), &b, 6, 6).unwrap();
            for i in 0..=6 {
                for j in 0..=6 {
                    if i == j {
                        prop_assert!(q.get(i, j).max_abs_diff(&b.powi(i).unwrap()).unwrap() < 1e-12);
                    } else {
                        prop_assert!(q.get(i, j).is_zero());
                    }
                }
            }
        }
    }
}
