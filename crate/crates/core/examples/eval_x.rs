//! Evaluate the delayed perturbation `X_{h,α,β}(t)` across several delay
//! intervals, and compare its `B = Θ` case with the classical function.
//!
//! `cargo run --example eval_x`

use fracdelay::delayed::DelayedPerturbation;
use fracdelay::matrix::Matrix;
use fracdelay::special::{ml_matrix, SeriesConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SeriesConfig::default();
    let a = Matrix::from_rows(&[vec![-0.5, 0.2], vec![0.2, -0.4]])?;
    let b = Matrix::from_rows(&[vec![0.4, 0.0], vec![0.1, 0.3]])?;
    let (h, alpha) = (1.0, 0.6);
    let x = DelayedPerturbation::new(a.clone(), b, h, alpha, cfg)?;

    println!("{:>6}  {:>12} {:>12} {:>12} {:>12}", "t", "X11", "X12", "X21", "X22");
    for t in [-0.5, 0.0, 0.25, 1.0, 1.5, 2.75, 4.0] {
        let m = x.eval(1.0, t)?;
        let v = m.as_slice();
        println!("{t:>6.2}  {:>12.8} {:>12.8} {:>12.8} {:>12.8}", v[0], v[1], v[2], v[3]);
    }

    let x0 = DelayedPerturbation::new(a.clone(), Matrix::zeros(2, 2), h, alpha, cfg)?;
    let t: f64 = 2.3;
    let beta = 0.8;
    let classical = ml_matrix(&a, alpha, beta, t, &cfg)?.scale(t.powf(beta - 1.0));
    println!("B = 0: |X - t^(β-1) E_α,β(A t^α)| = {:e}", x0.eval(beta, t)?.max_abs_diff(&classical)?);
    Ok(())
}
