//! Scalar and matrix Mittag-Leffler functions.
//!
//! `cargo run --example mittag_leffler`

use fracdelay::matrix::Matrix;
use fracdelay::special::{gamma, ml_matrix, ml_scalar, SeriesConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SeriesConfig::default();

    println!("Γ(0.5) = {:.16}  (√π = {:.16})", gamma(0.5)?, std::f64::consts::PI.sqrt());

    // E_{1,1}(z) = e^z and E_{1,2}(z) = (e^z - 1)/z
    let z: f64 = 0.7;
    println!("E_1,1(0.7)  = {:.16}  exp = {:.16}", ml_scalar(1.0, 1.0, z, &cfg)?, z.exp());
    println!("E_1,2(0.7)  = {:.16}  (e^z-1)/z = {:.16}", ml_scalar(1.0, 2.0, z, &cfg)?, z.exp_m1() / z);

    // t^{β-1} E_{α,β}(A t^α) for a 2x2 matrix
    let a = Matrix::from_rows(&[vec![-0.5, 0.2], vec![0.1, -0.4]])?;
    for alpha in [0.3, 0.6, 0.9] {
        let e = ml_matrix(&a, alpha, 1.0, 1.5, &cfg)?;
        println!("alpha = {alpha}: E(A 1.5^alpha) = {:?}", e.to_rows());
    }
    Ok(())
}
