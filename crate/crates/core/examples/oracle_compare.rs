//! Cross-check the closed form against the independent L1 time stepper,
//! on uniform and graded oracle meshes.
//!
//! `cargo run --release --example oracle_compare`

use fracdelay::functions::BuiltinFn;
use fracdelay::matrix::Matrix;
use fracdelay::oracle::{oracle_solve, OracleConfig};
use fracdelay::solver::{ProblemSpec, QuadratureConfig, Solver};
use fracdelay::special::SeriesConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h, alpha) = (1.0, 0.3);
    let phi = BuiltinFn::Affine {
        offset: vec![1.0, 0.0],
        slope: vec![0.0, 1.0],
    };
    let spec = ProblemSpec::new(
        Matrix::from_rows(&[vec![-0.6, 0.2], vec![0.1, -0.5]])?,
        Matrix::from_rows(&[vec![0.3, 0.0], vec![0.0, -0.2]])?,
        h,
        alpha,
        3.0,
    )?
    .with_history(phi.to_fn(), phi.caputo_fn(alpha, -h))
    .with_forcing(BuiltinFn::Constant { value: vec![0.1, -0.1] }.to_fn());
    let solver = Solver::new(&spec, QuadratureConfig::default(), SeriesConfig::default())?;

    for cfg in [OracleConfig::uniform(1e-3), OracleConfig::graded(1e-3, alpha)] {
        let reference = oracle_solve(&spec, &cfg)?;
        let picks: Vec<usize> = (0..reference.len())
            .filter(|&k| reference.times[k] > 0.0 && (k % 25 == 0 || reference.times[k] < 0.01))
            .collect();
        let times: Vec<f64> = picks.iter().map(|&k| reference.times[k]).collect();
        let closed = solver.values_at(&times)?;
        let worst = picks
            .iter()
            .zip(&closed)
            .flat_map(|(&k, v)| v.iter().zip(&reference.values[k]).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max);
        println!(
            "grading {:.3}: {} oracle nodes, max |closed form - oracle| = {worst:.3e} over {} points",
            cfg.grading,
            reference.len(),
            picks.len()
        );
    }
    Ok(())
}
