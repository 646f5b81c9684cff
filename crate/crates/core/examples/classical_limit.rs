//! At `α = 1` the problem is the classical delay equation
//! `y' = a y(t) + b y(t-h) + f`, solved exactly by the method of steps.
//!
//! `cargo run --release --example classical_limit`

use fracdelay::functions::BuiltinFn;
use fracdelay::matrix::Matrix;
use fracdelay::oracle::ClassicalDde;
use fracdelay::solver::{ProblemSpec, QuadratureConfig, Solver};
use fracdelay::special::SeriesConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, b, h, t_end) = (-1.0, 0.5, 1.0, 3.0);
    let phi = BuiltinFn::Constant { value: vec![1.0] };
    let spec = ProblemSpec::new(Matrix::scalar(a), Matrix::scalar(b), h, 1.0, t_end)?
        .with_history(phi.to_fn(), phi.caputo_fn(1.0, -h));
    let exact = ClassicalDde::new(a, b, h, &[1.0], &[0.0], t_end)?;
    let traj = Solver::new(&spec, QuadratureConfig::default(), SeriesConfig::default())?.trajectory(0.01)?;

    let mut worst = 0.0_f64;
    for (t, y) in traj.times.iter().zip(&traj.values) {
        worst = worst.max((y[0] - exact.value(*t)?).abs());
    }
    for t in [0.5, 1.0, 2.0, 3.0] {
        let y = traj.value_at(t, 1e-9).expect("mesh point")[0];
        println!("y({t}) = {y:.12}   exact {:.12}", exact.value(t)?);
    }
    println!("max error over [-h, T]: {worst:.3e}");
    Ok(())
}
