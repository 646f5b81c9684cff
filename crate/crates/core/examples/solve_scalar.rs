//! Closed-form solution of a scalar fractional delay equation
//! `ᶜD^α y = a y(t) + b y(t-1) + f` with affine history.
//!
//! `cargo run --release --example solve_scalar`

use fracdelay::functions::BuiltinFn;
use fracdelay::matrix::Matrix;
use fracdelay::solver::{ProblemSpec, QuadratureConfig, Solver};
use fracdelay::special::SeriesConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h, alpha) = (1.0, 0.5);
    let phi = BuiltinFn::Affine {
        offset: vec![1.0],
        slope: vec![0.5],
    };
    let f = BuiltinFn::Constant { value: vec![0.2] };
    let spec = ProblemSpec::new(Matrix::scalar(-0.8), Matrix::scalar(0.4), h, alpha, 3.0)?
        .with_history(phi.to_fn(), phi.caputo_fn(alpha, -h))
        .with_forcing(f.to_fn());

    let solver = Solver::new(&spec, QuadratureConfig::default(), SeriesConfig::default())?;
    let traj = solver.trajectory(0.05)?;
    for (t, y) in traj.times.iter().zip(&traj.values).step_by(5) {
        println!("{t:>6.2}  {:>14.10}", y[0]);
    }

    // the two parts of the solution separately
    let t = 2.5;
    let (hist, forced) = (solver.history_response(t)?, solver.forced_response(t)?);
    println!("y({t}) = {:.12} (history) + {:.12} (forcing)", hist[0], forced[0]);
    Ok(())
}
