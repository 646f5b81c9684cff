//! The Q table `Q_{i+1}(jh)` behind the delayed perturbation.
//!
//! `cargo run --example qtable`

use fracdelay::matrix::Matrix;
use fracdelay::qtable::{build_qtable, qtable_commuting_closed_form};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-2.0, 0.5]])?;
    let b = Matrix::from_rows(&[vec![0.3, 0.0], vec![0.1, -0.2]])?;
    let q = build_qtable(&a, &b, 4, 4)?;

    for i in 0..=3 {
        for j in 0..=i {
            println!("Q_{}({}h) = {:?}", i + 1, j, q.get(i, j).to_rows());
        }
    }

    // Q_3(h) = AB + BA
    let ab_ba = a.try_mul(&b)?.try_add(&b.try_mul(&a)?)?;
    println!("|Q_3(h) - (AB+BA)| = {:e}", q.get(2, 1).max_abs_diff(&ab_ba)?);

    // with AB = BA the table collapses to binomial terms
    let c = a.scale(0.5).try_add(&Matrix::identity(2))?;
    let qc = build_qtable(&a, &c, 6, 6)?;
    let closed = qtable_commuting_closed_form(&a, &c, 5, 2)?;
    println!("commuting: |Q_6(2h) - C(5,2) A^3 B^2| = {:e}", qc.get(5, 2).max_abs_diff(&closed)?);
    Ok(())
}
