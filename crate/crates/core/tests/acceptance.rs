//! Acceptance suite. Runs every criterion at its stated tolerance and runtime
//! budget, prints one line per criterion, and exits non-zero if any fails.
//!
//! Runs as part of `cargo test`; alone with `cargo test --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fracdelay::delayed::{delayed_ml_e, reduction_check_commuting, DelayedPerturbation};
use fracdelay::functions::BuiltinFn;
use fracdelay::matrix::Matrix;
use fracdelay::oracle::{oracle_solve, ClassicalDde, OracleConfig};
use fracdelay::qtable::build_qtable;
use fracdelay::solver::{ProblemSpec, QuadratureConfig, Solver};
use fracdelay::special::{ml_matrix, SeriesConfig};
use fracdelay::verify::{beta_integral_closed_form, beta_integral_quadrature, fundamental_residual, random_affine, random_stable_pair};

type Res<T> = Result<T, Box<dyn std::error::Error>>;
type Criterion = (&'static str, Duration, fn() -> Res<Outcome>);

struct Outcome {
    measured: f64,
    tol: f64,
    /// Extra conditions besides `measured <= tol`.
    extra_ok: bool,
    note: String,
}

impl Outcome {
    fn new(measured: f64, tol: f64, note: impl Into<String>) -> Self {
        Self {
            measured,
            tol,
            extra_ok: true,
            note: note.into(),
        }
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::new(n, n, (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn cfg() -> SeriesConfig {
    SeriesConfig::default()
}

fn qtable_golden() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..5 {
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let q = build_qtable(&a, &b, 6, 6)?;
        let (i2, z) = (Matrix::identity(2), Matrix::zeros(2, 2));
        let ab_ba = &(&a * &b) + &(&b * &a);
        let mut cells = vec![
            (0, 0, i2),
            (0, 1, z.clone()),
            (0, 2, z.clone()),
            (1, 0, a.clone()),
            (1, 1, b.clone()),
            (1, 2, z),
            (2, 1, ab_ba.clone()),
            (3, 1, &(&a * &ab_ba) + &(&b * &(&a * &a))),
            (3, 2, &(&a * &(&b * &b)) + &(&b * &ab_ba)),
        ];
        for p in 0..=6 {
            cells.push((p, 0, a.powi(p)?));
            cells.push((p, p, b.powi(p)?));
        }
        for (i, j, m) in &cells {
            worst = worst.max(q.try_get(*i, *j)?.max_abs_diff(m)?);
        }
    }
    Ok(Outcome::new(worst, 1e-12, "5 random 2x2 pairs, listed cells and p <= 6"))
}

fn reductions() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1.0;
    let times: Vec<f64> = (1..=20).map(|k| 3.0 * h * k as f64 / 20.0).collect();
    let (mut w1, mut w2, mut w3) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (alpha, beta) in [(0.3, 0.3), (0.5, 1.0), (0.8, 0.6), (0.6, 1.4)] {
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 2);
        let xa = DelayedPerturbation::new(Matrix::zeros(2, 2), b.clone(), h, alpha, cfg())?;
        let xb = DelayedPerturbation::new(a.clone(), Matrix::zeros(2, 2), h, alpha, cfg())?;
        for &t in &times {
            let e = delayed_ml_e(&b, h, alpha, beta, t - h, &cfg())?;
            w1 = w1.max(xa.eval(beta, t)?.max_abs_diff(&e)?);
            let ml = ml_matrix(&a, alpha, beta, t, &cfg())?.scale(t.powf(beta - 1.0));
            w2 = w2.max(xb.eval(beta, t)?.max_abs_diff(&ml)?);
        }
        // commuting pair: B a polynomial in A
        let c = &Matrix::identity(2).scale(rng.random_range(-0.5..0.5)) + &a.scale(rng.random_range(-0.5..0.5));
        for &t in &times {
            let (lhs, rhs) = reduction_check_commuting(&a, &c, h, t, &cfg())?;
            w3 = w3.max(lhs.max_abs_diff(&rhs)?);
        }
    }
    Ok(Outcome::new(
        w1.max(w2).max(w3),
        1e-9,
        format!("A=0 {w1:.1e}, B=0 {w2:.1e}, commuting alpha=beta=1 {w3:.1e}; 20 points in (0, 3h]"),
    ))
}

fn fundamental_matrix_residual() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    let mut decreasing = true;
    let mut parts = Vec::new();
    for alpha in [0.3, 0.5, 0.8] {
        for n in [1, 2] {
            let (a, b) = (random_matrix(&mut rng, n), random_matrix(&mut rng, n));
            let x = DelayedPerturbation::new(a, b, 1.0, alpha, cfg())?;
            let coarse = fundamental_residual(&x, 1e-3, 3.0)?;
            let fine = fundamental_residual(&x, 5e-4, 3.0)?;
            worst = worst.max(coarse.max);
            decreasing &= fine.max < coarse.max;
            parts.push(format!("{alpha}/{n}x{n} {:.1e}->{:.1e}", coarse.max, fine.max));
        }
    }
    let mut out = Outcome::new(worst, 5e-3, format!("step 1e-3 -> 5e-4: {}", parts.join(", ")));
    out.extra_ok = decreasing;
    if !decreasing {
        out.note.push_str(" (not decreasing)");
    }
    Ok(out)
}

fn beta_identity() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1.0;
    let mut worst = 0.0_f64;
    for alpha in [0.3, 0.5, 0.8] {
        let betas = [alpha, 1.0, rng.random_range(0.2..1.5)];
        for beta in betas {
            for i in 0..=4 {
                for j in 0..=2 {
                    let s = -h * rng.random_range(0.0..1.0);
                    let t = s + j as f64 * h + h * rng.random_range(0.05..2.0);
                    let mu = i as f64 * alpha + beta - 1.0;
                    let numeric = beta_integral_quadrature(alpha, mu, s + j as f64 * h, t)?;
                    let closed = beta_integral_closed_form(alpha, beta, i, j, h, t, s)?;
                    worst = worst.max(((numeric - closed) / closed).abs());
                }
            }
        }
    }
    Ok(Outcome::new(worst, 1e-6, "alpha in {0.3, 0.5, 0.8}, 3 betas, i <= 4, j <= 2, relative"))
}

fn closed_form_vs_oracle() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphas = [0.3, 0.5, 0.8];
    let (h, t_end) = (1.0, 3.0);
    let mut worst = 0.0_f64;
    let mut points = 0;
    for case in 0..10 {
        let n = 1 + case % 2;
        let alpha = alphas[case % 3];
        let (a, b) = random_stable_pair(&mut rng, n)?;
        let phi = random_affine(&mut rng, n);
        let f = BuiltinFn::Constant {
            value: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let spec = ProblemSpec::new(a, b, h, alpha, t_end)?
            .with_history(phi.to_fn(), phi.caputo_fn(alpha, -h))
            .with_forcing(f.to_fn());
        let reference = oracle_solve(&spec, &OracleConfig::graded(1e-3, alpha))?;
        let picks: Vec<usize> = (0..reference.len()).filter(|&k| reference.times[k] > 0.0).collect();
        let times: Vec<f64> = picks.iter().map(|&k| reference.times[k]).collect();
        let values = Solver::new(&spec, QuadratureConfig::default(), cfg())?.values_at(&times)?;
        for (k, v) in picks.iter().zip(&values) {
            for (x, y) in v.iter().zip(&reference.values[*k]) {
                worst = worst.max((x - y).abs());
            }
        }
        points += picks.len();
    }
    Ok(Outcome::new(
        worst,
        1e-3,
        format!("10 random stable problems, {points} oracle nodes, step 1e-3 graded"),
    ))
}

fn classical_limit() -> Res<Outcome> {
    let (a, b, h, t_end) = (-1.0, 0.5, 1.0, 3.0);
    let phi = BuiltinFn::Constant { value: vec![1.0] };
    let spec = ProblemSpec::new(Matrix::scalar(a), Matrix::scalar(b), h, 1.0, t_end)?
        .with_history(phi.to_fn(), phi.caputo_fn(1.0, -h));
    let exact = ClassicalDde::new(a, b, h, &[1.0], &[0.0], t_end)?;
    let traj = Solver::new(&spec, QuadratureConfig::default(), cfg())?.trajectory(0.01)?;
    let mut worst = 0.0_f64;
    for (t, v) in traj.times.iter().zip(&traj.values) {
        worst = worst.max((v[0] - exact.value(*t)?).abs());
    }
    Ok(Outcome::new(worst, 1e-5, format!("a=-1, b=0.5, phi=1, {} samples", traj.len())))
}

fn superposition_and_zero_data() -> Res<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (h, t_end, mesh) = (1.0, 3.0, 0.02);
    let mut lin = 0.0_f64;
    let mut zero = 0.0_f64;
    for alpha in [0.3, 0.5, 0.8] {
        let (a, b) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
        let phi = random_affine(&mut rng, 2);
        let f = BuiltinFn::Constant {
            value: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
        };
        let base = ProblemSpec::new(a, b, h, alpha, t_end)?;
        let both = base
            .clone()
            .with_history(phi.to_fn(), phi.caputo_fn(alpha, -h))
            .with_forcing(f.to_fn());
        let hist = base.clone().with_history(phi.to_fn(), phi.caputo_fn(alpha, -h));
        let forced = base.clone().with_forcing(f.to_fn());
        let run = |s: &ProblemSpec| Solver::new(s, QuadratureConfig::default(), cfg())?.trajectory(mesh);
        let (y, y1, y2, y0) = (run(&both)?, run(&hist)?, run(&forced)?, run(&base)?);
        for k in 0..y.len() {
            for c in 0..2 {
                let sum = y1.values[k][c] + y2.values[k][c];
                lin = lin.max((y.values[k][c] - sum).abs() / y.values[k][c].abs().max(1.0));
                zero = zero.max(y0.values[k][c].abs());
            }
        }
    }
    let mut out = Outcome::new(lin, 1e-10, format!("linearity {lin:.1e} (scaled, tol 1e-10), zero data {zero:.1e} (tol 1e-14)"));
    out.extra_ok = zero <= 1e-14;
    Ok(out)
}

fn cli_determinism() -> Res<Outcome> {
    let bin = env!("CARGO_BIN_EXE_fracdelay");
    let demo = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/demo.toml");
    let run = || Command::new(bin).args(["verify", "--config", demo]).output();
    let (first, second) = (run()?, run()?);
    let identical = first.stdout == second.stdout && !first.stdout.is_empty();
    let code = first.status.code();
    let mut out = Outcome::new(
        if identical { 0.0 } else { 1.0 },
        0.0,
        format!("two verify runs byte-identical: {identical}; demo exit code {code:?}"),
    );
    out.extra_ok = code == Some(0) && second.status.code() == Some(0);
    Ok(out)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 qtable golden cells", Duration::from_secs(1), qtable_golden),
        ("2 reductions to classical functions", Duration::from_secs(5), reductions),
        ("3 fundamental-matrix residual", Duration::from_secs(60), fundamental_matrix_residual),
        ("4 beta-integral identity", Duration::from_secs(5), beta_identity),
        ("5 closed form vs oracle", Duration::from_secs(300), closed_form_vs_oracle),
        ("6 classical limit alpha = 1", Duration::from_secs(10), classical_limit),
        ("7 superposition and zero data", Duration::from_secs(5), superposition_and_zero_data),
        ("8 cli determinism", Duration::from_secs(120), cli_determinism),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let line = match result {
            Ok(o) => {
                let ok = o.measured <= o.tol && o.extra_ok && in_time;
                failed += usize::from(!ok);
                format!(
                    "{} criterion {name}: measured {:.3e} tol {:.0e}, {:.2?} (budget {budget:?}) | {}",
                    if ok { "pass" } else { "FAIL" },
                    o.measured,
                    o.tol,
                    elapsed,
                    o.note
                )
            }
            Err(e) => {
                failed += 1;
                format!("FAIL criterion {name}: error {e}")
            }
        };
        println!("{line}");
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
