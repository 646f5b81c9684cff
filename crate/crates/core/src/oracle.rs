//! Independent time-stepping reference solver.
//!
//! Implicit L1 discretization of the Caputo derivative based at `-h`, with the
//! delay term read from the already computed grid value `h` earlier. Shares no
//! code with the closed-form path beyond the matrix type and `Γ`.
//!
//! Also hosts the exact method-of-steps solution of the scalar classical delay
//! equation `y' = a y + b y(t-h) + f(t)`, used as the `α = 1` reference.

use crate::error::{Error, Result};
use crate::functions::{poly_eval, poly_shift};
use crate::matrix::{Lu, Matrix};
use crate::solver::{ProblemSpec, Trajectory, TrajectoryMeta};
use crate::special::gamma;

/// Step controls for [`oracle_solve`].
///
/// Each delay interval `[(p-1)h, ph]`, `p ≥ 1`, is split into `N = h/step`
/// cells with nodes `(p-1)h + h (k/N)^grading`; the history interval is
/// uniform. `grading = 1` is the uniform L1 scheme. Larger values cluster
/// nodes after every breakpoint, where the solution behaves like
/// `(t - ph)^{(p+1)α}` and the uniform scheme loses accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub step: f64,
    pub grading: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            grading: 1.0,
        }
    }
}

impl OracleConfig {
    pub fn uniform(step: f64) -> Self {
        Self { step, grading: 1.0 }
    }

    /// Grading `(2-α)/α`, which restores the scheme's `O(step^{2-α})`
    /// accuracy against a `t^α` start-up layer. Capped at 4, and low enough
    /// that `step^grading` (the first cell when `h = 1`) stays above `1e-13`.
    pub fn graded(step: f64, alpha: f64) -> Self {
        let cells_log = (1.0 / step).ln().max(1.0);
        let cap = (4.0_f64).min(13.0 * std::f64::consts::LN_10 / cells_log);
        Self {
            step,
            grading: ((2.0 - alpha) / alpha).min(cap).max(1.0),
        }
    }

    /// Cells per delay interval, checking that `step` divides `h`.
    pub fn cells_per_delay(&self, h: f64) -> Result<usize> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidArgument(format!("oracle step must be positive, got {}", self.step)));
        }
        if !(self.grading >= 1.0) || !self.grading.is_finite() {
            return Err(Error::InvalidArgument(format!("grading must be at least 1, got {}", self.grading)));
        }
        let ratio = h / self.step;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio || cells < 16.0 {
            return Err(Error::InvalidArgument(format!(
                "oracle step {} must divide h = {h} at least 16 times",
                self.step
            )));
        }
        Ok(cells as usize)
    }
}

/// Solves the delay problem on `[-h, T]` by the implicit L1 scheme.
///
/// The horizon is rounded up to a whole number of cells.
pub fn oracle_solve(spec: &ProblemSpec, cfg: &OracleConfig) -> Result<Trajectory> {
    spec.validate()?;
    let h = spec.h;
    let alpha = spec.alpha;
    let n = spec.n();
    let cells = cfg.cells_per_delay(h)?;
    // offsets of the nodes inside one delay interval
    let local: Vec<f64> = (0..=cells)
        .map(|k| h * (k as f64 / cells as f64).powf(cfg.grading))
        .collect();
    let intervals = (spec.t_end / h - 1e-9).ceil().max(1.0) as usize;
    if local[1] <= 64.0 * f64::EPSILON * h {
        return Err(Error::InvalidArgument(format!(
            "grading {} makes the first cell ({:e}) unresolvable",
            cfg.grading, local[1]
        )));
    }
    // Node m sits at (slot[m] - 1) h + offset[m]. Distances are formed from
    // these parts so cells far smaller than ulp(t) stay exact. The history
    // interval (slot 0) is uniform; φ is smooth there.
    let mut slot: Vec<usize> = vec![0; cells + 1];
    let mut offset: Vec<f64> = (0..=cells).map(|k| h * k as f64 / cells as f64).collect();
    for p in 1..=intervals {
        slot.extend(std::iter::repeat_n(p, cells));
        offset.extend_from_slice(&local[1..]);
    }
    let mut times: Vec<f64> = slot.iter().zip(&offset).map(|(&p, &d)| (p as f64 - 1.0) * h + d).collect();
    let last = times
        .iter()
        .position(|&t| t >= spec.t_end - 1e-12 * h)
        .expect("grid covers the horizon");
    times.truncate(last + 1);
    let dist = |m: usize, k: usize| (slot[m] as f64 - slot[k] as f64) * h + (offset[m] - offset[k]);

    let mut values: Vec<Vec<f64>> = times[..=cells].iter().map(|&t| (spec.history)(t)).collect();
    let g2 = gamma(2.0 - alpha)?;
    let one_minus = 1.0 - alpha;
    // differences (y_k - y_{k-1}) / τ_k, kept to avoid recomputation
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    slopes.push(vec![0.0; n]);
    for k in 1..=cells {
        let tau = dist(k, k - 1);
        slopes.push(values[k].iter().zip(&values[k - 1]).map(|(a, b)| (a - b) / tau).collect());
    }
    let uniform = cfg.grading == 1.0;
    // one factorization per distinct local step size
    let mut factors: Vec<Option<Lu>> = vec![None; if uniform { 1 } else { cells }];
    let mut mem = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for m in cells + 1..times.len() {
        let t = times[m];
        let tau = dist(m, m - 1);
        let c0 = tau.powf(-alpha) / g2;
        mem.iter_mut().for_each(|v| *v = 0.0);
        if alpha < 1.0 {
            for (k, slope) in slopes.iter().enumerate().take(m).skip(1) {
                let w = (dist(m, k - 1).powf(one_minus) - dist(m, k).powf(one_minus)) / g2;
                for (mv, s) in mem.iter_mut().zip(slope) {
                    *mv += w * s;
                }
            }
        }
        let f = (spec.forcing)(t);
        rhs.copy_from_slice(&values[m - 1]);
        rhs.iter_mut().for_each(|v| *v *= c0);
        for ((r, mv), fv) in rhs.iter_mut().zip(&mem).zip(&f) {
            *r += fv - mv;
        }
        // t - h is a grid node from the second interval on
        let delayed = if m <= 2 * cells {
            (spec.history)(t - h)
        } else {
            values[m - cells].clone()
        };
        spec.b.mul_vec_acc(1.0, &delayed, &mut rhs);
        let which = if uniform { 0 } else { (m - 1) % cells };
        if factors[which].is_none() {
            let mut lhs = Matrix::identity(n).scale(c0);
            lhs.add_scaled(-1.0, &spec.a);
            factors[which] = Some(lhs.lu().map_err(|e| e.at(t))?);
        }
        let y = factors[which].as_ref().expect("factored").solve(&rhs);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("oracle produced a non-finite value at t = {t}")));
        }
        slopes.push(y.iter().zip(&values[m - 1]).map(|(a, b)| (a - b) / tau).collect());
        values.push(y);
    }
    Ok(Trajectory {
        times,
        values,
        meta: TrajectoryMeta {
            method: "L1-implicit",
            mesh: cfg.step,
            nodes_per_unit: None,
            series_tol: None,
        },
    })
}

/// L1 approximation of the Caputo derivative (lower terminal at the first
/// sample) at sample `k`, from samples on a uniform grid of spacing `step`.
pub fn discrete_caputo(samples: &[Vec<f64>], step: f64, alpha: f64, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k >= samples.len() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: samples.len(),
        });
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let scale = step.powf(-alpha) / gamma(2.0 - alpha)?;
    let one_minus = 1.0 - alpha;
    let mut out = vec![0.0; samples[k].len()];
    for m in 1..=k {
        let l = (k - m) as f64;
        let w = if l == 0.0 { 1.0 } else { (l + 1.0).powf(one_minus) - l.powf(one_minus) };
        if w == 0.0 {
            continue;
        }
        for (o, (a, b)) in out.iter_mut().zip(samples[m].iter().zip(&samples[m - 1])) {
            *o += w * (a - b);
        }
    }
    out.iter_mut().for_each(|o| *o *= scale);
    Ok(out)
}

/// Exact solution of `y' = a y + b y(t-h) + f(t)`, `y = φ` on `[-h, 0]`, for
/// polynomial `φ` and `f` (ascending coefficients in `t`).
///
/// On the `p`-th delay interval `y = e^{at} U_p(t) + V_p(t)` with polynomials
/// `U_p`, `V_p`, built interval by interval.
#[derive(Debug, Clone)]
pub struct ClassicalDde {
    a: f64,
    h: f64,
    phi: Vec<f64>,
    /// `(U_p, V_p)` for `p = 1, 2, ...`
    pieces: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ClassicalDde {
    pub fn new(a: f64, b: f64, h: f64, phi: &[f64], f: &[f64], t_end: f64) -> Result<Self> {
        if !(h > 0.0) || !(t_end > 0.0) || ![a, b].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("classical DDE needs finite a, b and positive h, T".into()));
        }
        let intervals = (t_end / h - 1e-9).ceil().max(1.0) as usize;
        let decay = b * (-a * h).exp();
        let mut pieces: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(intervals);
        let mut prev_u = vec![0.0];
        let mut prev_v = phi.to_vec();
        let mut y_start = poly_eval(phi, 0.0);
        for p in 1..=intervals {
            let t0 = (p - 1) as f64 * h;
            let mut du: Vec<f64> = poly_shift(&prev_u, -h).iter().map(|c| c * decay).collect();
            let mut r: Vec<f64> = poly_shift(&prev_v, -h).iter().map(|c| c * b).collect();
            add_poly(&mut r, f);
            let v = if a == 0.0 {
                // e^{at} = 1: both parts integrate directly
                add_poly(&mut du, &r);
                vec![0.0]
            } else {
                particular(&r, a)
            };
            let mut u = antiderivative(&du);
            let c = (y_start - poly_eval(&v, t0)) * (-a * t0).exp() - poly_eval(&u, t0);
            u[0] += c;
            let t1 = p as f64 * h;
            y_start = (a * t1).exp() * poly_eval(&u, t1) + poly_eval(&v, t1);
            pieces.push((u.clone(), v.clone()));
            prev_u = u;
            prev_v = v;
        }
        Ok(Self {
            a,
            h,
            phi: phi.to_vec(),
            pieces,
        })
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            if t < -self.h {
                return Err(Error::InvalidArgument(format!("t = {t} before the history interval")));
            }
            return Ok(poly_eval(&self.phi, t));
        }
        let p = ((t / self.h).ceil() as usize).max(1);
        let (u, v) = self
            .pieces
            .get(p - 1)
            .ok_or_else(|| Error::InvalidArgument(format!("t = {t} beyond the solved horizon")))?;
        Ok((self.a * t).exp() * poly_eval(u, t) + poly_eval(v, t))
    }
}

/// One-shot exact classical delay solution at `t`.
pub fn classical_dde_exact(a: f64, b: f64, h: f64, phi: &[f64], f: &[f64], t: f64) -> Result<f64> {
    ClassicalDde::new(a, b, h, phi, f, t.max(h))?.value(t)
}

fn add_poly(p: &mut Vec<f64>, q: &[f64]) {
    if p.len() < q.len() {
        p.resize(q.len(), 0.0);
    }
    for (a, b) in p.iter_mut().zip(q) {
        *a += b;
    }
}

fn antiderivative(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(p.iter().enumerate().map(|(k, c)| c / (k + 1) as f64));
    out
}

/// Polynomial `V` with `V' - aV = R`, namely `V = -Σ_k R^{(k)} / a^{k+1}`.
fn particular(r: &[f64], a: f64) -> Vec<f64> {
    let mut v = vec![0.0; r.len()];
    let mut d = r.to_vec();
    let mut scale = -1.0 / a;
    while !d.is_empty() {
        for (vi, di) in v.iter_mut().zip(&d) {
            *vi += scale * di;
        }
        d = d.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
        scale /= a;
    }
    v
}
