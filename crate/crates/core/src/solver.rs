//! Explicit solutions of `ᶜD^α_{-h⁺} y = A y(t) + B y(t-h) + f(t)` on
//! `(0, T]` with `y = φ` on `[-h, 0]`:
//!
//! ```text
//! y(t) = X_{h,α,1}(t+h) φ(-h)
//!      + ∫_{-h}^{0} X_{h,α,α}(t-s) [ᶜD^α φ(s) - A φ(s)] ds
//!      + ∫_{0}^{t}  X_{h,α,α}(t-s) f(s) ds
//! ```
//!
//! The convolutions are computed by product integration: `X_{h,α,α}` is
//! expanded into its power terms `(t-s-jh)^{(i+1)α-1}`, each of which is
//! integrated exactly against the piecewise-linear interpolant of the smooth
//! factor. Panels end exactly where `t - s` crosses a multiple of `h`, so no
//! panel straddles a kernel breakpoint and the `s → t` singularity is absorbed
//! by the exact weights.

use std::fmt;

use rayon::prelude::*;

use crate::delayed::{DelayGrid, DelayedPerturbation};
use crate::error::{Error, Result};
use crate::functions::VecFn;
use crate::matrix::Matrix;
use crate::special::{check_ml_params, gamma, rgamma, SeriesConfig};

/// One instance of the linear fractional delay problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub a: Matrix,
    pub b: Matrix,
    pub h: f64,
    pub alpha: f64,
    pub t_end: f64,
    /// `φ` on `[-h, 0]`.
    pub history: VecFn,
    /// Exact `ᶜD^α_{-h⁺} φ` on `[-h, 0]`, when known.
    pub history_caputo: Option<VecFn>,
    /// `f` on `[-h, T]`.
    pub forcing: VecFn,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("h", &self.h)
            .field("alpha", &self.alpha)
            .field("t_end", &self.t_end)
            .field("history_caputo", &self.history_caputo.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// A problem with zero history and zero forcing.
    pub fn new(a: Matrix, b: Matrix, h: f64, alpha: f64, t_end: f64) -> Result<Self> {
        let n = a.rows();
        let zero: VecFn = std::sync::Arc::new(move |_| vec![0.0; n]);
        let spec = Self {
            a,
            b,
            h,
            alpha,
            t_end,
            history: zero.clone(),
            history_caputo: Some(zero.clone()),
            forcing: zero,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_history(mut self, phi: VecFn, caputo: Option<VecFn>) -> Self {
        self.history = phi;
        self.history_caputo = caputo;
        self
    }

    pub fn with_forcing(mut self, f: VecFn) -> Self {
        self.forcing = f;
        self
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_square() || !self.b.is_square() || self.a.rows() != self.b.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                self.a.rows(),
                self.a.cols(),
                self.b.rows(),
                self.b.cols()
            )));
        }
        DelayGrid::new(self.h)?;
        check_ml_params(self.alpha, 1.0)?;
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {}", self.t_end)));
        }
        let n = self.n();
        let check = |name: &str, v: Vec<f64>, t: f64| -> Result<()> {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name}({t}) has length {}, expected {n}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name}({t}) is not finite")));
            }
            Ok(())
        };
        for k in 0..=8 {
            let s = -self.h + self.h * k as f64 / 8.0;
            check("history", (self.history)(s), s)?;
            if let Some(c) = &self.history_caputo {
                check("history_caputo", c(s), s)?;
            }
        }
        for k in 0..=16 {
            let s = -self.h + (self.t_end + self.h) * k as f64 / 16.0;
            check("forcing", (self.forcing)(s), s)?;
        }
        Ok(())
    }
}

/// Product-integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Panels per delay interval `h` (the panel width is `h / nodes_per_unit`).
    pub nodes_per_unit: usize,
    /// Sample spacing of the L1 fallback used when no exact `ᶜD^α φ` is
    /// supplied; `None` turns the fallback off.
    pub caputo_fallback_step: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_unit: 256,
            caputo_fallback_step: Some(1e-4),
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_unit < 8 {
            return Err(Error::InvalidArgument(format!(
                "nodes_per_unit must be at least 8, got {}",
                self.nodes_per_unit
            )));
        }
        if let Some(s) = self.caputo_fallback_step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("fallback step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Mesh and accuracy settings recorded alongside a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub method: &'static str,
    pub mesh: f64,
    pub nodes_per_unit: Option<usize>,
    pub series_tol: Option<f64>,
}

/// Sampled solution on `[-h, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at a sample time, matched to within `tol`.
    pub fn value_at(&self, t: f64, tol: f64) -> Option<&[f64]> {
        let k = self.times.partition_point(|&s| s < t - tol);
        match self.times.get(k) {
            Some(&s) if (s - t).abs() <= tol => Some(&self.values[k]),
            _ => None,
        }
    }

    /// Piecewise-linear interpolant between samples; `None` outside the range.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let (&first, &last) = (self.times.first()?, self.times.last()?);
        if !(first..=last).contains(&t) {
            return None;
        }
        let k = self.times.partition_point(|&s| s < t);
        if self.times[k] == t || k == 0 {
            return Some(self.values[k].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Some(
            self.values[k - 1]
                .iter()
                .zip(&self.values[k])
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    /// Largest componentwise deviation from `other` over the times both share.
    pub fn max_abs_diff_on_common(&self, other: &Trajectory, tol: f64) -> (f64, usize) {
        let mut worst = 0.0_f64;
        let mut count = 0;
        for (t, v) in self.times.iter().zip(&self.values) {
            if let Some(w) = other.value_at(*t, tol) {
                count += 1;
                for (x, y) in v.iter().zip(w) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        (worst, count)
    }
}

type Integrand<'a> = Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'a>;

/// A vector function with cached values on a fixed increasing node set.
struct Sampled<'a> {
    nodes: Vec<f64>,
    values: Vec<f64>,
    func: Integrand<'a>,
    n: usize,
    max_abs: f64,
}

impl<'a> Sampled<'a> {
    fn new(nodes: Vec<f64>, n: usize, func: Integrand<'a>) -> Result<Self> {
        let rows = nodes.par_iter().map(|&s| func(s)).collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(nodes.len() * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "integrand has length {}, expected {n}",
                    r.len()
                )));
            }
            values.extend(r);
        }
        let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            nodes,
            values,
            func,
            n,
            max_abs,
        })
    }

    fn origin(&self) -> f64 {
        self.nodes[0]
    }

    fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }
}

/// `origin, origin + step, ...` up to and including `end`.
fn uniform_nodes(origin: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - origin) / step - 1e-9).ceil().max(1.0) as usize;
    (0..=count)
        .map(|k| origin + (end - origin) * k as f64 / count as f64)
        .collect()
}

/// `count` panels on `[origin, origin + width]`, clustered at `origin` as
/// `(k / count)^grading`.
fn graded_nodes(origin: f64, width: f64, count: usize, grading: f64) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..=count)
        .map(|k| origin + width * (k as f64 / count as f64).powf(grading))
        .collect();
    nodes[count] = origin + width;
    nodes
}

/// Integration nodes on `[origin, end]` for one kernel term.
struct Panels {
    /// `u_k = c - s_k`, decreasing.
    u: Vec<f64>,
    /// `g(s_k)`, row-major `nodes x n`.
    g: Vec<f64>,
}

impl Panels {
    fn build(sampled: &Sampled<'_>, c: f64, end: f64) -> Result<Option<Panels>> {
        let nodes = &sampled.nodes;
        let mut m = nodes.partition_point(|&s| s < end);
        if m == 0 {
            return Ok(None);
        }
        // merge a sliver last panel into its neighbour
        if m >= 2 && end - nodes[m - 1] <= 1e-7 * (nodes[m - 1] - nodes[m - 2]) {
            m -= 1;
        }
        if end - nodes[0] <= 1e-12 * (nodes[nodes.len() - 1] - nodes[0]) {
            return Ok(None);
        }
        let n = sampled.n;
        let mut u: Vec<f64> = nodes[..m].iter().map(|s| c - s).collect();
        let mut g = sampled.values[..m * n].to_vec();
        u.push(c - end);
        match nodes.get(m) {
            Some(&s) if s == end => g.extend_from_slice(sampled.node(m)),
            _ => g.extend((sampled.func)(end)?),
        }
        Ok(Some(Panels { u, g }))
    }
}

/// Closed-form solver bound to one problem.
pub struct Solver<'a> {
    spec: &'a ProblemSpec,
    quad: QuadratureConfig,
    x: DelayedPerturbation,
    history: Sampled<'a>,
    forcing: Sampled<'a>,
    phi_start: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(spec: &'a ProblemSpec, quad: QuadratureConfig, cfg: SeriesConfig) -> Result<Self> {
        spec.validate()?;
        quad.validate()?;
        cfg.validate()?;
        let n = spec.n();
        let h = spec.h;
        let alpha = spec.alpha;
        let step = h / quad.nodes_per_unit as f64;
        let a = spec.a.clone();
        let caputo: Box<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'a> =
            match (&spec.history_caputo, quad.caputo_fallback_step) {
                (Some(c), _) => Box::new(move |s| Ok(c(s))),
                (None, Some(mesh)) => {
                    let phi = spec.history.clone();
                    Box::new(move |s| caputo_of_history_numeric(&phi, alpha, h, s, mesh))
                }
                (None, None) => return Err(Error::MissingDerivative),
            };
        let phi = spec.history.clone();
        let history_integrand = Box::new(move |s: f64| -> Result<Vec<f64>> {
            let p = phi(s);
            let mut g = caputo(s)?;
            a.mul_vec_acc(-1.0, &p, &mut g);
            Ok(g)
        });
        // ᶜD^α φ behaves like (s + h)^{1-α}: cluster nodes at -h
        let history = Sampled::new(graded_nodes(-h, h, quad.nodes_per_unit, 2.0), n, history_integrand)?;
        let f = spec.forcing.clone();
        let forcing = Sampled::new(uniform_nodes(0.0, spec.t_end, step), n, Box::new(move |s| Ok(f(s))))?;
        let x = DelayedPerturbation::new(spec.a.clone(), spec.b.clone(), h, alpha, cfg)?;
        Ok(Self {
            spec,
            quad,
            x,
            history,
            forcing,
            phi_start: (spec.history)(-h),
        })
    }

    pub fn fundamental(&self) -> &DelayedPerturbation {
        &self.x
    }

    /// `X_{h,α,1}(t+h) φ(-h) + ∫_{-h}^0 X_{h,α,α}(t-s) [ᶜD^α φ(s) - A φ(s)] ds`.
    pub fn history_response(&self, t: f64) -> Result<Vec<f64>> {
        check_time(t)?;
        let xt = self.x.eval(1.0, t + self.spec.h).map_err(|e| e.at(t))?;
        let mut y = xt.mul_vec(&self.phi_start);
        let conv = self.convolve(&self.history, 0.0, t).map_err(|e| e.at(t))?;
        for (yi, ci) in y.iter_mut().zip(conv) {
            *yi += ci;
        }
        Ok(y)
    }

    /// `∫_0^t X_{h,α,α}(t-s) f(s) ds`, the response to the forcing with zero history.
    pub fn forced_response(&self, t: f64) -> Result<Vec<f64>> {
        check_time(t)?;
        if t > self.spec.t_end * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} beyond the horizon {}",
                self.spec.t_end
            )));
        }
        self.convolve(&self.forcing, t, t).map_err(|e| e.at(t))
    }

    /// `∫_{-h}^t X_{h,α,α}(t-s) f(s) ds`, the variation-of-constants integral
    /// with the forcing also acting on the initial interval.
    pub fn forced_response_from_minus_h(&self, t: f64) -> Result<Vec<f64>> {
        check_time(t)?;
        let f = self.spec.forcing.clone();
        let step = self.spec.h / self.quad.nodes_per_unit as f64;
        let sampled = Sampled::new(uniform_nodes(-self.spec.h, t, step), self.spec.n(), Box::new(move |s| Ok(f(s))))?;
        self.convolve(&sampled, t, t).map_err(|e| e.at(t))
    }

    /// Full solution `y(t)` for `t > 0`.
    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        let mut y = self.history_response(t)?;
        for (yi, fi) in y.iter_mut().zip(self.forced_response(t)?) {
            *yi += fi;
        }
        Ok(y)
    }

    /// Samples `y` on `[-h, T]`; history samples are exact `φ` values.
    pub fn trajectory(&self, mesh: f64) -> Result<Trajectory> {
        let h = self.spec.h;
        if !(mesh > 0.0) || mesh > h / 4.0 {
            return Err(Error::InvalidArgument(format!(
                "output mesh must lie in (0, h/4], got {mesh}"
            )));
        }
        let t_end = self.spec.t_end;
        let hist_steps = (h / mesh - 1e-9).ceil() as usize;
        let steps = (t_end / mesh - 1e-9).ceil() as usize;
        let mut times: Vec<f64> = (0..=hist_steps)
            .map(|k| -h + h * k as f64 / hist_steps as f64)
            .collect();
        *times.last_mut().expect("non-empty") = 0.0;
        let mut values: Vec<Vec<f64>> = times.iter().map(|&t| (self.spec.history)(t)).collect();
        let positive: Vec<f64> = (1..=steps).map(|k| t_end * k as f64 / steps as f64).collect();
        let solved = self.values_at(&positive)?;
        times.extend(positive);
        values.extend(solved);
        Ok(Trajectory {
            times,
            values,
            meta: TrajectoryMeta {
                method: "closed-form",
                mesh,
                nodes_per_unit: Some(self.quad.nodes_per_unit),
                series_tol: Some(self.x.series().tol),
            },
        })
    }

    /// `y` at each positive time, evaluated in parallel. Times on a multiple
    /// of `h` take the limit from the left (shifted by `1e-6` of the local
    /// spacing).
    pub fn values_at(&self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let grid = self.x.grid();
        let h = self.spec.h;
        times
            .par_iter()
            .enumerate()
            .map(|(k, &t)| {
                let te = if t > 0.5 * h && grid.is_breakpoint(t, 1e-12) {
                    let prev = if k > 0 { times[k - 1] } else { t - h };
                    t - (t - prev).clamp(1e-9 * h, h) * 1e-6
                } else {
                    t
                };
                self.value(te).map_err(|e| e.at(t))
            })
            .collect()
    }

    /// `∫_{origin}^{min(upper, t)} X_{h,α,α}(t-s) g(s) ds` by product integration.
    fn convolve(&self, g: &Sampled<'_>, upper: f64, t: f64) -> Result<Vec<f64>> {
        let n = self.spec.n();
        let h = self.spec.h;
        let alpha = self.spec.alpha;
        let cfg = self.x.series();
        let origin = g.origin();
        let mut out = vec![0.0; n];
        // term j is active for s < t - jh
        let mut panels = Vec::new();
        let mut spans = Vec::new();
        let mut j = 0usize;
        loop {
            let c = t - j as f64 * h;
            if c <= origin {
                break;
            }
            let end = upper.min(c);
            if let Some(p) = Panels::build(g, c, end)? {
                panels.push((j, p));
                spans.push(c - origin);
            }
            j += 1;
        }
        if panels.is_empty() || g.max_abs == 0.0 && panels.iter().all(|(_, p)| p.g.iter().all(|v| *v == 0.0)) {
            return Ok(out);
        }
        let j_count = panels.last().map_or(0, |(j, _)| j + 1);
        let g_max = panels
            .iter()
            .flat_map(|(_, p)| p.g.iter())
            .fold(g.max_abs, |m, v| m.max(v.abs()));

        // u_k^γ advanced by u_k^α each series step
        let mut powers: Vec<Vec<f64>> = panels.iter().map(|(_, p)| p.u.iter().map(|u| u.powf(alpha)).collect()).collect();
        let alpha_pows = powers.clone();
        let mut table = self.x.table(64, j_count)?;
        let mut weights = Vec::new();
        let mut w_vec = vec![0.0; n];
        for i in 0..cfg.max_terms {
            if i > table.i_max() {
                table = self.x.table(2 * table.i_max(), j_count)?;
            }
            let gamma_order = (i + 1) as f64 * alpha;
            let inv_gamma = rgamma(gamma_order)?;
            let inv_gamma1 = rgamma(gamma_order + 1.0)?;
            let mut bound = 0.0_f64;
            for (slot, ((j, p), span)) in panels.iter().zip(&spans).enumerate() {
                let j = *j;
                if i > 0 {
                    for (pw, ap) in powers[slot].iter_mut().zip(&alpha_pows[slot]) {
                        *pw *= ap;
                    }
                }
                if j > i {
                    continue;
                }
                let qn = table.norm(i, j);
                if qn == 0.0 {
                    continue;
                }
                bound += qn * n as f64 * g_max * span.powf(gamma_order) * inv_gamma1;
                product_weights(&p.u, &powers[slot], gamma_order, &mut weights);
                w_vec.iter_mut().for_each(|w| *w = 0.0);
                for (k, wk) in weights.iter().enumerate() {
                    for (wv, gv) in w_vec.iter_mut().zip(&p.g[k * n..(k + 1) * n]) {
                        *wv += wk * gv;
                    }
                }
                table.get(i, j).mul_vec_acc(inv_gamma, &w_vec, &mut out);
            }
            if !bound.is_finite() {
                break;
            }
            if i >= 1 && i + 1 >= j_count && bound < cfg.tol {
                return Ok(out);
            }
        }
        Err(Error::NonConvergence {
            max_terms: cfg.max_terms,
            last_norm: f64::NAN,
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("solution time must be positive, got {t}")));
    }
    Ok(())
}

/// Weights `w_k` with `∫ (c-s)^{γ-1} ĝ(s) ds = Σ_k w_k g_k`, where `ĝ` is the
/// piecewise-linear interpolant through the nodes with `u_k = c - s_k` and
/// `pw_k = u_k^γ`.
fn product_weights(u: &[f64], pw: &[f64], gamma_order: f64, weights: &mut Vec<f64>) {
    weights.clear();
    weights.resize(u.len(), 0.0);
    let inv_g = 1.0 / gamma_order;
    let inv_g1 = 1.0 / (gamma_order + 1.0);
    for k in 0..u.len() - 1 {
        let (u0, u1) = (u[k], u[k + 1]);
        let (p0, p1) = (pw[k], pw[k + 1]);
        let width = u0 - u1;
        // ∫ u^{γ-1} du and ∫ u^γ du over [u1, u0]
        let d1 = (p0 - p1) * inv_g;
        let d2 = (u0 * p0 - u1 * p1) * inv_g1;
        weights[k] += (d2 - u1 * d1) / width;
        weights[k + 1] += (u0 * d1 - d2) / width;
    }
}

/// One-shot `∫_0^t X_{h,α,α}(t-s) f(s) ds`.
pub fn forced_response(spec: &ProblemSpec, t: f64, quad: &QuadratureConfig, cfg: &SeriesConfig) -> Result<Vec<f64>> {
    Solver::new(spec, *quad, *cfg)?.forced_response(t)
}

/// One-shot history response, anchored at `φ(-h)`.
pub fn history_response(spec: &ProblemSpec, t: f64, quad: &QuadratureConfig, cfg: &SeriesConfig) -> Result<Vec<f64>> {
    Solver::new(spec, *quad, *cfg)?.history_response(t)
}

/// Full trajectory on `[-h, T]` with output spacing at most `mesh`.
pub fn solve(spec: &ProblemSpec, mesh: f64, quad: &QuadratureConfig, cfg: &SeriesConfig) -> Result<Trajectory> {
    Solver::new(spec, *quad, *cfg)?.trajectory(mesh)
}

/// L1 approximation of `ᶜD^α_{-h⁺} φ(s)` from samples of `φ` on `[-h, s]`
/// with spacing at most `mesh`. First-order accurate for `C²` histories.
pub fn caputo_of_history_numeric(phi: &VecFn, alpha: f64, h: f64, s: f64, mesh: f64) -> Result<Vec<f64>> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::InsufficientSamples(format!("sample spacing {mesh} is not positive")));
    }
    check_ml_params(alpha, 1.0)?;
    let width = s + h;
    if width < 0.0 || s > 0.0 {
        return Err(Error::InvalidArgument(format!("s = {s} outside [-h, 0]")));
    }
    let n0 = phi(-h).len();
    if width == 0.0 {
        if alpha < 1.0 {
            return Ok(vec![0.0; n0]);
        }
        let (a, b) = (phi(-h), phi(-h + mesh));
        return Ok(a.iter().zip(b).map(|(x, y)| (y - x) / mesh).collect());
    }
    let steps = (width / mesh - 1e-9).ceil().max(1.0) as usize;
    let dt = width / steps as f64;
    let samples: Vec<Vec<f64>> = (0..=steps).map(|k| phi(-h + k as f64 * dt)).collect();
    let scale = dt.powf(-alpha) / gamma(2.0 - alpha)?;
    let mut out = vec![0.0; n0];
    for k in 1..=steps {
        let l = (steps - k) as f64;
        let w = (l + 1.0).powf(1.0 - alpha) - if l > 0.0 { l.powf(1.0 - alpha) } else { 0.0 };
        for (o, (x, y)) in out.iter_mut().zip(samples[k].iter().zip(&samples[k - 1])) {
            *o += w * (x - y);
        }
    }
    out.iter_mut().for_each(|o| *o *= scale);
    Ok(out)
}
