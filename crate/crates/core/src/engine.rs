//! Evolution of `u_t + (-Δ)^μ u + V u = 0` by three engines.
//!
//! * `picard`: fixed point of the variation of constants formula
//!   `u(t) = S_μ(t)u₀ - ∫₀^t S_μ(t-s) V u(s) ds` on windows with
//!   `T₀ ‖V‖_∞ ≤ 1/2`. The time integral is done per Fourier mode with exact
//!   exponential weights against a local cubic interpolant of `V u`.
//! * `splitting`: Strang steps `e^{-V dt/2} S_μ(dt) e^{-V dt/2}`.
//! * `dense_oracle`: `e^{-tA}` from the eigendecomposition of
//!   `A = (-Δ)^μ + diag(V)`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{free_semigroup_apply, Field, FractionalOrder, TorusGrid};
use crate::linalg::DenseOperator;
use crate::potential::{check_ladder, truncate, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Picard,
    Splitting,
    DenseOracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Picard => "picard",
            Engine::Splitting => "splitting",
            Engine::DenseOracle => "dense_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub engine: Engine,
    /// Splitting step.
    pub dt: f64,
    /// Picard window `T₀`; `None` picks `min(0.5/‖V‖_∞, t_final)`.
    pub window: Option<f64>,
    pub picard_tol: f64,
    /// Time nodes per Picard window, endpoints included.
    pub quad_nodes: usize,
    pub max_picard_iters: usize,
    /// Trace samples after `t = 0` recorded by [`evolve`].
    pub trace_points: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            engine: Engine::Picard,
            dt: 1e-3,
            window: None,
            picard_tol: 1e-12,
            quad_nodes: 129,
            max_picard_iters: 200,
            trace_points: 32,
        }
    }
}

impl EvolutionConfig {
    pub fn with_engine(engine: Engine) -> Self {
        Self {
            engine,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, value: String, want: &str| {
            Err(Error::Configuration(format!(
                "engine.{field} = {value}: expected {want}"
            )))
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt.to_string(), "a positive finite step");
        }
        if let Some(w) = self.window {
            if !(w > 0.0 && w.is_finite()) {
                return bad("window", w.to_string(), "a positive finite window");
            }
        }
        if !(self.picard_tol > 0.0) {
            return bad(
                "picard_tol",
                self.picard_tol.to_string(),
                "a positive tolerance",
            );
        }
        if self.quad_nodes < 4 {
            return bad(
                "quad_nodes",
                self.quad_nodes.to_string(),
                "at least 4 nodes",
            );
        }
        if self.max_picard_iters == 0 {
            return bad("max_picard_iters", "0".into(), "at least 1");
        }
        if self.trace_points == 0 {
            return bad("trace_points", "0".into(), "at least 1");
        }
        Ok(())
    }

    /// Picard window for potential sup `vmax` and horizon `t_final`.
    pub fn picard_window(&self, vmax: f64, t_final: f64) -> Result<f64> {
        match self.window {
            Some(w) => {
                if w * vmax > 0.5 {
                    return Err(Error::Configuration(format!(
                        "engine.window = {w}: picard needs window·‖V‖_∞ ≤ 1/2, got {}",
                        w * vmax
                    )));
                }
                Ok(w)
            }
            None if vmax > 0.0 => Ok((0.5 / vmax).min(t_final)),
            None => Ok(t_final),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub boundary_mass: f64,
}

impl TracePoint {
    pub fn of(t: f64, u: &Field) -> Self {
        Self {
            t,
            l1: u.lp_norm(1.0).expect("finite field"),
            l2: u.lp_norm(2.0).expect("finite field"),
            linf: u.sup_norm(),
            boundary_mass: u.boundary_mass(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EngineDiagnostics {
    pub engine: &'static str,
    /// Picard: windows; splitting: steps; dense: output times.
    pub steps: usize,
    pub picard_iterations: Vec<usize>,
    pub max_picard_residual: f64,
    pub window: Option<f64>,
    pub dt_effective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub final_field: Field,
    pub trace: Vec<TracePoint>,
    pub diagnostics: EngineDiagnostics,
    pub boundary_mass: f64,
}

impl EvolutionResult {
    /// CSV with columns `t,l1,l2,linf,boundary_mass`.
    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(&self.trace, path)
    }
}

pub fn write_trace_csv(trace: &[TracePoint], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,l1,l2,linf,boundary_mass")?;
    for p in trace {
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e}",
            p.t, p.l1, p.l2, p.linf, p.boundary_mass
        )?;
    }
    Ok(())
}

/// `u(t_final)` with a trace of `trace_points` equally spaced samples.
pub fn evolve(
    u0: &Field,
    v: &Field,
    order: FractionalOrder,
    t_final: f64,
    cfg: &EvolutionConfig,
) -> Result<EvolutionResult> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::Domain(format!(
            "t_final = {t_final}: expected t > 0"
        )));
    }
    let k = cfg.trace_points;
    let times: Vec<f64> = (1..=k).map(|j| t_final * j as f64 / k as f64).collect();
    let (fields, diagnostics) = evolve_at(u0, v, order, &times, cfg)?;
    let mut trace = vec![TracePoint::of(0.0, u0)];
    trace.extend(
        times
            .iter()
            .zip(&fields)
            .map(|(&t, f)| TracePoint::of(t, f)),
    );
    let final_field = fields.into_iter().last().expect("at least one time");
    Ok(EvolutionResult {
        boundary_mass: final_field.boundary_mass(),
        final_field,
        trace,
        diagnostics,
    })
}

fn check_inputs(u0: &Field, v: &Field, times: &[f64]) -> Result<()> {
    if u0.grid() != v.grid() {
        return Err(Error::Configuration(
            "initial datum and potential live on different grids".into(),
        ));
    }
    if v.min_value() < 0.0 {
        return Err(Error::Precondition(format!(
            "potential must be ≥ 0; found {}",
            v.min_value()
        )));
    }
    if times.is_empty() {
        return Err(Error::Configuration("no output times".into()));
    }
    let mut prev = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if !(t.is_finite() && (t > prev || (i == 0 && t == 0.0))) {
            return Err(Error::Configuration(format!(
                "output times must be nonnegative and strictly increasing (t[{i}] = {t})"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// `u(t_k)` for increasing output times.
pub fn evolve_at(
    u0: &Field,
    v: &Field,
    order: FractionalOrder,
    times: &[f64],
    cfg: &EvolutionConfig,
) -> Result<(Vec<Field>, EngineDiagnostics)> {
    cfg.validate()?;
    check_inputs(u0, v, times)?;
    match cfg.engine {
        Engine::Picard => picard(u0, v, order, times, cfg),
        Engine::Splitting => splitting(u0, v, order, times, cfg.dt),
        Engine::DenseOracle => {
            let op = DenseOperator::new(v, order)?;
            let fields = times
                .iter()
                .map(|&t| op.propagate(u0, t))
                .collect::<Result<Vec<_>>>()?;
            Ok((
                fields,
                EngineDiagnostics {
                    engine: Engine::DenseOracle.name(),
                    steps: times.len(),
                    ..Default::default()
                },
            ))
        }
    }
}

fn splitting(
    u0: &Field,
    v: &Field,
    order: FractionalOrder,
    times: &[f64],
    dt: f64,
) -> Result<(Vec<Field>, EngineDiagnostics)> {
    let grid = u0.grid();
    let mut u = u0.values().to_vec();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut total = 0;
    let mut cached: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut smallest = f64::INFINITY;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            smallest = smallest.min(h);
            if cached.as_ref().is_none_or(|c| c.0 != h) {
                let half: Vec<f64> = v.values().iter().map(|vi| (-0.5 * h * vi).exp()).collect();
                let free: Vec<f64> = grid
                    .xi_sq()
                    .iter()
                    .map(|&k2| (-h * order.symbol(k2)).exp())
                    .collect();
                cached = Some((h, half, free));
            }
            let (_, half, free) = cached.as_ref().expect("set above");
            for _ in 0..steps {
                for (x, e) in u.iter_mut().zip(half) {
                    *x *= e;
                }
                let mut spec = grid.forward(&u);
                for (c, m) in spec.iter_mut().zip(free) {
                    *c *= m;
                }
                u = grid.inverse(spec);
                for (x, e) in u.iter_mut().zip(half) {
                    *x *= e;
                }
            }
            total += steps;
        }
        now = t;
        out.push(Field::new(grid, u.clone())?);
    }
    Ok((
        out,
        EngineDiagnostics {
            engine: Engine::Splitting.name(),
            steps: total,
            dt_effective: smallest.is_finite().then_some(smallest),
            ..Default::default()
        },
    ))
}

/// `∫₀¹ x^k e^{-z(1-x)} dx` for `k = 0..=3`, `z ≥ 0`.
fn exp_moments(z: f64) -> [f64; 4] {
    let mut m = [0.0; 4];
    if z <= 5.0 {
        // Σ_j (-z)^j k!/(k+j+1)!
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = 1.0 / (k as f64 + 1.0);
            let mut sum = term;
            for j in 1..200 {
                term *= -z / (k + j + 1) as f64;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            *mk = sum;
        }
    } else {
        m[0] = -(-z).exp_m1() / z;
        for k in 1..4 {
            m[k] = (1.0 - k as f64 * m[k - 1]) / z;
        }
    }
    m
}

/// Monomial coefficients of the Lagrange basis on the given nodes.
fn lagrange_coefficients(nodes: [f64; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for m in 0..4 {
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        let mut deg = 0;
        for q in 0..4 {
            if q == m {
                continue;
            }
            // poly *= (x - nodes[q])
            let mut next = [0.0; 4];
            for d in 0..=deg {
                next[d + 1] += poly[d];
                next[d] -= nodes[q] * poly[d];
            }
            poly = next;
            deg += 1;
            denom *= nodes[m] - nodes[q];
        }
        for d in 0..4 {
            out[m][d] = poly[d] / denom;
        }
    }
    out
}

const STENCILS: [[i64; 4]; 3] = [[0, 1, 2, 3], [-1, 0, 1, 2], [-2, -1, 0, 1]];

/// Per-mode propagation factor over one node step and the product weights
/// of the three stencils.
struct PicardWeights {
    step: f64,
    decay: Vec<f64>,
    weights: Vec<[[f64; 4]; 3]>,
}

impl PicardWeights {
    fn new(grid: &TorusGrid, order: FractionalOrder, step: f64) -> Self {
        let coeffs: Vec<[[f64; 4]; 4]> = STENCILS
            .iter()
            .map(|s| lagrange_coefficients(s.map(|o| o as f64)))
            .collect();
        let (decay, weights) = grid
            .xi_sq()
            .iter()
            .map(|&k2| {
                let z = step * order.symbol(k2);
                let mom = exp_moments(z);
                let mut w = [[0.0; 4]; 3];
                for (s, c) in coeffs.iter().enumerate() {
                    for m in 0..4 {
                        w[s][m] = step * (0..4).map(|k| c[m][k] * mom[k]).sum::<f64>();
                    }
                }
                ((-z).exp(), w)
            })
            .unzip();
        Self {
            step,
            decay,
            weights,
        }
    }
}

fn picard(
    u0: &Field,
    v: &Field,
    order: FractionalOrder,
    times: &[f64],
    cfg: &EvolutionConfig,
) -> Result<(Vec<Field>, EngineDiagnostics)> {
    let grid = u0.grid().clone();
    let vmax = v.max_value();
    let t_end = *times.last().expect("checked nonempty");
    let window = cfg.picard_window(vmax, t_end)?;
    let intervals = cfg.quad_nodes - 1;
    let mut diag = EngineDiagnostics {
        engine: Engine::Picard.name(),
        window: Some(window),
        ..Default::default()
    };
    let mut u = u0.values().to_vec();
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut weights: Option<PicardWeights> = None;
    for &t in times {
        while t - now > 1e-14 * t.max(1.0) {
            let len = window.min(t - now);
            let step = len / intervals as f64;
            if weights.as_ref().is_none_or(|w| w.step != step) {
                weights = Some(PicardWeights::new(&grid, order, step));
            }
            let w = weights.as_ref().expect("set above");
            let (next, iters, residual) = picard_window(&grid, v.values(), &u, w, intervals, cfg)?;
            diag.picard_iterations.push(iters);
            diag.max_picard_residual = diag.max_picard_residual.max(residual);
            diag.steps += 1;
            u = next;
            now += len;
        }
        now = t;
        out.push(Field::new(&grid, u.clone())?);
    }
    Ok((out, diag))
}

/// One window: returns the end state, iteration count and final residual.
fn picard_window(
    grid: &TorusGrid,
    v: &[f64],
    u0: &[f64],
    w: &PicardWeights,
    intervals: usize,
    cfg: &EvolutionConfig,
) -> Result<(Vec<f64>, usize, f64)> {
    let u0_hat = grid.forward(u0);
    // initial guess: free flow damped by the local potential
    let mut nodes: Vec<Vec<f64>> = (0..=intervals)
        .into_par_iter()
        .map(|j| {
            let tau = j as f64 * w.step;
            let spec: Vec<Complex64> = u0_hat
                .iter()
                .zip(&w.decay)
                .map(|(c, d)| c * d.powi(j as i32))
                .collect();
            let mut x = grid.inverse(spec);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi *= (-tau * vi).exp();
            }
            x
        })
        .collect();
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_picard_iters {
        let g_hat: Vec<Vec<Complex64>> = nodes
            .par_iter()
            .map(|x| {
                let g: Vec<f64> = x.iter().zip(v).map(|(a, b)| a * b).collect();
                grid.forward(&g)
            })
            .collect();
        let mut hist = vec![Complex64::new(0.0, 0.0); u0_hat.len()];
        let mut free = u0_hat.clone();
        let mut spectra = Vec::with_capacity(intervals + 1);
        spectra.push(u0_hat.clone());
        for j in 0..intervals {
            let s = if j == 0 {
                0
            } else if j + 1 == intervals {
                2
            } else {
                1
            };
            let idx = STENCILS[s].map(|o| (j as i64 + o) as usize);
            let mut next = Vec::with_capacity(hist.len());
            for (k, h) in hist.iter_mut().enumerate() {
                let wk = &w.weights[k][s];
                *h = *h * w.decay[k]
                    + g_hat[idx[0]][k] * wk[0]
                    + g_hat[idx[1]][k] * wk[1]
                    + g_hat[idx[2]][k] * wk[2]
                    + g_hat[idx[3]][k] * wk[3];
                free[k] *= w.decay[k];
                next.push(free[k] - *h);
            }
            spectra.push(next);
        }
        let updated: Vec<Vec<f64>> = spectra.into_par_iter().map(|s| grid.inverse(s)).collect();
        residual = updated
            .iter()
            .zip(&nodes)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        nodes = updated;
        if residual < cfg.picard_tol {
            let end = nodes.pop().expect("window has nodes");
            return Ok((end, iter, residual));
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_picard_iters,
        residual,
    })
}

/// `‖S_{μ,V}(t)‖_{∞→∞} = ‖S_{μ,V}(t) 1‖_∞`.
pub fn operator_norm_inf(
    v: &Field,
    order: FractionalOrder,
    t: f64,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    Ok(operator_norm_inf_trace(v, order, &[t], cfg)?[0])
}

/// [`operator_norm_inf`] at every time of an increasing grid.
pub fn operator_norm_inf_trace(
    v: &Field,
    order: FractionalOrder,
    times: &[f64],
    cfg: &EvolutionConfig,
) -> Result<Vec<f64>> {
    let one = Field::constant(v.grid(), 1.0);
    let (fields, _) = evolve_at(&one, v, order, times, cfg)?;
    Ok(fields.iter().map(Field::sup_norm).collect())
}

/// `‖S_{μ,V}(t)‖_{2→2} = e^{-t λ_min(A)}`.
pub fn operator_norm_2(v: &Field, order: FractionalOrder, t: f64) -> Result<f64> {
    Ok(DenseOperator::new(v, order)?.norm_2(t))
}

/// Pointwise chain `0 ≤ u_{V₁} ≤ u_{V₂} ≤ S_μ(t)u₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// `max(-u_{V₁})`.
    pub negativity: f64,
    /// `max(u_{V₁} - u_{V₂})`.
    pub order_v1_v2: f64,
    /// `max(u_{V₂} - S_μ(t)u₀)`.
    pub order_v2_free: f64,
    pub max_violation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

pub fn comparison_check(
    u0: &Field,
    v1: &Field,
    v2: &Field,
    order: FractionalOrder,
    t: f64,
    cfg: &EvolutionConfig,
) -> Result<ComparisonReport> {
    if u0.min_value() < 0.0 {
        return Err(Error::Precondition("comparison needs u₀ ≥ 0".into()));
    }
    if v2.min_value() < 0.0 || v1.values().iter().zip(v2.values()).any(|(a, b)| a < b) {
        return Err(Error::Precondition("comparison needs V₁ ≥ V₂ ≥ 0".into()));
    }
    let u1 = &evolve_at(u0, v1, order, &[t], cfg)?.0[0];
    let u2 = &evolve_at(u0, v2, order, &[t], cfg)?.0[0];
    let free = free_semigroup_apply(u0, order, t)?;
    let max_of = |a: &Field, b: &Field| {
        a.values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let negativity = -u1.min_value();
    let order_v1_v2 = max_of(u1, u2);
    let order_v2_free = max_of(u2, &free);
    let max_violation = negativity.max(order_v1_v2).max(order_v2_free).max(0.0);
    let tolerance = 1e-8 * u0.sup_norm();
    Ok(ComparisonReport {
        negativity,
        order_v1_v2,
        order_v2_free,
        max_violation,
        tolerance,
        ok: max_violation <= tolerance,
    })
}

/// `‖u_{V_M}(t) - u_V(t)‖_p` for `p ∈ {1, 2, ∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationDelta {
    pub m: f64,
    pub delta_p1: f64,
    pub delta_p2: f64,
    pub delta_pinf: f64,
}

/// Deltas along the ladder; also reports the largest pointwise increase of
/// `u_{V_M}` in `M` (zero for a monotone family).
pub fn truncation_convergence(
    u0: &Field,
    v: &Potential,
    order: FractionalOrder,
    t: f64,
    ladder: &[f64],
    cfg: &EvolutionConfig,
) -> Result<(Vec<TruncationDelta>, f64)> {
    check_ladder(ladder)?;
    if u0.min_value() < 0.0 {
        return Err(Error::Precondition("truncation study needs u₀ ≥ 0".into()));
    }
    let reference = &evolve_at(u0, v.field(), order, &[t], cfg)?.0[0];
    let solutions = ladder
        .iter()
        .map(|&m| {
            Ok(evolve_at(u0, truncate(v, m)?.field(), order, &[t], cfg)?
                .0
                .remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rise = 0.0f64;
    for pair in solutions.windows(2) {
        for (lo, hi) in pair[1].values().iter().zip(pair[0].values()) {
            rise = rise.max(lo - hi);
        }
    }
    let deltas = ladder
        .iter()
        .zip(&solutions)
        .map(|(&m, u)| {
            let d = u.sub(reference);
            Ok(TruncationDelta {
                m,
                delta_p1: d.lp_norm(1.0)?,
                delta_p2: d.lp_norm(2.0)?,
                delta_pinf: d.sup_norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((deltas, rise))
}
