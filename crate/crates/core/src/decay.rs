//! Exponential types `ω_p`, the spectral bound `a_*`, the explicit decay
//! certificate and the assembled [`DecayReport`].

use serde::{Deserialize, Serialize};

use crate::engine::{evolve_at, operator_norm_inf_trace, EvolutionConfig};
use crate::error::{Error, Result};
use crate::grid::{Field, FractionalOrder};
use crate::kernels::kernel_at;
use crate::linalg::{smallest_eigenvalue, smallest_eigenvalue_iterative, DenseOperator, DENSE_CAP};
use crate::potential::BallInfimum;
use crate::random::{seeded, smooth_positive_field};

/// Verdict threshold on `a_*`.
pub const DECAY_THRESHOLD: f64 = 1e-4;
/// Required coefficient of determination of the tail fit.
pub const MIN_R_SQUARED: f64 = 0.999;
/// Norm traces within this distance of 1 count as non-decaying.
pub const FLAT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

/// Least-squares rate of `-log norm` over the tail half of the samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub omega: f64,
    pub r_squared: f64,
    /// The trace never left `[1 - 1e-3, 1]`; `omega` is reported as 0.
    pub flat: bool,
}

pub fn fit_rate(times: &[f64], norms: &[f64]) -> Result<RateFit> {
    if times.len() != norms.len() || times.len() < 4 {
        return Err(Error::FitQuality(
            "rate fit needs at least 4 matching (t, norm) samples".into(),
        ));
    }
    if norms.iter().all(|n| (n - 1.0).abs() <= FLAT_TOLERANCE) {
        return Ok(RateFit {
            omega: 0.0,
            r_squared: 1.0,
            flat: true,
        });
    }
    if let Some(w) = norms
        .windows(2)
        .find(|w| !(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15))
    {
        return Err(Error::FitQuality(format!(
            "norm trace is not monotone ({} -> {})",
            w[0], w[1]
        )));
    }
    let last = *norms.last().expect("nonempty");
    if !(last > 0.0) || -last.ln() < 1.0 {
        return Err(Error::FitQuality(format!(
            "norm only fell to {last:e}; extend t_grid to cover one e-folding"
        )));
    }
    let start = times.len() / 2;
    let xs = &times[start..];
    let ys: Vec<f64> = norms[start..].iter().map(|n| -n.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    if r_squared < MIN_R_SQUARED {
        return Err(Error::FitQuality(format!(
            "tail fit R² = {r_squared:.6} is below {MIN_R_SQUARED}"
        )));
    }
    Ok(RateFit {
        omega: slope.max(0.0),
        r_squared,
        flat: false,
    })
}

/// How an `ω̂` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    Eigensolve,
    ColumnSums,
    SupTrace,
    L2Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub p: Exponent,
    pub omega: f64,
    pub method: RateMethod,
    pub r_squared: Option<f64>,
}

/// `ω̂_p` from the configuration; see [`estimate_omega_detailed`].
pub fn estimate_omega(
    v: &Field,
    order: FractionalOrder,
    p: Exponent,
    t_grid: &[f64],
    cfg: &EvolutionConfig,
) -> Result<f64> {
    Ok(estimate_omega_detailed(v, order, p, t_grid, cfg)?.omega)
}

/// * `∞`: tail fit of `‖S_{μ,V}(t)1‖_∞` evolved by `cfg.engine`;
/// * `1`: tail fit of the largest column sum of the dense propagator, or the
///   `∞` trace by duality above the dense cap;
/// * `2`: `λ_min(A)` under the dense cap, otherwise the tail fit of the L²
///   trace of a normalized random positive datum.
pub fn estimate_omega_detailed(
    v: &Field,
    order: FractionalOrder,
    p: Exponent,
    t_grid: &[f64],
    cfg: &EvolutionConfig,
) -> Result<OmegaEstimate> {
    let dense_ok = v.grid().len() <= DENSE_CAP;
    let fitted = |norms: Vec<f64>, method| -> Result<OmegaEstimate> {
        let fit = fit_rate(t_grid, &norms)?;
        Ok(OmegaEstimate {
            p,
            omega: fit.omega,
            method,
            r_squared: Some(fit.r_squared),
        })
    };
    match p {
        Exponent::Inf => fitted(
            operator_norm_inf_trace(v, order, t_grid, cfg)?,
            RateMethod::SupTrace,
        ),
        Exponent::One if dense_ok => {
            let op = DenseOperator::new(v, order)?;
            fitted(
                t_grid.iter().map(|&t| op.norm_1(t)).collect(),
                RateMethod::ColumnSums,
            )
        }
        Exponent::One => fitted(
            operator_norm_inf_trace(v, order, t_grid, cfg)?,
            RateMethod::SupTrace,
        ),
        Exponent::Two if dense_ok => Ok(OmegaEstimate {
            p,
            omega: DenseOperator::new(v, order)?.lambda_min().max(0.0),
            method: RateMethod::Eigensolve,
            r_squared: None,
        }),
        Exponent::Two => fitted(l2_trace(v, order, t_grid, cfg, 0)?, RateMethod::L2Trace),
    }
}

/// `‖S_{μ,V}(t)u₀‖₂` for a seeded random positive `u₀` with `‖u₀‖₂ = 1`.
pub fn l2_trace(
    v: &Field,
    order: FractionalOrder,
    t_grid: &[f64],
    cfg: &EvolutionConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let grid = v.grid();
    let raw = smooth_positive_field(grid, &mut seeded(seed), 8);
    let u0 = raw.scale(1.0 / raw.lp_norm(2.0)?);
    let (fields, _) = evolve_at(&u0, v, order, t_grid, cfg)?;
    fields.iter().map(|f| f.lp_norm(2.0)).collect()
}

/// `ω̂₂` from the L² trace regardless of grid size.
pub fn omega2_trace_fit(
    v: &Field,
    order: FractionalOrder,
    t_grid: &[f64],
    cfg: &EvolutionConfig,
    seed: u64,
) -> Result<RateFit> {
    fit_rate(t_grid, &l2_trace(v, order, t_grid, cfg, seed)?)
}

/// `a_* = max(λ_min(A), 0)`.
pub fn a_star(v: &Field, order: FractionalOrder) -> Result<f64> {
    Ok(smallest_eigenvalue(v, order)?.max(0.0))
}

/// `count` equally spaced times up to `e_folds / rate`.
pub fn suggested_t_grid(rate: f64, e_folds: f64, count: usize) -> Result<Vec<f64>> {
    if !(rate > 0.0) {
        return Err(Error::Precondition(
            "a time grid for rate fitting needs a positive rate".into(),
        ));
    }
    let t_end = e_folds / rate;
    Ok((1..=count)
        .map(|k| t_end * k as f64 / count as f64)
        .collect())
}

/// Inequalities `ω₂ ≥ ω_p ≥ ω_∞ ≥ ω₂/(1 + N/(4μ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainVerdict {
    pub omega_2: f64,
    pub omega_1: Option<f64>,
    pub omega_inf: f64,
    pub lower_factor: f64,
    pub tol: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
    /// Only for `μ = 1`: `|ω₂ - ω_∞| ≤ tol`.
    pub p_independent: Option<bool>,
    pub ok: bool,
}

pub fn chain_tolerance(omega_2: f64) -> f64 {
    if omega_2 < 1e-2 {
        1e-3
    } else {
        0.05 * omega_2
    }
}

pub fn omega_chain(
    omega_2: f64,
    omega_1: Option<f64>,
    omega_inf: f64,
    dim: usize,
    order: FractionalOrder,
) -> ChainVerdict {
    let tol = chain_tolerance(omega_2);
    let lower_factor = 1.0 / (1.0 + dim as f64 / (4.0 * order.value()));
    let mut upper_ok = omega_2 >= omega_inf - tol;
    if let Some(w1) = omega_1 {
        upper_ok &= omega_2 >= w1 - tol && w1 >= omega_inf - tol;
    }
    let lower_ok = omega_inf >= omega_2 * lower_factor - tol && omega_inf >= -1e-9;
    let p_independent = order
        .is_classical()
        .then(|| (omega_2 - omega_inf).abs() <= tol);
    ChainVerdict {
        omega_2,
        omega_1,
        omega_inf,
        lower_factor,
        tol,
        upper_ok,
        lower_ok,
        p_independent,
        ok: upper_ok && lower_ok && p_independent.unwrap_or(true),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub t_used: f64,
    pub radius: f64,
    pub c: f64,
    pub g_mu_value: f64,
    pub bound_value: f64,
    pub simulated_value: f64,
    pub ok: bool,
}

/// Lower bound for `(S_μ(s)V)(x)` at every `x`, using the discrete kernel:
/// the positive ball part weighted by `c`, minus any negative kernel mass.
fn kernel_lower_bound(
    v_sup: f64,
    order: FractionalOrder,
    grid: &crate::grid::TorusGrid,
    radius: f64,
    c: f64,
    s: f64,
) -> Result<f64> {
    if s <= 0.0 {
        return Ok(0.0);
    }
    let k = kernel_at(grid, order, s)?;
    let dv = grid.cell_volume();
    let mut inf_ball = f64::INFINITY;
    let mut ball_volume = 0.0;
    let mut neg_outside = 0.0;
    for (r, kv) in grid.radii().iter().zip(k.values()) {
        if *r <= radius {
            inf_ball = inf_ball.min(*kv);
            ball_volume += dv;
        } else if *kv < 0.0 {
            neg_outside -= kv * dv;
        }
    }
    Ok(c * inf_ball.max(0.0) + inf_ball.min(0.0) * v_sup * ball_volume - v_sup * neg_outside)
}

fn simpson<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> Result<f64>>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fm, fb) = (f(a)?, f(0.5 * (a + b))?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 24)
}

/// `bound = 1 - (1 - t‖V_M‖_∞) 𝒢_μ(t)` with `𝒢_μ(t) = ∫₀^t g(s) ds`, `g`
/// the certified lower bound of `(S_μ(s)V_M)(x)` given
/// `inf_x ∫_{B(x,r)} V_M ≥ c`; compared with the simulated `‖S_{μ,V_M}(t)1‖_∞`.
pub fn decay_certificate(
    v: &Field,
    order: FractionalOrder,
    t: f64,
    radius: f64,
    c: f64,
    cfg: &EvolutionConfig,
) -> Result<Certificate> {
    let v_sup = v.max_value();
    if !(v_sup > 0.0) || t * v_sup >= 1.0 || !(t > 0.0) {
        return Err(Error::Precondition(format!(
            "certificate needs 0 < t < 1/‖V_M‖_∞ (t = {t}, ‖V_M‖_∞ = {v_sup})"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Precondition(format!(
            "certificate needs a ball constant c > 0, got {c}"
        )));
    }
    let grid = v.grid();
    if !(radius > 0.0 && radius < 0.5 * grid.length()) {
        return Err(Error::Precondition(format!(
            "certificate radius {radius} must lie in (0, L/2)"
        )));
    }
    let g = |s: f64| kernel_lower_bound(v_sup, order, grid, radius, c, s);
    let big_g = simpson(&g, 0.0, t, 1e-10)?;
    let bound_value = 1.0 - (1.0 - t * v_sup) * big_g;
    let simulated_value = operator_norm_inf_trace(v, order, &[t], cfg)?[0];
    Ok(Certificate {
        t_used: t,
        radius,
        c,
        g_mu_value: big_g,
        bound_value,
        simulated_value,
        ok: simulated_value <= bound_value + 1e-6 && bound_value < 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaPath {
    Eigensolve,
    TraceFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaAstar {
    pub omega_2: f64,
    pub a_star: f64,
    pub rel_gap: f64,
    pub path: OmegaPath,
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `ω₂` and `a_*` by independent routines.
///
/// `Eigensolve`: `ω₂ = -log‖e^{-A}‖₂` from the dense eigendecomposition,
/// `a_*` by inverse power iteration. `TraceFit`: `ω₂` fitted to the L² trace
/// evolved with `cfg` over four e-folds of the dense `a_*`.
pub fn omega_equals_astar(
    v: &Field,
    order: FractionalOrder,
    path: OmegaPath,
    cfg: &EvolutionConfig,
) -> Result<OmegaAstar> {
    let op = DenseOperator::new(v, order)?;
    let (omega_2, a_star) = match path {
        OmegaPath::Eigensolve => {
            let omega = -op.norm_2(1.0).ln();
            let (a, _) = smallest_eigenvalue_iterative(v, order, 1e-13, 20_000)?;
            (omega.max(0.0), a.max(0.0))
        }
        OmegaPath::TraceFit => {
            let a = op.lambda_min().max(0.0);
            let omega = if a == 0.0 {
                0.0
            } else {
                let times = suggested_t_grid(a, 4.0, 40)?;
                omega2_trace_fit(v, order, &times, cfg, 0)?.omega
            };
            (omega, a)
        }
    };
    Ok(OmegaAstar {
        omega_2,
        a_star,
        rel_gap: rel_gap(omega_2, a_star),
        path,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Decay,
    NoDecay,
    Inconclusive,
}

/// Contraction-or-decay classification of a sup-norm trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Contraction,
    Decay,
    Undetermined,
}

pub fn classify_alternative(norms: &[f64], omega_inf: f64, threshold: f64) -> Alternative {
    if norms.iter().all(|n| (n - 1.0).abs() <= FLAT_TOLERANCE) {
        Alternative::Contraction
    } else if omega_inf > threshold {
        Alternative::Decay
    } else {
        Alternative::Undetermined
    }
}

/// Inputs gathered by the caller.
#[derive(Debug, Clone, Default)]
pub struct Measurements {
    pub dim: usize,
    pub mu: f64,
    pub length: f64,
    pub points: usize,
    pub potential_family: String,
    pub omega_1: Option<f64>,
    pub omega_2: Option<f64>,
    pub omega_inf: Option<f64>,
    pub a_star: Option<f64>,
    pub chain: Option<ChainVerdict>,
    pub certificate: Option<Certificate>,
    pub ball_criterion_table: Vec<BallInfimum>,
    pub sup_trace: Option<(Vec<f64>, Vec<f64>)>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub schema: u32,
    pub dim: usize,
    pub mu: f64,
    pub length: f64,
    pub points: usize,
    pub potential_family: String,
    pub omega_1: Option<f64>,
    pub omega_2: Option<f64>,
    pub omega_inf: Option<f64>,
    pub a_star: Option<f64>,
    pub chain: Option<ChainVerdict>,
    pub chain_ok: Option<bool>,
    pub certificate: Option<Certificate>,
    pub ball_criterion_table: Vec<BallInfimum>,
    pub alternative: Option<Alternative>,
    pub threshold: f64,
    pub verdict: Verdict,
    pub hints: Vec<String>,
}

impl DecayReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn assemble_report(m: Measurements) -> Result<DecayReport> {
    let rate = m
        .a_star
        .or(m.omega_2)
        .ok_or_else(|| Error::Precondition("a report needs at least ω̂₂ or a_*".into()))?;
    let threshold = m.threshold.unwrap_or(DECAY_THRESHOLD);
    let chain_ok = m.chain.map(|c| c.ok);
    let alternative = match (&m.sup_trace, m.omega_inf) {
        (Some((_, norms)), Some(w)) => Some(classify_alternative(norms, w, threshold)),
        _ => None,
    };
    let mut hints = Vec::new();
    let criterion_vanishes = !m.ball_criterion_table.is_empty()
        && m.ball_criterion_table.iter().all(|b| b.inf_value == 0.0);
    let mut verdict = if rate > threshold && chain_ok.unwrap_or(true) {
        Verdict::Decay
    } else if criterion_vanishes && rate < threshold {
        Verdict::NoDecay
    } else {
        Verdict::Inconclusive
    };
    if alternative == Some(Alternative::Undetermined) {
        verdict = Verdict::Inconclusive;
        hints.push(
            "sup-norm trace neither stays within 1e-3 of 1 nor decays above the threshold; \
             refine the grid or extend t_grid"
                .into(),
        );
    }
    if chain_ok == Some(false) {
        hints.push("ω chain inequalities failed; check fit quality and t_grid".into());
    }
    Ok(DecayReport {
        schema: 1,
        dim: m.dim,
        mu: m.mu,
        length: m.length,
        points: m.points,
        potential_family: m.potential_family,
        omega_1: m.omega_1,
        omega_2: m.omega_2,
        omega_inf: m.omega_inf,
        a_star: m.a_star,
        chain: m.chain,
        chain_ok,
        certificate: m.certificate,
        ball_criterion_table: m.ball_criterion_table,
        alternative,
        threshold,
        verdict,
        hints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::grid::TorusGrid;
    use crate::potential::{ball_criterion, Potential, PotentialSpec};

    fn grid() -> TorusGrid {
        TorusGrid::new(1, 20.0, 128).unwrap()
    }

    fn half() -> FractionalOrder {
        FractionalOrder::new(0.5).unwrap()
    }

    #[test]
    fn fit_examples() {
        let t: Vec<f64> = (1..=20).map(|k| k as f64 * 0.25).collect();
        let n: Vec<f64> = t.iter().map(|t| 2.0 * (-0.7 * t).exp()).collect();
        let f = fit_rate(&t, &n).unwrap();
        assert!((f.omega - 0.7).abs() < 1e-12 && !f.flat);
        let flat = fit_rate(&t, &[1.0; 20]).unwrap();
        assert!(flat.flat && flat.omega == 0.0);
        let short: Vec<f64> = t.iter().map(|t| (-0.01 * t).exp()).collect();
        assert!(matches!(fit_rate(&t, &short), Err(Error::FitQuality(_))));
        let mut bumpy = n.clone();
        bumpy[5] *= 1.5;
        assert!(fit_rate(&t, &bumpy).is_err());
    }

    #[test]
    fn constant_potential_rates() {
        let g = grid();
        let v = Field::constant(&g, 1.0);
        let t: Vec<f64> = (1..=16).map(|k| k as f64 * 0.25).collect();
        for engine in [Engine::Splitting, Engine::DenseOracle] {
            let cfg = EvolutionConfig::with_engine(engine);
            for p in [Exponent::One, Exponent::Two, Exponent::Inf] {
                let w = estimate_omega(&v, half(), p, &t, &cfg).unwrap();
                assert!((w - 1.0).abs() < 1e-8, "{p:?}: {w}");
            }
        }
        assert!((a_star(&v, half()).unwrap() - 1.0).abs() < 1e-12);
        let zero = Field::zeros(&g);
        let cfg = EvolutionConfig::with_engine(Engine::DenseOracle);
        assert_eq!(
            estimate_omega(&zero, half(), Exponent::Inf, &t, &cfg).unwrap(),
            0.0
        );
        assert!(a_star(&zero, half()).unwrap() < 1e-12);
    }

    #[test]
    fn chain_examples() {
        let c = omega_chain(1.0, Some(1.0), 1.0, 1, half());
        assert!(c.ok);
        assert!((c.lower_factor - 2.0 / 3.0).abs() < 1e-15);
        let z = omega_chain(0.0, None, 0.0, 1, FractionalOrder::classical());
        assert!(z.ok && z.p_independent == Some(true));
        let bad = omega_chain(1.0, None, 0.5, 1, half());
        assert!(!bad.lower_ok);
        let heat = omega_chain(1.0, None, 0.9, 1, FractionalOrder::classical());
        assert!(heat.lower_ok && heat.p_independent == Some(false) && !heat.ok);
    }

    #[test]
    fn certificate_for_constant_potential() {
        let g = grid();
        let v = Field::constant(&g, 1.0);
        let r = 1.0;
        let c = ball_criterion(&v, r).unwrap().inf_value;
        let cfg = EvolutionConfig::with_engine(Engine::DenseOracle);
        let cert = decay_certificate(&v, half(), 0.5, r, c, &cfg).unwrap();
        assert!(cert.ok, "{cert:?}");
        assert!((cert.simulated_value - (-0.5f64).exp()).abs() < 1e-12);
        assert!(cert.bound_value > 0.0 && cert.bound_value < 1.0);
        assert!(decay_certificate(&v, half(), 1.0, r, c, &cfg).is_err());
        assert!(decay_certificate(&Field::zeros(&g), half(), 0.5, r, 0.0, &cfg).is_err());
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        let f = |s: f64| Ok((-s * s).exp());
        let v = simpson(&f, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.882_081_390_762_421_4).abs() < 1e-11);
    }

    #[test]
    fn omega_and_astar_agree() {
        let g = grid();
        let spec = PotentialSpec::Well {
            height: 2.0,
            radius: 3.0,
            center: [0.0, 0.0],
        };
        let v = Potential::from_spec(&g, &spec, 1.0)
            .unwrap()
            .shifted(0.05)
            .unwrap();
        let e = omega_equals_astar(
            v.field(),
            half(),
            OmegaPath::Eigensolve,
            &EvolutionConfig::default(),
        )
        .unwrap();
        assert!(e.rel_gap <= 1e-6, "{e:?}");
        let cfg = EvolutionConfig {
            engine: Engine::Splitting,
            dt: 1e-2,
            ..Default::default()
        };
        let t = omega_equals_astar(v.field(), half(), OmegaPath::TraceFit, &cfg).unwrap();
        assert!(t.rel_gap <= 0.02, "{t:?}");
        let c = Field::constant(&g, 0.3);
        let e = omega_equals_astar(&c, half(), OmegaPath::Eigensolve, &cfg).unwrap();
        assert!((e.omega_2 - 0.3).abs() < 1e-12 && (e.a_star - 0.3).abs() < 1e-10);
    }

    #[test]
    fn report_verdicts_and_schema() {
        let base = Measurements {
            dim: 1,
            mu: 0.5,
            length: 20.0,
            points: 128,
            potential_family: "constant".into(),
            ..Default::default()
        };
        assert!(assemble_report(base.clone()).is_err());
        let decay = assemble_report(Measurements {
            a_star: Some(1.0),
            omega_2: Some(1.0),
            chain: Some(omega_chain(1.0, None, 1.0, 1, half())),
            ..base.clone()
        })
        .unwrap();
        assert_eq!(decay.verdict, Verdict::Decay);
        let json: serde_json::Value = serde_json::from_str(&decay.to_json().unwrap()).unwrap();
        assert_eq!(json["schema"], 1);
        assert_eq!(json["verdict"], "decay");
        let none = assemble_report(Measurements {
            a_star: Some(1e-6),
            ball_criterion_table: vec![BallInfimum {
                radius: 1.0,
                inf_value: 0.0,
                argmin: [0.0, 0.0],
            }],
            ..base.clone()
        })
        .unwrap();
        assert_eq!(none.verdict, Verdict::NoDecay);
        let middle = assemble_report(Measurements {
            a_star: Some(1.0),
            omega_inf: Some(1e-6),
            sup_trace: Some((vec![1.0, 2.0], vec![0.99, 0.98])),
            ..base
        })
        .unwrap();
        assert_eq!(middle.verdict, Verdict::Inconclusive);
        assert!(!middle.hints.is_empty());
    }
}
