//! One-sided stable densities `f_{t,μ}` and the subordination of the heat
//! semigroup.
//!
//! `f_{1,μ}` is the inverse Laplace transform of `exp(-z^μ)` (principal
//! branch). It is evaluated on a fixed Talbot contour, tabulated on a
//! log-spaced grid, and integrated with the trapezoid rule in `log s`. The
//! algebraic right tail `c s^{-1-μ}` beyond the last node is integrated
//! analytically and represented by one extra quadrature node at its median.
//! For other `t` the rescaling `f_{t,μ}(s) = t^{-1/μ} f_{1,μ}(s t^{-1/μ})` is
//! used.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Field;

/// Nodes on the Talbot contour. The density sharpens towards `δ(s - 1)` as
/// `μ → 1`, which needs more nodes around the peak; in the algebraic tail the
/// `e^{2M/5}` roundoff amplification of extra nodes costs more than it buys.
pub fn talbot_terms(mu: f64, s: f64) -> usize {
    if mu > 0.85 && s < 2.0 {
        48
    } else {
        32
    }
}
/// Largest admitted `|1 - ∫ f|`.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Largest admitted quadrature mass removed by clamping negative ripples.
pub const CLAMP_MASS_TOLERANCE: f64 = 1e-8;
/// Values above this floor (in magnitude) are not treated as ripple noise.
const NEGATIVE_FLOOR: f64 = -1e-10;
pub const DEFAULT_NODE_COUNT: usize = 1536;

/// Talbot inversion of `exp(-z^μ)` at `s > 0`.
///
/// The contour `z(θ) = r θ (cot θ + i)` is scaled so that it never passes
/// left of the real saddle `z* = (μ/s)^{1/(1-μ)}` of `zs - z^μ`; with the
/// classical `r = 2M/(5s)` alone the integrand grows along the contour for
/// small `s` and `μ > 1/2`.
pub fn talbot_density(mu: f64, s: f64, terms: usize) -> f64 {
    let m = terms as f64;
    let saddle = (mu / s).powf(1.0 / (1.0 - mu));
    let r = (2.0 * m / (5.0 * s)).max(saddle);
    // k = 0 term: z = r on the real axis
    let mut acc = 0.5 * (r * s - r.powf(mu)).exp();
    for k in 1..terms {
        let theta = k as f64 * PI / m;
        let cot = theta.cos() / theta.sin();
        let z = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let expo = z * s - z.powf(mu);
        let term = expo.exp() * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    acc * r / m
}

/// Tabulated `f_{1,μ}` with its quadrature rule.
#[derive(Debug, Clone)]
pub struct SubordinatorDensity {
    mu: f64,
    s_nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    slopes: Vec<f64>,
    tail_coeff: f64,
    tail_mass: f64,
    mass_defect: f64,
    clamped: usize,
    clamp_mass: f64,
}

/// Left end of the table: the density is below `exp(-60)` there.
fn left_cutoff(mu: f64) -> f64 {
    let a = (1.0 - mu) * mu.powf(mu / (1.0 - mu));
    (a / 60.0).powf((1.0 - mu) / mu)
}

/// Right end: relative error of the pure power tail is `O(s^{-μ})`, so
/// `s^{-2μ} = 1e-12` keeps the fitted tail accurate to well below the mass
/// tolerance.
fn right_cutoff(mu: f64) -> f64 {
    1e12f64.powf(0.5 / mu).clamp(1e3, 1e60)
}

/// Tabulates `f_{1,μ}` on `node_count` log-spaced nodes.
pub fn build_density(mu: f64, node_count: usize) -> Result<SubordinatorDensity> {
    if mu == 1.0 {
        return Err(Error::DegenerateDensity);
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("mu = {mu}: expected μ ∈ (0, 1)")));
    }
    if node_count < 64 {
        return Err(Error::Domain(format!(
            "node_count = {node_count}: expected at least 64"
        )));
    }
    let y0 = left_cutoff(mu).ln();
    let y1 = right_cutoff(mu).ln();
    let dy = (y1 - y0) / (node_count - 1) as f64;
    let s_nodes: Vec<f64> = (0..node_count)
        .map(|j| (y0 + j as f64 * dy).exp())
        .collect();
    let mut weights: Vec<f64> = s_nodes.iter().map(|s| s * dy).collect();
    weights[0] *= 0.5;
    weights[node_count - 1] *= 0.5;

    let mut values = Vec::with_capacity(node_count);
    let mut clamped = 0;
    let mut clamp_mass = 0.0;
    for (s, w) in s_nodes.iter().zip(&weights) {
        let v = talbot_density(mu, *s, talbot_terms(mu, *s));
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "Talbot inversion returned {v} at s = {s:e}"
            )));
        }
        if v < 0.0 {
            if v < NEGATIVE_FLOOR {
                clamped += 1;
            }
            clamp_mass += w * (-v);
            values.push(0.0);
        } else {
            values.push(v);
        }
    }
    if clamp_mass > CLAMP_MASS_TOLERANCE {
        return Err(Error::Accuracy {
            what: "clamped negative mass",
            value: clamp_mass,
            bound: CLAMP_MASS_TOLERANCE,
        });
    }

    let s_max = s_nodes[node_count - 1];
    let tail_coeff = values[node_count - 1] * s_max.powf(1.0 + mu);
    let tail_mass = tail_coeff * s_max.powf(-mu) / mu;
    let body: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let mass_defect = (1.0 - body - tail_mass).abs();
    if mass_defect > MASS_TOLERANCE {
        return Err(Error::Accuracy {
            what: "subordinator mass defect",
            value: mass_defect,
            bound: MASS_TOLERANCE,
        });
    }
    let ys: Vec<f64> = s_nodes.iter().map(|s| s.ln()).collect();
    let slopes = pchip_slopes(&ys, &values);
    Ok(SubordinatorDensity {
        mu,
        s_nodes,
        values,
        weights,
        slopes,
        tail_coeff,
        tail_mass,
        mass_defect,
        clamped,
        clamp_mass,
    })
}

/// Fritsch–Carlson monotone slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d
}

impl SubordinatorDensity {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Number of nodes whose negative ripple was clamped.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn clamp_mass(&self) -> f64 {
        self.clamp_mass
    }

    /// Representative abscissa of the analytic tail (its median).
    fn tail_node(&self) -> f64 {
        self.s_nodes[self.s_nodes.len() - 1] * 2f64.powf(1.0 / self.mu)
    }

    /// Quadrature nodes `(s_j, w_j f_{1,μ}(s_j))`, the last one carrying the tail.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        let mut q: Vec<(f64, f64)> = self
            .s_nodes
            .iter()
            .zip(self.values.iter().zip(&self.weights))
            .map(|(&s, (&v, &w))| (s, v * w))
            .collect();
        q.push((self.tail_node(), self.tail_mass));
        q
    }

    /// Total quadrature mass including the tail.
    pub fn mass(&self) -> f64 {
        self.quadrature().iter().map(|(_, m)| m).sum()
    }

    /// `f_{1,μ}(s)`: monotone cubic interpolation in `log s` inside the table,
    /// fitted power tail to the right and zero to the left.
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s_nodes.len();
        if s <= 0.0 || s < self.s_nodes[0] {
            return 0.0;
        }
        if s >= self.s_nodes[n - 1] {
            return self.tail_coeff * s.powf(-1.0 - self.mu);
        }
        let y = s.ln();
        let y0 = self.s_nodes[0].ln();
        let dy = (self.s_nodes[n - 1].ln() - y0) / (n - 1) as f64;
        let i = (((y - y0) / dy) as usize).min(n - 2);
        let xa = self.s_nodes[i].ln();
        let h = self.s_nodes[i + 1].ln() - xa;
        let u = (y - xa) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        (h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1])
            .max(0.0)
    }

    /// `f_{t,μ}(s) = t^{-1/μ} f_{1,μ}(s t^{-1/μ})`.
    pub fn eval_t(&self, t: f64, s: f64) -> f64 {
        let scale = t.powf(1.0 / self.mu);
        self.eval(s / scale) / scale
    }

    /// Quadrature of `∫ f_{1,μ}(s) e^{-sλ} ds`; equals `e^{-λ^μ}` exactly.
    pub fn laplace(&self, lambda: f64) -> f64 {
        self.quadrature()
            .iter()
            .map(|(s, m)| m * (-s * lambda).exp())
            .sum()
    }

    /// CSV with columns `s,f`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "s,f")?;
        for (s, f) in self.s_nodes.iter().zip(&self.values) {
            writeln!(w, "{s:e},{f:e}")?;
        }
        Ok(())
    }
}

/// Subordinated semigroup via the rescaled form
/// `S_μ(t)φ = ∫ f_{1,μ}(s) S(s t^{1/μ}) φ ds`, where `heat(φ, τ)` is the
/// classical heat semigroup.
pub fn subordinate<H>(f: &Field, density: &SubordinatorDensity, t: f64, heat: H) -> Result<Field>
where
    H: Fn(&Field, f64) -> Result<Field>,
{
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t}: expected t > 0")));
    }
    let scale = t.powf(1.0 / density.mu);
    accumulate(
        f,
        density
            .quadrature()
            .into_iter()
            .map(|(s, m)| (s * scale, m)),
        heat,
    )
}

/// Subordinated semigroup via the direct form `∫ f_{t,μ}(s) S(s) φ ds`, on a
/// log grid staggered by half a node against the table and with `f_{t,μ}`
/// obtained by interpolation and rescaling.
pub fn subordinate_direct<H>(
    f: &Field,
    density: &SubordinatorDensity,
    t: f64,
    heat: H,
) -> Result<Field>
where
    H: Fn(&Field, f64) -> Result<Field>,
{
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t}: expected t > 0")));
    }
    let scale = t.powf(1.0 / density.mu);
    let nodes = density.s_nodes();
    let n = nodes.len();
    let y0 = (nodes[0] * scale).ln();
    let y1 = (nodes[n - 1] * scale).ln();
    let dy = (y1 - y0) / (n - 1) as f64;
    let mut quad: Vec<(f64, f64)> = (0..n - 1)
        .map(|j| {
            let s = (y0 + (j as f64 + 0.5) * dy).exp();
            (s, density.eval_t(t, s) * s * dy)
        })
        .collect();
    quad.push((density.tail_node() * scale, density.tail_mass));
    accumulate(f, quad.into_iter(), heat)
}

fn accumulate<H>(f: &Field, quad: impl Iterator<Item = (f64, f64)>, heat: H) -> Result<Field>
where
    H: Fn(&Field, f64) -> Result<Field>,
{
    let mut acc = vec![0.0; f.values().len()];
    for (s, m) in quad {
        if m == 0.0 {
            continue;
        }
        let h = heat(f, s)?;
        for (a, v) in acc.iter_mut().zip(h.values()) {
            *a += m * v;
        }
    }
    Field::new(f.grid(), acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{free_semigroup_apply, FractionalOrder, TorusGrid};

    /// Closed-form Lévy density for μ = 1/2.
    fn levy(s: f64) -> f64 {
        0.5 / PI.sqrt() * s.powf(-1.5) * (-0.25 / s).exp()
    }

    /// Kanter's non-oscillatory integral representation of the one-sided
    /// stable density with Laplace transform `exp(-z^μ)`; an oracle that
    /// shares nothing with the contour inversion.
    fn kanter(mu: f64, s: f64) -> f64 {
        let a = |phi: f64| -> f64 {
            (mu * phi).sin().powf(mu / (1.0 - mu)) * ((1.0 - mu) * phi).sin()
                / phi.sin().powf(1.0 / (1.0 - mu))
        };
        let z = s.powf(-mu / (1.0 - mu));
        let m = 20000;
        let h = PI / m as f64;
        // midpoint rule; the integrand is smooth and bounded on (0, π)
        let sum: f64 = (0..m)
            .map(|k| {
                let phi = (k as f64 + 0.5) * h;
                let av = a(phi);
                av * (-z * av).exp()
            })
            .sum();
        mu / (1.0 - mu) * s.powf(-1.0 / (1.0 - mu)) / PI * sum * h
    }

    #[test]
    fn talbot_matches_levy_closed_form() {
        for &s in &[0.02, 0.1, 0.5, 1.0, 3.0, 30.0, 1e3, 1e6] {
            let got = talbot_density(0.5, s, talbot_terms(0.5, s));
            let want = levy(s);
            assert!(
                (got - want).abs() <= 1e-7 * want,
                "s = {s}: {got} vs {want}"
            );
        }
        assert!((levy(1.0) - 0.219695).abs() < 1e-6);
    }

    #[test]
    fn kanter_oracle_agrees_with_levy() {
        for &s in &[0.1, 1.0, 10.0] {
            assert!((kanter(0.5, s) - levy(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn talbot_matches_kanter_for_other_orders() {
        for &(mu, s_max) in &[(0.25, 100.0), (0.75, 100.0), (0.9, 3.0)] {
            for &s in [0.3, 0.6, 1.0, 2.5, 10.0, 100.0]
                .iter()
                .filter(|&&s| s <= s_max)
            {
                let got = talbot_density(mu, s, talbot_terms(mu, s));
                let want = kanter(mu, s);
                assert!(
                    (got - want).abs() < 1e-8 * want.max(1e-3),
                    "mu {mu} s {s}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn density_mass_and_sign() {
        for &mu in &[0.1, 0.25, 0.5, 0.75, 0.95] {
            let d = build_density(mu, DEFAULT_NODE_COUNT).unwrap();
            assert!((d.mass() - 1.0).abs() <= 1e-6, "mu {mu}: {}", d.mass());
            assert!(d.mass_defect() <= 1e-6);
            assert!(d.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn density_rejections() {
        assert!(matches!(
            build_density(1.0, 128),
            Err(Error::DegenerateDensity)
        ));
        assert!(build_density(0.5, 32).is_err());
        assert!(build_density(1.2, 128).is_err());
    }

    #[test]
    fn laplace_identity() {
        for &mu in &[0.25, 0.5, 0.75] {
            let d = build_density(mu, DEFAULT_NODE_COUNT).unwrap();
            for &lambda in &[0.1, 1.0, 10.0] {
                let got = d.laplace(lambda);
                let want = (-lambda.powf(mu)).exp();
                assert!(
                    (got - want).abs() < 1e-5,
                    "mu {mu} λ {lambda}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn interpolation_tracks_closed_form() {
        let d = build_density(0.5, DEFAULT_NODE_COUNT).unwrap();
        for &s in &[0.05, 0.37, 1.0, 4.2, 77.0] {
            assert!((d.eval(s) - levy(s)).abs() < 1e-4 * levy(s));
        }
        assert!((d.eval(1.0) - 0.219695).abs() < 1e-6);
    }

    #[test]
    fn rescaled_density_has_unit_mass() {
        let d = build_density(0.5, DEFAULT_NODE_COUNT).unwrap();
        for &t in &[0.1, 1.0, 10.0] {
            // trapezoid in log s on an independent grid
            let (y0, y1, m) = (-25.0f64, 60.0f64, 40000);
            let dy = (y1 - y0) / m as f64;
            let mut acc = 0.0;
            for k in 0..=m {
                let s = (y0 + k as f64 * dy).exp();
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                acc += w * d.eval_t(t, s) * s * dy;
            }
            // analytic tail of f_{t,1/2} beyond e^{60}
            let tail = t / PI.sqrt() * (-30.0f64).exp();
            assert!((acc + tail - 1.0).abs() < 1e-6, "t {t}: {}", acc + tail);
        }
    }

    #[test]
    fn subordinate_matches_multiplier() {
        let g = TorusGrid::new(1, 40.0, 512).unwrap();
        let heat = |f: &Field, s: f64| free_semigroup_apply(f, FractionalOrder::classical(), s);
        let bump = Field::from_fn(&g, |p| (-p[0] * p[0] / 0.5).exp()).unwrap();
        for &mu in &[0.25, 0.5, 0.75] {
            let d = build_density(mu, DEFAULT_NODE_COUNT).unwrap();
            let order = FractionalOrder::new(mu).unwrap();
            let t = 1.0;
            let sub = subordinate(&bump, &d, t, heat).unwrap();
            let spec = free_semigroup_apply(&bump, order, t).unwrap();
            assert!(sub.sup_distance(&spec) < 1e-4 * bump.sup_norm());
            let direct = subordinate_direct(&bump, &d, t, heat).unwrap();
            assert!(direct.sup_distance(&spec) < 1e-4 * bump.sup_norm());
        }
    }

    #[test]
    fn subordinate_preserves_constants() {
        let g = TorusGrid::new(1, 10.0, 64).unwrap();
        let heat = |f: &Field, s: f64| free_semigroup_apply(f, FractionalOrder::classical(), s);
        let d = build_density(0.3, 256).unwrap();
        let one = Field::constant(&g, 1.0);
        for &t in &[0.2, 1.0, 5.0] {
            let out = subordinate(&one, &d, t, heat).unwrap();
            assert!(out.sup_distance(&one) < 1e-6);
        }
        assert!(subordinate(&one, &d, 0.0, heat).is_err());
    }

    #[test]
    fn single_mode_amplitude() {
        let l = 2.0 * PI;
        let g = TorusGrid::new(1, l, 32).unwrap();
        let heat = |f: &Field, s: f64| free_semigroup_apply(f, FractionalOrder::classical(), s);
        let mode = Field::from_fn(&g, |p| (2.0 * p[0]).cos()).unwrap();
        let mu = 0.75;
        let d = build_density(mu, DEFAULT_NODE_COUNT).unwrap();
        for &t in &[0.5, 2.0] {
            let out = subordinate(&mode, &d, t, heat).unwrap();
            let amp = (-t * 2f64.powf(2.0 * mu)).exp();
            assert!(out.sup_distance(&mode.scale(amp)) < 1e-5);
        }
    }

    #[test]
    fn csv_export() {
        let d = build_density(0.5, 64).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("density.csv");
        d.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("s,f\n"));
        assert_eq!(text.lines().count(), 65);
    }
}
