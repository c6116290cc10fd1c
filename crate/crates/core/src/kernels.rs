//! Fractional heat kernel `k_μ(t, x, y) = t^{-N/2μ} k_{0,μ}((x-y)/t^{1/2μ})`
//! on the torus and its two-sided comparison with
//! `H_μ(z) = min{1, |z|^{-N-2μ}}` and `I_μ(z) = (1+|z|²)^{-(N+2μ)/2}`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{free_semigroup_apply, Field, FractionalOrder, TorusGrid};

/// Admission thresholds for [`build_profile_with`].
#[derive(Debug, Clone, Copy)]
pub struct ProfileChecks {
    /// Bound on `exp(-|ξ_nyq|^{2μ})`.
    pub max_spectral_residual: f64,
    /// Bound on the kernel mass outside the box.
    pub max_tail_mass: f64,
}

impl Default for ProfileChecks {
    fn default() -> Self {
        Self {
            max_spectral_residual: 1e-14,
            max_tail_mass: 1e-8,
        }
    }
}

impl ProfileChecks {
    /// Record the residuals without rejecting the grid.
    pub fn diagnostic() -> Self {
        Self {
            max_spectral_residual: f64::INFINITY,
            max_tail_mass: f64::INFINITY,
        }
    }
}

/// Comparison profiles for the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    H,
    I,
}

impl Envelope {
    pub fn eval(self, dim: usize, mu: f64, r: f64) -> f64 {
        let a = dim as f64 + 2.0 * mu;
        match self {
            Envelope::H => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(-a)
                }
            }
            Envelope::I => (1.0 + r * r).powf(-0.5 * a),
        }
    }
}

/// Sampled `t = 1` kernel slice `k_{0,μ}` centred at the origin.
#[derive(Debug, Clone)]
pub struct KernelProfile {
    order: FractionalOrder,
    values: Field,
    spectral_residual: f64,
    tail_mass_estimate: f64,
    /// `min k/H_μ` on `|z| ≤ L/4`, when certified.
    pub lower_c: Option<f64>,
    /// `max k/H_μ` on `|z| ≤ L/4`, when certified.
    pub upper_c: Option<f64>,
}

/// `C_{N,μ} = 2^{2μ} μ Γ(N/2+μ) / (π^{N/2} Γ(1-μ))`.
pub fn fractional_constant(dim: usize, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!(
            "mu = {mu}: C_(N,μ) needs μ ∈ (0, 1) (Γ(1-μ) has a pole at μ = 1)"
        )));
    }
    let n = dim as f64;
    Ok(4f64.powf(mu) * mu * gamma(0.5 * n + mu) / (PI.powf(0.5 * n) * gamma(1.0 - mu)))
}

/// Kernel of `S_μ(t)` on the grid: the multiplier applied to a unit mass at
/// the origin.
pub fn kernel_at(grid: &TorusGrid, order: FractionalOrder, t: f64) -> Result<Field> {
    let mut delta = vec![0.0; grid.len()];
    delta[grid.origin_flat()] = 1.0 / grid.cell_volume();
    let delta = Field::new(grid, delta)?;
    free_semigroup_apply(&delta, order, t)
}

/// `‖S_μ(t)‖_{1→∞}` on the grid, i.e. the kernel maximum.
pub fn norm_one_to_inf(grid: &TorusGrid, order: FractionalOrder, t: f64) -> Result<f64> {
    Ok(kernel_at(grid, order, t)?.max_value())
}

/// `exp(-|ξ_nyq|^{2μ})`: size of the multiplier at the resolution limit.
pub fn spectral_residual(grid: &TorusGrid, order: FractionalOrder) -> f64 {
    let nyq = PI * grid.points_per_axis() as f64 / grid.length();
    (-order.symbol(nyq * nyq)).exp()
}

/// Estimated mass of the `t = 1` kernel of ℝ^N outside the box.
pub fn tail_mass_estimate(grid: &TorusGrid, order: FractionalOrder) -> f64 {
    let half = 0.5 * grid.length();
    let n = grid.dim() as f64;
    if order.is_classical() {
        // each coordinate is N(0, 2)
        (n * erfc(half / 2.0)).min(1.0)
    } else {
        let mu = order.value();
        let sphere = if grid.dim() == 1 { 2.0 } else { 2.0 * PI };
        let c = fractional_constant(grid.dim(), mu).unwrap_or(0.0);
        (c * sphere * half.powf(-2.0 * mu) / (2.0 * mu)).min(1.0)
    }
}

/// [`build_profile_with`] using the default thresholds.
pub fn build_profile(order: FractionalOrder, grid: &TorusGrid) -> Result<KernelProfile> {
    build_profile_with(order, grid, ProfileChecks::default())
}

pub fn build_profile_with(
    order: FractionalOrder,
    grid: &TorusGrid,
    checks: ProfileChecks,
) -> Result<KernelProfile> {
    let spectral_residual = spectral_residual(grid, order);
    if spectral_residual >= checks.max_spectral_residual {
        return Err(Error::Configuration(format!(
            "resolution: exp(-|ξ_max|^(2μ)) = {spectral_residual:e} is not below {:e}; increase grid.points",
            checks.max_spectral_residual
        )));
    }
    let tail = tail_mass_estimate(grid, order);
    if tail >= checks.max_tail_mass {
        return Err(Error::Configuration(format!(
            "domain size: kernel mass outside the box ≈ {tail:e} is not below {:e}; increase grid.length",
            checks.max_tail_mass
        )));
    }
    let values = kernel_at(grid, order, 1.0)?;
    let mut profile = KernelProfile {
        order,
        values,
        spectral_residual,
        tail_mass_estimate: tail,
        lower_c: None,
        upper_c: None,
    };
    if !order.is_classical() {
        if let Ok((lo, hi)) = certify_bounds(&profile) {
            profile.lower_c = Some(lo);
            profile.upper_c = Some(hi);
        }
    }
    Ok(profile)
}

impl KernelProfile {
    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn grid(&self) -> &TorusGrid {
        self.values.grid()
    }

    pub fn values(&self) -> &Field {
        &self.values
    }

    pub fn spectral_residual(&self) -> f64 {
        self.spectral_residual
    }

    pub fn tail_mass_estimate(&self) -> f64 {
        self.tail_mass_estimate
    }

    /// `h^N Σ k`.
    pub fn mass(&self) -> f64 {
        self.values.integral()
    }

    pub fn at_origin(&self) -> f64 {
        self.values.values()[self.grid().origin_flat()]
    }

    /// Largest `|k(x) - k(-x)|`.
    pub fn evenness_defect(&self) -> f64 {
        let g = self.grid();
        let n = g.points_per_axis();
        let mirror = |j: usize| (n - j) % n;
        let v = self.values.values();
        (0..g.len())
            .map(|i| {
                let [a, b] = g.unflatten(i);
                let j = match g.dim() {
                    1 => mirror(a),
                    _ => mirror(a) * n + mirror(b),
                };
                (v[i] - v[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Self-similar rescaling: the kernel of `S_μ(t)` sampled on the grid of
    /// length `L t^{1/2μ}` with the same number of points.
    pub fn rescaled(&self, t: f64) -> Result<(TorusGrid, Field)> {
        let g = self.grid();
        let mu = self.order.value();
        let stretch = t.powf(0.5 / mu);
        let grid_t = TorusGrid::new(g.dim(), g.length() * stretch, g.points_per_axis())?;
        let amp = t.powf(-(g.dim() as f64) / (2.0 * mu));
        let values = self.values.values().iter().map(|v| amp * v).collect();
        Ok((grid_t.clone(), Field::new(&grid_t, values)?))
    }

    /// CSV with columns `z,k,H,I,k_over_H` over the half line `z ≥ 0` (the
    /// first axis through the origin).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let g = self.grid();
        let mu = self.order.value();
        let n = g.points_per_axis();
        let o = g.origin_index();
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "z,k,H,I,k_over_H")?;
        for j in o..n {
            let idx = match g.dim() {
                1 => j,
                _ => o * n + j,
            };
            let z = g.coord(j);
            let k = self.values.values()[idx];
            let h = Envelope::H.eval(g.dim(), mu, z);
            let i = Envelope::I.eval(g.dim(), mu, z);
            writeln!(w, "{z:e},{k:e},{h:e},{i:e},{:e}", k / h)?;
        }
        Ok(())
    }
}

/// `(min, max)` of `k/H_μ` over `|z| ≤ L/4`.
pub fn certify_bounds(profile: &KernelProfile) -> Result<(f64, f64)> {
    certify_against(profile, Envelope::H)
}

/// `(min, max)` of `k/envelope` over `|z| ≤ L/4`.
pub fn certify_against(profile: &KernelProfile, envelope: Envelope) -> Result<(f64, f64)> {
    if profile.order.is_classical() {
        return Err(Error::Precondition(
            "kernel bounds by H_μ/I_μ need μ < 1; the Gaussian case is separate".into(),
        ));
    }
    let g = profile.grid();
    let mu = profile.order.value();
    let reach = 0.25 * g.length();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (r, k) in g.radii().iter().zip(profile.values.values()) {
        if *r <= reach {
            let q = k / envelope.eval(g.dim(), mu, *r);
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Positivity(format!(
            "kernel/envelope minimum {lo:e} is not positive; the grid under-resolves the kernel"
        )));
    }
    if !hi.is_finite() {
        return Err(Error::Numerical(
            "kernel/envelope maximum is not finite".into(),
        ));
    }
    Ok((lo, hi))
}
