//! Periodic spectral discretization of ℝ^N for N ∈ {1, 2}.
//!
//! The box is `[-L/2, L/2)^N` sampled at `n` points per axis. Fields are stored
//! row-major (the last axis is contiguous). The discrete transform is unscaled
//! in the forward direction and scaled by `1/n^N` on the way back, so a
//! Fourier multiplier `m(ξ)` acts as `ifft(m · fft(f))` with no extra factors.
//!
//! The unpaired Nyquist mode `k = -n/2` uses `|ξ| = π n / L`; any imaginary
//! residue after the inverse transform is dropped.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the half-box treated as the outer shell for boundary-mass checks.
const SHELL_FRACTION: f64 = 0.1;

struct GridInner {
    dim: usize,
    length: f64,
    points: usize,
    spacing: f64,
    /// Per-axis wavenumbers in transform order (0, 1, …, n/2-1, -n/2, …, -1).
    freqs: Vec<f64>,
    /// `|ξ|²` per flattened spectral index.
    xi_sq: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid. Cheap to clone; clones share transform plans.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

/// Serializable grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub length: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dim, self.length, self.points)
    }
}

impl TorusGrid {
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Configuration(format!(
                "grid.dim = {dim}: expected 1 or 2"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Configuration(format!(
                "grid.length = {length}: expected a finite L > 0"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::Configuration(format!(
                "grid.points = {points}: expected a power of two >= 4"
            )));
        }
        let spacing = length / points as f64;
        let freqs: Vec<f64> = (0..points)
            .map(|j| {
                let k = if j < points / 2 {
                    j as i64
                } else {
                    j as i64 - points as i64
                };
                2.0 * std::f64::consts::PI * k as f64 / length
            })
            .collect();
        let xi_sq = match dim {
            1 => freqs.iter().map(|x| x * x).collect(),
            _ => {
                let mut v = Vec::with_capacity(points * points);
                for fy in &freqs {
                    for fx in &freqs {
                        v.push(fy * fy + fx * fx);
                    }
                }
                v
            }
        };
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(points);
        let ifft = planner.plan_fft_inverse(points);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                length,
                points,
                spacing,
                freqs,
                xi_sq,
                fft,
                ifft,
            }),
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim(),
            length: self.length(),
            points: self.points_per_axis(),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.points
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of grid points, `n^N`.
    pub fn len(&self) -> usize {
        self.inner.points.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Wavenumbers per axis in transform order.
    pub fn freqs(&self) -> &[f64] {
        &self.inner.freqs
    }

    /// `|ξ|²` for every flattened spectral index.
    pub fn xi_sq(&self) -> &[f64] {
        &self.inner.xi_sq
    }

    /// Largest `|ξ|` represented on the grid (the corner mode in 2D).
    pub fn max_wavenumber(&self) -> f64 {
        let nyq = std::f64::consts::PI * self.inner.points as f64 / self.inner.length;
        nyq * (self.inner.dim as f64).sqrt()
    }

    /// Coordinate of index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 * self.inner.length + j as f64 * self.inner.spacing
    }

    /// Index of the origin along each axis.
    pub fn origin_index(&self) -> usize {
        self.inner.points / 2
    }

    /// Flattened index of the origin.
    pub fn origin_flat(&self) -> usize {
        let o = self.origin_index();
        match self.dim() {
            1 => o,
            _ => o * self.inner.points + o,
        }
    }

    /// Per-axis indices of a flattened index (unused axes are zero).
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        match self.dim() {
            1 => [idx, 0],
            _ => [idx / self.inner.points, idx % self.inner.points],
        }
    }

    /// Coordinates of a flattened index.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(idx);
        match self.dim() {
            1 => [self.coord(a), 0.0],
            _ => [self.coord(a), self.coord(b)],
        }
    }

    /// Minimal image of a coordinate difference.
    pub fn wrap(&self, d: f64) -> f64 {
        let l = self.inner.length;
        d - l * (d / l).round()
    }

    pub fn periodic_distance(&self, a: &[f64; 2], b: &[f64; 2]) -> f64 {
        let dx = self.wrap(a[0] - b[0]);
        let dy = if self.dim() == 2 {
            self.wrap(a[1] - b[1])
        } else {
            0.0
        };
        dx.hypot(dy)
    }

    /// Periodic distance of every grid point to the origin.
    pub fn radii(&self) -> Vec<f64> {
        let zero = [0.0, 0.0];
        (0..self.len())
            .map(|i| self.periodic_distance(&self.point(i), &zero))
            .collect()
    }

    /// Whether a flattened index lies in the outer shell of the box.
    pub fn in_outer_shell(&self, idx: usize) -> bool {
        let cut = (0.5 - SHELL_FRACTION) * self.inner.length;
        let p = self.point(idx);
        p[..self.dim()].iter().any(|x| x.abs() >= cut)
    }

    /// Unscaled forward transform.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.inner.fft);
        buf
    }

    /// Inverse transform scaled by `1/n^N`, keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.inner.ifft);
        let scale = 1.0 / self.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a radial Fourier multiplier given as a function of `|ξ|²`.
    pub fn apply_symbol(&self, values: &[f64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &k2) in spec.iter_mut().zip(self.xi_sq()) {
            *c *= symbol(k2);
        }
        self.inverse(spec)
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.inner.points;
        match self.inner.dim {
            1 => plan.process(buf),
            _ => {
                for row in buf.chunks_exact_mut(n) {
                    plan.process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for c in 0..n {
                    for r in 0..n {
                        col[r] = buf[r * n + c];
                    }
                    plan.process(&mut col);
                    for r in 0..n {
                        buf[r * n + c] = col[r];
                    }
                }
            }
        }
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.spec() == other.spec()
    }
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim())
            .field("length", &self.length())
            .field("points", &self.points_per_axis())
            .finish()
    }
}

/// Fractional order μ ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu > 0.0 && mu <= 1.0 {
            Ok(Self(mu))
        } else {
            Err(Error::Domain(format!("mu = {mu}: expected μ ∈ (0, 1]")))
        }
    }

    pub fn classical() -> Self {
        Self(1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }

    /// `|ξ|^{2μ}` from `|ξ|²`.
    pub fn symbol(self, xi_sq: f64) -> f64 {
        if self.0 == 1.0 {
            xi_sq
        } else if xi_sq == 0.0 {
            0.0
        } else {
            xi_sq.powf(self.0)
        }
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(o: FractionalOrder) -> f64 {
        o.0
    }
}

/// Real grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Wraps values known to be finite (results of finite arithmetic on fields).
    pub(crate) fn from_raw(grid: &TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every grid point; `f` receives `[x, y]` (y = 0 in 1D).
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert!(self.grid == other.grid);
        Field::from_raw(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn abs(&self) -> Field {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^N Σ f`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// `h^N`-weighted inner product.
    pub fn inner(&self, other: &Field) -> f64 {
        self.grid.cell_volume()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// Largest `|u|` over the outer 10% shell of the box.
    pub fn boundary_mass(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.in_outer_shell(*i))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Discrete `L^p` norm `(h^N Σ |f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p}: expected p ∈ [1, ∞]")));
    }
    if let Some(v) = f.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!("non-finite value {v}")));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let w = f.grid.cell_volume();
    if p == 1.0 {
        return Ok(w * f.values.iter().map(|v| v.abs()).sum::<f64>());
    }
    if p == 2.0 {
        return Ok((w * f.values.iter().map(|v| v * v).sum::<f64>()).sqrt());
    }
    // scale by the max to avoid overflow in |f|^p
    let m = f.sup_norm();
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    Ok(m * (w * s).powf(1.0 / p))
}

/// `(-Δ)^μ f` as the multiplier `|ξ|^{2μ}`.
pub fn fractional_laplacian_apply(f: &Field, order: FractionalOrder) -> Field {
    let grid = f.grid();
    Field::from_raw(grid, grid.apply_symbol(f.values(), |k2| order.symbol(k2)))
}

/// Free semigroup `S_μ(t) f` as the multiplier `exp(-t |ξ|^{2μ})`.
pub fn free_semigroup_apply(f: &Field, order: FractionalOrder, t: f64) -> Result<Field> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t}: expected t >= 0")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let grid = f.grid();
    Ok(Field::from_raw(
        grid,
        grid.apply_symbol(f.values(), |k2| (-t * order.symbol(k2)).exp()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1(l: f64, n: usize) -> TorusGrid {
        TorusGrid::new(1, l, n).unwrap()
    }

    fn cos_mode(g: &TorusGrid) -> Field {
        let l = g.length();
        Field::from_fn(g, |p| (2.0 * PI * p[0] / l).cos()).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = grid1(10.0, 64);
        assert_eq!(g.spacing() * 64.0, 10.0);
        assert_eq!(g.len(), 64);
        let f = g.freqs();
        // symmetric apart from the unpaired -n/2 mode
        for k in 1..32 {
            assert_eq!(f[k], -f[64 - k]);
        }
        assert!((f[32] + PI * 64.0 / 10.0).abs() < 1e-12);
        let g2 = TorusGrid::new(2, 5.0, 16).unwrap();
        assert_eq!(g2.len(), 256);
        assert_eq!(g2.point(g2.origin_flat()), [0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(3, 1.0, 16).is_err());
        assert!(TorusGrid::new(1, 0.0, 16).is_err());
        assert!(TorusGrid::new(1, 1.0, 24).is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let g = grid1(10.0, 128);
        let one = Field::constant(&g, 1.0);
        assert!((lp_norm(&one, 2.0).unwrap() - 10f64.sqrt()).abs() < 1e-12);
        let zero = Field::zeros(&g);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lp_norm(&zero, p).unwrap(), 0.0);
        }
        let g = grid1(2.0, 64);
        let half = Field::from_fn(&g, |p| if p[0] < 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((lp_norm(&half, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(lp_norm(&half, 0.5).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = grid1(1.0, 8);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(&g, v), Err(Error::InvalidField(_))));
        assert!(Field::new(&g, vec![0.0; 7]).is_err());
    }

    #[test]
    fn order_validation() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.5).is_err());
        assert!(FractionalOrder::new(1.0).unwrap().is_classical());
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = grid1(7.0, 32);
        let c = Field::constant(&g, 3.0);
        let out = fractional_laplacian_apply(&c, FractionalOrder::new(0.3).unwrap());
        assert!(out.sup_norm() < 1e-13);
    }

    #[test]
    fn laplacian_single_mode() {
        let l = 6.0;
        let g = grid1(l, 64);
        let f = cos_mode(&g);
        let k = 2.0 * PI / l;
        let out = fractional_laplacian_apply(&f, FractionalOrder::classical());
        assert!(out.sup_distance(&f.scale(k * k)) < 1e-12);
        let out = fractional_laplacian_apply(&f, FractionalOrder::new(0.5).unwrap());
        assert!(out.sup_distance(&f.scale(k)) < 1e-12);
    }

    /// Direct O(n²) DFT of the multiplier, independent of the FFT path.
    fn direct_dft_apply(values: &[f64], l: f64, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = values.len();
        let mut out = vec![0.0; n];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..n {
                let kk = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                let xi = 2.0 * PI * kk / l;
                let mut c = (0.0, 0.0);
                for (m, v) in values.iter().enumerate() {
                    let ph = -2.0 * PI * (k * m) as f64 / n as f64;
                    c.0 += v * ph.cos();
                    c.1 += v * ph.sin();
                }
                let s = symbol(xi * xi);
                let ph = 2.0 * PI * (k * j) as f64 / n as f64;
                acc += s * (c.0 * ph.cos() - c.1 * ph.sin());
            }
            *o = acc / n as f64;
        }
        out
    }

    #[test]
    fn laplacian_matches_direct_dft() {
        let l = 5.0;
        let g = grid1(l, 32);
        let f = Field::from_fn(&g, |p| (p[0] * 1.3).sin().exp() + 0.2 * p[0]).unwrap();
        let mu = FractionalOrder::new(0.5).unwrap();
        let fast = fractional_laplacian_apply(&f, mu);
        let slow = direct_dft_apply(f.values(), l, |k2| k2.sqrt());
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
        // the single cosine mode against the oracle
        let c = cos_mode(&g);
        let slow = direct_dft_apply(c.values(), l, |k2| k2.sqrt());
        let expected = c.scale(2.0 * PI / l);
        for (a, b) in expected.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_examples() {
        let g = grid1(8.0, 64);
        let mu = FractionalOrder::new(0.4).unwrap();
        let f = Field::from_fn(&g, |p| (-p[0] * p[0]).exp()).unwrap();
        assert_eq!(free_semigroup_apply(&f, mu, 0.0).unwrap(), f);
        let one = Field::constant(&g, 1.0);
        let out = free_semigroup_apply(&one, mu, 3.0).unwrap();
        assert!(out.sup_distance(&one) < 1e-14);
        assert!(free_semigroup_apply(&f, mu, -1.0).is_err());

        let l = 2.0 * PI;
        let g = grid1(l, 32);
        let c = cos_mode(&g);
        let out = free_semigroup_apply(&c, FractionalOrder::classical(), 1.0).unwrap();
        assert!(out.sup_distance(&c.scale((-1.0f64).exp())) < 1e-14);
    }

    #[test]
    fn two_dimensional_mode() {
        let l = 4.0;
        let g = TorusGrid::new(2, l, 16).unwrap();
        let k = 2.0 * PI / l;
        let f = Field::from_fn(&g, |p| (k * p[0]).cos() * (2.0 * k * p[1]).sin()).unwrap();
        let out = fractional_laplacian_apply(&f, FractionalOrder::classical());
        assert!(out.sup_distance(&f.scale(5.0 * k * k)) < 1e-11);
    }

    #[test]
    fn boundary_mass_sees_outer_shell() {
        let g = grid1(10.0, 100usize.next_power_of_two());
        let f = Field::from_fn(&g, |p| if p[0].abs() > 4.6 { 2.0 } else { 1.0 }).unwrap();
        assert_eq!(f.boundary_mass(), 2.0);
        let f = Field::from_fn(&g, |p| if p[0].abs() < 1.0 { 5.0 } else { 0.5 }).unwrap();
        assert_eq!(f.boundary_mass(), 0.5);
    }
}
