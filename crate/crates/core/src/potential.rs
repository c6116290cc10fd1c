//! Nonnegative potentials on the torus: families, locally uniform norms,
//! truncations `V_M = min(V, M)` and the ball criterion
//! `inf_x ∫_{B(x,r)} V`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, TorusGrid};

/// Family tag plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    /// Smooth compactly supported bump of the given height.
    Well {
        height: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Periodic lattice of smooth bumps.
    BumpArray {
        height: f64,
        spacing: f64,
        radius: f64,
    },
    /// Unit-mass disks of radius `1/n` on a `(2 n_max - 1)^N` lattice, `n`
    /// growing with the distance from the origin.
    Counterexample {
        n_max: usize,
    },
    Custom {
        values: Vec<f64>,
    },
}

impl PotentialSpec {
    pub fn family(&self) -> &'static str {
        match self {
            PotentialSpec::Constant { .. } => "constant",
            PotentialSpec::Well { .. } => "well",
            PotentialSpec::BumpArray { .. } => "bump_array",
            PotentialSpec::Counterexample { .. } => "counterexample",
            PotentialSpec::Custom { .. } => "custom",
        }
    }
}

/// One lattice cell of the counterexample potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cube {
    /// Bump index `n = 1 + max_k |a_k|`.
    pub ring: usize,
    pub center: [f64; 2],
    /// Lattice coordinates `a`.
    pub site: [i64; 2],
}

#[derive(Debug, Clone)]
pub struct Potential {
    values: Field,
    p0: f64,
    spec: PotentialSpec,
    cubes: Vec<Cube>,
    cube_side: f64,
}

#[derive(Debug, Clone)]
pub struct TruncatedPotential {
    base: Potential,
    level: f64,
    values: Field,
}

/// `exp(1 - 1/(1 - ρ²))` on `ρ < 1`, zero outside; peak value 1.
pub fn smooth_bump(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - rho * rho)).exp()
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if !(p0 >= 1.0 && p0.is_finite()) {
        return Err(Error::Configuration(format!(
            "p0 = {p0}: expected p0 ∈ [1, ∞)"
        )));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Configuration(format!(
            "{name} = {x}: expected a positive finite value"
        )));
    }
    Ok(())
}

impl Potential {
    pub fn from_spec(grid: &TorusGrid, spec: &PotentialSpec, p0: f64) -> Result<Self> {
        check_p0(p0)?;
        let plain = |values: Field| Potential {
            values,
            p0,
            spec: spec.clone(),
            cubes: Vec::new(),
            cube_side: 0.0,
        };
        match *spec {
            PotentialSpec::Constant { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Configuration(format!(
                        "potential.value = {value}: expected a finite value ≥ 0"
                    )));
                }
                Ok(plain(Field::constant(grid, value)))
            }
            PotentialSpec::Well {
                height,
                radius,
                center,
            } => {
                if !(height >= 0.0 && height.is_finite()) {
                    return Err(Error::Configuration(format!(
                        "potential.height = {height}: expected a finite value ≥ 0"
                    )));
                }
                positive("potential.radius", radius)?;
                if radius >= 0.5 * grid.length() {
                    return Err(Error::Configuration(format!(
                        "potential.radius = {radius}: must be below L/2 = {}",
                        0.5 * grid.length()
                    )));
                }
                let c = center;
                let f = Field::from_fn(grid, |x| {
                    height * smooth_bump(grid.periodic_distance(&x, &c) / radius)
                })?;
                Ok(plain(f))
            }
            PotentialSpec::BumpArray {
                height,
                spacing,
                radius,
            } => {
                if !(height >= 0.0 && height.is_finite()) {
                    return Err(Error::Configuration(format!(
                        "potential.height = {height}: expected a finite value ≥ 0"
                    )));
                }
                positive("potential.spacing", spacing)?;
                positive("potential.radius", radius)?;
                let count = (grid.length() / spacing).round().max(1.0);
                let s = grid.length() / count;
                if radius > 0.5 * s {
                    return Err(Error::Configuration(format!(
                        "potential.radius = {radius}: bumps overlap; need radius ≤ spacing/2 = {}",
                        0.5 * s
                    )));
                }
                let dim = grid.dim();
                let f = Field::from_fn(grid, |x| {
                    let mut d2 = 0.0;
                    for &xk in x.iter().take(dim) {
                        let d = xk - s * (xk / s).round();
                        d2 += d * d;
                    }
                    height * smooth_bump(d2.sqrt() / radius)
                })?;
                Ok(plain(f))
            }
            PotentialSpec::Counterexample { n_max } => make_counterexample(grid, p0, n_max),
            PotentialSpec::Custom { ref values } => {
                let f = Field::new(grid, values.clone())?;
                let mut p = Potential::custom(f, p0)?;
                p.spec = spec.clone();
                Ok(p)
            }
        }
    }

    /// Wrap an arbitrary nonnegative field.
    pub fn custom(values: Field, p0: f64) -> Result<Self> {
        check_p0(p0)?;
        if let Some(v) = values.values().iter().find(|v| **v < 0.0) {
            return Err(Error::Configuration(format!(
                "potential values must be ≥ 0; found {v}"
            )));
        }
        Ok(Potential {
            spec: PotentialSpec::Custom { values: Vec::new() },
            values,
            p0,
            cubes: Vec::new(),
            cube_side: 0.0,
        })
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Result<Self> {
        Potential::from_spec(grid, &PotentialSpec::Constant { value }, 1.0)
    }

    pub fn zero(grid: &TorusGrid) -> Self {
        Potential::constant(grid, 0.0).expect("zero is admissible")
    }

    pub fn field(&self) -> &Field {
        &self.values
    }

    pub fn grid(&self) -> &TorusGrid {
        self.values.grid()
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn family(&self) -> &'static str {
        self.spec.family()
    }

    pub fn sup(&self) -> f64 {
        self.values.max_value()
    }

    /// Lattice cells of the counterexample family; empty otherwise.
    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn cube_side(&self) -> f64 {
        self.cube_side
    }

    /// `V + c` for `c ≥ 0`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Potential::custom(self.values.map(|v| v + c), self.p0)
    }

    /// Index into [`cubes`](Self::cubes) of the cell holding grid point `idx`.
    pub fn cube_of(&self, idx: usize) -> Option<usize> {
        if self.cubes.is_empty() {
            return None;
        }
        let g = self.grid();
        let per_axis = ((g.length() / self.cube_side).round() as i64).max(1);
        let x = g.point(idx);
        let mut k = 0i64;
        for &xk in x.iter().take(g.dim()) {
            let a =
                (((xk + 0.5 * g.length()) / self.cube_side).floor() as i64).clamp(0, per_axis - 1);
            k = k * per_axis + a;
        }
        Some(k as usize)
    }

    /// `h^N Σ_{Q_i} V` for every cube.
    pub fn cube_integrals(&self) -> Vec<f64> {
        cube_integrals(self, &self.values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_field_csv(&self.values, "V", path)
    }
}

fn cube_integrals(p: &Potential, values: &Field) -> Vec<f64> {
    let mut sums = vec![0.0; p.cubes.len()];
    for (i, v) in values.values().iter().enumerate() {
        if let Some(c) = p.cube_of(i) {
            sums[c] += v;
        }
    }
    let dv = values.grid().cell_volume();
    sums.iter().map(|s| s * dv).collect()
}

/// CSV of a field: `x,<name>` in 1D, `x,y,<name>` in 2D.
pub fn write_field_csv(f: &Field, name: &str, path: &Path) -> Result<()> {
    let g = f.grid();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    if g.dim() == 1 {
        writeln!(w, "x,{name}")?;
    } else {
        writeln!(w, "x,y,{name}")?;
    }
    for (i, v) in f.values().iter().enumerate() {
        let p = g.point(i);
        if g.dim() == 1 {
            writeln!(w, "{:e},{v:e}", p[0])?;
        } else {
            writeln!(w, "{:e},{:e},{v:e}", p[0], p[1])?;
        }
    }
    Ok(())
}

/// Counterexample lattice: cubes of side `L/(2 n_max - 1)`, each holding one
/// grid disk of radius `1/n` scaled to discrete mass exactly 1.
pub fn make_counterexample(grid: &TorusGrid, p0: f64, n_max: usize) -> Result<Potential> {
    check_p0(p0)?;
    if n_max == 0 {
        return Err(Error::Configuration("potential.n_max must be ≥ 1".into()));
    }
    let h = grid.spacing();
    if h > 1.0 / (4.0 * n_max as f64) {
        return Err(Error::Configuration(format!(
            "counterexample resolution: h = {h} must be ≤ 1/(4 n_max) = {}; increase grid.points",
            1.0 / (4.0 * n_max as f64)
        )));
    }
    let per_axis = 2 * n_max - 1;
    let side = grid.length() / per_axis as f64;
    if side <= 2.0 {
        return Err(Error::Configuration(format!(
            "counterexample spacing L/(2 n_max - 1) = {side} must exceed 2; increase grid.length"
        )));
    }
    let dim = grid.dim();
    let reach = n_max as i64 - 1;
    let mut cubes = Vec::new();
    let axis: Vec<i64> = (-reach..=reach).collect();
    let second: Vec<i64> = if dim == 2 { axis.clone() } else { vec![0] };
    for &a0 in &axis {
        for &a1 in &second {
            let ring = 1 + a0.unsigned_abs().max(a1.unsigned_abs()) as usize;
            let center = [
                a0 as f64 * side,
                if dim == 2 { a1 as f64 * side } else { 0.0 },
            ];
            cubes.push(Cube {
                ring,
                center,
                site: [a0, a1],
            });
        }
    }
    let mut pot = Potential {
        values: Field::zeros(grid),
        p0,
        spec: PotentialSpec::Counterexample { n_max },
        cubes,
        cube_side: side,
    };
    // disk membership per cube, then unit-mass amplitudes
    let mut owner = vec![usize::MAX; grid.len()];
    let mut counts = vec![0usize; pot.cubes.len()];
    for (i, slot) in owner.iter_mut().enumerate() {
        let c = pot.cube_of(i).expect("counterexample has cubes");
        let cube = pot.cubes[c];
        let r = 1.0 / cube.ring as f64;
        if grid.periodic_distance(&grid.point(i), &cube.center) <= r * (1.0 + 1e-12) {
            *slot = c;
            counts[c] += 1;
        }
    }
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(Error::Configuration(format!(
            "counterexample bump n = {} contains no grid point; increase grid.points",
            pot.cubes[c].ring
        )));
    }
    let dv = grid.cell_volume();
    let values = owner
        .iter()
        .map(|&c| {
            if c == usize::MAX {
                0.0
            } else {
                1.0 / (dv * counts[c] as f64)
            }
        })
        .collect();
    pot.values = Field::new(grid, values)?;
    Ok(pot)
}

/// `V_M = min(V, M)`.
pub fn truncate(v: &Potential, level: f64) -> Result<TruncatedPotential> {
    positive("truncation level M", level)?;
    Ok(TruncatedPotential {
        base: v.clone(),
        level,
        values: v.values.map(|x| x.min(level)),
    })
}

impl TruncatedPotential {
    pub fn base(&self) -> &Potential {
        &self.base
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn field(&self) -> &Field {
        &self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.max_value()
    }

    /// The truncation as a standalone potential (same `p0`).
    pub fn to_potential(&self) -> Potential {
        let mut p = self.base.clone();
        p.values = self.values.clone();
        p
    }

    pub fn cube_integrals(&self) -> Vec<f64> {
        cube_integrals(&self.base, &self.values)
    }
}

fn check_radius(grid: &TorusGrid, r: f64) -> Result<()> {
    if !(r > 0.0) || r >= 0.5 * grid.length() {
        return Err(Error::Configuration(format!(
            "ball radius {r}: expected r ∈ (0, L/2) = (0, {})",
            0.5 * grid.length()
        )));
    }
    Ok(())
}

/// `h^N Σ_{|x - x₀|_per ≤ r} f(x)` for every grid centre `x₀`.
///
/// Row-wise periodic prefix sums keep empty balls at exactly zero.
pub fn ball_sums(f: &Field, r: f64) -> Result<Vec<f64>> {
    let g = f.grid();
    check_radius(g, r)?;
    let n = g.points_per_axis();
    let h = g.spacing();
    let rr = r / h;
    let reach = (rr + 1e-9).floor() as usize;
    let half_width =
        |dy: usize| ((rr * rr - (dy * dy) as f64).max(0.0).sqrt() + 1e-9).floor() as usize;
    let rows = if g.dim() == 1 { 1 } else { n };
    // Neumaier-compensated prefix sums stored as (sum, correction)
    let prefix: Vec<Vec<(f64, f64)>> = (0..rows)
        .map(|i| {
            let row = &f.values()[i * n..(i + 1) * n];
            let mut p = Vec::with_capacity(3 * n + 1);
            p.push((0.0, 0.0));
            let (mut acc, mut comp) = (0.0f64, 0.0f64);
            for k in 0..3 * n {
                let x = row[k % n];
                let t = acc + x;
                comp += if acc.abs() >= x.abs() {
                    (acc - t) + x
                } else {
                    (x - t) + acc
                };
                acc = t;
                p.push((acc, comp));
            }
            p
        })
        .collect();
    let segment = |row: usize, j: usize, w: usize| -> f64 {
        let p = &prefix[row];
        let lo = j + n - w;
        let hi = j + n + w + 1;
        let (a, b) = if hi - lo >= n {
            (p[0], p[n])
        } else {
            (p[lo], p[hi])
        };
        (b.0 - a.0) + (b.1 - a.1)
    };
    let dv = g.cell_volume();
    let mut out = vec![0.0; g.len()];
    if g.dim() == 1 {
        let w = reach;
        for (j, o) in out.iter_mut().enumerate() {
            *o = (segment(0, j, w) * dv).max(0.0);
        }
    } else {
        let widths: Vec<usize> = (0..=reach).map(half_width).collect();
        out.par_chunks_mut(n).enumerate().for_each(|(i, row_out)| {
            for (j, o) in row_out.iter_mut().enumerate() {
                let mut s = segment(i, j, widths[0]);
                for (dy, &w) in widths.iter().enumerate().skip(1) {
                    s += segment((i + dy) % n, j, w);
                    s += segment((i + n - dy % n) % n, j, w);
                }
                *o = (s * dv).max(0.0);
            }
        });
    }
    Ok(out)
}

/// `sup_{x₀} (∫_{B(x₀,r)} |f|^{p₀})^{1/p₀}`.
pub fn uniform_norm_of(f: &Field, p0: f64, ball_radius: f64) -> Result<f64> {
    check_p0(p0)?;
    let powered = f.map(|v| v.abs().powf(p0));
    let sums = ball_sums(&powered, ball_radius)?;
    let m = sums.into_iter().fold(0.0, f64::max);
    Ok(m.powf(1.0 / p0))
}

/// `‖V‖_{L^{p₀}_U}` with balls of radius `ball_radius`.
pub fn uniform_norm(v: &Potential, p0: f64, ball_radius: f64) -> Result<f64> {
    uniform_norm_of(v.field(), p0, ball_radius)
}

/// `(M, ‖V - V_M‖_{L^{p₀}_U})` along an increasing ladder, unit balls.
pub fn approximability_profile(v: &Potential, p0: f64, ladder: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_ladder(ladder)?;
    let radius = 1.0f64.min(0.49 * v.grid().length());
    ladder
        .iter()
        .map(|&m| {
            let vm = truncate(v, m)?;
            let diff = v.field().sub(vm.field());
            Ok((m, uniform_norm_of(&diff, p0, radius)?))
        })
        .collect()
}

pub(crate) fn check_ladder(ladder: &[f64]) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Configuration("M ladder is empty".into()));
    }
    if ladder.windows(2).any(|w| !(w[0] < w[1])) || !(ladder[0] > 0.0) {
        return Err(Error::Configuration(
            "M ladder must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Outcome of [`ball_criterion`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallInfimum {
    pub radius: f64,
    pub inf_value: f64,
    pub argmin: [f64; 2],
}

/// `inf_x h^N Σ_{B(x,r)} V` over grid centres, with a minimiser.
pub fn ball_criterion(v: &Field, r: f64) -> Result<BallInfimum> {
    ball_criterion_where(v, r, |_| true)
}

/// [`ball_criterion`] restricted to centres accepted by `keep`.
pub fn ball_criterion_where(
    v: &Field,
    r: f64,
    keep: impl Fn(usize) -> bool,
) -> Result<BallInfimum> {
    let sums = ball_sums(v, r)?;
    let (idx, inf_value) = sums.iter().enumerate().filter(|(i, _)| keep(*i)).fold(
        (usize::MAX, f64::INFINITY),
        |best, (i, &s)| {
            if s < best.1 {
                (i, s)
            } else {
                best
            }
        },
    );
    if idx == usize::MAX {
        return Err(Error::Configuration("no ball centre selected".into()));
    }
    Ok(BallInfimum {
        radius: r,
        inf_value,
        argmin: v.grid().point(idx),
    })
}

/// Ball criterion over the centres inside each ring of counterexample cubes:
/// `(n, inf over centres in cubes with ring n)`.
pub fn ring_criterion(base: &Potential, v: &Field, r: f64) -> Result<Vec<(usize, f64)>> {
    let n_max = base.cubes.iter().map(|c| c.ring).max().ok_or_else(|| {
        Error::Precondition("ring criterion needs the counterexample family".into())
    })?;
    let sums = ball_sums(v, r)?;
    let mut best = vec![f64::INFINITY; n_max];
    for (i, s) in sums.iter().enumerate() {
        if let Some(c) = base.cube_of(i) {
            let k = base.cubes[c].ring - 1;
            best[k] = best[k].min(*s);
        }
    }
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(k, s)| (k + 1, s))
        .collect())
}

/// Radius for which every ball meets a whole counterexample bump.
pub fn counterexample_radius(base: &Potential) -> Result<f64> {
    if base.cubes.is_empty() {
        return Err(Error::Precondition(
            "counterexample radius needs the counterexample family".into(),
        ));
    }
    let g = base.grid();
    let half_diag = 0.5 * base.cube_side * (g.dim() as f64).sqrt();
    Ok(half_diag + 1.0 + 2.0 * g.spacing())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(length: f64, n: usize) -> TorusGrid {
        TorusGrid::new(1, length, n).unwrap()
    }

    /// Direct O(n² r²) ball sum.
    fn brute_ball(f: &Field, r: f64, center: usize) -> f64 {
        let g = f.grid();
        let c = g.point(center);
        let s: f64 = (0..g.len())
            .filter(|&i| g.periodic_distance(&g.point(i), &c) <= r + 1e-9 * g.spacing())
            .map(|i| f.values()[i])
            .sum();
        s * g.cell_volume()
    }

    #[test]
    fn uniform_norm_of_constant() {
        let g = line(10.24, 1024);
        let v = Potential::constant(&g, 3.0).unwrap();
        for p0 in [1.0, 2.0, 3.5] {
            let got = uniform_norm(&v, p0, 1.0).unwrap();
            // 201 points of spacing 0.01 cover the closed interval of length 2
            let want = 3.0 * (2.01f64).powf(1.0 / p0);
            assert!((got - want).abs() < 1e-10, "{p0}: {got} vs {want}");
            assert!((got - 3.0 * 2f64.powf(1.0 / p0)).abs() < 0.02 * got);
        }
        assert_eq!(uniform_norm(&Potential::zero(&g), 1.0, 1.0).unwrap(), 0.0);
        assert!(uniform_norm(&v, 1.0, 5.2).is_err());
        assert!(uniform_norm(&v, 0.5, 1.0).is_err());
    }

    #[test]
    fn ball_sums_match_brute_force() {
        let g = TorusGrid::new(2, 8.0, 32).unwrap();
        let f = Field::from_fn(&g, |x| (x[0] * 1.3).sin().abs() + 0.1 * x[1] * x[1]).unwrap();
        let sums = ball_sums(&f, 1.7).unwrap();
        for idx in [0, 17, 33 * 16, 1023, 500] {
            assert!((sums[idx] - brute_ball(&f, 1.7, idx)).abs() < 1e-12);
        }
        let g = line(6.4, 64);
        let f = Field::from_fn(&g, |x| x[0].cos().powi(2)).unwrap();
        let sums = ball_sums(&f, 2.95).unwrap();
        for idx in [0, 7, 63] {
            assert!((sums[idx] - brute_ball(&f, 2.95, idx)).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_criterion_examples() {
        let g = line(20.48, 2048);
        let one = Potential::constant(&g, 1.0).unwrap();
        let b = ball_criterion(one.field(), 1.0).unwrap();
        assert!((b.inf_value - 2.01).abs() < 1e-10);
        let spec = PotentialSpec::Well {
            height: 5.0,
            radius: 1.0,
            center: [0.0, 0.0],
        };
        let well = Potential::from_spec(&g, &spec, 1.0).unwrap();
        let b = ball_criterion(well.field(), 0.5).unwrap();
        assert_eq!(b.inf_value, 0.0);
        assert!(b.argmin[0].abs() > 1.4);
    }

    #[test]
    fn truncation_examples() {
        let g = line(10.0, 64);
        let v = Potential::constant(&g, 2.0).unwrap();
        assert!(truncate(&v, 3.0)
            .unwrap()
            .field()
            .values()
            .iter()
            .all(|&x| x == 2.0));
        assert!(truncate(&v, 1.0)
            .unwrap()
            .field()
            .values()
            .iter()
            .all(|&x| x == 1.0));
        assert!(truncate(&v, 0.0).is_err());
        let prof = approximability_profile(&v, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert!(prof[0].1 > 0.0 && prof[1].1 > 0.0);
        assert_eq!(prof[2].1, 0.0);
        assert_eq!(prof[3].1, 0.0);
        assert!(approximability_profile(&v, 1.0, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn bump_array_is_periodic_lattice() {
        let g = line(16.0, 512);
        let spec = PotentialSpec::BumpArray {
            height: 2.0,
            spacing: 4.0,
            radius: 1.0,
        };
        let v = Potential::from_spec(&g, &spec, 1.0).unwrap();
        let vals = v.field().values();
        // translation by one spacing (128 points) is a symmetry
        for i in 0..512 {
            assert!((vals[i] - vals[(i + 128) % 512]).abs() < 1e-12);
        }
        assert!((v.sup() - 2.0).abs() < 1e-12);
        let bad = PotentialSpec::BumpArray {
            height: 1.0,
            spacing: 2.0,
            radius: 1.5,
        };
        assert!(Potential::from_spec(&g, &bad, 1.0).is_err());
    }

    #[test]
    fn counterexample_cubes_have_unit_mass() {
        let g = TorusGrid::new(2, 32.0, 1024).unwrap();
        let v = make_counterexample(&g, 1.0, 8).unwrap();
        assert_eq!(v.cubes().len(), 225);
        for s in v.cube_integrals() {
            assert!((s - 1.0).abs() < 1e-10, "{s}");
        }
        assert!(v.field().min_value() >= 0.0);
        // truncated cube n carries at most M |B(1/n)| (+ one cell row of slack)
        let m = 2.0;
        let vm = truncate(&v, m).unwrap();
        for (cube, s) in v.cubes().iter().zip(vm.cube_integrals()) {
            let n = cube.ring as f64;
            let bound = m * std::f64::consts::PI * (1.0 / n + g.spacing()).powi(2);
            assert!(s <= bound + 1e-12, "ring {}: {s} > {bound}", cube.ring);
        }
    }

    #[test]
    fn counterexample_rejections() {
        let coarse = TorusGrid::new(2, 32.0, 128).unwrap();
        let err = make_counterexample(&coarse, 1.0, 8)
            .unwrap_err()
            .to_string();
        assert!(err.contains("resolution"), "{err}");
        let small = TorusGrid::new(1, 8.0, 1024).unwrap();
        let err = make_counterexample(&small, 1.0, 8).unwrap_err().to_string();
        assert!(err.contains("spacing"), "{err}");
    }

    #[test]
    fn counterexample_in_one_dimension() {
        let g = TorusGrid::new(1, 45.0, 2048).unwrap();
        let v = make_counterexample(&g, 1.0, 8).unwrap();
        assert_eq!(v.cubes().len(), 15);
        for s in v.cube_integrals() {
            assert!((s - 1.0).abs() < 1e-10);
        }
        let r = counterexample_radius(&v).unwrap();
        let b = ball_criterion(v.field(), r).unwrap();
        assert!(b.inf_value >= 1.0 - 1e-10, "{b:?}");
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = PotentialSpec::Well {
            height: 1.0,
            radius: 2.0,
            center: [0.5, 0.0],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"family\":\"well\""));
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let c: PotentialSpec =
            serde_json::from_str(r#"{"family":"counterexample","n_max":4}"#).unwrap();
        assert_eq!(c.family(), "counterexample");
        assert!(serde_json::from_str::<PotentialSpec>(r#"{"family":"well","height":1}"#).is_err());
    }

    #[test]
    fn custom_rejects_negative_values() {
        let g = line(4.0, 8);
        let f = Field::new(&g, vec![0.0, 1.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(Potential::custom(f, 1.0).is_err());
    }
}
