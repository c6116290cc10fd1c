//! Dense and matrix-free forms of `A = (-Δ)^μ + diag(V)` on the grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{Field, FractionalOrder, TorusGrid};

/// Largest point count `n^N` accepted by the dense path.
pub const DENSE_CAP: usize = 4096;

/// Rayleigh-quotient tolerance of the inverse power iteration.
pub const INVERSE_POWER_TOL: f64 = 1e-10;

/// Eigendecomposition of the discrete operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    grid: TorusGrid,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

fn check_cap(grid: &TorusGrid) -> Result<()> {
    if grid.len() > DENSE_CAP {
        return Err(Error::Capability(format!(
            "dense operator needs n^N ≤ {DENSE_CAP}, grid has {} points; use the trace-fit path",
            grid.len()
        )));
    }
    Ok(())
}

/// `A` as a dense symmetric matrix.
pub fn dense_matrix(v: &Field, order: FractionalOrder) -> Result<DMatrix<f64>> {
    let grid = v.grid();
    check_cap(grid)?;
    let len = grid.len();
    let n = grid.points_per_axis();
    let mut e0 = vec![0.0; len];
    e0[0] = 1.0;
    // first column of the (block) circulant A₀
    let col = grid.apply_symbol(&e0, |k2| order.symbol(k2));
    let offset = |i: usize, j: usize| -> usize {
        let [a0, a1] = grid.unflatten(i);
        let [b0, b1] = grid.unflatten(j);
        match grid.dim() {
            1 => (a0 + n - b0) % n,
            _ => ((a0 + n - b0) % n) * n + (a1 + n - b1) % n,
        }
    };
    let mut a = DMatrix::from_fn(len, len, |i, j| {
        0.5 * (col[offset(i, j)] + col[offset(j, i)])
    });
    for (i, vi) in v.values().iter().enumerate() {
        a[(i, i)] += vi;
    }
    Ok(a)
}

impl DenseOperator {
    pub fn new(v: &Field, order: FractionalOrder) -> Result<Self> {
        let a = dense_matrix(v, order)?;
        let eig = SymmetricEigen::new(a);
        let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = eig.eigenvectors.select_columns(&idx);
        Ok(Self {
            grid: v.grid().clone(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `e^{-tA} u`.
    pub fn propagate(&self, u: &Field, t: f64) -> Result<Field> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("t = {t}: expected t >= 0")));
        }
        let x = DVector::from_column_slice(u.values());
        let mut c = self.eigenvectors.tr_mul(&x);
        for (ci, l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= (-t * l).exp();
        }
        let y = &self.eigenvectors * c;
        Field::new(&self.grid, y.as_slice().to_vec())
    }

    /// The matrix `e^{-tA}`.
    pub fn propagator(&self, t: f64) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, l) in scaled.column_iter_mut().zip(&self.eigenvalues) {
            col *= (-t * l).exp();
        }
        scaled * self.eigenvectors.transpose()
    }

    /// `‖e^{-tA}‖_{1→1}`: largest column absolute sum.
    pub fn norm_1(&self, t: f64) -> f64 {
        self.propagator(t)
            .column_iter()
            .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖e^{-tA}‖_{∞→∞}`: largest row absolute sum.
    pub fn norm_inf(&self, t: f64) -> f64 {
        self.propagator(t)
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖e^{-tA}‖_{2→2} = e^{-t λ_min}`.
    pub fn norm_2(&self, t: f64) -> f64 {
        (-t * self.lambda_min()).exp()
    }
}

/// Matrix-free `A x`.
pub fn apply_operator(v: &Field, order: FractionalOrder, x: &[f64]) -> Vec<f64> {
    let mut y = v.grid().apply_symbol(x, |k2| order.symbol(k2));
    for ((yi, xi), vi) in y.iter_mut().zip(x).zip(v.values()) {
        *yi += vi * xi;
    }
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A y = b` by conjugate gradients preconditioned with
/// `((-Δ)^μ + mean V)^{-1}`.
pub fn solve_cg(
    v: &Field,
    order: FractionalOrder,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let grid = v.grid();
    let shift = v.values().iter().sum::<f64>() / grid.len() as f64;
    if !(shift > 0.0) {
        return Err(Error::Numerical(
            "A is singular for V ≡ 0; CG needs a nonzero potential".into(),
        ));
    }
    let precond = |r: &[f64]| grid.apply_symbol(r, |k2| 1.0 / (order.symbol(k2) + shift));
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        let ap = apply_operator(v, order, &p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(x);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = dot(&r, &r).sqrt();
    Err(Error::Convergence {
        iterations: max_iter,
        residual: rnorm / bnorm,
    })
}

/// Smallest eigenvalue of `A` by inverse power iteration (shift 0), started
/// from the constant vector. Returns the eigenvalue and the iteration count.
pub fn smallest_eigenvalue_iterative(
    v: &Field,
    order: FractionalOrder,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    if v.max_value() == 0.0 {
        // constants span the kernel of A₀
        return Ok((0.0, 0));
    }
    let len = v.grid().len();
    let mut x = vec![1.0 / (len as f64).sqrt(); len];
    let mut prev = f64::INFINITY;
    let mut rq = 0.0;
    for it in 1..=max_iter {
        let y = solve_cg(v, order, &x, 1e-13, 10 * len.max(100))?;
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|e| e / norm).collect();
        let ax = apply_operator(v, order, &x);
        rq = dot(&x, &ax);
        if (rq - prev).abs() <= tol {
            return Ok((rq, it));
        }
        prev = rq;
    }
    let ax = apply_operator(v, order, &x);
    let residual = ax
        .iter()
        .zip(&x)
        .map(|(a, b)| (a - rq * b).powi(2))
        .sum::<f64>()
        .sqrt();
    Err(Error::Numerical(format!(
        "inverse power iteration did not converge in {max_iter} steps (eigen-residual {residual:e})"
    )))
}

/// `λ_min(A)`: dense eigensolve under the cap, inverse power iteration above.
pub fn smallest_eigenvalue(v: &Field, order: FractionalOrder) -> Result<f64> {
    if v.grid().len() <= DENSE_CAP {
        Ok(DenseOperator::new(v, order)?.lambda_min())
    } else {
        Ok(smallest_eigenvalue_iterative(v, order, INVERSE_POWER_TOL, 5000)?.0)
    }
}
