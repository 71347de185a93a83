use rayon::prelude::*;

use super::{ReconError, ScalarGrid};

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub solution: ScalarGrid,
    pub iterations: usize,
    pub converged: bool,
    /// Relative residual `|r| / |b|` of the returned iterate as of each
    /// iteration, starting with the initial guess. The solver keeps the best
    /// iterate seen, so this sequence never increases.
    pub residuals: Vec<f64>,
    /// Relative residual of the plain CG iterate, which may oscillate.
    pub raw_residuals: Vec<f64>,
}

/// `out = -Δ x` over interior nodes with zero boundary values.
fn neg_laplacian(grid: &ScalarGrid, x: &[f64], out: &mut [f64]) {
    let spec = grid.spec;
    let h = spec.spacing();
    let (ix, iy, iz) = (1.0 / (h.x * h.x), 1.0 / (h.y * h.y), 1.0 / (h.z * h.z));
    let [nx, ny, nz] = spec.res;
    let diag = 2.0 * (ix + iy + iz);
    out.par_chunks_mut(nx).enumerate().for_each(|(row, slab)| {
        let j = row % ny;
        let k = row / ny;
        if j == 0 || k == 0 || j + 1 == ny || k + 1 == nz {
            slab.fill(0.0);
            return;
        }
        let base = row * nx;
        slab[0] = 0.0;
        slab[nx - 1] = 0.0;
        for i in 1..nx - 1 {
            let c = base + i;
            slab[i] = diag * x[c]
                - ix * (x[c - 1] + x[c + 1])
                - iy * (x[c - nx] + x[c + nx])
                - iz * (x[c - nx * ny] + x[c + nx * ny]);
        }
    });
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `Δχ = rhs` with χ = 0 on the boundary by conjugate gradient on the
/// symmetric positive definite system `-Δχ = -rhs` over interior nodes.
pub fn solve_poisson(rhs: &ScalarGrid, tol: f64, max_iter: usize) -> Result<PoissonSolution, ReconError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ReconError::Tolerance(tol));
    }
    if !rhs.values.iter().all(|v| v.is_finite()) {
        return Err(ReconError::Grid("right-hand side is not finite".into()));
    }
    let spec = rhs.spec;
    let n = spec.len();
    let mut b = vec![0.0; n];
    for idx in 0..n {
        let [i, j, k] = spec.coords(idx);
        if !spec.is_boundary(i, j, k) {
            b[idx] = -rhs.values[idx];
        }
    }
    let b_norm = dot(&b, &b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(PoissonSolution {
            solution: ScalarGrid { spec, values: x },
            iterations: 0,
            converged: true,
            residuals: vec![0.0],
            raw_residuals: vec![0.0],
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut residuals = vec![rr.sqrt() / b_norm];
    let mut raw_residuals = residuals.clone();
    let mut best = x.clone();
    let mut converged = residuals[0] <= tol;
    let mut iterations = 0;
    while !converged && iterations < max_iter {
        neg_laplacian(rhs, &p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap.is_finite() && pap > 0.0) {
            return Err(ReconError::Breakdown { iteration: iterations });
        }
        let alpha = rr / pap;
        for ((xi, ri), (pi, api)) in x.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(ReconError::Breakdown { iteration: iterations });
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        iterations += 1;
        let rel = rr.sqrt() / b_norm;
        raw_residuals.push(rel);
        let prev = *residuals.last().unwrap_or(&f64::INFINITY);
        if rel <= prev {
            best.copy_from_slice(&x);
            residuals.push(rel);
        } else {
            residuals.push(prev);
        }
        converged = rel <= tol;
    }
    Ok(PoissonSolution {
        solution: ScalarGrid { spec, values: best },
        iterations,
        converged,
        residuals,
        raw_residuals,
    })
}
