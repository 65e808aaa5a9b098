//! Symmetric positive-definite solvers for the Random Walker system:
//! a dense Cholesky factorization for small systems and Jacobi-preconditioned
//! conjugate gradients for large ones.

use crate::error::{CoreError, Result};

/// Sparse symmetric matrix in compressed-row form (diagonal stored separately).
pub struct SparseSpd {
    pub n: usize,
    pub diag: Vec<f64>,
    /// Off-diagonal entries per row as (column, value).
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSpd {
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for &(j, v) in &self.rows[i] {
                acc += v * x[j];
            }
            out[i] = acc;
        }
    }
}

/// Unknown-count threshold below which the dense direct solver is used.
pub const DENSE_LIMIT: usize = 10_000;
/// Residual tolerance for the iterative path.
pub const CG_TOLERANCE: f64 = 1e-10;

pub fn solve_spd(a: &SparseSpd, b: &[f64]) -> Result<Vec<f64>> {
    // Symmetric Jacobi scaling: D^-1/2 A D^-1/2 has unit diagonal, which
    // keeps Cholesky pivots well away from rounding-induced non-positivity
    // when edge weights span many orders of magnitude.
    let scale: Vec<f64> = a
        .diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
        .collect();
    let scaled = SparseSpd {
        n: a.n,
        diag: a.diag.iter().zip(&scale).map(|(&d, &s)| d * s * s).collect(),
        rows: a
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|&(j, v)| (j, v * scale[i] * scale[j])).collect())
            .collect(),
    };
    let sb: Vec<f64> = b.iter().zip(&scale).map(|(&v, &s)| v * s).collect();
    let y = if a.n < DENSE_LIMIT {
        match solve_dense_cholesky(&scaled, &sb) {
            Ok(y) => y,
            // Extremely ill-conditioned factorizations (near-disconnected
            // graphs) fall through to the iterative path.
            Err(CoreError::SingularSystem(_)) => solve_cg(&scaled, &sb)?,
            Err(e) => return Err(e),
        }
    } else {
        solve_cg(&scaled, &sb)?
    };
    Ok(y.iter().zip(&scale).map(|(&v, &s)| v * s).collect())
}

/// Dense Cholesky (LL^T) factorization and solve.
pub fn solve_dense_cholesky(a: &SparseSpd, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        m[i * n + i] = a.diag[i];
        for &(j, v) in &a.rows[i] {
            m[i * n + j] = v;
        }
    }
    // Factor in place: lower triangle.
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if d <= 0.0 {
            return Err(CoreError::SingularSystem(format!("non-positive pivot at row {j}")));
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    // Forward substitution L y = b.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= m[i * n + k] * y[k];
        }
        y[i] = s / m[i * n + i];
    }
    // Back substitution L^T x = y.
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= m[k * n + i] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_cg(a: &SparseSpd, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let inv_diag: Vec<f64> = a
        .diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let mut ap = vec![0.0f64; n];
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let p_ap: f64 = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum();
        if p_ap <= 0.0 {
            return Err(CoreError::SingularSystem("matrix is not positive definite".into()));
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= CG_TOLERANCE * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(CoreError::NonConvergence("conjugate gradients did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_system() -> (SparseSpd, Vec<f64>) {
        // Laplacian-like SPD matrix of a 4-node path with unit weights plus
        // boundary terms.
        let a = SparseSpd {
            n: 4,
            diag: vec![2.0, 2.0, 2.0, 2.0],
            rows: vec![
                vec![(1, -1.0)],
                vec![(0, -1.0), (2, -1.0)],
                vec![(1, -1.0), (3, -1.0)],
                vec![(2, -1.0)],
            ],
        };
        let b = vec![1.0, 0.0, 0.0, 0.0];
        (a, b)
    }

    #[test]
    fn dense_and_cg_agree() {
        let (a, b) = toy_system();
        let xd = solve_dense_cholesky(&a, &b).unwrap();
        let xc = solve_cg(&a, &b).unwrap();
        for i in 0..4 {
            assert!((xd[i] - xc[i]).abs() < 1e-9, "{:?} vs {:?}", xd, xc);
        }
        // Residual check.
        let mut ax = vec![0.0; 4];
        a.mul(&xd, &mut ax);
        for i in 0..4 {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        // Pure graph Laplacian (no seed coupling) is singular.
        let a = SparseSpd {
            n: 2,
            diag: vec![1.0, 1.0],
            rows: vec![vec![(1, -1.0)], vec![(0, -1.0)]],
        };
        assert!(solve_dense_cholesky(&a, &[1.0, 0.0]).is_err());
    }
}
