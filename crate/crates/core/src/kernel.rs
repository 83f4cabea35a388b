//! Dense complex matrices, Hermitian validation and the Hermitian eigensolver.
//!
//! The eigensolver is a cyclic complex Jacobi method. It is slow for large
//! matrices but very accurate for the desk-scale dimensions used here, and it
//! is fully deterministic.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Default relative tolerance on ‖H − H†‖_F / ‖H‖_F.
pub const HERMITICITY_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Pauli matrices (σ_x, σ_y, σ_z).
pub fn pauli() -> [ComplexMatrix; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        ComplexMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// `v·σ` for a real 3-vector.
pub fn pauli_dot(v: [f64; 3]) -> ComplexMatrix {
    let [sx, sy, sz] = pauli();
    sx * c(v[0], 0.0) + sy * c(v[1], 0.0) + sz * c(v[2], 0.0)
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖A − B‖_F.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch { left: a.shape(), right: b.shape() });
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}

/// Tr(A).
pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Tr(A·B) without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// A complex matrix that has passed the hermiticity check.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, HERMITICITY_TOL)
    }

    pub fn with_tol(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        let residual = frobenius_distance(&m, &m.adjoint())?;
        let limit = tol * frobenius_norm(&m);
        if residual > limit {
            return Err(Error::NotHermitian { residual, limit });
        }
        Ok(Self(m))
    }

    /// Replaces `m` by (m + m†)/2. Panics if `m` is not square.
    pub fn hermitize(m: &ComplexMatrix) -> Self {
        assert!(m.is_square(), "hermitize needs a square matrix");
        Self((m + m.adjoint()) * c(0.5, 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(&self.0 * c(s, 0.0))
    }
}

impl AsRef<ComplexMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigen {
    /// V·diag(λ)·V†
    pub fn reconstruct(&self) -> ComplexMatrix {
        reconstruct_from(&self.values, &self.vectors)
    }
}

pub(crate) fn reconstruct_from(values: &[f64], vectors: &ComplexMatrix) -> ComplexMatrix {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= lam;
        }
    }
    scaled * vectors.adjoint()
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back descending. Each eigenvector is phase-fixed so its
/// first entry of modulus above 1e-8 is real and positive, and eigenvectors
/// sharing an eigenvalue (within 1e-12 relative) are ordered lexicographically
/// on their rounded entries.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<Eigen> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = identity(n);
    let scale = frobenius_norm(&a);
    let target = f64::EPSILON * scale;

    let mut converged = n < 2 || scale == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps, residual: off_diagonal_norm(&a) });
    }

    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    Ok(sort_and_fix(values, v, scale))
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that cannot change the diagonal in floating point.
    if mag < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let cs = 1.0 / (1.0 + t * t).sqrt();
    let sn = t * cs;
    // J = [[c, s e^{iφ}], [−s e^{−iφ}, c]] acting on (p, q).
    let s_phase = phase * sn;
    let s_conj = phase.conj() * sn;
    let n = a.nrows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * cs - akq * s_conj;
        a[(k, q)] = akp * s_phase + akq * cs;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * cs - aqk * s_phase;
        a[(q, k)] = apk * s_conj + aqk * cs;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cs - vkq * s_conj;
        v[(k, q)] = vkp * s_phase + vkq * cs;
    }
}

fn sort_and_fix(values: Vec<f64>, mut v: ComplexMatrix, scale: f64) -> Eigen {
    let n = values.len();
    for j in 0..n {
        let lead = (0..n).map(|i| v[(i, j)]).find(|z| z.norm() > 1e-8);
        if let Some(z) = lead {
            let phase = z.conj() / z.norm();
            for i in 0..n {
                v[(i, j)] *= phase;
            }
        }
    }

    let tie = 1e-12 * scale.max(1.0);
    let key = |j: usize| -> Vec<(i64, i64)> {
        (0..n)
            .map(|i| {
                let z = v[(i, j)];
                ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64)
            })
            .collect()
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        if (values[i] - values[j]).abs() <= tie {
            key(j).cmp(&key(i))
        } else {
            values[j].partial_cmp(&values[i]).unwrap_or(Ordering::Equal)
        }
    });

    let sorted_values = order.iter().map(|&j| values[j]).collect();
    let sorted_vectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Eigen { values: sorted_values, vectors: sorted_vectors }
}

/// On-disk representation: `{"dim": n, "re": [[...]], "im": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
        Self { dim: n, re, im }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("matrix dimension must be positive".into()));
        }
        for (name, rows) in [("re", &self.re), ("im", &self.im)] {
            if rows.len() != n {
                return Err(Error::Parse(format!("\"{name}\" has {} rows, expected {n}", rows.len())));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::Parse(format!("\"{name}\" row {i} has {} entries, expected {n}", row.len())));
                }
                if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                    return Err(Error::Parse(format!("\"{name}\" row {i} holds non-finite value {x}")));
                }
            }
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| c(self.re[i][j], self.im[i][j])))
    }
}

pub fn parse_matrix_json(text: &str) -> Result<ComplexMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_matrix()
}

pub fn read_matrix_file(path: &std::path::Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path)?;
    parse_matrix_json(&text)
}
