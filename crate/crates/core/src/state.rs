//! Validated density matrices, their spectra, and POVMs.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result, StateViolation};
use crate::kernel::{
    self, c, eig_hermitian, frobenius_distance, frobenius_norm, identity, ComplexMatrix, HermitianMatrix, MatrixFile,
};

/// Tolerance for the trace, hermiticity and positivity invariants of a state.
pub const STATE_TOL: f64 = 1e-10;
/// Default threshold above which an eigenvalue counts toward the rank.
pub const RANK_TOL: f64 = 1e-12;

/// A Hermitian, positive-semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate_density(&m, STATE_TOL)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { matrix: identity(n) * c(1.0 / n as f64, 0.0) }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::OutOfRange("zero state vector".into()));
        }
        let v = psi / c(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::hermitize(&self.matrix)
    }

    /// Tr(ρX)
    pub fn expectation(&self, x: &ComplexMatrix) -> Complex64 {
        kernel::trace_product(&self.matrix, x)
    }
}

/// Checks every density-matrix invariant and reports all that fail at once.
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if m.nrows() == 0 {
        return Err(Error::OutOfRange("empty matrix".into()));
    }
    if let Some(z) = m.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse(format!("non-finite matrix entry {z}")));
    }
    let mut violations = Vec::new();

    let norm = frobenius_norm(m);
    let herm_residual = frobenius_distance(m, &m.adjoint())? / norm.max(f64::MIN_POSITIVE);
    if herm_residual > tol {
        violations.push(StateViolation::Hermiticity(herm_residual));
    }

    let tr = kernel::trace(m).re;
    if (tr - 1.0).abs() > tol {
        violations.push(StateViolation::Trace(tr));
    }

    let h = HermitianMatrix::hermitize(m);
    let eig = eig_hermitian(&h)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -tol {
        violations.push(StateViolation::Negativity(min));
    }

    if violations.is_empty() {
        Ok(DensityMatrix { matrix: h.into_inner() })
    } else {
        Err(Error::InvalidState(violations))
    }
}

/// Spectral decomposition ρ = Σ pᵢ|ψᵢ⟩⟨ψᵢ| with descending pᵢ.
#[derive(Debug, Clone)]
pub struct Spectrum {
    probabilities: Vec<f64>,
    vectors: ComplexMatrix,
    rank: usize,
    rank_tol: f64,
    state: DensityMatrix,
}

impl Spectrum {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Eigenvectors as columns, in the order of [`Spectrum::probabilities`].
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<Complex64> {
        self.vectors.column(i).into_owned()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// Matrix elements ⟨ψᵢ|X|ψⱼ⟩.
    pub fn to_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.vectors.adjoint() * x * &self.vectors
    }

    /// Inverse of [`Spectrum::to_eigenbasis`].
    pub fn from_eigenbasis(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.vectors * x * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        kernel::reconstruct_from(&self.probabilities, &self.vectors)
    }

    pub fn reconstruction_residual(&self) -> f64 {
        frobenius_distance(&self.reconstruct(), self.state.matrix()).unwrap_or(f64::INFINITY)
    }

    /// Same decomposition with |ψᵢ⟩ replaced by e^{iφᵢ}|ψᵢ⟩.
    pub fn with_phases(&self, phases: &[f64]) -> Spectrum {
        let mut out = self.clone();
        for (j, &phi) in phases.iter().enumerate().take(self.dim()) {
            let z = Complex64::from_polar(1.0, phi);
            for i in 0..self.dim() {
                out.vectors[(i, j)] *= z;
            }
        }
        out
    }
}

pub fn spectral_decompose(rho: &DensityMatrix, rank_tol: f64) -> Result<Spectrum> {
    let eig = eig_hermitian(&rho.as_hermitian())?;
    let mut probabilities = eig.values;
    for p in probabilities.iter_mut() {
        if *p < 0.0 {
            if *p < -STATE_TOL {
                return Err(Error::InvalidState(vec![StateViolation::Negativity(*p)]));
            }
            *p = 0.0;
        }
    }
    let rank = probabilities.iter().filter(|&&p| p > rank_tol).count();
    Ok(Spectrum { probabilities, vectors: eig.vectors, rank, rank_tol, state: rho.clone() })
}

/// A finite set of positive operators summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        let dim = first.nrows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut checked = Vec::with_capacity(elements.len());
        for (m, e) in elements.into_iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(Error::InvalidPovm(format!(
                    "element {m} has shape {:?}, expected ({dim}, {dim})",
                    e.shape()
                )));
            }
            let h = HermitianMatrix::new(e).map_err(|err| Error::InvalidPovm(format!("element {m}: {err}")))?;
            let min = eig_hermitian(&h)?.values.last().copied().unwrap_or(0.0);
            if min < -STATE_TOL {
                return Err(Error::InvalidPovm(format!("element {m} has negative eigenvalue {min:e}")));
            }
            sum += h.matrix();
            checked.push(h);
        }
        let worst = (sum - identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if worst > STATE_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to the identity only within {worst:e}")));
        }
        Ok(Self { elements: checked })
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn projective(basis: &ComplexMatrix) -> Result<Self> {
        let elements = (0..basis.ncols())
            .map(|j| {
                let v = basis.column(j);
                v * v.adjoint()
            })
            .collect();
        Self::new(elements)
    }

    /// Projectors onto the σ_z eigenstates |0⟩, |1⟩.
    pub fn sigma_z() -> Self {
        Self::projective(&identity(2)).expect("computational basis is a valid POVM")
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn to_json(&self) -> String {
        let files: Vec<MatrixFile> = self.elements.iter().map(|e| MatrixFile::from_matrix(e.matrix())).collect();
        serde_json::to_string_pretty(&files).expect("matrix files serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let files: Vec<MatrixFile> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mats = files.iter().map(MatrixFile::to_matrix).collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Born-rule outcome probabilities q_m = Tr(ρΠ_m).
pub fn born_probabilities(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch { expected: povm.dim(), found: rho.dim() });
    }
    Ok(povm
        .elements()
        .iter()
        .map(|e| {
            let q = rho.expectation(e.matrix()).re;
            debug_assert!(q >= -1e-12, "negative Born probability {q}");
            q.max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::pauli;

    fn diag(values: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&x| c(x, 0.0))))
    }

    fn bloch(r: [f64; 3]) -> DensityMatrix {
        DensityMatrix::new((identity(2) + kernel::pauli_dot(r)) * c(0.5, 0.0)).unwrap()
    }

    #[test]
    fn maximally_mixed_is_valid_full_rank() {
        let rho = validate_density(&diag(&[0.5, 0.5]), STATE_TOL).unwrap();
        let s = spectral_decompose(&rho, RANK_TOL).unwrap();
        assert_eq!(s.probabilities(), &[0.5, 0.5]);
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn projector_has_rank_one() {
        let rho = bloch([0.0, 0.0, 1.0]);
        let s = spectral_decompose(&rho, RANK_TOL).unwrap();
        assert_eq!(s.probabilities(), &[1.0, 0.0]);
        assert_eq!(s.rank(), 1);
        for tol in [1e-14, 1e-10, 1e-6] {
            assert_eq!(spectral_decompose(&rho, tol).unwrap().rank(), 1);
        }
    }

    #[test]
    fn trace_violation_is_reported() {
        let err = validate_density(&diag(&[0.45, 0.45]), STATE_TOL).unwrap_err();
        match err {
            Error::InvalidState(v) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(v[0], StateViolation::Trace(t) if (t - 0.9).abs() < 1e-15));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        let mut m = diag(&[1.5, -0.2]);
        m[(0, 1)] = c(0.3, 0.0);
        let err = validate_density(&m, STATE_TOL).unwrap_err();
        let Error::InvalidState(v) = err else { panic!("wrong error") };
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn tiny_negative_eigenvalue_is_clamped() {
        let rho = validate_density(&diag(&[1.0 + 5e-11, -5e-11]), STATE_TOL).unwrap();
        let s = spectral_decompose(&rho, RANK_TOL).unwrap();
        assert_eq!(s.probabilities()[1], 0.0);
        assert_eq!(s.rank(), 1);
    }

    #[test]
    fn mixed_qubit_spectrum_is_descending() {
        let s = spectral_decompose(&bloch([0.0, 0.0, 0.5]), RANK_TOL).unwrap();
        assert!((s.probabilities()[0] - 0.75).abs() < 1e-15);
        assert!((s.probabilities()[1] - 0.25).abs() < 1e-15);
        assert!(s.reconstruction_residual() < 1e-12);
    }

    #[test]
    fn born_rule_examples() {
        let z = Povm::sigma_z();
        let q = born_probabilities(&DensityMatrix::maximally_mixed(2), &z).unwrap();
        assert_eq!(q, vec![0.5, 0.5]);
        let q = born_probabilities(&bloch([0.0, 0.0, 1.0]), &z).unwrap();
        assert_eq!(q, vec![1.0, 0.0]);
        let t = std::f64::consts::FRAC_PI_3;
        let q = born_probabilities(&bloch([t.sin(), 0.0, t.cos()]), &z).unwrap();
        assert!((q[0] - 0.75).abs() < 1e-15);
        assert!((q[1] - 0.25).abs() < 1e-15);
        assert!(born_probabilities(&DensityMatrix::maximally_mixed(3), &z).is_err());
    }

    #[test]
    fn povm_validation() {
        let [_, _, sz] = pauli();
        let up = (identity(2) + &sz) * c(0.5, 0.0);
        assert!(Povm::new(vec![up.clone()]).is_err());
        let tampered = (identity(2) - &sz) * c(0.4, 0.0);
        assert!(matches!(Povm::new(vec![up.clone(), tampered]), Err(Error::InvalidPovm(_))));
        let down = (identity(2) - &sz) * c(0.5, 0.0);
        let ok = Povm::new(vec![up, down]).unwrap();
        let back = Povm::from_json(&ok.to_json()).unwrap();
        assert_eq!(back.len(), 2);
    }
}
