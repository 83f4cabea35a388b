//! Symmetric logarithmic derivatives: solutions L of ∂ρ = (Lρ + ρL)/2.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{c, frobenius_distance, frobenius_norm, trace_product, ComplexMatrix, HermitianMatrix};
use crate::models::{self, DiffScheme, ParamPoint, ParametricModel};
use crate::state::{spectral_decompose, DensityMatrix, Spectrum};

/// Eigenvalue sums pⱼ + pₖ at or below this are treated as the kernel.
pub const SUPPORT_TOL: f64 = 1e-11;
/// Largest kernel-block derivative element tolerated as round-off.
pub const CONSISTENCY_TOL: f64 = 1e-8;
/// Largest |Tr(ρL)| accepted for a solved SLD.
pub const MEAN_TOL: f64 = 1e-8;

/// An SLD together with its equation residual ‖∂ρ − (Lρ+ρL)/2‖_F.
#[derive(Debug, Clone)]
pub struct SldSolution {
    pub operator: HermitianMatrix,
    pub residual: f64,
}

/// ‖∂ρ − (Lρ + ρL)/2‖_F
pub fn lyapunov_residual(rho: &ComplexMatrix, l: &ComplexMatrix, d_rho: &ComplexMatrix) -> f64 {
    let sym = (l * rho + rho * l) * c(0.5, 0.0);
    frobenius_distance(d_rho, &sym).unwrap_or(f64::INFINITY)
}

/// Solves the SLD equation in the eigenbasis of ρ.
///
/// L_jk = 2⟨ψⱼ|∂ρ|ψₖ⟩/(pⱼ+pₖ) on the support; the kernel block
/// (pⱼ+pₖ ≤ [`SUPPORT_TOL`]) is set to zero, which is the minimal-norm solution.
pub fn solve_sld(spec: &Spectrum, d_rho: &HermitianMatrix) -> Result<SldSolution> {
    let n = spec.dim();
    if d_rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d_rho.dim() });
    }
    let p = spec.probabilities();
    let d = spec.to_eigenbasis(d_rho.matrix());
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let s = p[j] + p[k];
            if s > SUPPORT_TOL {
                l[(j, k)] = d[(j, k)] * (2.0 / s);
            } else if d[(j, k)].norm() > CONSISTENCY_TOL {
                return Err(Error::InconsistentDerivative { row: j, col: k, magnitude: d[(j, k)].norm() });
            }
        }
    }
    let operator = HermitianMatrix::hermitize(&spec.from_eigenbasis(&l));
    let residual = lyapunov_residual(spec.state().matrix(), operator.matrix(), d_rho.matrix());
    Ok(SldSolution { operator, residual })
}

/// L = 2∂ρ, valid only when ρ is pure.
pub fn sld_pure_shortcut(d_rho: &HermitianMatrix) -> HermitianMatrix {
    d_rho.scaled(2.0)
}

/// Real and imaginary parts of ⟨L_α L_β⟩ = Tr(ρ L_α L_β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldExpectation {
    pub re: f64,
    pub im: f64,
}

pub fn sld_expectations(rho: &DensityMatrix, la: &HermitianMatrix, lb: &HermitianMatrix) -> Result<SldExpectation> {
    for l in [la, lb] {
        if l.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), found: l.dim() });
        }
    }
    let ab = rho.expectation(&(la.matrix() * lb.matrix()));
    let ba = rho.expectation(&(lb.matrix() * la.matrix()));
    // Im⟨L_αL_β⟩ = −(i/2)⟨[L_α, L_β]⟩
    let via_commutator = (Complex64::new(0.0, -0.5) * (ab - ba)).re;
    let scale = 1f64.max(frobenius_norm(la.matrix()) * frobenius_norm(lb.matrix()));
    let gap = (via_commutator - ab.im).abs();
    if gap > 1e-10 * scale {
        return Err(Error::ImaginaryResidue(gap));
    }
    Ok(SldExpectation { re: ab.re, im: ab.im })
}

/// One SLD per parameter axis, all for the same state.
#[derive(Debug, Clone)]
pub struct SldSet {
    spectrum: Spectrum,
    operators: Vec<HermitianMatrix>,
    derivatives: Vec<HermitianMatrix>,
    residuals: Vec<f64>,
    means: Vec<f64>,
}

impl SldSet {
    pub fn solve(spectrum: Spectrum, derivatives: Vec<HermitianMatrix>) -> Result<Self> {
        let mut operators = Vec::with_capacity(derivatives.len());
        let mut residuals = Vec::with_capacity(derivatives.len());
        let mut means = Vec::with_capacity(derivatives.len());
        for d in &derivatives {
            let sol = solve_sld(&spectrum, d)?;
            let mean = trace_product(spectrum.state().matrix(), sol.operator.matrix()).norm();
            if mean > MEAN_TOL {
                return Err(Error::OutOfRange(format!("Tr(ρL) = {mean:e}: the derivative is not traceless")));
            }
            means.push(mean);
            residuals.push(sol.residual);
            operators.push(sol.operator);
        }
        Ok(Self { spectrum, operators, derivatives, residuals, means })
    }

    pub fn from_model(
        model: &dyn ParametricModel,
        theta: &ParamPoint,
        scheme: &DiffScheme,
        rank_tol: f64,
    ) -> Result<Self> {
        let rho = models::evaluate(model, theta)?;
        let spectrum = spectral_decompose(&rho, rank_tol)?;
        let derivatives = models::gradient(model, theta, scheme)?;
        Self::solve(spectrum, derivatives)
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn state(&self) -> &DensityMatrix {
        self.spectrum.state()
    }

    pub fn operators(&self) -> &[HermitianMatrix] {
        &self.operators
    }

    pub fn derivatives(&self) -> &[HermitianMatrix] {
        &self.derivatives
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// |Tr(ρL_μ)| per axis.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}
