//! Brute-force cross-checks built on nalgebra's own decompositions.
//!
//! Nothing here calls into the eigensolver, SLD solver, differencing or
//! geometry code of the main pipeline; only the model trait and the basic
//! matrix types are shared.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{ComplexMatrix, HermitianMatrix};
use crate::models::ParametricModel;
use crate::state::DensityMatrix;

const SINGULAR_CUTOFF: f64 = 1e-11;
const RESIDUAL_LIMIT: f64 = 1e-8;
const FULL_RANK_FLOOR: f64 = 1e-10;
const PURE_LIMIT: f64 = 1e-8;
const MIN_OVERLAP: f64 = 0.5;
const REFINEMENT_STEPS: usize = 3;

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

fn sorted_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Minimal-norm least-squares solution of ½(I⊗ρ + ρᵀ⊗I)·vec(L) = vec(∂ρ).
pub fn sld_vec_solve(rho: &DensityMatrix, d_rho: &HermitianMatrix) -> Result<HermitianMatrix> {
    let n = rho.dim();
    if d_rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: d_rho.dim() });
    }
    let r = rho.matrix();
    let idx = |i: usize, j: usize| i + j * n;
    // column (a, b) holds vec of ½(E_ab ρ + ρ E_ab)
    let mut s = DMatrix::<Complex64>::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let col = idx(a, b);
            for j in 0..n {
                s[(idx(a, j), col)] += r[(b, j)] * 0.5;
            }
            for i in 0..n {
                s[(idx(i, b), col)] += r[(i, a)] * 0.5;
            }
        }
    }
    let rhs = DVector::from_fn(n * n, |k, _| d_rho.matrix()[(k % n, k / n)]);
    let svd = s.clone().svd(true, true);
    let pinv =
        |b: &DVector<Complex64>| svd.solve(b, SINGULAR_CUTOFF).map_err(|e| Error::OracleUnsupported(e.to_string()));
    let mut x = pinv(&rhs)?;
    let mut residual = (&s * &x - &rhs).norm();
    // iterative refinement; the SVD alone can leave residuals near 1e-9
    for _ in 0..REFINEMENT_STEPS {
        let next = &x - pinv(&(&s * &x - &rhs))?;
        let next_residual = (&s * &next - &rhs).norm();
        if next_residual >= residual {
            break;
        }
        x = next;
        residual = next_residual;
    }
    if residual > RESIDUAL_LIMIT {
        return Err(Error::OracleInconsistent(residual));
    }
    let l = ComplexMatrix::from_fn(n, n, |i, j| x[idx(i, j)]);
    Ok(HermitianMatrix::hermitize(&hermitian_part(&l)))
}

fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|x| Complex64::new(x.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Squared Bures distance 2(1 − F) = min_U ‖√ρ − √σ·U‖²_F.
///
/// Evaluated as the norm of a difference at the optimal unitary (the polar
/// factor of √ρ√σ), which keeps full relative precision for nearby states
/// where 1 − F itself would cancel.
pub fn bures_distance_sq(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let a = psd_sqrt(rho.matrix());
    let b = psd_sqrt(sigma.matrix());
    let svd = (&a * &b).svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let polar = v_t.adjoint() * u.adjoint();
    Ok((a - b * polar).norm_squared())
}

/// Bures fidelity Tr√(√ρ σ √ρ).
pub fn bures_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(1.0 - bures_distance_sq(rho, sigma)? / 2.0)
}

/// 𝓕_axis from the small-distance expansion of the Bures fidelity.
///
/// 8(1 − F)/h² = 4d²/h² in terms of the squared Bures distance d². The
/// shifts ±h are averaged, which removes odd-order error terms, and the
/// result is Richardson-extrapolated over h = ε and ε/2.
pub fn qfi_fidelity(model: &dyn ParametricModel, theta: &[f64], axis: usize, step: f64) -> Result<f64> {
    if theta.len() != model.param_count() || axis >= theta.len() {
        return Err(Error::OutOfRange(format!(
            "axis {axis} at a {}-coordinate point of a {}-parameter model",
            theta.len(),
            model.param_count()
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep(step));
    }
    let rho = model.density(theta)?;
    let smallest = *sorted_eigenvalues(rho.matrix()).last().expect("dimension ≥ 1");
    if smallest <= FULL_RANK_FLOOR {
        return Err(Error::OracleUnsupported(format!(
            "fidelity expansion needs a full-rank state (smallest eigenvalue {smallest:e})"
        )));
    }
    let at = |h: f64| -> Result<DensityMatrix> {
        let mut t = theta.to_vec();
        t[axis] += h;
        model.density(&t)
    };
    let estimate = |h: f64| -> Result<f64> {
        let plus = bures_distance_sq(&rho, &at(h)?)?;
        let minus = bures_distance_sq(&rho, &at(-h)?)?;
        Ok(2.0 * (plus + minus) / (h * h))
    };
    let coarse = estimate(step)?;
    let fine = estimate(step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn dominant_vector(rho: &DensityMatrix) -> Result<DVector<Complex64>> {
    let eig = hermitian_part(rho.matrix()).symmetric_eigen();
    let mut order: Vec<usize> = (0..rho.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if order.len() > 1 && eig.eigenvalues[order[1]] > PURE_LIMIT {
        return Err(Error::OracleUnsupported(format!(
            "plaquette loop needs a pure state (second eigenvalue {:e})",
            eig.eigenvalues[order[1]]
        )));
    }
    Ok(eig.eigenvectors.column(order[0]).into_owned())
}

/// Ω_{ab} of a pure family from the Berry phase of an ε×ε plaquette centred at θ.
///
/// The loop visits (0,0) → (1,0) → (1,1) → (0,1) in units of ε along axes a, b;
/// Ω ≈ −arg(∏⟨ψ_k|ψ_{k+1}⟩)/ε², independent of the eigenvector phases.
pub fn curvature_finite_loop_pure(
    model: &dyn ParametricModel,
    theta: &[f64],
    axes: (usize, usize),
    step: f64,
) -> Result<f64> {
    if !(1e-4..=1e-2).contains(&step) {
        return Err(Error::InvalidStep(step));
    }
    let (a, b) = axes;
    let d = model.param_count();
    if theta.len() != d || a >= d || b >= d {
        return Err(Error::OutOfRange(format!("axes ({a}, {b}) for a {d}-parameter model")));
    }
    let corner = |sa: f64, sb: f64| -> Result<DVector<Complex64>> {
        let mut t = theta.to_vec();
        t[a] += sa * step / 2.0;
        t[b] += sb * step / 2.0;
        dominant_vector(&model.density(&t)?)
    };
    let loop_states = [corner(-1.0, -1.0)?, corner(1.0, -1.0)?, corner(1.0, 1.0)?, corner(-1.0, 1.0)?];
    let mut product = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        let overlap = loop_states[k].dotc(&loop_states[(k + 1) % 4]);
        if overlap.norm() < MIN_OVERLAP {
            return Err(Error::NearOrthogonal(overlap.norm()));
        }
        product *= overlap;
    }
    Ok(-product.arg() / (step * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{c, frobenius_distance, pauli, pauli_dot};
    use crate::models::{ConstantModel, MixedBloch, PureBloch};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pure_state_sld_is_twice_derivative() {
        let psi = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        // derivative of a rotation about x: −i[σ_x, ρ]
        let sx = &pauli()[0];
        let d = HermitianMatrix::hermitize(&((sx * rho.matrix() - rho.matrix() * sx) * c(0.0, -1.0)));
        let l = sld_vec_solve(&rho, &d).unwrap();
        assert!(frobenius_distance(l.matrix(), &(d.matrix() * c(2.0, 0.0))).unwrap() < 1e-10);
    }

    #[test]
    fn zero_derivative() {
        let rho = DensityMatrix::maximally_mixed(3);
        let l = sld_vec_solve(&rho, &HermitianMatrix::zeros(3)).unwrap();
        assert_eq!(crate::kernel::frobenius_norm(l.matrix()), 0.0);
    }

    #[test]
    fn mixed_bloch_polar_sld() {
        let m = MixedBloch::new(0.5).unwrap();
        let rho = m.density(&[FRAC_PI_2, 0.0]).unwrap();
        let d = HermitianMatrix::hermitize(&pauli_dot([0.0, 0.0, -0.25]));
        let l = sld_vec_solve(&rho, &d).unwrap();
        assert!(frobenius_distance(l.matrix(), &pauli_dot([0.0, 0.0, -0.5])).unwrap() < 1e-12);
    }

    #[test]
    fn inconsistent_derivative_is_reported() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let mut d = ComplexMatrix::zeros(2, 2);
        d[(1, 1)] = c(0.3, 0.0);
        let err = sld_vec_solve(&rho, &HermitianMatrix::new(d).unwrap()).unwrap_err();
        assert!(matches!(err, Error::OracleInconsistent(_)));
    }

    #[test]
    fn fidelity_examples() {
        let m = MixedBloch::new(0.5).unwrap();
        let f = qfi_fidelity(&m, &[FRAC_PI_2, 0.0], 0, 1e-3).unwrap();
        assert!((f - 0.25).abs() < 1e-6, "{f}");
        let near_pure = MixedBloch::new(1.0 - 1e-6).unwrap();
        let f = qfi_fidelity(&near_pure, &[1.1, 0.4], 0, 1e-2).unwrap();
        assert!((f - 1.0).abs() < 1e-4, "{f}");
        let constant = ConstantModel::new(DensityMatrix::maximally_mixed(2), 2).unwrap();
        assert!(qfi_fidelity(&constant, &[0.0, 0.0], 1, 1e-2).unwrap().abs() < 1e-9);
    }

    #[test]
    fn fidelity_abstains_on_pure_states() {
        let err = qfi_fidelity(&PureBloch, &[1.0, 0.0], 0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::OracleUnsupported(_)));
    }

    #[test]
    fn fidelity_of_identical_states() {
        let rho = MixedBloch::new(0.3).unwrap().density(&[0.4, 1.0]).unwrap();
        assert!((bures_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn plaquette_on_equator() {
        let omega = curvature_finite_loop_pure(&PureBloch, &[FRAC_PI_2, 0.0], (0, 1), 1e-3).unwrap();
        assert!((omega + 0.5).abs() < 1e-5, "{omega}");
        let swapped = curvature_finite_loop_pure(&PureBloch, &[FRAC_PI_2, 0.0], (1, 0), 1e-3).unwrap();
        assert!((omega + swapped).abs() < 1e-12);
    }

    #[test]
    fn plaquette_converges_at_second_order() {
        let theta = [0.9f64, -0.3];
        let exact = -0.5 * theta[0].sin();
        let e1 = curvature_finite_loop_pure(&PureBloch, &theta, (0, 1), 8e-3).unwrap() - exact;
        let e2 = curvature_finite_loop_pure(&PureBloch, &theta, (0, 1), 4e-3).unwrap() - exact;
        let ratio = e1 / e2;
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn plaquette_preconditions() {
        let pure = DensityMatrix::pure(&DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        let constant = ConstantModel::new(pure, 2).unwrap();
        assert_eq!(curvature_finite_loop_pure(&constant, &[0.1, 0.2], (0, 1), 1e-3).unwrap(), 0.0);
        assert!(matches!(
            curvature_finite_loop_pure(&PureBloch, &[1.0, 0.0], (0, 1), 1e-1),
            Err(Error::InvalidStep(_))
        ));
        let mixed = MixedBloch::new(0.5).unwrap();
        assert!(matches!(
            curvature_finite_loop_pure(&mixed, &[1.0, 0.0], (0, 1), 1e-3),
            Err(Error::OracleUnsupported(_))
        ));
    }
}
