//! Closed-form qubit formulas in the Bloch representation ρ = (I + r·σ)/2.
//!
//! These serve as analytic ground truth for the generic pipeline. The
//! curvature of a general qubit family is −½·r·(∂_α r × ∂_β r); for a
//! fixed-length family r = r·n this is r³ times the pure-state value of the
//! aligned direction n, equivalently −r³ times the Berry curvature of the
//! anti-aligned eigenvector ψ₁ (eigenvalue (1 − r)/2). The varying-length
//! form is an extension of the fixed-length law and is checked against the
//! SLD commutator route in the tests.

use crate::error::{Error, Result};
use crate::kernel::{c, identity, pauli, pauli_dot, ComplexMatrix};
use crate::state::{DensityMatrix, Spectrum};

const UNIT_TOL: f64 = 1e-10;
const TANGENT_TOL: f64 = 1e-8;
const BALL_TOL: f64 = 1e-12;

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// A point of the closed Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(Vec3);

impl BlochVector {
    pub fn new(v: Vec3) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange(format!("non-finite Bloch vector {v:?}")));
        }
        let r = norm(v);
        if r > 1.0 + BALL_TOL {
            return Err(Error::OutOfRange(format!("Bloch vector length {r} exceeds 1")));
        }
        Ok(Self(v))
    }

    /// r_k = Tr(ρσ_k) of a qubit state.
    pub fn from_state(rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: rho.dim() });
        }
        let [sx, sy, sz] = pauli();
        Self::new([sx, sy, sz].map(|s| rho.expectation(&s).re))
    }

    pub fn components(&self) -> Vec3 {
        self.0
    }

    pub fn length(&self) -> f64 {
        norm(self.0)
    }

    pub fn is_pure(&self) -> bool {
        (self.length() - 1.0).abs() <= BALL_TOL
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::new((identity(2) + pauli_dot(self.0)) * c(0.5, 0.0)).expect("Bloch ball points are states")
    }
}

/// Ω = −½·n·(∂_αn × ∂_βn) for a pure state with unit Bloch vector n.
pub fn pure_curvature_bloch(n: &BlochVector, dn_a: Vec3, dn_b: Vec3) -> Result<f64> {
    if (n.length() - 1.0).abs() > UNIT_TOL {
        return Err(Error::OutOfRange(format!("|n| = {} is not 1", n.length())));
    }
    for dn in [dn_a, dn_b] {
        let overlap = dot(dn, n.0);
        if overlap.abs() > TANGENT_TOL {
            return Err(Error::OutOfRange(format!(
                "derivative {dn:?} is not tangent to the sphere (n·∂n = {overlap:e})"
            )));
        }
    }
    Ok(-0.5 * dot(n.0, cross(dn_a, dn_b)))
}

/// Ω = −½·r·(∂_αr × ∂_βr) for any qubit family; reduces to the pure formula at |r| = 1.
pub fn mixed_curvature_bloch(r: &BlochVector, dr_a: Vec3, dr_b: Vec3) -> Result<f64> {
    Ok(-0.5 * dot(r.0, cross(dr_a, dr_b)))
}

/// L = c₀·I + c·σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSld {
    pub c0: f64,
    pub c: Vec3,
}

impl QubitSld {
    pub fn matrix(&self) -> ComplexMatrix {
        identity(2) * c(self.c0, 0.0) + pauli_dot(self.c)
    }
}

/// Closed-form SLD for ∂ρ = ½ dr·σ: c₀ = −(dr·r)/(1 − r²), c = dr − c₀·r.
pub fn qubit_sld_bloch(r: &BlochVector, dr: Vec3) -> Result<QubitSld> {
    let rv = r.0;
    let radial = dot(dr, rv);
    let c0 = if r.is_pure() {
        if radial.abs() > TANGENT_TOL {
            return Err(Error::OutOfRange(format!(
                "derivative leaves the Bloch sphere at a pure state (r·∂r = {radial:e})"
            )));
        }
        0.0
    } else {
        -radial / (1.0 - dot(rv, rv))
    };
    Ok(QubitSld { c0, c: [dr[0] - c0 * rv[0], dr[1] - c0 * rv[1], dr[2] - c0 * rv[2]] })
}

/// ⟨[a·σ, b·σ]⟩/(2i) = (a × b)·r
pub fn commutator_expectation_bloch(r: Vec3, a: Vec3, b: Vec3) -> f64 {
    dot(cross(a, b), r)
}

/// Indices of (ψ₁, ψ₂) in a descending qubit spectrum, where ψ₁ carries the
/// smaller eigenvalue (1 − r)/2 and ψ₂ the larger (1 + r)/2.
pub fn labelled_indices(spec: &Spectrum) -> Result<(usize, usize)> {
    if spec.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: spec.dim() });
    }
    Ok((1, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::frobenius_distance;
    use crate::sld::lyapunov_residual;
    use std::f64::consts::FRAC_PI_2;

    fn sphere(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
        (
            [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
            [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()],
            [-theta.sin() * phi.sin(), theta.sin() * phi.cos(), 0.0],
        )
    }

    #[test]
    fn pure_curvature_on_equator() {
        let (n, dt, dp) = sphere(FRAC_PI_2, 0.0);
        let n = BlochVector::new(n).unwrap();
        assert!((pure_curvature_bloch(&n, dt, dp).unwrap() + 0.5).abs() < 1e-15);
        assert!((pure_curvature_bloch(&n, dp, dt).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pure_curvature_bloch(&n, dt, dt.map(|x| 3.0 * x)).unwrap(), 0.0);
    }

    #[test]
    fn pure_curvature_preconditions() {
        let half = BlochVector::new([0.5, 0.0, 0.0]).unwrap();
        assert!(pure_curvature_bloch(&half, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]).is_err());
        let n = BlochVector::new([1.0, 0.0, 0.0]).unwrap();
        assert!(pure_curvature_bloch(&n, [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).is_err());
        assert!(BlochVector::new([1.0, 0.1, 0.0]).is_err());
    }

    #[test]
    fn mixed_curvature_examples() {
        let (n, dt, dp) = sphere(FRAC_PI_2, 0.0);
        let zero = BlochVector::new([0.0; 3]).unwrap();
        assert_eq!(mixed_curvature_bloch(&zero, [0.0; 3], [0.0; 3]).unwrap(), 0.0);
        let r = 0.5;
        let rv = BlochVector::new(n.map(|x| r * x)).unwrap();
        let omega = mixed_curvature_bloch(&rv, dt.map(|x| r * x), dp.map(|x| r * x)).unwrap();
        assert!((omega + 0.0625).abs() < 1e-15);
        let unit = BlochVector::new(n).unwrap();
        assert_eq!(mixed_curvature_bloch(&unit, dt, dp).unwrap(), pure_curvature_bloch(&unit, dt, dp).unwrap());
    }

    #[test]
    fn sld_closed_form_solves_the_equation() {
        for (rv, dr) in [
            ([0.3, -0.2, 0.5], [0.1, 0.4, -0.3]),
            ([0.0, 0.0, 0.9], [0.0, 0.0, 0.2]),
            ([0.1, 0.1, 0.1], [1.0, 0.0, 0.0]),
        ] {
            let r = BlochVector::new(rv).unwrap();
            let l = qubit_sld_bloch(&r, dr).unwrap();
            let d_rho = pauli_dot(dr) * c(0.5, 0.0);
            let res = lyapunov_residual(r.density().matrix(), &l.matrix(), &d_rho);
            assert!(res <= 1e-12, "{res}");
        }
    }

    #[test]
    fn sld_pure_tangent_is_derivative_dot_sigma() {
        let (n, dt, _) = sphere(0.7, 0.2);
        let l = qubit_sld_bloch(&BlochVector::new(n).unwrap(), dt).unwrap();
        assert_eq!(l.c0, 0.0);
        assert!(frobenius_distance(&l.matrix(), &pauli_dot(dt)).unwrap() < 1e-15);
        let zero = qubit_sld_bloch(&BlochVector::new([0.2, 0.0, 0.0]).unwrap(), [0.0; 3]).unwrap();
        assert_eq!(zero, QubitSld { c0: 0.0, c: [0.0; 3] });
        assert!(qubit_sld_bloch(&BlochVector::new(n).unwrap(), n).is_err());
    }

    #[test]
    fn fixed_length_sld_has_no_identity_part() {
        let (n, dt, _) = sphere(1.2, -0.4);
        let r = 0.6;
        let l = qubit_sld_bloch(&BlochVector::new(n.map(|x| r * x)).unwrap(), dt.map(|x| r * x)).unwrap();
        assert!(l.c0.abs() < 1e-16);
    }

    #[test]
    fn triple_product_identity() {
        assert!((commutator_expectation_bloch([1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(commutator_expectation_bloch([0.3, 0.2, 0.1], [1.0, 2.0, 3.0], [2.0, 4.0, 6.0]), 0.0);
        let (r, a, b) = ([0.3, -0.5, 0.2], [0.7, 0.1, -0.4], [-0.2, 0.9, 0.3]);
        let v = commutator_expectation_bloch(r, a, b);
        assert!((v - commutator_expectation_bloch(a, b, r)).abs() < 1e-15);
        assert!((v - commutator_expectation_bloch(b, r, a)).abs() < 1e-15);
        // Tr((C·σ)[A·σ, B·σ]) = 4i C·(A×B)
        let comm = pauli_dot(a) * pauli_dot(b) - pauli_dot(b) * pauli_dot(a);
        let t = crate::kernel::trace_product(&pauli_dot(r), &comm);
        assert!((t - c(0.0, 4.0 * v)).norm() < 1e-14);
    }

    #[test]
    fn labelled_spectrum_difference_cubed() {
        let r = 0.5;
        let rho = BlochVector::new([0.0, 0.0, r]).unwrap().density();
        let spec = crate::state::spectral_decompose(&rho, 1e-12).unwrap();
        let (i1, i2) = labelled_indices(&spec).unwrap();
        let p = spec.probabilities();
        assert!((p[i1] - (1.0 - r) / 2.0).abs() < 1e-15);
        assert!((p[i2] - (1.0 + r) / 2.0).abs() < 1e-15);
        assert!(((p[i1] - p[i2]).powi(3) + r.powi(3)).abs() < 1e-15);
    }
}
