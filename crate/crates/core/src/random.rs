//! Seeded random instances for property checks: states, derivatives, families and POVMs.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kernel::{c, ComplexMatrix, HermitianMatrix};
use crate::models::{ParamPoint, UnitaryFamily};
use crate::state::{DensityMatrix, Povm};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for draw `index` of a batch, derived from the batch's master seed.
pub fn draw_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian(rng: &mut TestRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn ginibre(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| c(gaussian(rng), gaussian(rng)) * (0.5f64).sqrt())
}

/// (A + A†)/2 for a Ginibre A, scaled by `scale`.
pub fn hermitian(rng: &mut TestRng, n: usize, scale: f64) -> HermitianMatrix {
    HermitianMatrix::hermitize(&(ginibre(rng, n) * c(scale, 0.0)))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the R-diagonal phases removed).
pub fn unitary(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    let qr = ginibre(rng, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Descending probabilities, each ≥ `floor`, consecutive gaps ≥ `min_gap`.
pub fn probabilities(rng: &mut TestRng, n: usize, floor: f64, min_gap: f64) -> Vec<f64> {
    assert!(floor * n as f64 + min_gap * (n * n) as f64 / 2.0 < 1.0, "constraints unsatisfiable");
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let free = 1.0 - floor * n as f64;
        let mut p: Vec<f64> = raw.iter().map(|x| floor + free * x / total).collect();
        p.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if p.windows(2).all(|w| w[0] - w[1] >= min_gap) {
            return p;
        }
    }
}

fn with_spectrum(u: &ComplexMatrix, p: &[f64]) -> ComplexMatrix {
    let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0))));
    u * d * u.adjoint()
}

/// A full-rank state U·diag(p)·U† with separated eigenvalues.
pub fn full_rank_state(rng: &mut TestRng, n: usize) -> DensityMatrix {
    let p = probabilities(rng, n, 0.2 / n as f64, 0.02 / n as f64);
    let u = unitary(rng, n);
    DensityMatrix::new(HermitianMatrix::hermitize(&with_spectrum(&u, &p)).into_inner())
        .expect("constructed state is valid")
}

/// A derivative tangent to the state manifold at ρ: −i[G, ρ] plus a traceless
/// change of eigenvalues in ρ's own eigenbasis.
pub fn consistent_derivative(rng: &mut TestRng, rho: &DensityMatrix, basis: &ComplexMatrix) -> HermitianMatrix {
    let n = rho.dim();
    let g = hermitian(rng, n, 1.0);
    let comm = (g.matrix() * rho.matrix() - rho.matrix() * g.matrix()) * c(0.0, -1.0);
    let mut dp: Vec<f64> = (0..n).map(|_| gaussian(rng) * 0.1).collect();
    let mean = dp.iter().sum::<f64>() / n as f64;
    dp.iter_mut().for_each(|x| *x -= mean);
    HermitianMatrix::hermitize(&(comm + with_spectrum(basis, &dp)))
}

/// ρ(α, β) = U ρ₀ U† with random full-rank, non-degenerate ρ₀ and random generators.
pub fn unitary_family(rng: &mut TestRng, n: usize) -> UnitaryFamily {
    let rho0 = full_rank_state(rng, n);
    let g1 = hermitian(rng, n, 1.0);
    let g2 = hermitian(rng, n, 1.0);
    UnitaryFamily::new(rho0, g1, g2).expect("random family is well formed")
}

pub fn projective_povm(rng: &mut TestRng, n: usize) -> Povm {
    Povm::projective(&unitary(rng, n)).expect("unitary columns give a projective POVM")
}

/// A two-coordinate point with both coordinates uniform in [−π, π).
pub fn point(rng: &mut TestRng) -> ParamPoint {
    let pi = std::f64::consts::PI;
    ParamPoint::new(vec![rng.random_range(-pi..pi), rng.random_range(-pi..pi)]).expect("finite")
}

/// Random phases e^{iφ}, φ ∈ [0, 2π).
pub fn phases(rng: &mut TestRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}
