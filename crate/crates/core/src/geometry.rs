//! Quantum geometric tensor, quantum Fisher information and the mixed-state
//! Berry curvature.
//!
//! The curvature is available by three routes:
//!
//! - the SLD commutator, Ω = (i/4)·Tr(ρ[L_α, L_β]), which has no spectral
//!   denominators and is the authoritative value;
//! - the full-rank spectral sum over the imaginary part of the double
//!   Wilczek–Zee connection, weighted by (pᵢ − pⱼ)³/(pᵢ + pⱼ)²;
//! - the low-rank spectral form: the probability-weighted pure-state Berry
//!   curvatures of the support eigenvectors plus a support-pair correction.
//!
//! Eigenvector derivatives enter only through first-order perturbation theory,
//! ⟨ψᵢ|∂ψⱼ⟩ = ⟨ψᵢ|∂ρ|ψⱼ⟩/(pⱼ − pᵢ), so every spectral quantity is gauge invariant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{eig_hermitian, HermitianMatrix};
use crate::models::{DiffScheme, ParamPoint, ParametricModel};
use crate::sld::{SldSet, CONSISTENCY_TOL};
use crate::state::{DensityMatrix, Spectrum, RANK_TOL};

/// Eigenvalue pairs closer than this are treated as degenerate by the spectral routes.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Largest imaginary residue tolerated in a quantity that must be real.
pub const REAL_TOL: f64 = 1e-10;

fn check_dims(rho: &DensityMatrix, ops: &[&HermitianMatrix]) -> Result<()> {
    for op in ops {
        if op.dim() != rho.dim() {
            return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
        }
    }
    Ok(())
}

/// Q_{αβ} = Tr(ρ L_α L_β)/4
pub fn qgt(rho: &DensityMatrix, la: &HermitianMatrix, lb: &HermitianMatrix) -> Result<Complex64> {
    check_dims(rho, &[la, lb])?;
    Ok(rho.expectation(&(la.matrix() * lb.matrix())) * 0.25)
}

/// 𝓕_{μν} = Re Tr(ρ L_μ L_ν), symmetrized.
pub fn qfi_matrix(slds: &SldSet) -> DMatrix<f64> {
    let rho = slds.state();
    let ops = slds.operators();
    let d = ops.len();
    let mut f = DMatrix::zeros(d, d);
    for mu in 0..d {
        for nu in mu..d {
            let v = rho.expectation(&(ops[mu].matrix() * ops[nu].matrix())).re;
            f[(mu, nu)] = v;
            f[(nu, mu)] = v;
        }
    }
    f
}

/// Ω_{αβ} = (i/4)·Tr(ρ[L_α, L_β])
pub fn curvature_commutator(rho: &DensityMatrix, la: &HermitianMatrix, lb: &HermitianMatrix) -> Result<f64> {
    check_dims(rho, &[la, lb])?;
    let comm = la.matrix() * lb.matrix() - lb.matrix() * la.matrix();
    let omega = Complex64::new(0.0, 0.25) * rho.expectation(&comm);
    let scale = 1f64.max(comm.iter().map(|z| z.norm()).fold(0.0, f64::max));
    if omega.im.abs() > REAL_TOL * scale {
        return Err(Error::ImaginaryResidue(omega.im));
    }
    Ok(omega.re)
}

/// Double Wilczek–Zee connection 𝒜ᵢⱼ^{αβ} = ⟨ψᵢ|∂_αψⱼ⟩⟨ψᵢ|∂_βψⱼ⟩* over the
/// requested eigenvector pairs.
#[derive(Debug, Clone)]
pub struct WilczekZeeTable {
    dim: usize,
    entries: Vec<Option<Complex64>>,
}

impl WilczekZeeTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 𝒜ᵢⱼ, or `None` when the pair was not computed.
    pub fn get(&self, i: usize, j: usize) -> Option<Complex64> {
        self.entries[i * self.dim + j]
    }

    /// ℛᵢⱼ = Re 𝒜ᵢⱼ
    pub fn real(&self, i: usize, j: usize) -> Option<f64> {
        self.get(i, j).map(|z| z.re)
    }

    /// ℐᵢⱼ = Im 𝒜ᵢⱼ
    pub fn imag(&self, i: usize, j: usize) -> Option<f64> {
        self.get(i, j).map(|z| z.im)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let n = self.dim;
        self.entries.iter().enumerate().filter_map(move |(k, e)| e.map(|z| (k / n, k % n, z)))
    }
}

fn check_derivatives(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<()> {
    for d in [da, db] {
        if d.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), found: d.dim() });
        }
    }
    Ok(())
}

/// 𝒜ᵢⱼ for the given index pairs (i ≠ j); a pair with |pᵢ − pⱼ| ≤ [`DEGENERACY_TOL`] is an error.
pub fn wilczek_zee_pairs(
    spec: &Spectrum,
    da: &HermitianMatrix,
    db: &HermitianMatrix,
    pairs: &[(usize, usize)],
) -> Result<WilczekZeeTable> {
    check_derivatives(spec, da, db)?;
    let n = spec.dim();
    let p = spec.probabilities();
    let ea = spec.to_eigenbasis(da.matrix());
    let eb = spec.to_eigenbasis(db.matrix());
    let mut entries = vec![None; n * n];
    for &(i, j) in pairs {
        if i == j || i >= n || j >= n {
            return Err(Error::OutOfRange(format!("invalid eigenvector pair ({i}, {j})")));
        }
        let gap = p[j] - p[i];
        if gap.abs() <= DEGENERACY_TOL {
            return Err(Error::Degenerate { i, j, gap: gap.abs() });
        }
        entries[i * n + j] = Some(ea[(i, j)] * eb[(i, j)].conj() / (gap * gap));
    }
    Ok(WilczekZeeTable { dim: n, entries })
}

/// 𝒜ᵢⱼ over every ordered pair i ≠ j.
pub fn wilczek_zee(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<WilczekZeeTable> {
    let n = spec.dim();
    let pairs: Vec<_> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    wilczek_zee_pairs(spec, da, db, &pairs)
}

/// Ordered pairs i ≠ j whose eigenvalues are separated by more than [`DEGENERACY_TOL`].
pub fn non_degenerate_pairs(spec: &Spectrum) -> Vec<(usize, usize)> {
    let n = spec.dim();
    let p = spec.probabilities();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && (p[i] - p[j]).abs() > DEGENERACY_TOL)
        .collect()
}

/// Ω = −2 Σ_{i<j} (pᵢ − pⱼ)³/(pᵢ + pⱼ)² ℐᵢⱼ for full-rank states.
///
/// Pairs absent from the table (degenerate ones) contribute nothing; their
/// cubic prefactor vanishes.
pub fn curvature_spectral_fullrank(spec: &Spectrum, wz: &WilczekZeeTable) -> Result<f64> {
    if !spec.is_full_rank() {
        return Err(Error::WrongBranch { rank: spec.rank(), dim: spec.dim(), expected: "low-rank" });
    }
    let p = spec.probabilities();
    let mut omega = 0.0;
    for (i, j, a) in wz.pairs() {
        if i < j {
            let diff = p[i] - p[j];
            let sum = p[i] + p[j];
            omega -= 2.0 * diff.powi(3) / (sum * sum) * a.im;
        }
    }
    Ok(omega)
}

/// Pairs needed by the low-rank formula: every ordered pair with at least one
/// support index. Degenerate support pairs are dropped when both derivatives
/// leave them uncoupled and rejected otherwise.
fn support_pairs(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<Vec<(usize, usize)>> {
    let n = spec.dim();
    let m = spec.rank();
    let p = spec.probabilities();
    let ea = spec.to_eigenbasis(da.matrix());
    let eb = spec.to_eigenbasis(db.matrix());
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (i >= m && j >= m) {
                continue;
            }
            if (p[i] - p[j]).abs() <= DEGENERACY_TOL {
                let coupling = ea[(i, j)].norm().max(eb[(i, j)].norm());
                if coupling <= CONSISTENCY_TOL {
                    continue;
                }
                return Err(Error::Degenerate { i, j, gap: (p[i] - p[j]).abs() });
            }
            pairs.push((i, j));
        }
    }
    Ok(pairs)
}

/// Pure-state Berry curvature Ω(ψᵢ) = −2 Σ_{k≠i} ℐᵢₖ of each support eigenvector.
pub fn pure_state_curvatures(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<Vec<f64>> {
    check_derivatives(spec, da, db)?;
    let pairs = support_pairs(spec, da, db)?;
    let wz = wilczek_zee_pairs(spec, da, db, &pairs)?;
    Ok(pure_curvatures_from(spec, &wz))
}

fn pure_curvatures_from(spec: &Spectrum, wz: &WilczekZeeTable) -> Vec<f64> {
    (0..spec.rank()).map(|i| -2.0 * (0..spec.dim()).filter_map(|k| wz.imag(i, k)).sum::<f64>()).collect()
}

/// Ω = Σᵢ pᵢ Ω(ψᵢ) + 4 Σ_{i≠j} pᵢpⱼ(pᵢ − pⱼ)/(pᵢ + pⱼ)² ℐᵢⱼ over the support, for rank M < N.
pub fn curvature_spectral_lowrank(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<f64> {
    if spec.is_full_rank() {
        return Err(Error::WrongBranch { rank: spec.rank(), dim: spec.dim(), expected: "full-rank" });
    }
    check_derivatives(spec, da, db)?;
    let pairs = support_pairs(spec, da, db)?;
    let wz = wilczek_zee_pairs(spec, da, db, &pairs)?;
    let pure = pure_curvatures_from(spec, &wz);
    let p = spec.probabilities();
    let m = spec.rank();
    let mut correction = 0.0;
    for (i, j, a) in wz.pairs() {
        if i < m && j < m {
            let sum = p[i] + p[j];
            correction += 4.0 * p[i] * p[j] * (p[i] - p[j]) / (sum * sum) * a.im;
        }
    }
    Ok(curvature_average(spec, &pure) + correction)
}

/// Ω′ = Σᵢ pᵢ Ω(ψᵢ) over the supplied support curvatures.
pub fn curvature_average(spec: &Spectrum, pure: &[f64]) -> f64 {
    spec.probabilities().iter().zip(pure).map(|(p, o)| p * o).sum()
}

/// Curvature by the spectral formula matching the state's rank.
pub fn curvature_spectral(spec: &Spectrum, da: &HermitianMatrix, db: &HermitianMatrix) -> Result<f64> {
    if spec.is_full_rank() {
        let wz = wilczek_zee_pairs(spec, da, db, &non_degenerate_pairs(spec))?;
        curvature_spectral_fullrank(spec, &wz)
    } else {
        curvature_spectral_lowrank(spec, da, db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Full,
    Low,
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    /// max ‖∂ρ − (Lρ+ρL)/2‖_F over axes
    pub sld: f64,
    /// max |Tr(ρL)| over axes
    pub sld_mean: f64,
    /// max |Ω_{μν} + Ω_{νμ}| before antisymmetrization
    pub curvature_antisymmetry: f64,
    /// max |Ω_{μν} + 2 Im Q_{μν}|
    pub curvature_vs_qgt: f64,
    /// max |𝓕_{μν} − 𝓕_{νμ}| before symmetrization
    pub qfi_symmetry: f64,
    /// smallest eigenvalue of 𝓕
    pub qfi_min_eigenvalue: f64,
    /// max |Ω_commutator − Ω_spectral|, absent when the spectral route declined
    pub commutator_vs_spectral: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_note: Option<String>,
    pub spectrum_reconstruction: f64,
}

/// QFI, QGT and curvature tables at one parameter point.
#[derive(Debug, Clone)]
pub struct GeometryReport {
    pub theta: Vec<f64>,
    pub qfi: DMatrix<f64>,
    pub qgt: DMatrix<Complex64>,
    pub curvature: DMatrix<f64>,
    pub branch: Branch,
    pub rank: usize,
    pub dim: usize,
    pub rank_tol: f64,
    pub residuals: Residuals,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    theta: &'a [f64],
    qfi: Vec<Vec<f64>>,
    qgt_re: Vec<Vec<f64>>,
    qgt_im: Vec<Vec<f64>>,
    curvature: Vec<Vec<f64>>,
    branch: Branch,
    rank: usize,
    dim: usize,
    rank_tol: f64,
    authoritative: &'static str,
    residuals: &'a Residuals,
}

fn rows<T: Copy + nalgebra::Scalar>(m: &DMatrix<T>, f: impl Fn(T) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(m[(i, j)])).collect()).collect()
}

impl GeometryReport {
    pub fn to_json(&self) -> serde_json::Value {
        let out = ReportJson {
            theta: &self.theta,
            qfi: rows(&self.qfi, |x| x),
            qgt_re: rows(&self.qgt, |z| z.re),
            qgt_im: rows(&self.qgt, |z| z.im),
            curvature: rows(&self.curvature, |x| x),
            branch: self.branch,
            rank: self.rank,
            dim: self.dim,
            rank_tol: self.rank_tol,
            authoritative: "commutator",
            residuals: &self.residuals,
        };
        serde_json::to_value(out).expect("report serializes")
    }
}

/// Curvature table by the commutator route, antisymmetrized, with the
/// pre-antisymmetrization residual.
pub fn curvature_table(slds: &SldSet) -> Result<(DMatrix<f64>, f64)> {
    let ops = slds.operators();
    let d = ops.len();
    let rho = slds.state();
    let mut raw = DMatrix::zeros(d, d);
    for mu in 0..d {
        for nu in 0..d {
            if mu != nu {
                raw[(mu, nu)] = curvature_commutator(rho, &ops[mu], &ops[nu])?;
            }
        }
    }
    let mut residual: f64 = 0.0;
    for mu in 0..d {
        for nu in 0..d {
            residual = residual.max((raw[(mu, nu)] + raw[(nu, mu)]).abs());
        }
    }
    let omega = (&raw - raw.transpose()) * 0.5;
    Ok((omega, residual))
}

/// Builds the report from already-solved SLDs.
pub fn report_from_slds(theta: &[f64], slds: &SldSet) -> Result<GeometryReport> {
    let rho = slds.state();
    let ops = slds.operators();
    let d = ops.len();
    let spec = slds.spectrum();

    let mut q = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    for mu in 0..d {
        for nu in 0..d {
            q[(mu, nu)] = qgt(rho, &ops[mu], &ops[nu])?;
        }
    }
    let mut qfi_raw = DMatrix::zeros(d, d);
    for mu in 0..d {
        for nu in 0..d {
            qfi_raw[(mu, nu)] = 4.0 * q[(mu, nu)].re;
        }
    }
    let mut qfi_symmetry: f64 = 0.0;
    for mu in 0..d {
        for nu in 0..d {
            qfi_symmetry = qfi_symmetry.max((qfi_raw[(mu, nu)] - qfi_raw[(nu, mu)]).abs());
        }
    }
    let qfi = (&qfi_raw + qfi_raw.transpose()) * 0.5;
    let qfi_c = qfi.map(|x| Complex64::new(x, 0.0));
    let qfi_min_eigenvalue = eig_hermitian(&HermitianMatrix::hermitize(&qfi_c))?.values.last().copied().unwrap_or(0.0);

    let (curvature, curvature_antisymmetry) = curvature_table(slds)?;
    let mut curvature_vs_qgt: f64 = 0.0;
    for mu in 0..d {
        for nu in 0..d {
            curvature_vs_qgt = curvature_vs_qgt.max((curvature[(mu, nu)] + 2.0 * q[(mu, nu)].im).abs());
        }
    }

    let derivs = slds.derivatives();
    let mut spectral_gap: f64 = 0.0;
    let mut spectral_note = None;
    'pairs: for mu in 0..d {
        for nu in mu + 1..d {
            match curvature_spectral(spec, &derivs[mu], &derivs[nu]) {
                Ok(v) => spectral_gap = spectral_gap.max((v - curvature[(mu, nu)]).abs()),
                Err(e) => {
                    spectral_note = Some(format!("spectral route declined for axes ({mu}, {nu}): {e}"));
                    break 'pairs;
                }
            }
        }
    }

    let residuals = Residuals {
        sld: slds.residuals().iter().copied().fold(0.0, f64::max),
        sld_mean: slds.means().iter().copied().fold(0.0, f64::max),
        curvature_antisymmetry,
        curvature_vs_qgt,
        qfi_symmetry,
        qfi_min_eigenvalue,
        commutator_vs_spectral: if spectral_note.is_some() { None } else { Some(spectral_gap) },
        spectral_note,
        spectrum_reconstruction: spec.reconstruction_residual(),
    };
    Ok(GeometryReport {
        theta: theta.to_vec(),
        qfi,
        qgt: q,
        curvature,
        branch: if spec.is_full_rank() { Branch::Full } else { Branch::Low },
        rank: spec.rank(),
        dim: spec.dim(),
        rank_tol: spec.rank_tol(),
        residuals,
    })
}

pub fn geometry_report(model: &dyn ParametricModel, theta: &ParamPoint, scheme: &DiffScheme) -> Result<GeometryReport> {
    geometry_report_with_rank_tol(model, theta, scheme, RANK_TOL)
}

pub fn geometry_report_with_rank_tol(
    model: &dyn ParametricModel,
    theta: &ParamPoint,
    scheme: &DiffScheme,
    rank_tol: f64,
) -> Result<GeometryReport> {
    let slds = SldSet::from_model(model, theta, scheme, rank_tol)?;
    report_from_slds(theta.coords(), &slds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ConstantModel, EmbeddedQubit, MixedBloch, PureBloch};
    use crate::state::spectral_decompose;
    use std::f64::consts::FRAC_PI_2;

    fn slds(model: &dyn ParametricModel, theta: [f64; 2]) -> SldSet {
        SldSet::from_model(model, &theta.into(), &DiffScheme::default(), RANK_TOL).unwrap()
    }

    #[test]
    fn maximally_mixed_has_zero_qgt() {
        let set = slds(&MixedBloch::new(0.0).unwrap(), [0.4, 1.1]);
        let q = qgt(set.state(), &set.operators()[0], &set.operators()[1]).unwrap();
        assert_eq!(q, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn pure_bloch_equator_tables() {
        let set = slds(&PureBloch, [FRAC_PI_2, 0.0]);
        let [lt, lp] = [&set.operators()[0], &set.operators()[1]];
        let qtt = qgt(set.state(), lt, lt).unwrap();
        assert!((qtt.re - 0.25).abs() < 1e-15 && qtt.im == 0.0);
        let qtp = qgt(set.state(), lt, lp).unwrap();
        assert!((qtp.im - 0.25).abs() < 1e-15);
        let f = qfi_matrix(&set);
        assert!((f[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((f[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(f[(0, 1)].abs() < 1e-15);
        assert!((curvature_commutator(set.state(), lt, lp).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(curvature_commutator(set.state(), lt, lt).unwrap(), 0.0);
    }

    #[test]
    fn mixed_bloch_equator_tables() {
        let set = slds(&MixedBloch::new(0.5).unwrap(), [FRAC_PI_2, 0.0]);
        let f = qfi_matrix(&set);
        assert!((f[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((f[(1, 1)] - 0.25).abs() < 1e-15);
        let omega = curvature_commutator(set.state(), &set.operators()[0], &set.operators()[1]).unwrap();
        assert!((omega + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn constant_model_has_zero_qfi() {
        let m = ConstantModel::new(DensityMatrix::maximally_mixed(3), 2).unwrap();
        let f = qfi_matrix(&slds(&m, [0.1, 0.2]));
        assert!(f.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wilczek_zee_on_mixed_bloch() {
        let set = slds(&MixedBloch::new(0.5).unwrap(), [FRAC_PI_2, 0.0]);
        let spec = set.spectrum();
        let d = set.derivatives();
        let wz = wilczek_zee(spec, &d[0], &d[1]).unwrap();
        // Descending order puts ψ₁ (eigenvalue (1−r)/2) at index 1.
        let i12 = wz.imag(1, 0).unwrap();
        assert!((i12 + 0.25).abs() < 1e-14, "{i12}");
        assert!((wz.imag(0, 1).unwrap() - 0.25).abs() < 1e-14);
        let full = curvature_spectral_fullrank(spec, &wz).unwrap();
        assert!((full + 0.0625).abs() < 1e-14);
    }

    #[test]
    fn wilczek_zee_vanishes_with_zero_derivative() {
        let set = slds(&MixedBloch::new(0.5).unwrap(), [0.3, 0.3]);
        let wz = wilczek_zee(set.spectrum(), &HermitianMatrix::zeros(2), &set.derivatives()[1]).unwrap();
        assert!(wz.pairs().all(|(_, _, z)| z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn degenerate_pair_is_rejected_by_table_and_skipped_by_route() {
        let set = slds(&MixedBloch::new(0.0).unwrap(), [0.3, 0.3]);
        let d = set.derivatives();
        assert!(matches!(wilczek_zee(set.spectrum(), &d[0], &d[1]), Err(Error::Degenerate { .. })));
        assert_eq!(curvature_spectral(set.spectrum(), &d[0], &d[1]).unwrap(), 0.0);
    }

    #[test]
    fn branch_mismatch_errors() {
        let full = slds(&MixedBloch::new(0.5).unwrap(), [0.3, 0.3]);
        let d = full.derivatives();
        assert!(matches!(curvature_spectral_lowrank(full.spectrum(), &d[0], &d[1]), Err(Error::WrongBranch { .. })));
        let low = slds(&PureBloch, [0.3, 0.3]);
        let d = low.derivatives();
        let wz = wilczek_zee(low.spectrum(), &d[0], &d[1]).unwrap();
        assert!(matches!(curvature_spectral_fullrank(low.spectrum(), &wz), Err(Error::WrongBranch { .. })));
    }

    #[test]
    fn embedded_qubit_low_rank_route() {
        let set = slds(&EmbeddedQubit::new(4, 0.5).unwrap(), [FRAC_PI_2, 0.0]);
        let d = set.derivatives();
        let low = curvature_spectral_lowrank(set.spectrum(), &d[0], &d[1]).unwrap();
        assert!((low + 0.0625).abs() < 1e-12, "{low}");
        let comm = curvature_commutator(set.state(), &set.operators()[0], &set.operators()[1]).unwrap();
        assert!((comm + 0.0625).abs() < 1e-12);
    }

    #[test]
    fn rank_one_low_rank_route_is_pure_berry_curvature() {
        let theta = [1.1, 0.4];
        let set = slds(&PureBloch, theta);
        let d = set.derivatives();
        let low = curvature_spectral_lowrank(set.spectrum(), &d[0], &d[1]).unwrap();
        assert!((low + 0.5 * theta[0].sin()).abs() < 1e-12);
        let pure = pure_state_curvatures(set.spectrum(), &d[0], &d[1]).unwrap();
        assert_eq!(pure.len(), 1);
        assert!((curvature_average(set.spectrum(), &pure) - low).abs() < 1e-15);
    }

    #[test]
    fn curvature_average_on_mixed_bloch() {
        let r = 0.5;
        let set = slds(&MixedBloch::new(r).unwrap(), [FRAC_PI_2, 0.0]);
        let d = set.derivatives();
        let pure = pure_state_curvatures(set.spectrum(), &d[0], &d[1]).unwrap();
        // aligned eigenvector: −sinθ/2; anti-aligned: +sinθ/2
        assert!((pure[0] + 0.5).abs() < 1e-14 && (pure[1] - 0.5).abs() < 1e-14);
        let avg = curvature_average(set.spectrum(), &pure);
        assert!((avg + 0.25).abs() < 1e-14);
        assert_eq!(curvature_average(set.spectrum(), &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn degenerate_support_without_coupling_is_zero() {
        // ρ = R(α, β)·diag(½, ½, 0)·Rᵀ with real rotations: equal support weights, ℐ = 0.
        struct RealRotation;
        impl ParametricModel for RealRotation {
            fn name(&self) -> &str {
                "real-rotation"
            }
            fn dim(&self) -> usize {
                3
            }
            fn param_count(&self) -> usize {
                2
            }
            fn density(&self, t: &[f64]) -> Result<DensityMatrix> {
                let (ca, sa, cb, sb) = (t[0].cos(), t[0].sin(), t[1].cos(), t[1].sin());
                let rx = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca]);
                let ry = DMatrix::from_row_slice(3, 3, &[cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb]);
                let r = rx * ry;
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 0.5, 0.0]));
                DensityMatrix::new((&r * d * r.transpose()).map(|x| Complex64::new(x, 0.0)))
            }
        }
        let set =
            SldSet::from_model(&RealRotation, &[0.4, 0.7].into(), &DiffScheme::richardson(1e-4).unwrap(), RANK_TOL)
                .unwrap();
        let d = set.derivatives();
        let low = curvature_spectral_lowrank(set.spectrum(), &d[0], &d[1]).unwrap();
        assert!(low.abs() < 1e-12);
    }

    #[test]
    fn report_for_pure_bloch() {
        let r = geometry_report(&PureBloch, &[FRAC_PI_2, 0.0].into(), &DiffScheme::default()).unwrap();
        assert_eq!(r.branch, Branch::Low);
        assert!((r.curvature[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((r.curvature[(1, 0)] - 0.5).abs() < 1e-15);
        assert!((r.qgt[(0, 1)].im - 0.25).abs() < 1e-15);
        assert!((r.qfi[(0, 0)] - 1.0).abs() < 1e-15 && (r.qfi[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(r.residuals.commutator_vs_spectral.unwrap() < 1e-12);
        let json = r.to_json();
        assert_eq!(json["branch"], "low");
        assert_eq!(json["qfi"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn report_for_maximally_mixed_is_zero() {
        let r = geometry_report(&MixedBloch::new(0.0).unwrap(), &[1.0, 1.0].into(), &DiffScheme::default()).unwrap();
        assert!(r.qfi.iter().all(|&x| x == 0.0));
        assert!(r.curvature.iter().all(|&x| x == 0.0));
        assert!(r.qgt.iter().all(|z| z.norm() == 0.0));
        assert_eq!(r.branch, Branch::Full);
    }

    #[test]
    fn one_parameter_report() {
        let m = ConstantModel::new(DensityMatrix::maximally_mixed(2), 1).unwrap();
        let r = geometry_report(&m, &ParamPoint::new(vec![0.0]).unwrap(), &DiffScheme::default()).unwrap();
        assert_eq!(r.curvature.shape(), (1, 1));
        assert_eq!(r.curvature[(0, 0)], 0.0);
    }

    #[test]
    fn spectrum_reused_for_gauge_check() {
        let set = slds(&MixedBloch::new(0.3).unwrap(), [0.9, 2.0]);
        let spec = spectral_decompose(set.state(), RANK_TOL).unwrap();
        let d = set.derivatives();
        let a = wilczek_zee(&spec, &d[0], &d[1]).unwrap();
        let b = wilczek_zee(&spec.with_phases(&[1.3, -2.2]), &d[0], &d[1]).unwrap();
        for (i, j, z) in a.pairs() {
            assert!((z - b.get(i, j).unwrap()).norm() < 1e-14);
        }
    }
}
