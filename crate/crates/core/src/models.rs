//! Parametric state families ρ(θ) and the finite-difference engine.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{c, eig_hermitian, frobenius_norm, identity, pauli_dot, ComplexMatrix, Eigen, HermitianMatrix};
use crate::state::DensityMatrix;

/// A point θ = (θ₁, …, θ_d) in parameter space. Angles are in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::OutOfRange("parameter point needs at least one coordinate".into()));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::OutOfRange(format!("non-finite coordinate {x}")));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, axis: usize, h: f64) -> Self {
        let mut v = self.0.clone();
        v[axis] += h;
        Self(v)
    }
}

impl From<[f64; 2]> for ParamPoint {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v.to_vec()).expect("finite coordinates")
    }
}

/// A differentiable family of density matrices.
pub trait ParametricModel: Send + Sync {
    fn name(&self) -> &str;

    /// Hilbert-space dimension N.
    fn dim(&self) -> usize;

    /// Number of parameters d.
    fn param_count(&self) -> usize;

    /// ρ(θ). `theta` has exactly `param_count()` entries.
    fn density(&self, theta: &[f64]) -> Result<DensityMatrix>;

    /// ∂ρ/∂θ_axis in closed form, when the model has one.
    fn analytic_derivative(&self, _theta: &[f64], _axis: usize) -> Option<HermitianMatrix> {
        None
    }

    fn metadata(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
}

fn check_point(model: &dyn ParametricModel, theta: &ParamPoint) -> Result<()> {
    if theta.len() != model.param_count() {
        return Err(Error::DimensionMismatch { expected: model.param_count(), found: theta.len() });
    }
    Ok(())
}

pub fn evaluate(model: &dyn ParametricModel, theta: &ParamPoint) -> Result<DensityMatrix> {
    check_point(model, theta)?;
    model.density(theta.coords())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMethod {
    /// (f(θ+ε) − f(θ−ε)) / 2ε
    Central,
    /// (4·D(ε/2) − D(ε)) / 3 on top of central differences.
    Richardson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffScheme {
    pub method: DiffMethod,
    pub step: f64,
    /// Use the model's closed-form derivative when it has one.
    pub prefer_analytic: bool,
}

pub const DEFAULT_STEP: f64 = 1e-5;

impl Default for DiffScheme {
    fn default() -> Self {
        Self { method: DiffMethod::Central, step: DEFAULT_STEP, prefer_analytic: true }
    }
}

impl DiffScheme {
    pub fn new(method: DiffMethod, step: f64) -> Result<Self> {
        let s = Self { method, step, prefer_analytic: true };
        s.validate()?;
        Ok(s)
    }

    pub fn richardson(step: f64) -> Result<Self> {
        Self::new(DiffMethod::Richardson, step)
    }

    /// Always difference, even when a closed form exists.
    pub fn numeric(self) -> Self {
        Self { prefer_analytic: false, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-9..=1e-2).contains(&self.step) {
            return Err(Error::InvalidStep(self.step));
        }
        Ok(())
    }
}

/// Values the differencing engine can combine linearly.
pub trait Differentiable: Sized {
    /// a·x + b·y
    fn axpby(a: f64, x: &Self, b: f64, y: &Self) -> Self;
    fn size(&self) -> f64;
}

impl Differentiable for ComplexMatrix {
    fn axpby(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        x * c(a, 0.0) + y * c(b, 0.0)
    }

    fn size(&self) -> f64 {
        frobenius_norm(self)
    }
}

impl Differentiable for Vec<f64> {
    fn axpby(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        x.iter().zip(y).map(|(u, v)| a * u + b * v).collect()
    }

    fn size(&self) -> f64 {
        self.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Relative disagreement above which two step sizes are treated as round-off.
const UNDERFLOW_RATIO: f64 = 1e-4;

/// Differentiates `f` along `axis` at `theta` with the given scheme.
///
/// Two step sizes are always evaluated (ε and 2ε for central, ε and ε/2 for
/// Richardson). If they disagree by more than 1e-4 relative to the size of
/// the function value the step is rejected as round-off dominated.
pub fn difference<T, F>(f: F, theta: &ParamPoint, axis: usize, scheme: &DiffScheme) -> Result<T>
where
    T: Differentiable,
    F: Fn(&ParamPoint) -> Result<T>,
{
    scheme.validate()?;
    if axis >= theta.len() {
        return Err(Error::OutOfRange(format!("axis {axis} with {} parameters", theta.len())));
    }
    let central = |h: f64| -> Result<T> {
        let plus = f(&theta.shifted(axis, h))?;
        let minus = f(&theta.shifted(axis, -h))?;
        Ok(T::axpby(0.5 / h, &plus, -0.5 / h, &minus))
    };
    let eps = scheme.step;
    let base = f(theta)?.size();
    let (fine, coarse) = match scheme.method {
        DiffMethod::Central => (central(eps)?, central(2.0 * eps)?),
        DiffMethod::Richardson => (central(eps / 2.0)?, central(eps)?),
    };
    let gap = T::axpby(1.0, &fine, -1.0, &coarse).size();
    let scale = base.max(fine.size()).max(f64::MIN_POSITIVE);
    if gap / scale > UNDERFLOW_RATIO {
        return Err(Error::StepUnderflow { relative: gap / scale });
    }
    Ok(match scheme.method {
        DiffMethod::Central => fine,
        DiffMethod::Richardson => T::axpby(4.0 / 3.0, &fine, -1.0 / 3.0, &coarse),
    })
}

/// ∂ρ/∂θ_axis, analytic when available (and allowed), otherwise differenced and Hermitized.
pub fn derivative(
    model: &dyn ParametricModel,
    theta: &ParamPoint,
    axis: usize,
    scheme: &DiffScheme,
) -> Result<HermitianMatrix> {
    check_point(model, theta)?;
    if axis >= model.param_count() {
        return Err(Error::OutOfRange(format!("axis {axis} for a model with {} parameters", model.param_count())));
    }
    if scheme.prefer_analytic {
        if let Some(d) = model.analytic_derivative(theta.coords(), axis) {
            return Ok(d);
        }
    }
    let d = difference(|p| Ok(evaluate(model, p)?.matrix().clone()), theta, axis, scheme)?;
    Ok(HermitianMatrix::hermitize(&d))
}

/// All d partial derivatives at θ.
pub fn gradient(model: &dyn ParametricModel, theta: &ParamPoint, scheme: &DiffScheme) -> Result<Vec<HermitianMatrix>> {
    (0..model.param_count()).map(|axis| derivative(model, theta, axis, scheme)).collect()
}

fn bloch_state(r: [f64; 3]) -> DensityMatrix {
    let m = (identity(2) + pauli_dot(r)) * c(0.5, 0.0);
    DensityMatrix::new(m).expect("Bloch vector inside the ball")
}

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn unit_vector_derivative(theta: f64, phi: f64, axis: usize) -> [f64; 3] {
    match axis {
        0 => [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()],
        _ => [-theta.sin() * phi.sin(), theta.sin() * phi.cos(), 0.0],
    }
}

/// Pure qubit ρ = (I + n·σ)/2 with n = (sinθcosφ, sinθsinφ, cosθ).
#[derive(Debug, Clone, Default)]
pub struct PureBloch;

impl ParametricModel for PureBloch {
    fn name(&self) -> &str {
        "pure-bloch"
    }
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        2
    }
    fn density(&self, theta: &[f64]) -> Result<DensityMatrix> {
        Ok(bloch_state(unit_vector(theta[0], theta[1])))
    }
    fn analytic_derivative(&self, theta: &[f64], axis: usize) -> Option<HermitianMatrix> {
        let dn = unit_vector_derivative(theta[0], theta[1], axis);
        Some(HermitianMatrix::hermitize(&(pauli_dot(dn) * c(0.5, 0.0))))
    }
}

/// Mixed qubit ρ = (I + r·n·σ)/2 with fixed Bloch radius r ∈ [0, 1).
#[derive(Debug, Clone)]
pub struct MixedBloch {
    radius: f64,
}

impl MixedBloch {
    pub fn new(radius: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&radius) {
            return Err(Error::OutOfRange(format!("mixed-bloch radius r = {radius} must satisfy 0 ≤ r < 1")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ParametricModel for MixedBloch {
    fn name(&self) -> &str {
        "mixed-bloch"
    }
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        2
    }
    fn density(&self, theta: &[f64]) -> Result<DensityMatrix> {
        let n = unit_vector(theta[0], theta[1]);
        Ok(bloch_state(n.map(|x| self.radius * x)))
    }
    fn analytic_derivative(&self, theta: &[f64], axis: usize) -> Option<HermitianMatrix> {
        let dn = unit_vector_derivative(theta[0], theta[1], axis);
        Some(HermitianMatrix::hermitize(&(pauli_dot(dn) * c(0.5 * self.radius, 0.0))))
    }
    fn metadata(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("r".to_string(), self.radius)])
    }
}

/// Mixed qubit in the top-left 2×2 block of an N×N zero-padded matrix (rank ≤ 2 < N).
#[derive(Debug, Clone)]
pub struct EmbeddedQubit {
    dim: usize,
    inner: MixedBloch,
}

impl EmbeddedQubit {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::OutOfRange(format!("embedded-qubit dimension {dim} must be ≥ 2")));
        }
        Ok(Self { dim, inner: MixedBloch::new(radius)? })
    }

    fn embed(&self, block: &ComplexMatrix) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        m.view_mut((0, 0), (2, 2)).copy_from(block);
        m
    }
}

impl ParametricModel for EmbeddedQubit {
    fn name(&self) -> &str {
        "embedded-qubit"
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_count(&self) -> usize {
        2
    }
    fn density(&self, theta: &[f64]) -> Result<DensityMatrix> {
        let block = self.inner.density(theta)?;
        DensityMatrix::new(self.embed(block.matrix()))
    }
    fn analytic_derivative(&self, theta: &[f64], axis: usize) -> Option<HermitianMatrix> {
        let block = self.inner.analytic_derivative(theta, axis)?;
        Some(HermitianMatrix::hermitize(&self.embed(block.matrix())))
    }
    fn metadata(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("r".to_string(), self.inner.radius), ("n".to_string(), self.dim as f64)])
    }
}

/// e^{−iaG} from a Hermitian eigendecomposition of G.
pub fn expm_hermitian(eig: &Eigen, a: f64) -> ComplexMatrix {
    let phases =
        DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&l| Complex64::from_polar(1.0, -a * l)));
    &eig.vectors * DMatrix::from_diagonal(&phases) * eig.vectors.adjoint()
}

/// ρ(α, β) = U ρ₀ U† with U = e^{−iαG₁} e^{−iβG₂}.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    rho0: DensityMatrix,
    g1: HermitianMatrix,
    g2: HermitianMatrix,
    eig1: Eigen,
    eig2: Eigen,
}

impl UnitaryFamily {
    pub fn new(rho0: DensityMatrix, g1: HermitianMatrix, g2: HermitianMatrix) -> Result<Self> {
        let n = rho0.dim();
        for g in [&g1, &g2] {
            if g.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.dim() });
            }
        }
        let eig1 = eig_hermitian(&g1)?;
        let eig2 = eig_hermitian(&g2)?;
        Ok(Self { rho0, g1, g2, eig1, eig2 })
    }

    pub fn base_state(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn generators(&self) -> (&HermitianMatrix, &HermitianMatrix) {
        (&self.g1, &self.g2)
    }

    fn unitaries(&self, theta: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
        (expm_hermitian(&self.eig1, theta[0]), expm_hermitian(&self.eig2, theta[1]))
    }

    fn rho(&self, theta: &[f64]) -> ComplexMatrix {
        let (u1, u2) = self.unitaries(theta);
        let u = &u1 * &u2;
        &u * self.rho0.matrix() * u.adjoint()
    }
}

fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

impl ParametricModel for UnitaryFamily {
    fn name(&self) -> &str {
        "unitary-family"
    }
    fn dim(&self) -> usize {
        self.rho0.dim()
    }
    fn param_count(&self) -> usize {
        2
    }
    fn density(&self, theta: &[f64]) -> Result<DensityMatrix> {
        let m = self.rho(theta);
        // Unitary conjugation preserves validity; only Hermitize round-off.
        DensityMatrix::new(HermitianMatrix::hermitize(&m).into_inner())
    }
    fn analytic_derivative(&self, theta: &[f64], axis: usize) -> Option<HermitianMatrix> {
        let rho = self.rho(theta);
        // ∂_α ρ = −i[G₁, ρ];  ∂_β ρ = −i[U₁G₂U₁†, ρ]
        let generator = match axis {
            0 => self.g1.matrix().clone(),
            _ => {
                let (u1, _) = self.unitaries(theta);
                &u1 * self.g2.matrix() * u1.adjoint()
            }
        };
        let d = commutator(&generator, &rho) * c(0.0, -1.0);
        Some(HermitianMatrix::hermitize(&d))
    }
}

/// A θ-independent state with `params` dummy parameters.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    rho: DensityMatrix,
    params: usize,
}

impl ConstantModel {
    pub fn new(rho: DensityMatrix, params: usize) -> Result<Self> {
        if params == 0 {
            return Err(Error::OutOfRange("constant model needs at least one parameter".into()));
        }
        Ok(Self { rho, params })
    }
}

impl ParametricModel for ConstantModel {
    fn name(&self) -> &str {
        "constant"
    }
    fn dim(&self) -> usize {
        self.rho.dim()
    }
    fn param_count(&self) -> usize {
        self.params
    }
    fn density(&self, _theta: &[f64]) -> Result<DensityMatrix> {
        Ok(self.rho.clone())
    }
    fn analytic_derivative(&self, _theta: &[f64], _axis: usize) -> Option<HermitianMatrix> {
        Some(HermitianMatrix::zeros(self.rho.dim()))
    }
}

/// Builds a zoo model from its command-line name and `key=value` arguments.
///
/// `unitary-family` additionally needs the base state and both generators.
pub fn from_spec(
    name: &str,
    args: &BTreeMap<String, String>,
    unitary: Option<(ComplexMatrix, ComplexMatrix, ComplexMatrix)>,
) -> Result<Box<dyn ParametricModel>> {
    let number = |key: &str| -> Result<Option<f64>> {
        args.get(key)
            .map(|v| {
                v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("model argument {key}={v} is not a number")))
            })
            .transpose()
    };
    let allowed: &[&str] = match name {
        "pure-bloch" | "unitary-family" => &[],
        "mixed-bloch" => &["r"],
        "embedded-qubit" => &["r", "n"],
        other => return Err(Error::Parse(format!("unknown model \"{other}\""))),
    };
    if let Some(k) = args.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Parse(format!("model {name} does not take argument \"{k}\"")));
    }
    Ok(match name {
        "pure-bloch" => Box::new(PureBloch),
        "mixed-bloch" => Box::new(MixedBloch::new(number("r")?.unwrap_or(0.5))?),
        "embedded-qubit" => {
            let n = number("n")?.unwrap_or(4.0);
            if n.fract() != 0.0 || n < 2.0 {
                return Err(Error::OutOfRange(format!("embedded-qubit n = {n}")));
            }
            Box::new(EmbeddedQubit::new(n as usize, number("r")?.unwrap_or(0.5))?)
        }
        _ => {
            let (rho0, g1, g2) = unitary
                .ok_or_else(|| Error::Parse("unitary-family needs --rho0, --g1 and --g2 matrix files".into()))?;
            Box::new(UnitaryFamily::new(
                DensityMatrix::new(rho0)?,
                HermitianMatrix::new(g1)?,
                HermitianMatrix::new(g2)?,
            )?)
        }
    })
}
