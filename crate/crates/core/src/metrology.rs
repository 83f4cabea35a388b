//! Classical Fisher information, regrets, the incompatibility coefficient and
//! audits of the two-parameter trade-off inequalities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{curvature_commutator, qfi_matrix};
use crate::models::{self, difference, DiffScheme, ParamPoint, ParametricModel};
use crate::sld::{sld_expectations, SldSet};
use crate::state::{born_probabilities, Povm, RANK_TOL};

/// Outcomes with probability at or below this are left out of the Fisher sum.
pub const PROB_FLOOR: f64 = 1e-12;
/// Slack within which regrets, C² and square-root arguments are clamped.
pub const CLAMP_SLACK: f64 = 1e-9;
/// Quantum Fisher information at or below this makes regrets and C² undefined.
pub const QFI_FLOOR: f64 = 1e-12;
/// |∂q| above which a floored outcome is flagged as a singular point.
const SINGULAR_DERIVATIVE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalFisher {
    pub value: f64,
    /// Outcomes whose probability fell below [`PROB_FLOOR`].
    pub excluded: Vec<usize>,
    /// Excluded outcomes whose probability derivative did not vanish.
    pub singular: Vec<usize>,
}

/// F_α = Σ_m (∂_α q_m)²/q_m, with q_m = Tr(ρΠ_m) differenced directly.
pub fn classical_fisher(
    model: &dyn ParametricModel,
    povm: &Povm,
    theta: &ParamPoint,
    axis: usize,
    scheme: &DiffScheme,
) -> Result<ClassicalFisher> {
    let born = |p: &ParamPoint| born_probabilities(&models::evaluate(model, p)?, povm);
    let q = born(theta)?;
    let dq = difference(born, theta, axis, scheme)?;
    let mut value = 0.0;
    let mut excluded = Vec::new();
    let mut singular = Vec::new();
    for (m, (&qm, &dqm)) in q.iter().zip(&dq).enumerate() {
        if qm <= PROB_FLOOR {
            excluded.push(m);
            if dqm.abs() > SINGULAR_DERIVATIVE {
                log::warn!("outcome {m} has q = {qm:e} but ∂q = {dqm:e}: singular measurement point");
                singular.push(m);
            }
        } else {
            value += dqm * dqm / qm;
        }
    }
    if excluded.len() == q.len() {
        return Err(Error::DegenerateMeasurement);
    }
    Ok(ClassicalFisher { value, excluded, singular })
}

/// Δ² = (𝓕 − F)/𝓕, clamped to [0, 1].
pub fn regret(qfi: f64, cfi: f64) -> Result<f64> {
    if qfi <= QFI_FLOOR || !qfi.is_finite() {
        return Err(Error::UndefinedRegret(qfi));
    }
    if cfi > qfi + CLAMP_SLACK {
        return Err(Error::MonotonicityViolation { qfi, cfi });
    }
    Ok(((qfi - cfi) / qfi).clamp(0.0, 1.0))
}

/// C² = |Im⟨L_αL_β⟩|²/(𝓕_α𝓕_β), clamped to [0, 1] within [`CLAMP_SLACK`].
pub fn c_squared(im_ll: f64, qfi_a: f64, qfi_b: f64) -> Result<f64> {
    if qfi_a <= QFI_FLOOR || qfi_b <= QFI_FLOOR {
        return Err(Error::UndefinedIncompatibility(qfi_a, qfi_b));
    }
    let c2 = im_ll * im_ll / (qfi_a * qfi_b);
    if c2 > 1.0 + CLAMP_SLACK {
        return Err(Error::IncompatibilityOutOfRange(c2));
    }
    Ok(c2.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Sides {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, slack: lhs - rhs }
    }
}

/// Everything entering the regret trade-off for one (α, β) pair and POVM.
#[derive(Debug, Clone, Serialize)]
pub struct TradeoffAudit {
    pub theta: Vec<f64>,
    pub axes: [usize; 2],
    /// 𝓕_α, 𝓕_β
    pub qfi: [f64; 2],
    /// F_α, F_β
    pub cfi: [f64; 2],
    /// Δ_α², Δ_β²
    pub regret: [f64; 2],
    /// δ² = 𝓕 − F
    pub gap: [f64; 2],
    pub im_ll: f64,
    pub c2: f64,
    pub curvature: f64,
    /// Δ_α² + Δ_β² + 2√(1 − C²)Δ_αΔ_β ≥ C²
    pub eq1: Sides,
    /// 𝓕_βδ_α² + 𝓕_αδ_β² + 2δ_αδ_β√(𝓕_α𝓕_β − 4Ω²) ≥ 4Ω²
    pub eq17: Sides,
    /// 𝓕_α𝓕_β − 4Ω²
    pub eq18_slack: f64,
    /// Notes on clamped quantities and singular measurement points.
    pub flags: Vec<String>,
}

impl TradeoffAudit {
    pub fn min_slack(&self) -> f64 {
        self.eq1.slack.min(self.eq17.slack).min(self.eq18_slack)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("audit serializes")
    }
}

fn clamped_sqrt(arg: f64, what: &str, flags: &mut Vec<String>) -> Result<f64> {
    if arg >= 0.0 {
        return Ok(arg.sqrt());
    }
    if arg >= -CLAMP_SLACK {
        flags.push(format!("{what} argument {arg:e} clamped to 0"));
        return Ok(0.0);
    }
    Err(Error::NegativeSqrtArgument(arg))
}

pub fn tradeoff_audit(
    model: &dyn ParametricModel,
    povm: &Povm,
    theta: &ParamPoint,
    axes: (usize, usize),
    scheme: &DiffScheme,
) -> Result<TradeoffAudit> {
    let (a, b) = axes;
    let d = model.param_count();
    if a >= d || b >= d || a == b {
        return Err(Error::OutOfRange(format!("axes ({a}, {b}) for a {d}-parameter model")));
    }
    if povm.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: povm.dim() });
    }
    let slds = SldSet::from_model(model, theta, scheme, RANK_TOL)?;
    let f = qfi_matrix(&slds);
    let (la, lb) = (&slds.operators()[a], &slds.operators()[b]);
    let im_ll = sld_expectations(slds.state(), la, lb)?.im;
    let omega = curvature_commutator(slds.state(), la, lb)?;
    let qfi = [f[(a, a)], f[(b, b)]];

    let mut flags = Vec::new();
    let mut cfi = [0.0; 2];
    for (slot, axis) in [a, b].into_iter().enumerate() {
        let cf = classical_fisher(model, povm, theta, axis, scheme)?;
        if !cf.singular.is_empty() {
            flags.push(format!("axis {axis}: singular outcomes {:?}", cf.singular));
        }
        cfi[slot] = cf.value;
    }

    let regret = [regret(qfi[0], cfi[0])?, regret(qfi[1], cfi[1])?];
    let c2 = c_squared(im_ll, qfi[0], qfi[1])?;
    let gap = [(qfi[0] - cfi[0]).max(0.0), (qfi[1] - cfi[1]).max(0.0)];

    let root = clamped_sqrt(1.0 - c2, "1 − C²", &mut flags)?;
    let eq1 = Sides::new(regret[0] + regret[1] + 2.0 * root * regret[0].sqrt() * regret[1].sqrt(), c2);

    let bound = 4.0 * omega * omega;
    let eq18_slack = qfi[0] * qfi[1] - bound;
    let root17 = clamped_sqrt(eq18_slack, "𝓕_α𝓕_β − 4Ω²", &mut flags)?;
    let eq17 = Sides::new(qfi[1] * gap[0] + qfi[0] * gap[1] + 2.0 * gap[0].sqrt() * gap[1].sqrt() * root17, bound);

    Ok(TradeoffAudit {
        theta: theta.coords().to_vec(),
        axes: [a, b],
        qfi,
        cfi,
        regret,
        gap,
        im_ll,
        c2,
        curvature: omega,
        eq1,
        eq17,
        eq18_slack,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{c, pauli, HermitianMatrix};
    use crate::models::{ConstantModel, PureBloch, UnitaryFamily};
    use crate::state::DensityMatrix;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn sigma_z_is_optimal_for_polar_angle() {
        let z = Povm::sigma_z();
        for theta in [0.3, FRAC_PI_2, 2.5] {
            let p: ParamPoint = [theta, 0.7].into();
            let f = classical_fisher(&PureBloch, &z, &p, 0, &DiffScheme::default()).unwrap();
            assert!((f.value - 1.0).abs() < 1e-9, "{}", f.value);
            let f = classical_fisher(&PureBloch, &z, &p, 1, &DiffScheme::default()).unwrap();
            assert!(f.value.abs() < 1e-12);
        }
    }

    #[test]
    fn removable_zero_at_the_pole() {
        let f = classical_fisher(&PureBloch, &Povm::sigma_z(), &[0.0, 0.0].into(), 1, &DiffScheme::default()).unwrap();
        assert_eq!(f.excluded, vec![1]);
        assert!(f.singular.is_empty());
    }

    #[test]
    fn constant_model_has_no_classical_information() {
        let m = ConstantModel::new(DensityMatrix::maximally_mixed(2), 2).unwrap();
        let f = classical_fisher(&m, &Povm::sigma_z(), &[0.1, 0.2].into(), 0, &DiffScheme::default()).unwrap();
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn regret_examples() {
        assert_eq!(regret(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(regret(1.0, 0.0).unwrap(), 1.0);
        assert!((regret(1.0, 0.75).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(regret(0.0, 0.0), Err(Error::UndefinedRegret(_))));
        assert!(matches!(regret(1.0, 1.1), Err(Error::MonotonicityViolation { .. })));
        assert_eq!(regret(1.0, 1.0 + 5e-10).unwrap(), 0.0);
    }

    #[test]
    fn c_squared_examples() {
        assert_eq!(c_squared(0.0, 1.0, 2.0).unwrap(), 0.0);
        assert!((c_squared(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((c_squared(0.125, 0.25, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(c_squared(1.0, 0.0, 1.0), Err(Error::UndefinedIncompatibility(..))));
        assert!(matches!(c_squared(1.1, 1.0, 1.0), Err(Error::IncompatibilityOutOfRange(_))));
    }

    #[test]
    fn pure_qubit_sigma_z_saturates() {
        let a = tradeoff_audit(&PureBloch, &Povm::sigma_z(), &[FRAC_PI_2, 0.0].into(), (0, 1), &DiffScheme::default())
            .unwrap();
        assert!(a.regret[0].abs() < 1e-9);
        assert!((a.regret[1] - 1.0).abs() < 1e-12);
        assert!((a.c2 - 1.0).abs() < 1e-12);
        assert!((a.eq1.lhs - 1.0).abs() < 1e-9 && (a.eq1.rhs - 1.0).abs() < 1e-12);
        assert!(a.eq1.slack.abs() <= 1e-9);
        assert!(a.eq17.slack.abs() <= 1e-9);
        assert!(a.eq18_slack.abs() <= 1e-12);
    }

    #[test]
    fn zero_curvature_has_no_tradeoff() {
        // Both parameters generated by σ_z: L_α = L_β, so Ω = 0.
        let rho0 =
            DensityMatrix::new((crate::kernel::identity(2) + crate::kernel::pauli_dot([0.4, 0.0, 0.3])) * c(0.5, 0.0))
                .unwrap();
        let g = HermitianMatrix::new(pauli()[2].clone()).unwrap();
        let fam = UnitaryFamily::new(rho0, g.clone(), g).unwrap();
        let a = tradeoff_audit(&fam, &Povm::sigma_z(), &[0.2, 0.3].into(), (0, 1), &DiffScheme::default()).unwrap();
        assert!(a.curvature.abs() < 1e-15);
        assert_eq!(a.eq1.rhs, 0.0);
        assert!(a.eq1.slack >= 0.0 && a.eq17.slack >= 0.0);
    }

    #[test]
    fn bad_axes() {
        let z = Povm::sigma_z();
        let p: ParamPoint = [0.2, 0.3].into();
        assert!(tradeoff_audit(&PureBloch, &z, &p, (0, 0), &DiffScheme::default()).is_err());
        assert!(tradeoff_audit(&PureBloch, &z, &p, (0, 2), &DiffScheme::default()).is_err());
    }
}
