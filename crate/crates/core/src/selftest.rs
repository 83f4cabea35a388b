//! Seeded property and route-equivalence suite.
//!
//! Each property draws `trials` random instances from its own seed stream
//! and reduces every instance to a non-negative residual compared against
//! the property's tolerance.

use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{
    curvature_commutator, curvature_spectral, curvature_spectral_fullrank, non_degenerate_pairs, pure_state_curvatures,
    qgt, wilczek_zee, wilczek_zee_pairs,
};
use crate::kernel::{frobenius_distance, HermitianMatrix};
use crate::metrology::{tradeoff_audit, CLAMP_SLACK};
use crate::models::{DiffScheme, EmbeddedQubit, MixedBloch, PureBloch};
use crate::oracle::{curvature_finite_loop_pure, qfi_fidelity, sld_vec_solve};
use crate::random::{self, TestRng};
use crate::sld::{solve_sld, SldSet};
use crate::state::{spectral_decompose, RANK_TOL};

pub const DEFAULT_SEED: u64 = 20240611;
pub const DEFAULT_TRIALS: usize = 200;

type Check = fn(&mut TestRng) -> Result<f64>;

struct Property {
    name: &'static str,
    tolerance: f64,
    check: Check,
}

fn dim_between(rng: &mut TestRng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn random_sld_instance(rng: &mut TestRng) -> Result<(crate::state::Spectrum, HermitianMatrix)> {
    let n = dim_between(rng, 2, 8);
    let rho = random::full_rank_state(rng, n);
    let spec = spectral_decompose(&rho, RANK_TOL)?;
    let d = random::consistent_derivative(rng, &rho, spec.vectors());
    Ok((spec, d))
}

fn sld_residual(rng: &mut TestRng) -> Result<f64> {
    let (spec, d) = random_sld_instance(rng)?;
    Ok(solve_sld(&spec, &d)?.residual)
}

fn sld_vs_oracle(rng: &mut TestRng) -> Result<f64> {
    let (spec, d) = random_sld_instance(rng)?;
    let main = solve_sld(&spec, &d)?.operator;
    let brute = sld_vec_solve(spec.state(), &d)?;
    frobenius_distance(main.matrix(), brute.matrix())
}

fn family_slds(rng: &mut TestRng, lo: usize, hi: usize) -> Result<SldSet> {
    let n = dim_between(rng, lo, hi);
    let family = random::unitary_family(rng, n);
    let theta = random::point(rng);
    SldSet::from_model(&family, &theta, &DiffScheme::default(), RANK_TOL)
}

fn curvature_routes(rng: &mut TestRng) -> Result<f64> {
    let slds = family_slds(rng, 2, 6)?;
    let (d, ops) = (slds.derivatives(), slds.operators());
    let commutator = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    let spec = slds.spectrum();
    let wz = wilczek_zee_pairs(spec, &d[0], &d[1], &non_degenerate_pairs(spec))?;
    Ok((commutator - curvature_spectral_fullrank(spec, &wz)?).abs())
}

fn curvature_vs_qgt(rng: &mut TestRng) -> Result<f64> {
    let slds = family_slds(rng, 2, 6)?;
    let ops = slds.operators();
    let omega = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    Ok((omega + 2.0 * qgt(slds.state(), &ops[0], &ops[1])?.im).abs())
}

fn curvature_antisymmetry(rng: &mut TestRng) -> Result<f64> {
    let slds = family_slds(rng, 2, 6)?;
    let ops = slds.operators();
    let ab = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    let ba = curvature_commutator(slds.state(), &ops[1], &ops[0])?;
    Ok((ab + ba).abs())
}

fn wz_antisymmetry(rng: &mut TestRng) -> Result<f64> {
    let slds = family_slds(rng, 3, 3)?;
    let d = slds.derivatives();
    let wz = wilczek_zee(slds.spectrum(), &d[0], &d[1])?;
    let mut worst: f64 = 0.0;
    for (i, j, a) in wz.pairs() {
        worst = worst.max((a.im + wz.imag(j, i).expect("all pairs computed")).abs());
    }
    Ok(worst)
}

fn wz_gauge(rng: &mut TestRng) -> Result<f64> {
    let slds = family_slds(rng, 2, 6)?;
    let d = slds.derivatives();
    let spec = slds.spectrum();
    let rephased = spec.with_phases(&random::phases(rng, spec.dim()));
    let before = wilczek_zee(spec, &d[0], &d[1])?;
    let after = wilczek_zee(&rephased, &d[0], &d[1])?;
    let mut worst: f64 = 0.0;
    for (i, j, a) in before.pairs() {
        worst = worst.max((a - after.get(i, j).expect("same pairs")).norm());
    }
    Ok(worst)
}

fn low_rank_route(rng: &mut TestRng) -> Result<f64> {
    let n = dim_between(rng, 3, 6);
    let model = EmbeddedQubit::new(n, rng.random_range(0.05..0.95))?;
    let slds = SldSet::from_model(&model, &random::point(rng), &DiffScheme::default(), RANK_TOL)?;
    let (d, ops) = (slds.derivatives(), slds.operators());
    let commutator = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    Ok((commutator - curvature_spectral(slds.spectrum(), &d[0], &d[1])?).abs())
}

fn pure_closed_form(rng: &mut TestRng) -> Result<f64> {
    let theta = random::point(rng);
    let slds = SldSet::from_model(&PureBloch, &theta, &DiffScheme::default(), RANK_TOL)?;
    let ops = slds.operators();
    let omega = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    Ok((omega + 0.5 * theta.coords()[0].sin()).abs())
}

fn plaquette_oracle(rng: &mut TestRng) -> Result<f64> {
    let theta = random::point(rng);
    let slds = SldSet::from_model(&PureBloch, &theta, &DiffScheme::default(), RANK_TOL)?;
    let ops = slds.operators();
    let omega = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    Ok((omega - curvature_finite_loop_pure(&PureBloch, theta.coords(), (0, 1), 1e-3)?).abs())
}

fn mixed_scaling(rng: &mut TestRng) -> Result<f64> {
    let r = rng.random_range(0.05..0.95);
    let theta = random::point(rng);
    let slds = SldSet::from_model(&MixedBloch::new(r)?, &theta, &DiffScheme::default(), RANK_TOL)?;
    let (d, ops) = (slds.derivatives(), slds.operators());
    let omega = curvature_commutator(slds.state(), &ops[0], &ops[1])?;
    // ψ₁ is the eigenvector with the smaller eigenvalue, index 1 in descending order
    let lower = pure_state_curvatures(slds.spectrum(), &d[0], &d[1])?[1];
    Ok((omega + r.powi(3) * lower).abs())
}

fn tradeoff_draw(rng: &mut TestRng) -> Result<crate::metrology::TradeoffAudit> {
    let n = dim_between(rng, 2, 4);
    let family = random::unitary_family(rng, n);
    let povm = random::projective_povm(rng, n);
    tradeoff_audit(&family, &povm, &random::point(rng), (0, 1), &DiffScheme::default())
}

fn tradeoff_slack(rng: &mut TestRng) -> Result<f64> {
    let audit = tradeoff_draw(rng)?;
    Ok((-audit.eq1.slack).max(-audit.eq17.slack).max(0.0))
}

fn quantum_bound_slack(rng: &mut TestRng) -> Result<f64> {
    Ok((-tradeoff_draw(rng)?.eq18_slack).max(0.0))
}

fn fisher_monotonicity(rng: &mut TestRng) -> Result<f64> {
    let audit = tradeoff_draw(rng)?;
    Ok((audit.cfi[0] - audit.qfi[0]).max(audit.cfi[1] - audit.qfi[1]).max(0.0))
}

fn fidelity_oracle(rng: &mut TestRng) -> Result<f64> {
    let n = dim_between(rng, 2, 4);
    let family = random::unitary_family(rng, n);
    let theta = random::point(rng);
    let axis = rng.random_range(0..2);
    let slds = SldSet::from_model(&family, &theta, &DiffScheme::default(), RANK_TOL)?;
    let l = slds.operators()[axis].matrix();
    let exact = slds.state().expectation(&(l * l)).re;
    let estimate = qfi_fidelity(&family, theta.coords(), axis, 1e-4)?;
    Ok((estimate - exact).abs() / exact.abs().max(1e-12))
}

fn properties() -> Vec<Property> {
    vec![
        Property { name: "sld_residual", tolerance: 1e-10, check: sld_residual },
        Property { name: "sld_vs_vec_oracle", tolerance: 1e-9, check: sld_vs_oracle },
        Property { name: "curvature_commutator_vs_spectral", tolerance: 1e-8, check: curvature_routes },
        Property { name: "curvature_vs_qgt_imag", tolerance: 1e-10, check: curvature_vs_qgt },
        Property { name: "curvature_antisymmetry", tolerance: 1e-12, check: curvature_antisymmetry },
        Property { name: "wz_imag_antisymmetry", tolerance: 1e-10, check: wz_antisymmetry },
        Property { name: "wz_gauge_invariance", tolerance: 1e-10, check: wz_gauge },
        Property { name: "low_rank_vs_commutator", tolerance: 1e-8, check: low_rank_route },
        Property { name: "pure_qubit_closed_form", tolerance: 1e-10, check: pure_closed_form },
        Property { name: "plaquette_loop_oracle", tolerance: 1e-5, check: plaquette_oracle },
        Property { name: "mixed_qubit_cubic_scaling", tolerance: 1e-9, check: mixed_scaling },
        Property { name: "tradeoff_slack", tolerance: CLAMP_SLACK, check: tradeoff_slack },
        Property { name: "qfi_product_bound", tolerance: CLAMP_SLACK, check: quantum_bound_slack },
        Property { name: "fisher_monotonicity", tolerance: CLAMP_SLACK, check: fisher_monotonicity },
        Property { name: "fidelity_oracle_relative", tolerance: 1e-4, check: fidelity_oracle },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    /// First error raised by an instance, if any.
    pub error: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub seed: u64,
    pub trials: usize,
    pub results: Vec<PropertyResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(PropertyResult::passed)
    }

    pub fn is_vacuous(&self) -> bool {
        self.trials == 0
    }

    pub fn render(&self) -> String {
        let width = self.results.iter().map(|r| r.name.len()).max().unwrap_or(8);
        let mut out = format!("seed {} trials {}\n", self.seed, self.trials);
        for r in &self.results {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            out += &format!(
                "{status}  {:width$}  max_residual {:.3e}  tol {:.1e}  failures {}/{}\n",
                r.name, r.max_residual, r.tolerance, r.failures, r.trials
            );
            if let Some(e) = &r.error {
                out += &format!("      first error: {e}\n");
            }
        }
        out
    }
}

/// Runs every property; `tolerance` replaces all per-property tolerances when given.
pub fn run(seed: u64, trials: usize, tolerance: Option<f64>) -> SelftestReport {
    let results = properties()
        .into_iter()
        .enumerate()
        .map(|(k, prop)| {
            let stream = random::draw_seed(seed, k as u64);
            let tol = tolerance.unwrap_or(prop.tolerance);
            let outcomes: Vec<Result<f64>> = (0..trials)
                .into_par_iter()
                .map(|t| (prop.check)(&mut random::rng(random::draw_seed(stream, t as u64))))
                .collect();
            let mut result =
                PropertyResult { name: prop.name, trials, failures: 0, max_residual: 0.0, tolerance: tol, error: None };
            for o in outcomes {
                match o {
                    Ok(r) => {
                        result.max_residual = result.max_residual.max(r);
                        if r.is_nan() || r > tol {
                            result.failures += 1;
                        }
                    }
                    Err(e) => {
                        result.failures += 1;
                        result.error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            result
        })
        .collect();
    SelftestReport { seed, trials, results }
}
