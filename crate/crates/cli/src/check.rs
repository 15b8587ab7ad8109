//! Exact identities and inequalities on the small built-in instance.

use anderson_core::model::{PhysicsConfig, PotentialSpec};
use anderson_core::overlap::{anderson_report, coupling_identity_residual, OverlapReport};
use anderson_core::scattering::{gamma_1d, s_matrix_1d};
use anderson_core::spectra::{
    assemble_operator, spectrum_below, spectrum_pair, working_threshold, ChannelKey, Operator, SpectrumPair,
};
use anderson_core::Result;
use serde::Serialize;

/// Frozen outputs of the built-in instance.
pub mod golden {
    pub const PARTICLES: usize = 6;
    pub const LOG_ABS_OVERLAP: f64 = -1.034616008210391e-2;
    pub const ANDERSON_INTEGRAL: f64 = 2.058952322594598e-2;
    pub const FIXED_ENERGY_INTEGRAL: f64 = 1.012144657482568;
    pub const XI: i64 = 1;
    /// Relative agreement required with the frozen values.
    pub const TOLERANCE: f64 = 1e-9;
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, pass, detail }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= golden::TOLERANCE * b.abs().max(1e-3)
}

/// Every eigenpair of the single channel: the windowed solver run on each
/// operator with a threshold just below the top of its Gershgorin interval.
fn complete_pair(cfg: &PhysicsConfig) -> Result<SpectrumPair> {
    let l = cfg.sweep.lengths[0];
    let key = ChannelKey::line();
    let top = |op| -> Result<f64> { Ok(assemble_operator(cfg, op, key, l)?.gershgorin().1 * (1.0 - 1e-9)) };
    let mut pair = spectrum_pair(cfg, l, top(Operator::Unperturbed)?)?;
    pair.channels[0].perturbed = spectrum_below(cfg, Operator::Perturbed, key, l, top(Operator::Perturbed)?)?;
    Ok(pair)
}

/// `Σ_{j ≤ N < k} |⟨φ_j, ψ_k⟩|²` over the complete perturbed basis.
fn double_sum(full: &SpectrumPair, particles: usize) -> f64 {
    let c = &full.channels[0];
    let (h, hp) = (&c.unperturbed, &c.perturbed);
    let mut sum = 0.0;
    for j in 0..particles {
        for k in particles..hp.pairs.len() {
            sum += h.inner(h.pairs.vector(j), hp.pairs.vector(k)).powi(2);
        }
    }
    sum
}

fn golden_checks(rep: &OverlapReport) -> CheckOutcome {
    let pass = rep.particles == golden::PARTICLES
        && rep.xi == golden::XI
        && close(rep.log_abs_overlap, golden::LOG_ABS_OVERLAP)
        && close(rep.anderson_integral, golden::ANDERSON_INTEGRAL)
        && close(rep.fixed_energy_integral, golden::FIXED_ENERGY_INTEGRAL);
    outcome(
        "frozen outputs",
        pass,
        format!(
            "N = {}, ln|S| = {:.15e}, I = {:.15e}, F = {:.15e}, xi = {}",
            rep.particles, rep.log_abs_overlap, rep.anderson_integral, rep.fixed_energy_integral, rep.xi
        ),
    )
}

/// Run the suite on [`PhysicsConfig::small_1d`].
pub fn run_checks() -> Result<Vec<CheckOutcome>> {
    let cfg = PhysicsConfig::small_1d();
    let tol = cfg.tolerances;
    let l = cfg.sweep.lengths[0];
    let e = cfg.sweep.energies[0];
    let pair = spectrum_pair(&cfg, l, working_threshold(&cfg, l))?;
    let rep = anderson_report(&pair, e, &tol)?;
    let full = complete_pair(&cfg)?;
    let n = full.channels[0].h_matrix.dim();
    let mut out = vec![golden_checks(&rep)];

    let bound = -0.5 * rep.anderson_integral + tol.determinant * rep.particles as f64;
    out.push(outcome(
        "Hadamard bound",
        rep.log_abs_overlap <= bound,
        format!("ln|S| = {:.6e} <= {bound:.6e}", rep.log_abs_overlap),
    ));

    let gap = rep.fixed_energy_integral - rep.anderson_integral;
    out.push(outcome(
        "sandwich bound",
        rep.xi >= 0 && gap >= 0.0 && gap <= rep.xi as f64,
        format!("F - I = {gap:.3e}, xi = {}", rep.xi),
    ));

    let coupling = coupling_identity_residual(&full, 1e-6)?;
    out.push(outcome(
        "coupling identity",
        coupling.max_residual <= 1e-8,
        format!(
            "max residual {:.3e} over {} pairs",
            coupling.max_residual, coupling.pairs_used
        ),
    ));

    let sum = double_sum(&full, rep.particles);
    let diff = (sum - rep.anderson_integral).abs();
    out.push(outcome(
        "Parseval shortcut",
        diff <= 1e-9,
        format!("|I - double sum| = {diff:.3e} with n = {n}"),
    ));

    let c = &full.channels[0];
    let resid = c
        .unperturbed
        .pairs
        .max_relative_residual(&c.h_matrix)
        .max(c.perturbed.pairs.max_relative_residual(&c.h_prime_matrix));
    let complete = c.unperturbed.pairs.len() == n && c.perturbed.pairs.len() == n;
    out.push(outcome(
        "eigenpair residuals",
        complete && resid <= tol.residual,
        format!(
            "{} + {} of {n} pairs, max relative residual {resid:.3e}",
            c.unperturbed.pairs.len(),
            c.perturbed.pairs.len()
        ),
    ));

    let mut free = cfg.clone();
    free.potential = PotentialSpec::free();
    let free_pair = spectrum_pair(&free, l, working_threshold(&free, l))?;
    let z = anderson_report(&free_pair, e, &tol)?;
    out.push(outcome(
        "trivial perturbation",
        z.log_abs_overlap == 0.0 && z.anderson_integral == 0.0 && z.fixed_energy_integral == 0.0 && z.xi == 0,
        format!(
            "ln|S| = {}, I = {}, F = {}, xi = {}",
            z.log_abs_overlap, z.anderson_integral, z.fixed_energy_integral, z.xi
        ),
    ));

    let s = s_matrix_1d(&cfg.potential.perturbation, e, cfg.grid.scattering_step())?;
    let g = gamma_1d(&s, &tol)?;
    out.push(outcome(
        "S-matrix unitarity",
        s.unitarity_defect() <= tol.unitarity,
        format!("defect {:.3e}, gamma = {:.6e}", s.unitarity_defect(), g.gamma),
    ));
    Ok(out)
}
