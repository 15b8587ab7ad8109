//! Acceptance criteria, run as a plain binary so that every criterion prints
//! exactly one PASS or FAIL line whatever the outcome of the others.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use anderson_core::bessel::wronskians;
use anderson_core::model::{Geometry, LmaxPolicy, Perturbation, PhysicsConfig, PotentialSpec, Tolerances};
use anderson_core::overlap::{
    anderson_report, birman_estimate, coupling_identity_residual, log_abs_overlap, overlap_matrix, FillingRule,
};
use anderson_core::scaling::{compare_report, fit_loglinear, run_sweep, standard_fits, FitQuantity, SweepRecord};
use anderson_core::scattering::{
    default_radii, gamma_3d, phase_shift_at, phase_shifts_3d, predict_gamma, s_matrix_1d, PhaseShiftTable,
};
use anderson_core::spectra::{
    assemble_operator, spectrum_below, spectrum_pair, working_threshold, ChannelKey, Operator, SpectrumPair,
};
use anderson_core::tridiag::SymTridiag;
use nalgebra::{Complex, DMatrix, Matrix4, SymmetricEigen, Vector4};

type C64 = Complex<f64>;

/// Largest spectral shift seen on the reference sweep, frozen after calibration.
const XI_CAP: i64 = 1;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ---------------------------------------------------------------- criteria

fn hadamard(records: &[SweepRecord]) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    for r in records {
        let margin = r.log_abs_overlap - (-0.5 * r.anderson_integral + 1e-8 * r.particles as f64);
        worst = worst.max(margin);
    }
    verdict(
        worst <= 0.0 && records.len() == 6,
        format!("{} records, max of ln|S| + I/2 - 1e-8 N = {worst:.3e}", records.len()),
    )
}

fn sandwich(records: &[SweepRecord]) -> Verdict {
    let mut ok = true;
    let mut skipped = 0;
    let mut lines = Vec::new();
    for r in records {
        ok &= r.xi >= 0;
        if r.degenerate_at_e {
            skipped += 1;
            continue;
        }
        let d = r.fixed_energy_integral - r.anderson_integral;
        ok &= d >= 0.0 && d <= r.xi as f64;
        lines.push(format!("L={} F-I={d:.4} xi={}", r.length, r.xi));
    }
    let max_all = records.iter().map(|r| r.xi).max().unwrap_or(0);
    let max_early = records
        .iter()
        .filter(|r| r.length <= 200.0)
        .map(|r| r.xi)
        .max()
        .unwrap_or(0);
    ok &= max_all == max_early && max_all <= XI_CAP;
    verdict(
        ok,
        format!(
            "{}; degenerate skipped {skipped}; max xi {max_all} (by L<=200: {max_early}, cap {XI_CAP})",
            lines.join(", ")
        ),
    )
}

/// Every eigenpair of the single channel: the windowed solver run on each
/// operator with a threshold just below the top of its Gershgorin interval.
fn full_pair(cfg: &PhysicsConfig) -> SpectrumPair {
    let l = cfg.sweep.lengths[0];
    let key = ChannelKey::line();
    let top = |op| assemble_operator(cfg, op, key, l).unwrap().gershgorin().1 * (1.0 - 1e-9);
    let mut pair = spectrum_pair(cfg, l, top(Operator::Unperturbed)).unwrap();
    pair.channels[0].perturbed = spectrum_below(cfg, Operator::Perturbed, key, l, top(Operator::Perturbed)).unwrap();
    pair
}

fn coupling() -> Verdict {
    let cfg = PhysicsConfig::small_1d();
    let pair = full_pair(&cfg);
    let n = pair.channels[0].h_matrix.dim();
    match coupling_identity_residual(&pair, 1e-6) {
        Ok(c) => verdict(
            c.max_residual <= 1e-8 && n == 60 && c.pairs_used + c.pairs_skipped == n * n,
            format!(
                "n = {n}, {} pairs used, {} skipped, max residual {:.3e}",
                c.pairs_used, c.pairs_skipped, c.max_residual
            ),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn dense(t: &SymTridiag) -> DMatrix<f64> {
    let n = t.dim();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            t.diag()[i]
        } else if i + 1 == j {
            t.offdiag()[i]
        } else if j + 1 == i {
            t.offdiag()[j]
        } else {
            0.0
        }
    })
}

fn sorted_eigenvectors(t: &SymTridiag) -> DMatrix<f64> {
    let e = SymmetricEigen::new(dense(t));
    let mut idx: Vec<usize> = (0..t.dim()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    DMatrix::from_fn(t.dim(), t.dim(), |r, c| e.eigenvectors[(r, idx[c])])
}

fn parseval() -> Verdict {
    let mut instances = vec![PhysicsConfig::small_1d()];
    for (l, e, v) in [(6.05, 20.0, 1.0), (9.95, 12.0, 3.0)] {
        let mut c = PhysicsConfig::small_1d();
        c.potential = PotentialSpec::square_barrier(v, 0.5);
        c.sweep.lengths = vec![l];
        c.sweep.energies = vec![e];
        instances.push(c);
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for cfg in instances {
        let l = cfg.sweep.lengths[0];
        let e = cfg.sweep.energies[0];
        let pair = spectrum_pair(&cfg, l, working_threshold(&cfg, l)).unwrap();
        let rep = anderson_report(&pair, e, &cfg.tolerances).unwrap();
        let c = &pair.channels[0];
        let n = c.h_matrix.dim();
        // unit Euclidean vectors: the weight h cancels
        let phi = sorted_eigenvectors(&c.h_matrix);
        let psi = sorted_eigenvectors(&c.h_prime_matrix);
        let np = rep.particles;
        let mut full = 0.0;
        for j in 0..np {
            for k in np..n {
                full += phi.column(j).dot(&psi.column(k)).powi(2);
            }
        }
        let diff = (rep.anderson_integral - full).abs();
        ok &= diff <= 1e-9 && n <= 200;
        parts.push(format!("n={n} N={np} I={:.6} |diff|={diff:.2e}", rep.anderson_integral));
    }
    verdict(ok, parts.join("; "))
}

fn closed_form_t(e: f64, v: f64, a: f64) -> C64 {
    let k = e.sqrt();
    let q = C64::new(e - v, 0.0).sqrt();
    let i = C64::new(0.0, 1.0);
    (-i * k * a).exp() / ((q * a).cos() - i * (k * k + q * q) / (2.0 * k * q) * (q * a).sin())
}

/// Reflection amplitude from the four matching conditions at `±R`.
fn matched_reflection(e: f64, v: f64, r: f64) -> C64 {
    let k = e.sqrt();
    let q = C64::new(e - v, 0.0).sqrt();
    let i = C64::new(0.0, 1.0);
    let (ik, iq) = (i * k, i * q);
    let ex = |s: C64, x: f64| (s * x).exp();
    let z = C64::new(0.0, 0.0);
    let m = Matrix4::new(
        ex(-ik, -r),
        -ex(iq, -r),
        -ex(-iq, -r),
        z,
        -ik * ex(-ik, -r),
        -iq * ex(iq, -r),
        iq * ex(-iq, -r),
        z,
        z,
        ex(iq, r),
        ex(-iq, r),
        -ex(ik, r),
        z,
        iq * ex(iq, r),
        -iq * ex(-iq, r),
        -ik * ex(ik, r),
    );
    let rhs = Vector4::new(-ex(ik, -r), -ik * ex(ik, -r), z, z);
    m.lu().solve(&rhs).unwrap()[0]
}

fn closed_form_delta0(e: f64, v: f64, r: f64) -> f64 {
    let k = e.sqrt();
    let kr = k * r;
    let t = if e == v {
        (kr - kr.tan()) / (1.0 + kr * kr.tan())
    } else if e > v {
        let q = (e - v).sqrt();
        let tq = (q * r).tan();
        (k * tq - q * kr.tan()) / (q + k * tq * kr.tan())
    } else {
        let q = (v - e).sqrt();
        let th = (q * r).tanh();
        (k * th - q * kr.tan()) / (q + k * th * kr.tan())
    };
    t.atan()
}

fn mod_pi(d: f64) -> f64 {
    let r = d.rem_euclid(PI);
    r.min(PI - r)
}

fn scattering_oracles() -> Verdict {
    let barrier = Perturbation::SquareBarrier {
        amplitude: 1.0,
        radius: 0.5,
    };
    let energies: Vec<f64> = (0..20).map(|i| 0.15 + 0.4 * i as f64).collect();
    let cell = PhysicsConfig::reference_1d().grid.scattering_step();
    let mut worst_t = 0.0_f64;
    let mut worst_r = 0.0_f64;
    let mut worst_d = 0.0_f64;
    for &e in &energies {
        let s = s_matrix_1d(&barrier, e, cell).unwrap();
        let t = closed_form_t(e, 1.0, 1.0);
        let r = matched_reflection(e, 1.0, 0.5);
        worst_t = worst_t.max((s.t - t).norm() / t.norm());
        worst_r = worst_r
            .max((s.r_left - r).norm() / r.norm())
            .max((s.r_right - r).norm() / r.norm());
        let d = phase_shift_at(&barrier, 0, e, 1e-3, default_radii(0.5, e)).unwrap();
        worst_d = worst_d.max(mod_pi(d - closed_form_delta0(e, 1.0, 0.5)));
    }
    // Wronskian at the matching arguments for every partial wave in use
    let mut worst_w = 0.0_f64;
    let mut worst_route = 0.0_f64;
    let grid = PhysicsConfig::reference_1d().grid;
    for &e in &energies {
        let table = phase_shifts_3d(&barrier, e, LmaxPolicy::Automatic, &grid, &Tolerances::default()).unwrap();
        let g = gamma_3d(&table).unwrap();
        worst_route = worst_route.max(two_route_gap(&table, g.gamma));
        let (r1, r2) = default_radii(0.5, e);
        for x in [e.sqrt() * r1, e.sqrt() * r2] {
            for w in wronskians(table.lmax(), x) {
                worst_w = worst_w.max((w - 1.0).abs());
            }
        }
    }
    verdict(
        worst_t <= 1e-6 && worst_r <= 1e-6 && worst_d <= 1e-6 && worst_w <= 1e-10 && worst_route <= 1e-12,
        format!(
            "t rel {worst_t:.2e}, r rel {worst_r:.2e}, delta0 {worst_d:.2e} (20 energies each); \
             Wronskian {worst_w:.2e}; two-route {worst_route:.2e}"
        ),
    )
}

/// Relative gap between γ and `E σ / (4π³)` with `σ` summed independently.
fn two_route_gap(table: &PhaseShiftTable, gamma: f64) -> f64 {
    let sigma: f64 = table
        .shifts
        .iter()
        .enumerate()
        .map(|(l, d)| 4.0 * PI / table.energy * (2 * l + 1) as f64 * d.sin().powi(2))
        .sum();
    (gamma - table.energy * sigma / (4.0 * PI.powi(3))).abs() / gamma
}

fn reproduction(records: &[SweepRecord], gamma: f64) -> Verdict {
    let f = fit_loglinear(records, FitQuantity::FVsLnL, 2.0, None).unwrap();
    let i = fit_loglinear(records, FitQuantity::IVsLnL, 2.0, None).unwrap();
    let s = fit_loglinear(records, FitQuantity::LogSVsLnL, 2.0, None).unwrap();
    let ratio = f.slope / gamma;
    let ok = (ratio - 1.0).abs() <= 0.2 && s.slope <= -0.5 * gamma * 0.8;
    verdict(
        ok,
        format!(
            "gamma = {gamma:.6}; slope F = {:.4} +- {:.4} (ratio {ratio:.3}); slope I = {:.4} +- {:.4} (ratio {:.3}); \
             slope ln|S| = {:.4} vs -0.8 gamma/2 = {:.4}",
            f.slope,
            f.stderr,
            i.slope,
            i.stderr,
            i.slope / gamma,
            s.slope,
            -0.4 * gamma
        ),
    )
}

fn birman(gamma: f64) -> Verdict {
    let mut cfg = PhysicsConfig::reference_1d();
    cfg.sweep.smear_width = Some(0.2);
    let pair = spectrum_pair(&cfg, 1600.0, working_threshold(&cfg, 1600.0)).unwrap();
    let b = birman_estimate(&pair, 2.0, 2.0, 0.2).unwrap();
    let ratio = b.gamma2d / gamma;
    let ok = (ratio - 1.0).abs() <= 0.2 && b.gamma2d <= b.gamma1 * b.gamma2 * (1.0 + 1e-8);
    verdict(
        ok,
        format!(
            "gamma2d = {:.6} (ratio {ratio:.3}), gamma1 gamma2 = {:.6}, levels {}/{}",
            b.gamma2d,
            b.gamma1 * b.gamma2,
            b.levels_unperturbed,
            b.levels_perturbed
        ),
    )
}

fn radial_cfg() -> PhysicsConfig {
    let mut cfg = PhysicsConfig::reference_1d();
    cfg.geometry = Geometry::radial();
    cfg.sweep.energies = vec![1.0];
    cfg.sweep.lengths = vec![50.0, 100.0, 200.0, 400.0];
    cfg
}

/// `ln |det|` of the overlap matrix assembled over all copies of all
/// channels, rows and columns in global energy order, by dense LU.
fn explicit_log_det(pair: &SpectrumPair, m: &anderson_core::overlap::OverlapMatrix) -> f64 {
    let mut rows: Vec<(f64, usize, usize, usize)> = Vec::new();
    let mut cols: Vec<(f64, usize, usize, usize)> = Vec::new();
    for (ci, (c, b)) in pair.channels.iter().zip(&m.blocks).enumerate() {
        for copy in 0..c.key.multiplicity() {
            for j in 0..b.rows {
                rows.push((c.unperturbed.values()[j], ci, copy, j));
            }
            for k in 0..b.cols {
                if copy < b.col_weights[k] {
                    cols.push((c.perturbed.values()[k], ci, copy, k));
                }
            }
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    cols.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    assert_eq!(rows.len(), cols.len());
    let n = rows.len();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let (r, c) = (rows[i], cols[j]);
        if r.1 == c.1 && r.2 == c.2 {
            m.blocks[r.1].get(r.3, c.3)
        } else {
            0.0
        }
    });
    let lu = a.lu();
    let u = lu.u();
    (0..n).map(|i| u[(i, i)].abs().ln()).sum()
}

fn radial_pipeline() -> Verdict {
    let cfg = radial_cfg();
    let gamma = match predict_gamma(&cfg, 1.0) {
        Ok(g) => g.gamma,
        Err(e) => return verdict(false, e.to_string()),
    };
    let out = match run_sweep(&cfg, "radial", &[]) {
        Ok(o) => o,
        Err(e) => return verdict(false, e.to_string()),
    };
    let f = match fit_loglinear(&out.records, FitQuantity::FVsLnL, 1.0, None) {
        Ok(f) => f,
        Err(e) => return verdict(false, e.to_string()),
    };
    let i = fit_loglinear(&out.records, FitQuantity::IVsLnL, 1.0, None).ok();
    let ratio = f.slope / gamma;

    let l0 = cfg.sweep.lengths[0];
    let pair = spectrum_pair(&cfg, l0, working_threshold(&cfg, l0)).unwrap();
    let m = overlap_matrix(&pair, 1.0, FillingRule::GlobalN, &cfg.tolerances).unwrap();
    let factorized = log_abs_overlap(&m).unwrap().value;
    let explicit = explicit_log_det(&pair, &m);
    let det_ok = if factorized == f64::NEG_INFINITY {
        !explicit.is_finite() || explicit < -700.0
    } else {
        (factorized - explicit).abs() <= 1e-8
    };
    let ok = (ratio - 1.0).abs() <= 0.25 && det_ok && out.failures.is_empty();
    let xi: Vec<String> = out.records.iter().map(|r| format!("{}:{}", r.length, r.xi)).collect();
    verdict(
        ok,
        format!(
            "gamma = {gamma:.6}; slope F = {:.4} +- {:.4} (ratio {ratio:.3}); slope I ratio {}; \
             L={l0} N = {}: factorized {factorized:.10} vs explicit {explicit:.10} (|diff| {:.1e}); xi by L {}",
            f.slope,
            f.stderr,
            i.map_or("n/a".into(), |i| format!("{:.3}", i.slope / gamma)),
            m.filled_rows(),
            (factorized - explicit).abs(),
            xi.join(" ")
        ),
    )
}

fn trivial() -> Verdict {
    let mut cfg = PhysicsConfig::reference_1d();
    cfg.potential = PotentialSpec::free();
    let out = run_sweep(&cfg, "free", &[]).unwrap();
    let exact = out
        .records
        .iter()
        .all(|r| r.anderson_integral == 0.0 && r.fixed_energy_integral == 0.0 && r.xi == 0 && r.log_abs_overlap == 0.0);
    let g = predict_gamma(&cfg, 2.0).unwrap();
    let fits = standard_fits(&out.records, 2.0, None).unwrap();
    let cmp = compare_report(&out.records, &fits, &g, &cfg.tolerances).unwrap();
    verdict(
        exact && g.gamma == 0.0 && cmp.pass() && out.records.len() == 6,
        format!(
            "{} records exact zero: {exact}; gamma = {}; verdicts pass: {}",
            out.records.len(),
            g.gamma,
            cmp.pass()
        ),
    )
}

// ---------------------------------------------------------------- driver

/// Runs one criterion, turning a panic into a failing verdict.
fn run(id: u32, title: &str, failed: &mut u32, check: impl FnOnce() -> Verdict) {
    let started = Instant::now();
    let v = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    let tag = if v.pass { "PASS" } else { "FAIL" };
    if !v.pass {
        *failed += 1;
    }
    println!(
        "{tag} criterion {id} ({title}, {:.1}s): {}",
        started.elapsed().as_secs_f64(),
        v.detail
    );
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cfg = PhysicsConfig::reference_1d();
    let sweep = run_sweep(&cfg, "reference", &[]).map_err(|e| e.to_string());
    let gamma = predict_gamma(&cfg, 2.0).map(|g| g.gamma).map_err(|e| e.to_string());
    println!("reference sweep computed in {:.1}s", started.elapsed().as_secs_f64());

    let mut failed = 0;
    run(1, "Hadamard bound", &mut failed, || match &sweep {
        Ok(out) => hadamard(&out.records),
        Err(e) => verdict(false, e.clone()),
    });
    run(2, "sandwich bound", &mut failed, || match &sweep {
        Ok(out) => sandwich(&out.records),
        Err(e) => verdict(false, e.clone()),
    });
    run(3, "coupling identity", &mut failed, coupling);
    run(4, "Parseval shortcut", &mut failed, parseval);
    run(5, "scattering oracles", &mut failed, scattering_oracles);
    run(6, "logarithmic growth vs scattering exponent", &mut failed, || {
        match (&sweep, &gamma) {
            (Ok(out), Ok(g)) => reproduction(&out.records, *g),
            (Err(e), _) | (_, Err(e)) => verdict(false, e.clone()),
        }
    });
    run(7, "Birman estimator", &mut failed, || match &gamma {
        Ok(g) => birman(*g),
        Err(e) => verdict(false, e.clone()),
    });
    run(8, "3D partial-wave pipeline, slow", &mut failed, radial_pipeline);
    run(9, "trivial exactness", &mut failed, trivial);

    if failed == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
