//! Cross-module behaviour of the sweep pipeline.

use anderson_core::model::{Geometry, PhysicsConfig, PotentialSpec};
use anderson_core::overlap::anderson_report;
use anderson_core::scaling::{run_sweep, SweepRecord};
use anderson_core::spectra::{spectrum_below, spectrum_pair, working_threshold, ChannelKey, Operator};

fn small() -> PhysicsConfig {
    let mut cfg = PhysicsConfig::reference_1d();
    cfg.sweep.lengths = vec![20.0, 40.0, 80.0];
    cfg.sweep.energies = vec![1.5, 2.0];
    cfg
}

fn without_timing(mut r: Vec<SweepRecord>) -> Vec<SweepRecord> {
    r.iter_mut().for_each(|r| r.wall_ms = 0.0);
    r
}

#[test]
fn sweep_is_deterministic_and_resumable() {
    let cfg = small();
    let full = run_sweep(&cfg, "a", &[]).unwrap();
    assert_eq!(full.records.len(), 6);
    assert!(full.failures.is_empty());

    let mut serial = cfg.clone();
    serial.sweep.workers = Some(1);
    let again = run_sweep(&serial, "a", &[]).unwrap();
    assert_eq!(without_timing(full.records.clone()), without_timing(again.records));

    let partial: Vec<SweepRecord> = full.records.iter().filter(|r| r.length != 40.0).cloned().collect();
    let resumed = run_sweep(&cfg, "a", &partial).unwrap();
    assert_eq!(resumed.computed, 2);
    assert_eq!(without_timing(resumed.records), without_timing(full.records));
}

#[test]
fn records_respect_bounds_at_every_energy() {
    for r in run_sweep(&small(), "b", &[]).unwrap().records {
        assert!(r.hadamard_ok, "{r:?}");
        assert!(r.xi >= 0);
        if !r.degenerate_at_e {
            assert!(r.sandwich_ok(0.0), "{r:?}");
        }
        assert!(r.log_abs_overlap <= 0.0 && r.anderson_integral >= 0.0);
    }
}

#[test]
fn radial_trivial_pair_is_exact() {
    let mut cfg = PhysicsConfig::reference_1d();
    cfg.geometry = Geometry::radial();
    cfg.potential = PotentialSpec::free();
    cfg.sweep.energies = vec![1.0];
    let l = 20.0;
    let pair = spectrum_pair(&cfg, l, working_threshold(&cfg, l)).unwrap();
    let rep = anderson_report(&pair, 1.0, &cfg.tolerances).unwrap();
    assert!(rep.particles > 10);
    assert_eq!(
        (
            rep.log_abs_overlap,
            rep.anderson_integral,
            rep.fixed_energy_integral,
            rep.xi
        ),
        (0.0, 0.0, 0.0, 0)
    );
}

/// The s-wave chain on `(0, R)` is the odd-parity half of the interval
/// problem on `(-R, R)` with the same grid and the same symmetric potential.
#[test]
fn s_wave_matches_odd_states_of_the_interval() {
    let radius = 10.0;
    let e = 3.0;
    let mut radial = PhysicsConfig::reference_1d();
    radial.geometry = Geometry::radial();
    let line = PhysicsConfig::reference_1d();
    for which in [Operator::Unperturbed, Operator::Perturbed] {
        let s = spectrum_below(&radial, which, ChannelKey::new(0), 2.0 * radius, e).unwrap();
        let full = spectrum_below(&line, which, ChannelKey::line(), 2.0 * radius, e).unwrap();
        let n = full.pairs.dim();
        let mid = n / 2;
        let odd: Vec<f64> = (0..full.pairs.len())
            .filter(|&j| full.pairs.vector(j)[mid].abs() < 1e-8)
            .map(|j| full.values()[j])
            .collect();
        assert_eq!(odd.len(), s.values().len());
        for (a, b) in odd.iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
        }
    }
}
