//! Reading configuration files and applying environment overrides.

use std::fs;
use std::path::Path;

use anderson_core::model::PhysicsConfig;

use crate::CliError;

/// Overrides `sweep.workers` when set to a positive integer.
pub const WORKERS_ENV: &str = "ANDERSON_WORKERS";

pub fn parse_config(text: &str) -> Result<PhysicsConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("cannot parse configuration: {e}")))
}

pub fn load_config(path: &Path) -> Result<PhysicsConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// The configuration exactly as it will be run, in the on-disk format.
pub fn render_config(cfg: &PhysicsConfig) -> Result<String, CliError> {
    toml::to_string_pretty(cfg).map_err(|e| CliError::Io(format!("cannot serialize configuration: {e}")))
}

/// Apply `ANDERSON_WORKERS` from the given value of the variable, if any.
pub fn apply_workers_override(cfg: &mut PhysicsConfig, value: Option<&str>) -> Result<(), CliError> {
    let Some(raw) = value else { return Ok(()) };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            cfg.sweep.workers = Some(n);
            Ok(())
        }
        _ => Err(CliError::Usage(format!(
            "{WORKERS_ENV} must be a positive integer, got {raw:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_text() {
        let cfg = PhysicsConfig::reference_1d();
        let text = render_config(&cfg).unwrap();
        for section in ["[geometry]", "[potential", "[grid]", "[sweep]", "[tolerances]"] {
            assert!(text.contains(section), "missing {section} in\n{text}");
        }
        assert_eq!(parse_config(&text).unwrap(), cfg);
    }

    #[test]
    fn tolerances_default_when_omitted() {
        let text = r#"
            [geometry]
            kind = "interval"
            [potential.perturbation]
            kind = "square_barrier"
            amplitude = 1.0
            radius = 0.5
            [grid]
            spacing = 0.05
            [sweep]
            energies = [2.0]
            lengths = [50.0, 100.0]
        "#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.tolerances, Default::default());
        assert_eq!(cfg.grid, anderson_core::model::GridSpec::new(0.05));
    }

    #[test]
    fn workers_override() {
        let mut cfg = PhysicsConfig::reference_1d();
        apply_workers_override(&mut cfg, None).unwrap();
        assert_eq!(cfg.sweep.workers, None);
        apply_workers_override(&mut cfg, Some("3")).unwrap();
        assert_eq!(cfg.sweep.workers, Some(3));
        assert!(apply_workers_override(&mut cfg, Some("0")).is_err());
        assert!(apply_workers_override(&mut cfg, Some("many")).is_err());
    }
}
