//! Scenarios bundled with the binary.

use std::path::Path;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

pub const SCENARIOS: &[(&str, &str)] = &[
    ("zd_intrinsic", include_str!("../scenarios/zd_intrinsic.json")),
    (
        "three_point_counterexample",
        include_str!("../scenarios/three_point_counterexample.json"),
    ),
    ("topo_degeneration", include_str!("../scenarios/topo_degeneration.json")),
    ("mirror_divergence", include_str!("../scenarios/mirror_divergence.json")),
    ("capacity", include_str!("../scenarios/capacity.json")),
    ("gst_caccioppoli", include_str!("../scenarios/gst_caccioppoli.json")),
    ("shnol_inequality", include_str!("../scenarios/shnol_inequality.json")),
    (
        "lattice_spectrum_shnol",
        include_str!("../scenarios/lattice_spectrum_shnol.json"),
    ),
    (
        "exponential_cutoff",
        include_str!("../scenarios/exponential_cutoff.json"),
    ),
    (
        "exponential_cutoff_steep",
        include_str!("../scenarios/exponential_cutoff_steep.json"),
    ),
    (
        "powerlaw_intrinsic",
        include_str!("../scenarios/powerlaw_intrinsic.json"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Loads a config from a file path or, failing that, from the catalog.
pub fn load(arg: &str) -> CliResult<ScenarioConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        return ScenarioConfig::from_json(&std::fs::read_to_string(path)?);
    }
    match bundled(arg) {
        Some(text) => ScenarioConfig::from_json(text),
        None => Err(CliError::Config(format!(
            "no config file or bundled scenario named `{arg}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_scenario_parses() {
        for (name, text) in SCENARIOS {
            let cfg = ScenarioConfig::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&cfg.name, name);
        }
    }

    #[test]
    fn lookup_accepts_json_suffix() {
        assert!(bundled("capacity.json").is_some());
        assert!(bundled("nope").is_none());
    }
}
