//! Scenario runner for the comparison toolkit.
//!
//! Configs list scenarios; each scenario runs one check pipeline and writes
//! a JSON report plus CSV and plot data under `<out>/<id>/`.

pub mod config;
pub mod report;
pub mod run;

use std::path::Path;

use anyhow::{bail, Result};

pub use config::{Config, ConfigError, Kind, Scenario};
pub use report::{ScenarioReport, Summary};
pub use run::{run_config, run_scenario, RunOptions};

/// Scenario files shipped with the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("theorems.json", include_str!("../scenarios/theorems.json")),
    ("sharpness.json", include_str!("../scenarios/sharpness.json")),
    ("negative_controls.json", include_str!("../scenarios/negative_controls.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED.iter().find(|(file, _)| file.strip_suffix(".json") == Some(name)).map(|(_, text)| *text)
}

/// Loads a config from a file, falling back to a bundled name.
pub fn load_config(arg: &str) -> Result<Config> {
    let path = Path::new(arg);
    if path.is_file() {
        return config::load(path);
    }
    match bundled(arg) {
        Some(text) => Ok(config::parse(text)?),
        None => bail!("no config file or bundled scenario set named {arg:?}"),
    }
}

/// One `id  kind  description` line per scenario.
pub fn list_lines(cfg: &Config) -> Vec<String> {
    cfg.scenarios
        .iter()
        .map(|s| {
            let tag = if s.control { " (control)" } else { "" };
            format!("{:<36} {:<20} {}{tag}", s.id, s.kind.name(), s.description)
        })
        .collect()
}
