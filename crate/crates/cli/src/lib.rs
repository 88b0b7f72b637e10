//! Scenario runner: configuration schema, output bookkeeping and the
//! scenario implementations behind the `fluxcr` binary.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::Path;

use config::ScenarioConfig;
use output::Run;

/// Run one scenario into `out_dir`; returns whether every check passed.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> anyhow::Result<bool> {
    let mut run = Run::new(out_dir)?;
    scenarios::run(cfg, &mut run)?;
    let effective = toml::to_string(cfg)?;
    run.finish(&cfg.scenario, cfg.seed, &effective)
}
