//! Versioned TOML configuration. Every key is optional; flags override file values.
//!
//! ```toml
//! version = 1
//! exec = "parallel"          # or "sequential"
//!
//! [oracle]
//! points = 128
//! seed = 20240917
//! fd_step = 0.01
//! fd_order = 8
//! coupling = 0.7
//! mass = 1.3
//! zero_tolerance = 1e-6
//! half_step = true
//! scope = "all"              # "failing" or "off"
//!
//! [radial]
//! nodes = 4000
//! r_min = 1e-6
//! r_max_bohr = 200.0
//! tolerance = 1e-8           # Richardson convergence, relative
//! max_refinements = 2
//! match_tolerance = 1e-5     # solver vs closed form, relative
//! a2_tolerance = 1e-6
//!
//! [lamb]
//! ratio_tolerance = 1e-3
//! ```

use std::path::Path;

use jlalg::exec::ExecMode;
use jlalg::opalg::verify::OracleScope;
use jlalg::oracle::{self, TestConfig};
use jlalg::radial::GridConfig;
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    pub exec: ExecMode,
    pub oracle: OracleSection,
    pub radial: RadialSection,
    pub lamb: LambSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: VERSION,
            exec: ExecMode::default(),
            oracle: OracleSection::default(),
            radial: RadialSection::default(),
            lamb: LambSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub points: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub fd_order: usize,
    pub coupling: f64,
    pub mass: f64,
    pub zero_tolerance: f64,
    pub half_step: bool,
    pub scope: OracleScope,
}

impl Default for OracleSection {
    fn default() -> Self {
        let t = TestConfig::default();
        Self {
            points: t.points.len(),
            seed: t.seed,
            fd_step: t.fd_step,
            fd_order: t.fd_order,
            coupling: t.coupling,
            mass: t.mass,
            zero_tolerance: oracle::ZERO_TOLERANCE,
            half_step: true,
            scope: OracleScope::All,
        }
    }
}

impl OracleSection {
    pub fn test_config(&self) -> TestConfig {
        TestConfig {
            fd_step: self.fd_step,
            fd_order: self.fd_order,
            coupling: self.coupling,
            mass: self.mass,
            ..TestConfig::sampled(self.points, self.seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialSection {
    pub nodes: usize,
    pub r_min: f64,
    pub r_max_bohr: f64,
    pub tolerance: f64,
    pub max_refinements: u32,
    pub match_tolerance: f64,
    pub a2_tolerance: f64,
}

impl Default for RadialSection {
    fn default() -> Self {
        let g = GridConfig::default();
        Self {
            nodes: g.nodes,
            r_min: g.r_min,
            r_max_bohr: g.r_max_bohr,
            tolerance: g.tolerance,
            max_refinements: g.max_refinements,
            match_tolerance: 1e-5,
            a2_tolerance: 1e-6,
        }
    }
}

impl RadialSection {
    pub fn grid(&self) -> GridConfig {
        GridConfig {
            nodes: self.nodes,
            r_min: self.r_min,
            r_max_bohr: self.r_max_bohr,
            tolerance: self.tolerance,
            max_refinements: self.max_refinements,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambSection {
    pub ratio_tolerance: f64,
}

impl Default for LambSection {
    fn default() -> Self {
        Self { ratio_tolerance: 1e-3 }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.version != VERSION {
            return Err(format!("unsupported config version {} (expected {VERSION})", cfg.version));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn documented_example_parses() {
        let doc = include_str!("config.rs");
        let example: String = doc
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        let cfg = Config::parse(&example).unwrap();
        assert_eq!(cfg.oracle.points, 128);
        assert_eq!(cfg.radial.nodes, 4000);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(Config::parse("[oracle]\npoint = 3").is_err());
        assert!(Config::parse("version = 2").is_err());
    }
}
