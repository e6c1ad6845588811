//! Provenance header embedded in every output file.

use serde::Serialize;
use serde_json::json;

use crate::config::{CapNote, Config};

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: String,
    pub lib: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub seed_source: &'static str,
    /// Fixed numeric tolerances of the underlying engines.
    pub tolerances: Vec<(String, f64)>,
    /// Every cap and defaultable knob the run touched, with its origin.
    pub caps: Vec<CapNote>,
}

impl Meta {
    pub fn new(command: &str, cfg: &Config, seed: u64, seed_source: &'static str) -> Meta {
        Meta {
            tool: format!("warp {}", env!("CARGO_PKG_VERSION")),
            lib: format!("warplab {}", warplab::VERSION),
            command: command.to_string(),
            config_sha256: cfg.sha256().to_string(),
            seed,
            seed_source,
            tolerances: vec![
                ("prokhorov_eta".into(), warplab::measure::prokhorov::ETA_TOLERANCE),
                ("quadrature_relative".into(), warplab::measure::cylinder::QUADRATURE_TOLERANCE),
                ("measure_mass".into(), warplab::measure::MASS_TOLERANCE),
            ],
            caps: Vec::new(),
        }
    }

    /// Caps are only known once a command has read its config.
    pub fn seal(&mut self, cfg: &Config) {
        self.caps = cfg.caps();
    }

    /// `# key: value` comment block for CSV and plot files.
    pub fn csv_header(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: {}\n", self.tool));
        out.push_str(&format!("# lib: {}\n", self.lib));
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# config_sha256: {}\n", self.config_sha256));
        out.push_str(&format!("# seed: {} ({})\n", self.seed, self.seed_source));
        for (name, value) in &self.tolerances {
            out.push_str(&format!("# tolerance {name}: {value:e}\n"));
        }
        for cap in &self.caps {
            out.push_str(&format!("# cap {}: {} ({})\n", cap.key, cap.value, cap.source));
        }
        out
    }

    pub fn json(&self) -> serde_json::Value {
        json!({
            "tool": self.tool,
            "lib": self.lib,
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "seed_source": self.seed_source,
            "tolerances": self.tolerances.iter().cloned().collect::<std::collections::BTreeMap<String, f64>>(),
            "caps": self.caps,
        })
    }
}
