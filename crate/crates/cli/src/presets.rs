//! Figure presets shipped as config files under `presets/`.

use crate::config::Config;
use crate::error::{CliError, Result};

macro_rules! preset {
    ($name:literal) => {
        ($name, include_str!(concat!("../presets/", $name, ".toml")))
    };
}

pub const PRESETS: [(&str, &str); 11] = [
    preset!("fig2"),
    preset!("fig2b"),
    preset!("fig3a"),
    preset!("fig3b"),
    preset!("fig3c"),
    preset!("fig4a"),
    preset!("fig4b"),
    preset!("fig5a"),
    preset!("fig5b"),
    preset!("figA1"),
    preset!("figA2"),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn preset(name: &str) -> Result<Config> {
    let text = preset_text(name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
    })?;
    Config::from_toml_str(text)
}

/// First comment line of a preset.
pub fn summary(text: &str) -> &str {
    text.lines().next().and_then(|l| l.strip_prefix("# ")).unwrap_or("")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses() {
        for (name, text) in PRESETS {
            let cfg = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!summary(text).is_empty(), "{name} lacks a description");
            assert!(!cfg.grid().unwrap().is_empty());
        }
        assert!(preset("fig9").is_err());
    }
}
