//! Built-in experiment configurations, one per published panel.

use crate::error::{Error, Result};

use super::config::{load_config, ExperimentConfig};

pub struct Preset {
    pub name: &'static str,
    pub text: &'static str,
}

macro_rules! presets {
    ($($name:literal),* $(,)?) => {
        pub const PRESETS: &[Preset] = &[
            $(Preset { name: $name, text: include_str!(concat!("../../presets/", $name, ".cfg")) },)*
        ];
    };
}

presets!(
    "fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c",
    "fig4-text", "fig4-caption", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b", "fig7",
);

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::InvalidArgument(format!("unknown preset `{name}`; available: {}", names.join(", ")))
    })
}

impl Preset {
    pub fn config(&self) -> Result<ExperimentConfig> {
        load_config(self.text)
    }

    /// First comment line of the file.
    pub fn description(&self) -> &'static str {
        self.text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .map(str::trim)
            .unwrap_or("")
    }
}
