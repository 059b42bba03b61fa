//! Bundled example configurations and the configuration schema.

use crate::error::Result;
use crate::experiment::ExperimentConfig;

/// JSON Schema for [`ExperimentConfig`] documents.
pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

/// `(name, JSON document)` for every bundled configuration.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig3a_laser", include_str!("../configs/fig3a_laser.json")),
    ("fig3a_thermal", include_str!("../configs/fig3a_thermal.json")),
    ("fig3b_cw", include_str!("../configs/fig3b_cw.json")),
    ("fig4_pulsed", include_str!("../configs/fig4_pulsed.json")),
    ("fig4_cw", include_str!("../configs/fig4_cw.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub fn preset_json(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1)
}

pub fn preset(name: &str) -> Option<Result<ExperimentConfig>> {
    preset_json(name).map(ExperimentConfig::from_json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn presets_parse_and_validate() {
        for name in names() {
            let cfg = preset(name).unwrap().unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn schema_lists_every_config_field() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        let cfg = preset("fig4_cw").unwrap().unwrap();
        let value = serde_json::to_value(&cfg).unwrap();
        let keys = |v: &serde_json::Value| -> BTreeSet<String> { v.as_object().unwrap().keys().cloned().collect() };
        assert_eq!(keys(&schema["properties"]), keys(&value));
        for section in ["filter", "histogram", "analysis", "scan", "line"] {
            assert_eq!(
                keys(&schema["properties"][section]["properties"]),
                keys(&value[section]),
                "{section}"
            );
        }
        assert_eq!(
            keys(&schema["$defs"]["detector"]["properties"]),
            keys(&value["detectors"][0])
        );
    }
}
