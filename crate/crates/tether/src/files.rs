//! JSON input files: rule tables, matcher tables, annotations, sim configs,
//! DOM snapshots, plans, feature lists and skip lists.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tether_core::assertion::MatcherTable;
use tether_core::discovery::{Feature, FeatureSource};
use tether_core::metrics::ConvergenceQuality;
use tether_core::signature::{Classifier, SignatureRule};
use tether_core::sim::SimConfig;

/// A missing, unreadable or malformed input file.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read `{}`: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("`{}`{}: {message}", path.display(), field.as_deref().map(|f| format!(" at `{f}`")).unwrap_or_default())]
    Malformed { path: PathBuf, field: Option<String>, message: String },
    #[error("`{}`: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl InputError {
    pub fn invalid(path: &Path, message: impl ToString) -> Self {
        Self::Invalid { path: path.into(), message: message.to_string() }
    }
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io { path: path.into(), source })
}

/// Parses JSON, reporting the path of the first offending field.
pub fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        InputError::Malformed {
            path: path.into(),
            field: (field != ".").then_some(field),
            message: e.into_inner().to_string(),
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    parse_json(path, &read_text(path)?)
}

pub fn load_classifier(rules: Option<&Path>, symbols: Option<&Path>) -> Result<Classifier, InputError> {
    let classifier = match rules {
        Some(path) => {
            let rules: Vec<SignatureRule> = read_json(path)?;
            Classifier::new(&rules).map_err(|e| InputError::invalid(path, e))?
        }
        None => Classifier::default(),
    };
    Ok(match symbols {
        Some(path) => classifier.with_known_symbols(read_json::<Vec<String>>(path)?),
        None => classifier,
    })
}

pub fn load_matchers(path: Option<&Path>) -> Result<MatcherTable, InputError> {
    path.map_or_else(|| Ok(MatcherTable::default()), read_json)
}

/// `{"family_id": "CLEAN" | "ASSERTION_WEAKENED" | "SCOPE_REDUCED" | "NONE"}`.
pub fn load_annotations(path: Option<&Path>) -> Result<BTreeMap<String, ConvergenceQuality>, InputError> {
    path.map_or_else(|| Ok(BTreeMap::new()), read_json)
}

pub fn load_sim_config(path: &Path) -> Result<SimConfig, InputError> {
    let config: SimConfig = read_json(path)?;
    config.validate().map_err(|e| InputError::invalid(path, e))?;
    Ok(config)
}

/// Hex SHA-256 of the config's canonical JSON serialization.
pub fn config_hash(config: &SimConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("configs serialize");
    hex::encode(Sha256::digest(bytes))
}

/// One entry of a feature list file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub feature_id: String,
    pub name: String,
    pub screen_id: String,
    pub source: FeatureSource,
}

pub fn load_features(path: &Path) -> Result<Vec<Feature>, InputError> {
    let records: Vec<FeatureRecord> = read_json(path)?;
    records
        .into_iter()
        .map(|r| Feature::new(r.feature_id, &r.name, r.screen_id, r.source).map_err(|e| InputError::invalid(path, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tether_core::sim::GuardrailPolicy;

    #[test]
    fn malformed_json_names_the_field() {
        let err = parse_json::<Vec<SignatureRule>>(Path::new("r.json"), r#"[{"signature":"NOPE","patterns":[]}]"#)
            .unwrap_err();
        match err {
            InputError::Malformed { field, .. } => assert_eq!(field.as_deref(), Some("[0].signature")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(read_text(Path::new("/nonexistent/x.json")), Err(InputError::Io { .. })));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = SimConfig::calibrated(GuardrailPolicy::baseline(), 1);
        let b = SimConfig::calibrated(GuardrailPolicy::baseline(), 2);
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
