//! Versioned JSON envelopes for input files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use pqcausal::cauchy::SpacelikeMap;
use pqcausal::lipgraph::{build_inextendible, GraphMode, GraphSamples, LipMap};

use crate::CliError;

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Metric,
    Samples,
    Problem,
    Foliation,
    Surface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub kind: Kind,
    pub payload: Value,
}

impl InstanceFile {
    pub fn wrap<T: Serialize>(kind: Kind, payload: &T) -> Result<Self, CliError> {
        let payload = serde_json::to_value(payload).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(Self { version: VERSION, kind, payload })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("json value serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads either an envelope of the given kind or a bare payload.
pub fn load<T: DeserializeOwned>(path: &Path, kind: Kind) -> Result<T, CliError> {
    let value = read_json(path)?;
    let payload = match serde_json::from_value::<InstanceFile>(value.clone()) {
        Ok(env) => {
            if env.version != VERSION {
                return Err(CliError::Input(format!("{}: unsupported version {}", path.display(), env.version)));
            }
            if env.kind != kind {
                return Err(CliError::Input(format!(
                    "{}: expected kind {kind:?}, found {:?}",
                    path.display(),
                    env.kind
                )));
            }
            env.payload
        }
        Err(_) => value,
    };
    serde_json::from_value(payload).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MapPayload {
    Map(LipMap),
    Samples(GraphSamples),
}

/// A causal map given as a map or as graph samples extended with bound 1.
pub fn load_causal_map(path: &Path) -> Result<LipMap, CliError> {
    match load::<MapPayload>(path, Kind::Samples)? {
        MapPayload::Map(m) => Ok(m),
        MapPayload::Samples(s) => Ok(build_inextendible(s, GraphMode::Causal, 1e-9)?),
    }
}

/// A spacelike surface given as a map or as timelike-position samples.
pub fn load_surface(path: &Path) -> Result<SpacelikeMap, CliError> {
    let map = match load::<MapPayload>(path, Kind::Surface)? {
        MapPayload::Map(m) => m,
        MapPayload::Samples(s) => build_inextendible(s, GraphMode::Timelike, 1e-9)?,
    };
    Ok(SpacelikeMap::new(map)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pqcausal::pqform::PseudoMetric;

    #[test]
    fn envelope_and_bare_payload_agree() {
        let dir = tempfile::tempdir().unwrap();
        let g = PseudoMetric::standard(2, 1).unwrap();
        let wrapped = dir.path().join("m.json");
        InstanceFile::wrap(Kind::Metric, &g).unwrap().write(&wrapped).unwrap();
        let bare = dir.path().join("bare.json");
        std::fs::write(&bare, serde_json::to_string(&g).unwrap()).unwrap();
        let a: PseudoMetric = load(&wrapped, Kind::Metric).unwrap();
        let b: PseudoMetric = load(&bare, Kind::Metric).unwrap();
        assert_eq!(a, g);
        assert_eq!(b, g);
    }

    #[test]
    fn samples_become_maps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, r#"{"sources":[[0.0],[1.0]],"targets":[[0.0],[0.5]]}"#).unwrap();
        let f = load_causal_map(&path).unwrap();
        assert!((f.eval(&[1.0]).unwrap()[0] - 0.5).abs() < 1e-9);
        assert!(load_surface(&path).unwrap().constant() < 1.0);
        assert_eq!(load_causal_map(&dir.path().join("none.json")).unwrap_err().exit_code(), 65);
    }
}
