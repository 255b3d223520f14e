use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What produced an output directory. Contains no timestamps, so identical
/// runs write identical manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input_path: Option<String>,
    pub subcommand: String,
    /// Every parameter with defaults filled in, rendered as strings.
    pub parameters: BTreeMap<String, String>,
    pub toolkit_version: String,
    /// Hex SHA-256 of the input file bytes.
    pub input_sha256: Option<String>,
    /// Files written alongside, sorted.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            input_path: None,
            subcommand: subcommand.to_string(),
            parameters: BTreeMap::new(),
            toolkit_version: TOOLKIT_VERSION.to_string(),
            input_sha256: None,
            outputs: Vec::new(),
        }
    }

    pub fn with_input(mut self, path: &str, bytes: &[u8]) -> Self {
        self.input_path = Some(path.to_string());
        self.input_sha256 = Some(sha256_hex(bytes));
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut m = RunManifest::new("thermo").with_input("data.json", b"{}");
        m.set("epsilon", 5.7);
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
