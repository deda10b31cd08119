//! On-disk records exchanged between subcommands.

use std::path::Path;

use eu_core::builder::ConstructionTrace;
use eu_core::decision::{SweepReport, ValidationRecord};
use eu_core::model::{EvidenceUnit, LayoutElement};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Output of `normalize`: one entry per page, sorted by page id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageElements {
    pub page_id: String,
    pub elements: Vec<LayoutElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validation {
    pub records: Vec<ValidationRecord>,
    pub sweep: Option<SweepReport>,
}

/// Output of `build` / `validate`: units, trace and the page's elements
/// with roles as left by construction (excluded elements included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltPage {
    pub page_id: String,
    pub eus: Vec<EvidenceUnit>,
    pub trace: ConstructionTrace,
    pub elements: Vec<LayoutElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<Validation>,
}

pub const ELEMENTS_FILE: &str = "elements.json";
pub const BUILD_FILE: &str = "build.json";
pub const EUS_FILE: &str = "eus.json";
pub const GRAPH_FILE: &str = "decision_layer.cypher";

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: line {} column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

/// Writes `build.json` and the flat `eus.json` used by `footprint`.
pub fn write_build(dir: &Path, pages: &[BuiltPage]) -> Result<(), CliError> {
    write_json(&dir.join(BUILD_FILE), pages)?;
    let eus: Vec<&EvidenceUnit> = pages.iter().flat_map(|p| p.eus.iter()).collect();
    write_json(&dir.join(EUS_FILE), &eus)
}
