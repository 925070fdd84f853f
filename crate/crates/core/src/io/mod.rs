//! Serialization: model text, CSV datasets, augmentation sidecars, and the
//! brute-force joint table used as a test oracle.

mod dataset;
mod model;
mod table;

use std::path::Path;

pub use dataset::{load_dataset, parse_dataset, render_dataset, save_dataset};
pub use model::{
    format_real, load_model, load_model_unchecked, parse_model, parse_valid_model, render_model, save_model,
    ModelDocument, FORMAT_VERSION,
};
pub use table::{brute_force_table, JointTable};

use crate::augment::AugmentationRecord;
use crate::error::{Result, SpnError};

pub fn save_record(record: &AugmentationRecord, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(record).map_err(|e| SpnError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_record(path: impl AsRef<Path>) -> Result<AugmentationRecord> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| SpnError::Parse { line: e.line(), column: e.column(), detail: e.to_string() })
}
