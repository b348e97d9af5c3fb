//! Model container:
//!
//! ```text
//! ASANAKIT-MODEL v1
//! family gbdt
//! classes 5
//! features 19
//! {...json payload...}
//! ```

use std::fs;
use std::path::Path;

use super::{ModelError, TrainedModel};

pub const MAGIC: &str = "ASANAKIT-MODEL";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_model(model: &TrainedModel) -> Vec<u8> {
    let payload = serde_json::to_string(model).expect("model parameters serialize");
    format!(
        "{MAGIC} v{FORMAT_VERSION}\nfamily {}\nclasses {}\nfeatures {}\n{payload}\n",
        model.spec.family.tag(),
        model.class_names.len(),
        model.feature_length
    )
    .into_bytes()
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::CorruptModel(msg.into())
}

fn header_field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, ModelError> {
    line.and_then(|l| l.strip_prefix(key))
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| corrupt(format!("missing `{key}` header line")))
}

pub fn load_model(bytes: &[u8]) -> Result<TrainedModel, ModelError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt("not UTF-8"))?;
    let mut lines = text.splitn(5, '\n');
    let magic = lines.next().unwrap_or_default();
    let version = magic
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(" v"))
        .ok_or_else(|| corrupt("bad magic header"))?;
    let version: u32 = version.trim().parse().map_err(|_| corrupt("bad format version"))?;
    if version > FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let family = header_field(lines.next(), "family")?;
    let classes: usize = header_field(lines.next(), "classes")?
        .parse()
        .map_err(|_| corrupt("bad class count"))?;
    let features: usize = header_field(lines.next(), "features")?
        .parse()
        .map_err(|_| corrupt("bad feature length"))?;
    let payload = lines.next().ok_or_else(|| corrupt("missing payload"))?;
    let model: TrainedModel =
        serde_json::from_str(payload.trim_end()).map_err(|e| corrupt(format!("payload: {e}")))?;
    if model.spec.family.tag() != family
        || model.class_names.len() != classes
        || model.feature_length != features
    {
        return Err(corrupt("header does not match payload"));
    }
    if model.kind.feature_length() != model.feature_length {
        return Err(corrupt("feature length does not match landmark kind"));
    }
    Ok(model)
}

pub fn save_model_file(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, save_model(model))?;
    Ok(())
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<TrainedModel, ModelError> {
    load_model(&fs::read(path)?)
}
