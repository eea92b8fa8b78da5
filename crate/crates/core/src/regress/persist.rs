use super::{ForestModel, RegressError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FOREST_FORMAT: &str = "ate-predict-forest";
pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: ForestModel,
}

pub fn forest_to_json(model: &ForestModel) -> String {
    let doc = Document {
        format: FOREST_FORMAT.to_string(),
        version: FOREST_FORMAT_VERSION,
        model: model.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("forest serializes")
}

pub fn forest_from_json(text: &str, path: &Path) -> Result<ForestModel> {
    let err = |message: String| RegressError::Persist {
        path: path.to_path_buf(),
        message,
    };
    let doc: Document = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    if doc.format != FOREST_FORMAT {
        return Err(err(format!("unexpected format `{}`", doc.format)));
    }
    if doc.version != FOREST_FORMAT_VERSION {
        return Err(err(format!("unsupported version {}", doc.version)));
    }
    if doc.model.trees.len() != doc.model.hyperparameters.n_estimators {
        return Err(err("tree count does not match n_estimators".into()));
    }
    Ok(doc.model)
}

pub fn save_forest(model: &ForestModel, path: &Path) -> Result<()> {
    crate::fsio::write_atomic(path, forest_to_json(model).as_bytes()).map_err(|e| {
        RegressError::Persist {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })
}

pub fn load_forest(path: &Path) -> Result<ForestModel> {
    let text = std::fs::read_to_string(path).map_err(|e| RegressError::Persist {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    forest_from_json(&text, path)
}
