use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::classifier::{Architecture, TextClassifier};

pub const CHECKPOINT_FORMAT: &str = "textattr-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON checkpoint. Tensors are flattened row-major; floats are written in
/// shortest round-trip form so save/load is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub arch: Architecture,
    pub init_seed: u64,
    pub head_seed: Option<u64>,
    pub embedding: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl From<&TextClassifier> for Checkpoint {
    fn from(m: &TextClassifier) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            arch: m.arch,
            init_seed: m.init_seed,
            head_seed: m.head_seed,
            embedding: m.embedding.clone(),
            w1: m.w1.clone(),
            b1: m.b1.clone(),
            w2: m.w2.clone(),
            b2: m.b2.clone(),
        }
    }
}

impl Checkpoint {
    pub fn into_model(self) -> Result<TextClassifier> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut model =
            TextClassifier::from_parts(self.arch, self.embedding, self.w1, self.b1, self.w2, self.b2)?;
        model.init_seed = self.init_seed;
        model.head_seed = self.head_seed;
        Ok(model)
    }
}

impl TextClassifier {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<Checkpoint>(text)?.into_model()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
