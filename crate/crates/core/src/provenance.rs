use serde::{Deserialize, Serialize};

use crate::fixed::Fixed2;

/// One training pass recorded on a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingStage {
    pub datasets: Vec<String>,
    pub epochs: usize,
    /// Whether this stage started from an existing model.
    pub continued: bool,
    pub sentences: usize,
    pub tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_accuracy: Option<Fixed2>,
}

impl TrainingStage {
    pub fn new(datasets: &[String], epochs: usize, continued: bool) -> Self {
        TrainingStage {
            datasets: datasets.to_vec(),
            epochs,
            continued,
            sentences: 0,
            tokens: 0,
            validation_accuracy: None,
        }
    }
}
