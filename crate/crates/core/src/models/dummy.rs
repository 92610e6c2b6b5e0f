//! Prior-only baseline: predicts the training category mix everywhere.

use serde::{Deserialize, Serialize};

use super::Proba;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DummyModel {
    pub prior: Proba,
}

impl DummyModel {
    pub fn predict_proba(&self, _x: &[f64]) -> Proba {
        self.prior
    }
}

pub fn fit(labels: &[usize]) -> DummyModel {
    DummyModel {
        prior: super::priors(labels),
    }
}
