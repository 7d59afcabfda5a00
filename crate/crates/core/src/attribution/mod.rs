//! Feature attribution over meta-tokens.
//!
//! * [`kernel_shap`]: constrained weighted least squares over sampled (or
//!   enumerated) coalitions, where absent meta-tokens are UNK-masked as a
//!   whole. At token granularity this is ordinary KernelSHAP; at sentence
//!   granularity it is the direct meta-token variant.
//! * [`exact_shapley`]: brute-force Shapley values, the test oracle.
//! * [`integrated_gradients`]: midpoint Riemann IG from an all-UNK baseline.
//! * [`aggregate_indirect`] and [`merge_subwords`]: regroup token attributions.

mod aggregate;
mod coalitions;
mod exact;
mod ig;
mod kernel_shap;
mod linalg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aggregate::{aggregate_indirect, merge_subwords};
pub use coalitions::{default_budget, sample_coalitions, shapley_kernel_weight, CoalitionPlan};
pub use exact::{exact_shapley, exact_shapley_values, EXACT_SHAPLEY_MAX_FEATURES};
pub use ig::{integrated_gradients, integrated_gradients_embedded, DEFAULT_IG_STEPS};
pub use kernel_shap::{kernel_shap, kernel_shap_values, CoalitionGame, CoalitionSample};

use crate::corpus::{make_partition, Document, Granularity, Partition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapDirect,
    ShapIndirect,
    Ig,
    IgIndirect,
    ExactShapley,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ShapDirect => "shap_direct",
            Method::ShapIndirect => "shap_indirect",
            Method::Ig => "ig",
            Method::IgIndirect => "ig_indirect",
            Method::ExactShapley => "exact_shapley",
        }
    }

    /// Method label after summing token attributions into meta-tokens.
    pub fn indirect(self) -> Method {
        match self {
            Method::ShapDirect | Method::ShapIndirect | Method::ExactShapley => Method::ShapIndirect,
            Method::Ig | Method::IgIndirect => Method::IgIndirect,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shap_direct" => Ok(Method::ShapDirect),
            "shap_indirect" => Ok(Method::ShapIndirect),
            "ig" => Ok(Method::Ig),
            "ig_indirect" => Ok(Method::IgIndirect),
            "exact_shapley" => Ok(Method::ExactShapley),
            other => Err(Error::Config(format!("unknown attribution method {other:?}"))),
        }
    }
}

/// Importance vector over the meta-tokens of a partition, plus the baseline
/// score φ₀ (all features masked).
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub doc_id: String,
    pub partition: Partition,
    pub values: Vec<f64>,
    pub phi0: f64,
    pub target_class: usize,
    pub method: Method,
    pub seed: u64,
    /// Coalition budget for SHAP, step count for IG, 0 for exact Shapley.
    pub budget_or_steps: usize,
}

impl Attribution {
    pub fn granularity(&self) -> Granularity {
        self.partition.granularity()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// φ₀ + Σφ.
    pub fn total(&self) -> f64 {
        self.phi0 + self.values.iter().sum::<f64>()
    }

    pub fn to_record(&self) -> AttributionRecord {
        AttributionRecord {
            doc_id: self.doc_id.clone(),
            method: self.method,
            granularity: self.granularity(),
            seed: self.seed,
            budget_or_steps: self.budget_or_steps,
            target_class: self.target_class,
            phi0: self.phi0,
            values: self.values.clone(),
        }
    }
}

/// Serialized attribution: `{doc_id, method, granularity, seed,
/// budget_or_steps, target_class, phi0, values[]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub doc_id: String,
    pub method: Method,
    pub granularity: Granularity,
    pub seed: u64,
    pub budget_or_steps: usize,
    pub target_class: usize,
    pub phi0: f64,
    pub values: Vec<f64>,
}

impl AttributionRecord {
    /// Rebuilds the attribution, recovering the partition from `document`.
    pub fn into_attribution(self, document: &Document) -> Result<Attribution> {
        if document.id != self.doc_id {
            return Err(Error::Mismatch(format!(
                "record for {} applied to document {}",
                self.doc_id, document.id
            )));
        }
        let partition = make_partition(document, self.granularity)?;
        if partition.len() != self.values.len() {
            return Err(Error::Mismatch(format!(
                "record for {} has {} values but the {} partition has {} groups",
                self.doc_id,
                self.values.len(),
                self.granularity,
                partition.len()
            )));
        }
        Ok(Attribution {
            doc_id: self.doc_id,
            partition,
            values: self.values,
            phi0: self.phi0,
            target_class: self.target_class,
            method: self.method,
            seed: self.seed,
            budget_or_steps: self.budget_or_steps,
        })
    }
}
