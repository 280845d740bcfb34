//! Batch campaigns: generate, profile, inject, generate tests, detect and
//! aggregate into a result matrix.

mod config;
mod matrix;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    BenchmarkSpec, CampaignConfig, InstanceGroup, ProfileConfig, StrategyConfig, StrategySpec,
    CONFIG_SCHEMA,
};
pub use matrix::{aggregate, InstanceResult, MatrixCell, ResultMatrix};
pub use run::{Campaign, Layout, Manifest, MAX_NODE_DRAWS};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}`{}: {message}", instance.as_ref().map(|i| format!(" (instance {i})")).unwrap_or_default())]
    Stage {
        stage: &'static str,
        instance: Option<String>,
        message: String,
    },
    #[error("refusing to write ground truth to {ground_truth:?}: it lies inside the detection input directory {suspects:?}")]
    Opacity {
        ground_truth: PathBuf,
        suspects: PathBuf,
    },
}

impl CampaignError {
    pub(crate) fn stage(stage: &'static str, instance: Option<&str>, e: impl ToString) -> Self {
        CampaignError::Stage {
            stage,
            instance: instance.map(str::to_string),
            message: e.to_string(),
        }
    }

    /// True for errors in the configuration or invocation rather than in a stage.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            CampaignError::Config(_) | CampaignError::Opacity { .. }
        )
    }
}
