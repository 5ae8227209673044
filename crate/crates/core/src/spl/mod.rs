//! Product-line variability: feature models, configurations, feature
//! expressions, and derivation of per-product Mealy machines either from a
//! featured transition system or from per-feature component machines.

mod components;
mod expr;
mod feature_model;
mod fts;

use std::path::Path;

use thiserror::Error;

pub use components::ComponentFamily;
pub use expr::FeatureExpr;
pub use feature_model::{Configuration, FeatureModel, Variability, ENUMERATION_LIMIT, MAX_FEATURES};
pub use fts::FeaturedTransitionSystem;

#[cfg(test)]
pub(crate) use feature_model::fixtures;

use crate::mealy::{FsmError, MealyError, MealyMachine};

/// Output emitted by the self-loops that complete a projected product.
pub const QUIESCENT_OUTPUT: &str = "0";

#[derive(Debug, Error)]
pub enum SplError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` declared twice")]
    DuplicateFeature(String),
    #[error("group `{0}` must have at least two members under one parent, all of one kind")]
    InvalidGroup(String),
    #[error("invalid feature model: {0}")]
    InvalidModel(String),
    #[error("{count} features exceed the limit of {limit}")]
    TooManyFeatures { count: usize, limit: usize },
    #[error("cannot parse feature expression `{expr}` at byte {position}: {message}")]
    Expr {
        expr: String,
        position: usize,
        message: String,
    },
    #[error("invalid featured transition system: {0}")]
    InvalidFts(String),
    #[error("two enabled transitions for ({state}, {input})")]
    NondeterministicProjection { state: String, input: String },
    #[error("configuration [{0}] is not valid")]
    InvalidConfiguration(String),
    #[error("product has no behaviour (no selected feature owns a component)")]
    EmptyProduct,
    #[error(transparent)]
    Machine(#[from] MealyError),
    #[error("{path}: {source}")]
    Fsm { path: String, source: FsmError },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl SplError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SplError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Where product behaviour comes from.
#[derive(Debug, Clone)]
pub enum BehaviorModel {
    Fts(FeaturedTransitionSystem),
    Components(ComponentFamily),
}

/// A feature model together with its behavioural variability model.
#[derive(Debug, Clone)]
pub struct ProductLine {
    pub model: FeatureModel,
    pub behavior: BehaviorModel,
}

fn read(path: &Path) -> Result<String, SplError> {
    std::fs::read_to_string(path).map_err(|e| SplError::io(path, e))
}

impl ProductLine {
    pub fn load_fts(model: &Path, fts: &Path) -> Result<Self, SplError> {
        let fm = FeatureModel::from_json(&read(model)?).map_err(|e| annotate(model, e))?;
        let fts = FeaturedTransitionSystem::from_json(&read(fts)?, &fm).map_err(|e| annotate(fts, e))?;
        Ok(ProductLine {
            model: fm,
            behavior: BehaviorModel::Fts(fts),
        })
    }

    pub fn load_components(model: &Path, dir: &Path) -> Result<Self, SplError> {
        let fm = FeatureModel::from_json(&read(model)?).map_err(|e| annotate(model, e))?;
        let family = ComponentFamily::load_dir(&fm, dir)?;
        Ok(ProductLine {
            model: fm,
            behavior: BehaviorModel::Components(family),
        })
    }

    pub fn product_alphabet(&self, c: &Configuration) -> Vec<String> {
        match &self.behavior {
            BehaviorModel::Fts(fts) => fts.product_alphabet(c),
            BehaviorModel::Components(fam) => fam.product_alphabet(c),
        }
    }

    /// The Mealy machine of a valid configuration.
    pub fn derive(&self, c: &Configuration) -> Result<MealyMachine, SplError> {
        if !self.model.is_valid(c)? {
            return Err(SplError::InvalidConfiguration(
                self.model.selected_names(c).join(", "),
            ));
        }
        match &self.behavior {
            BehaviorModel::Fts(fts) => fts.derive(&self.model, c),
            BehaviorModel::Components(fam) => fam.derive(c),
        }
    }
}

/// Prefixes model-level errors with the file they came from.
fn annotate(path: &Path, e: SplError) -> SplError {
    match e {
        SplError::Io { .. } | SplError::Fsm { .. } => e,
        other => SplError::InvalidModel(format!("{}: {other}", path.display())),
    }
}
