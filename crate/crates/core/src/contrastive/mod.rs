//! Contrastive head, baseline head, trainer and model persistence.

mod baseline;
mod checkpoint;
mod grid;
mod loss;
mod model;
mod projection;
mod trainer;

pub use baseline::BaselineModel;
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainedModel, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use grid::{grid_search, select_best, Grid, GridCell, GridResult, DEFAULT_HEADS, DEFAULT_MARGINS};
pub use loss::{contrastive_loss, contrastive_loss_grad, cosine_similarity, euclidean_distance, LossGradient, LossTerm};
pub use model::{cosine_decision, ContrastiveConfig, ContrastiveModel, PairClassifier, Prediction};
pub use projection::{BatchNorm, ForwardCache, HeadGradient, Mode, ProjectionHead, ProjectionKind};
pub use trainer::{
    distance_summary, fit_baseline, fit_contrastive, train_baseline, train_contrastive, train_snippets, DistanceSummary,
    TrainReport,
};
