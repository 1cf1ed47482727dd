//! Neural regression of one UODF direction.
//!
//! Each direction has two networks that share a positional encoding of the
//! ray's plane coordinates: a regressor that maps the encoded ray plus the 3D
//! point to a distance, and a classifier for whether the ray meets the shape.
//! Training combines an L1 value loss, a unit-derivative loss on the
//! distance's slope along the ray, and a loss on the exact field evaluated at
//! the surface point the prediction implies.

mod checkpoint;
mod encoding;
mod loss;
mod mlp;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, sidecar_path, CheckpointError, CheckpointMeta};
pub use encoding::{encode_ray, PosEncoding, ENCODING_DIM, FREQUENCIES};
pub use loss::{
    loss_from_predictions, loss_terms, point_loss, sign_of, GroundTruthOracle, LossEval, LossTerms, LossWeights,
    PointLoss,
};
pub use mlp::{parameter_count, Activation, Mlp, Trace};
pub use model::{Architecture, MlpModel, RayQuery, UodfModel};
pub use train::{predict_field, selected_rays, train_direction, Adam, EpochLog, TrainConfig, TrainError, TrainOutcome};
