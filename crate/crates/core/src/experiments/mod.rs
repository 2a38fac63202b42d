//! Reference experiments built on the differentiable persistence pipeline:
//! point-cloud shaping, level-set denoising, topologically regularized
//! regression, directional persistence features, and gradient attacks on a
//! linear classifier over those features.

pub mod attack;
pub mod features;
pub mod optimize;
pub mod regression;
pub mod synth;

pub use attack::{
    gradient_attack, shape_dataset, shape_image, train_classifier, AttackResult,
    LinearClassifier, ShapeClass,
};
pub use features::{feature_index, topo_features, topo_features_backward, FEATURE_COUNT};
pub use optimize::{
    cloud_loss_and_grad, field_loss_and_grad, optimize_point_cloud, optimize_scalar_field,
    FiltrationKind, OptimizationConfig, Trajectory, WeightedLoss,
};
pub use regression::{
    default_lambda_grid, min_norm_least_squares, penalty_value_grad, regularized_regression,
    Penalty, RegressionProblem, RegressionResult,
};
pub use synth::{annulus_image, bump_image, synth_regression, BetaKind, RegressionData};
