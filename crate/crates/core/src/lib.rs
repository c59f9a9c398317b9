//! Part-decomposed vector-quantized human grasp generation.

pub mod config;
pub mod datagen;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod geometry;
pub mod hand;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod ops;
pub mod optim;
pub mod prior;
pub mod quantizer;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{MeshSolid, TriMesh, Vec3};
pub use hand::{forward_kinematics, HandLayer, HandMesh, HandParams, HandTemplate, Part};
pub use config::{RunConfig, TrainConfig};
pub use datagen::{derive_seed, generate_corpus, load_dataset, save_dataset, Dataset, DatagenConfig, TemplateKind};
pub use losses::LossWeights;
pub use metrics::{evaluate, GraspMetrics, MetricsReport, SimConfig};
pub use model::{mask_points, GeneratedGrasp, GraspModel, ModelConfig, SampleOptions};
pub use prior::{IndexSequence, PriorConfig, PriorModel};
pub use quantizer::Codebook;
pub use train::{load_trained, run_training, RunLayout, TrainSummary, Trainer, TrainingData};
pub use candle_core::{DType, Device};
