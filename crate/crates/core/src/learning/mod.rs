//! Trainable model, data handling and aggregation rules.

pub mod aggregate;
pub mod data;
pub mod model;
pub mod partition;
pub mod train;

pub use aggregate::{async_aggregate, fedavg, fedavg_weighted, staleness_weight, AsyncPolicy};
pub use data::{gaussian_blobs, Batch, BlobSpec, Dataset, DatasetPartition};
pub use model::{init_model, Activation, LayerSpec, ModelParams, ShapeSpec};
pub use partition::{partition, partition_indices, PartitionMode, PartitionSpec};
pub use train::{
    cross_entropy_loss, evaluate, gradient, local_train_epoch, local_train_epoch_split, TrainingHyper,
};
