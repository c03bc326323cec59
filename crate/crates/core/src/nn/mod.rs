//! Minimal dense network with manual backpropagation, a gated projection
//! layer, optimizers with schedules, synthetic and IDX data ingestion, and
//! the gradient-suppression probes.

mod data;
mod layers;
mod mat;
mod probe;
mod train;

pub use data::{
    load_idx, load_idx_images, load_idx_labels, make_synthetic, IdxError, SyntheticKind,
    IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use layers::{
    backward, calibrated_gain, forward, lsuv_rescale, DenseLayer, DenseNet, GmgluLayer, Gradients,
    Layer, LayerActivation, LayerGrads, NnError, Tape, TapeEntry,
};
pub use mat::Mat;
pub use probe::{
    dead_neuron_first_layer_grad, probe_csv_header, probe_csv_row, suppression_probe,
    SuppressionProbeResult,
};
pub use train::{
    accuracy, softmax_cross_entropy, train, Dataset, EpochStats, Optimizer, Schedule, TrainConfig,
    TrainReport,
};
