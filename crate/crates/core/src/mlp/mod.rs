//! The per-pixel clothing classifier: a 4 → 16 → 8 → C dense network with
//! ReLU hidden layers, trained from scratch with softmax cross-entropy and
//! Adam.

mod dataset;
mod gradcheck;
mod model;
mod train;

pub use dataset::{load_dataset, save_dataset, SpectralDataset};
pub use gradcheck::{grad_check, GradCheckReport, FD_STEP};
pub use model::{
    argmax, load_model, save_model, Activation, Category, Classification, DenseLayer, Gradients,
    MlpModel, Scratch, MODEL_VERSION,
};
pub use train::{
    augment, balanced_batches, cross_entropy, train, Adam, EarlyStopping, EpochLog, StopDecision,
    TrainConfig, TrainLog,
};
