//! Data-driven stand-ins for the closed-form frequency metrics.
//!
//! Small single-hidden-layer ReLU networks are trained on samples of the
//! closed forms (nadir depth and inverter power peak), then compiled into
//! exact mixed-integer linear fragments via per-neuron interval bounds, so a
//! dispatch problem can constrain quantities that are nonlinear in the
//! decision variables. Every stage carries its own cross-check: datasets are
//! reproducible and bracketed by corner evaluations, bounds are validated by
//! Monte Carlo containment, and encodings are verified against the forward
//! pass through an independent solve.

pub mod bounds;
pub mod dataset;
pub mod encode;
pub mod mlp;

pub use bounds::{propagate_bounds, NeuronBound, NeuronBounds};
pub use dataset::{generate_dataset, read_dataset_csv, write_dataset_csv, Dataset, TargetKind};
pub use encode::{encode_relu_milp, verify_encoding, MilpFragment, VerifyReport};
pub use mlp::{
    load_model, predict, relative_accuracy, save_model, train_mlp, train_mlp_with, Layer, Mlp,
    TrainConfig,
};
