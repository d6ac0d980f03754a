//! Bit-exact simulator of a small MLP accelerator whose MAC units use a
//! 32-configuration error-controllable approximate multiplier.
//!
//! The crate covers the arithmetic (sign-magnitude formats, the configurable
//! column multiplier, MAC and neuron), the four-pass multicycle datapath and
//! its controller, MNIST ingestion and input reduction, offline training and
//! post-training quantisation, the model file format, exhaustive multiplier
//! error metrics, a gate-count power proxy, and the configuration sweep.
//!
//! Data-parallel loops go through [`exec::Execution`]; the `parallel`
//! feature (on by default) backs them with rayon.

pub mod approx_mult;
pub mod datapath;
pub mod dataset;
pub mod error;
pub mod error_metrics;
pub mod exec;
pub mod fixedpoint;
pub mod mac_neuron;
pub mod model_file;
pub mod pipeline;
pub mod power_model;
pub mod sweep;
pub mod trainer;

pub use approx_mult::{multiply_mag, multiply_signed, MultConfig};
pub use datapath::{classify_image, run_dataset, NetworkModel, Prediction};
pub use error::{Error, LoadError, Result};
pub use exec::Execution;
pub use fixedpoint::{Product15, SignMag8, SignedAcc};
