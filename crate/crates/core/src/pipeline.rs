//! End-to-end flow from MNIST files to a quantised accelerator model.

use std::path::Path;

use crate::datapath::{NetworkModel, INPUT_FEATURES};
use crate::dataset::{build_examples, load_mnist, pool2x2, select_features, Example, FeatureVector, Pooled, Split};
use crate::error::Result;
use crate::exec::Execution;
use crate::trainer::{quantize_model, train_float, FloatMlp, TrainConfig};

/// Training images used to calibrate the hidden activation shift.
pub const CALIBRATION_IMAGES: usize = 1000;

/// MNIST reduced to 62 quantised inputs, with the selected pooled positions.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub feature_indices: Vec<u16>,
    pub train: Vec<Example>,
    pub test: Vec<Example>,
}

impl PreparedData {
    pub fn load(mnist_dir: &Path, exec: Execution) -> Result<Self> {
        let (train_images, train_labels) = load_mnist(mnist_dir, Split::Train)?;
        let pooled: Vec<Pooled> = exec.map(&train_images, pool2x2);
        let feature_indices = select_features(&pooled, INPUT_FEATURES)?;
        let train = build_examples(&train_images, &train_labels, &feature_indices)?;
        let (test_images, test_labels) = load_mnist(mnist_dir, Split::Test)?;
        let test = build_examples(&test_images, &test_labels, &feature_indices)?;
        Ok(PreparedData {
            feature_indices,
            train,
            test,
        })
    }

    pub fn unit_inputs(examples: &[Example]) -> (Vec<Vec<f64>>, Vec<u8>) {
        examples.iter().map(|e| (e.features.to_unit_f64(), e.label)).unzip()
    }

    pub fn calibration(&self) -> Vec<FeatureVector> {
        self.train.iter().take(CALIBRATION_IMAGES).map(|e| e.features).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModels {
    pub float: FloatMlp,
    pub float_train_accuracy: f64,
    pub float_test_accuracy: f64,
    pub quantized: NetworkModel,
}

pub fn train_and_quantize(data: &PreparedData, tc: &TrainConfig) -> Result<TrainedModels> {
    let (xs, ys) = PreparedData::unit_inputs(&data.train);
    let outcome = train_float(&xs, &ys, tc)?;
    let (test_xs, test_ys) = PreparedData::unit_inputs(&data.test);
    let float_test_accuracy = outcome.model.accuracy(&test_xs, &test_ys);
    let quantized = quantize_model(&outcome.model, &data.feature_indices, &data.calibration())?;
    Ok(TrainedModels {
        float: outcome.model,
        float_train_accuracy: outcome.train_accuracy,
        float_test_accuracy,
        quantized,
    })
}
