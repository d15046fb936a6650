//! The versioned JSON model file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::Tensor;

use super::layers::Layer;
use super::{LayeredModel, NetError};

/// Format version written by this build; files declaring any other version
/// are rejected rather than guessed at.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Provenance carried alongside the weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Seed the training run was started with.
    pub training_seed: u64,
    /// Free-form identifier of the training data.
    pub dataset_id: String,
    /// Held-out accuracy recorded at save time, if it was measured.
    pub accuracy: Option<f64>,
}

/// On-disk form of one layer. Parameter tensors are stored flat with their
/// dimensions spelled out so a file is readable without tensor conventions.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LayerSpec {
    Dense {
        output_dim: usize,
        input_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Relu,
    Conv2d {
        out_channels: usize,
        in_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        kernels: Vec<f64>,
    },
    Flatten,
    Softmax,
}

/// On-disk form of a whole model.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    class_count: usize,
    representation_index: usize,
    layers: Vec<LayerSpec>,
    metadata: ModelMetadata,
}

/// Serialises a model (with metadata) to the JSON file format.
///
/// Floats are written in shortest round-trip form, so saving and loading
/// reproduces every weight bit for bit.
pub fn model_to_string(model: &LayeredModel, metadata: &ModelMetadata) -> String {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        class_count: model.class_count(),
        representation_index: model.representation_index(),
        layers: model.layers().iter().map(layer_to_spec).collect(),
        metadata: metadata.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)
        .expect("model files contain only plain finite data");
    text.push('\n');
    text
}

/// Parses the JSON model format, re-validating all structural invariants.
pub fn model_from_str(text: &str) -> Result<(LayeredModel, ModelMetadata), NetError> {
    let file: ModelFile = match serde_json::from_str(text) {
        Ok(file) => file,
        Err(e) => {
            // A clean version mismatch should say so even when the rest of
            // the document no longer matches this build's schema.
            if let Some(found) = peek_format_version(text) {
                if found != MODEL_FORMAT_VERSION {
                    return Err(NetError::FormatVersion {
                        found,
                        supported: MODEL_FORMAT_VERSION,
                    });
                }
            }
            return Err(NetError::ModelParse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            });
        }
    };
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(NetError::FormatVersion {
            found: file.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let layers = file
        .layers
        .into_iter()
        .map(spec_to_layer)
        .collect::<Result<Vec<_>, _>>()?;
    let model = LayeredModel::new(layers, file.representation_index, file.class_count)?;
    Ok((model, file.metadata))
}

/// Writes a model file.
pub fn save_model(
    path: impl AsRef<Path>,
    model: &LayeredModel,
    metadata: &ModelMetadata,
) -> Result<(), NetError> {
    std::fs::write(path.as_ref(), model_to_string(model, metadata))?;
    Ok(())
}

/// Reads a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<(LayeredModel, ModelMetadata), NetError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    model_from_str(&text)
}

fn layer_to_spec(layer: &Layer) -> LayerSpec {
    match layer {
        Layer::Dense { weights, bias } => LayerSpec::Dense {
            output_dim: weights.rows(),
            input_dim: weights.cols(),
            weights: weights.data().to_vec(),
            bias: bias.data().to_vec(),
        },
        Layer::Relu => LayerSpec::Relu,
        Layer::Conv2d { kernels, stride } => LayerSpec::Conv2d {
            out_channels: kernels.shape()[0],
            in_channels: kernels.shape()[1],
            kernel_h: kernels.shape()[2],
            kernel_w: kernels.shape()[3],
            stride: *stride,
            kernels: kernels.data().to_vec(),
        },
        Layer::Flatten => LayerSpec::Flatten,
        Layer::Softmax => LayerSpec::Softmax,
    }
}

fn spec_to_layer(spec: LayerSpec) -> Result<Layer, NetError> {
    match spec {
        LayerSpec::Dense {
            output_dim,
            input_dim,
            weights,
            bias,
        } => Ok(Layer::Dense {
            weights: Tensor::matrix(output_dim, input_dim, weights)?,
            bias: Tensor::vector(bias)?,
        }),
        LayerSpec::Relu => Ok(Layer::Relu),
        LayerSpec::Conv2d {
            out_channels,
            in_channels,
            kernel_h,
            kernel_w,
            stride,
            kernels,
        } => Ok(Layer::Conv2d {
            kernels: Tensor::new(vec![out_channels, in_channels, kernel_h, kernel_w], kernels)?,
            stride,
        }),
        LayerSpec::Flatten => Ok(Layer::Flatten),
        LayerSpec::Softmax => Ok(Layer::Softmax),
    }
}

/// Best-effort extraction of the version field from arbitrary JSON.
fn peek_format_version(text: &str) -> Option<u32> {
    let value: serde_json::Value = serde_json::from_str(text).ok()?;
    value.get("format_version")?.as_u64()?.try_into().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metadata() -> ModelMetadata {
        ModelMetadata {
            training_seed: u64::MAX,
            dataset_id: "blobs-v1".to_string(),
            accuracy: Some(0.9375),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        // Include awkward values: negative zero and subnormals survive.
        let weights =
            Tensor::matrix(2, 3, vec![-0.0, 0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, -1e-310, 5e300])
                .unwrap();
        let layers = vec![
            Layer::Dense {
                weights,
                bias: Tensor::vector(vec![0.5, -0.25]).unwrap(),
            },
            Layer::Softmax,
        ];
        let model = LayeredModel::new(layers, 1, 2).unwrap();
        let text = model_to_string(&model, &metadata());
        let (loaded, meta) = model_from_str(&text).unwrap();
        assert_eq!(meta, metadata());
        assert_eq!(loaded.representation_index(), 1);
        let (orig, back) = match (&model.layers()[0], &loaded.layers()[0]) {
            (Layer::Dense { weights: a, .. }, Layer::Dense { weights: b, .. }) => (a, b),
            _ => panic!("layer kind changed in round trip"),
        };
        for (a, b) in orig.data().iter().zip(back.data().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let model = LayeredModel::mlp(6, &[5, 4], 3, 21).unwrap();
        save_model(&path, &model, &metadata()).unwrap();
        let (loaded, meta) = load_model(&path).unwrap();
        assert_eq!(loaded, model);
        assert_eq!(meta, metadata());
        // Saving the loaded model reproduces the file byte for byte.
        let again = model_to_string(&loaded, &meta);
        assert_eq!(again, std::fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn version_mismatch_is_reported_as_such() {
        let model = LayeredModel::mlp(4, &[3], 2, 1).unwrap();
        let text = model_to_string(&model, &ModelMetadata::default());
        let bumped = text.replace("\"format_version\": 1", "\"format_version\": 99");
        match model_from_str(&bumped) {
            Err(NetError::FormatVersion { found: 99, supported: 1 }) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_reports_parse_position() {
        let model = LayeredModel::mlp(4, &[3], 2, 1).unwrap();
        let text = model_to_string(&model, &ModelMetadata::default());
        let truncated = &text[..text.len() / 2];
        match model_from_str(truncated) {
            Err(NetError::ModelParse { line, column, .. }) => {
                assert!(line >= 1);
                assert!(column >= 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn structurally_invalid_models_fail_validation() {
        // A file whose stack puts softmax in the middle parses as JSON but
        // must still be rejected.
        let text = r#"{
            "format_version": 1,
            "class_count": 2,
            "representation_index": 0,
            "layers": [
                {"type": "softmax"},
                {"type": "relu"},
                {"type": "softmax"}
            ],
            "metadata": {"training_seed": 0, "dataset_id": "", "accuracy": null}
        }"#;
        assert!(matches!(
            model_from_str(text),
            Err(NetError::InvalidModel(_))
        ));
    }

    #[test]
    fn non_finite_weights_are_rejected_at_load() {
        // JSON has no literal for infinity; enormous decimal values either
        // fail in the parser or overflow and get caught by the tensor layer.
        let text = r#"{
            "format_version": 1,
            "class_count": 2,
            "representation_index": 1,
            "layers": [
                {"type": "dense", "output_dim": 2, "input_dim": 1,
                 "weights": [1e999, 1.0], "bias": [0.0, 0.0]},
                {"type": "softmax"}
            ],
            "metadata": {"training_seed": 0, "dataset_id": "", "accuracy": null}
        }"#;
        assert!(model_from_str(text).is_err());
    }
}
