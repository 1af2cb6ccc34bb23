//! Model persistence: a single JSON artifact with a format version, the
//! head configuration, and flattened parameters.

use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{ContextModel, HeadError, HeadFunction};

const FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`ContextModel`]. Parameters are stored as f64 so one
/// artifact serves both scalar widths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub function: HeadFunction,
    pub k: usize,
    pub dim: usize,
    pub dropout: f64,
    pub threshold: f64,
    pub mlp_params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agg_map_params: Option<Vec<f64>>,
}

impl ModelArtifact {
    pub fn from_model<F: Scalar>(model: &ContextModel<F>, dropout: f64) -> Self {
        ModelArtifact {
            format_version: FORMAT_VERSION,
            function: model.function,
            k: model.k,
            dim: model.mlp.input_dim(),
            dropout,
            threshold: model.threshold.to_f64_lossy(),
            mlp_params: model.mlp.flat_params().iter().map(|v| v.to_f64_lossy()).collect(),
            agg_map_params: model
                .agg_map
                .as_ref()
                .map(|m| m.flat_params().iter().map(|v| v.to_f64_lossy()).collect()),
        }
    }

    pub fn into_model<F: Scalar>(self) -> Result<ContextModel<F>, HeadError> {
        if self.format_version != FORMAT_VERSION {
            return Err(HeadError::ArtifactVersion {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let mut model = ContextModel::<F>::new(self.function, self.k, self.dim, self.dropout, 0);
        let check = |name: &str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(HeadError::Artifact {
                    path: String::new(),
                    detail: format!("{name} has {got} parameters, expected {expected}"),
                })
            }
        };
        check("classifier", model.mlp.n_params(), self.mlp_params.len())?;
        model.mlp.set_flat_params(&Array1::from_vec(
            self.mlp_params.iter().map(|&v| F::cast(v)).collect(),
        ));
        match (&mut model.agg_map, self.agg_map_params) {
            (Some(map), Some(params)) => {
                check("aggregation map", map.n_params(), params.len())?;
                map.set_flat_params(&Array1::from_vec(
                    params.iter().map(|&v| F::cast(v)).collect(),
                ));
            }
            (None, None) => {}
            (Some(_), None) => {
                return Err(HeadError::Artifact {
                    path: String::new(),
                    detail: "learned aggregation head is missing its map parameters".into(),
                });
            }
            (None, Some(_)) => {
                return Err(HeadError::Artifact {
                    path: String::new(),
                    detail: format!(
                        "head {} does not take aggregation map parameters",
                        self.function,
                    ),
                });
            }
        }
        model.threshold = F::cast(self.threshold);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), HeadError> {
        let err = |detail: String| HeadError::Artifact {
            path: path.display().to_string(),
            detail,
        };
        let text = serde_json::to_string_pretty(self).map_err(|e| err(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HeadError> {
        let err = |detail: String| HeadError::Artifact {
            path: path.display().to_string(),
            detail,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

impl<F: Scalar> ContextModel<F> {
    pub fn save(&self, path: &Path, dropout: f64) -> Result<(), HeadError> {
        ModelArtifact::from_model(self, dropout).save(path)
    }

    pub fn load(path: &Path) -> Result<Self, HeadError> {
        ModelArtifact::load(path)?.into_model().map_err(|e| match e {
            HeadError::Artifact { detail, .. } => HeadError::Artifact {
                path: path.display().to_string(),
                detail,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::ClassificationEmbedding;
    use approx::assert_abs_diff_eq;
    use ndarray::arr1;

    fn emb(distance: usize, v: &[f64]) -> ClassificationEmbedding<f64> {
        ClassificationEmbedding {
            vector: arr1(v),
            doc_id: "d".into(),
            event_id: "e".into(),
            mention_id: format!("m{distance}"),
            distance,
            truncated: false,
        }
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        for function in HeadFunction::ALL {
            let model = ContextModel::<f64>::new(function, 3, 4, 0.1, 42);
            model.save(&path, 0.1).unwrap();
            let loaded = ContextModel::<f64>::load(&path).unwrap();
            assert_eq!(model, loaded);
            let embs = vec![emb(0, &[0.1, -0.2, 0.3, 0.4]), emb(2, &[0.5, 0.0, -0.1, 0.2])];
            let a = model.predict("p", &embs).unwrap();
            let b = loaded.predict("p", &embs).unwrap();
            assert_eq!(a.positive, b.positive);
            assert_abs_diff_eq!(a.score, b.score, epsilon = 1e-15);
        }
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let model = ContextModel::<f64>::new(HeadFunction::Average, 3, 2, 0.0, 1);
        let mut artifact = ModelArtifact::from_model(&model, 0.0);
        artifact.format_version = 99;
        let err = artifact.into_model::<f64>().unwrap_err();
        assert!(matches!(
            err,
            HeadError::ArtifactVersion { found: 99, expected: 1 },
        ));
    }

    #[test]
    fn parameter_count_mismatch_is_rejected() {
        let model = ContextModel::<f64>::new(HeadFunction::Average, 3, 2, 0.0, 1);
        let mut artifact = ModelArtifact::from_model(&model, 0.0);
        artifact.mlp_params.pop();
        assert!(matches!(
            artifact.into_model::<f64>().unwrap_err(),
            HeadError::Artifact { .. },
        ));
    }

    #[test]
    fn map_params_must_match_head_kind() {
        let plain = ContextModel::<f64>::new(HeadFunction::Average, 3, 2, 0.0, 1);
        let mut artifact = ModelArtifact::from_model(&plain, 0.0);
        artifact.agg_map_params = Some(vec![0.0; 14]);
        assert!(matches!(
            artifact.into_model::<f64>().unwrap_err(),
            HeadError::Artifact { .. },
        ));

        let learned = ContextModel::<f64>::new(HeadFunction::Parameterized, 3, 2, 0.0, 1);
        let mut artifact = ModelArtifact::from_model(&learned, 0.0);
        artifact.agg_map_params = None;
        assert!(matches!(
            artifact.into_model::<f64>().unwrap_err(),
            HeadError::Artifact { .. },
        ));
    }

    #[test]
    fn artifact_survives_f32_round_trip() {
        let model = ContextModel::<f32>::new(HeadFunction::Parameterized, 2, 3, 0.0, 7);
        let artifact = ModelArtifact::from_model(&model, 0.0);
        let text = serde_json::to_string(&artifact).unwrap();
        let back: ModelArtifact = serde_json::from_str(&text).unwrap();
        let loaded: ContextModel<f32> = back.into_model().unwrap();
        assert_eq!(model, loaded);
    }
}
