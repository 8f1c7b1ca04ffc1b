//! Linear SVM trained by stochastic subgradient descent on the L2-regularized
//! hinge loss (Pegasos schedule, step 1/(λt)).
//!
//! The bias is carried as an extra weight on a constant feature and is
//! regularized with the rest of the weight vector. After every step the
//! iterate is projected onto the ball of radius 1/√λ.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::text::SparseVector;
use super::ReviewError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDocument {
    pub vector: SparseVector,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda_reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda_reg: 1e-4,
            epochs: 50,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub lambda_reg: f64,
    pub seed: u64,
    pub n_pos: usize,
    pub n_neg: usize,
    /// Epoch whose iterate was kept; 0 means the zero model.
    pub best_epoch: usize,
    pub objective: f64,
}

impl TrainingMeta {
    pub fn negative_free(&self) -> bool {
        self.n_neg == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub training_meta: TrainingMeta,
}

impl SvmModel {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVector) -> Label {
        if self.decision(x) >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// λ/2·(‖w‖² + b²) + mean hinge loss.
pub fn objective(weights: &[f64], bias: f64, data: &[LabeledDocument], lambda_reg: f64) -> f64 {
    let reg = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    let hinge = data
        .iter()
        .map(|d| (1.0 - d.label.sign() * (d.vector.dot_dense(weights) + bias)).max(0.0))
        .sum::<f64>()
        / data.len() as f64;
    0.5 * lambda_reg * reg + hinge
}

/// Trains over feature dimension `dim`.
///
/// The returned model is the lowest-objective iterate among the end-of-epoch
/// iterates and the zero model.
pub fn train_linear_svm(
    data: &[LabeledDocument],
    dim: usize,
    config: &SvmConfig,
) -> Result<SvmModel, ReviewError> {
    if data.is_empty() {
        return Err(ReviewError::TrainingUnderflow);
    }
    if !(config.lambda_reg > 0.0 && config.lambda_reg.is_finite()) {
        return Err(ReviewError::InvalidConfig(format!(
            "lambda_reg must be positive, got {}",
            config.lambda_reg
        )));
    }
    let n_pos = data.iter().filter(|d| d.label == Label::Positive).count();
    let n_neg = data.len() - n_pos;

    let lambda = config.lambda_reg;
    // w = scale * v; v[dim] is the bias weight.
    let mut v = vec![0.0f64; dim + 1];
    let mut scale = 1.0f64;
    // squared norm of v
    let mut v_norm2 = 0.0f64;
    let radius2 = 1.0 / lambda;

    let mut best_weights = vec![0.0; dim];
    let mut best_bias = 0.0;
    let mut best_objective = objective(&best_weights, best_bias, data, lambda);
    let mut best_epoch = 0;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut t = 0u64;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let doc = &data[i];
            let y = doc.label.sign();
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * scale * (doc.vector.dot_dense(&v[..dim]) + v[dim]);

            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
                v_norm2 = 0.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for &(j, x) in doc.vector.entries() {
                    if let Some(slot) = v.get_mut(j as usize).filter(|_| (j as usize) < dim) {
                        let old = *slot;
                        *slot += step * x;
                        v_norm2 += *slot * *slot - old * old;
                    }
                }
                let old = v[dim];
                v[dim] += step;
                v_norm2 += v[dim] * v[dim] - old * old;
            }
            let w_norm2 = scale * scale * v_norm2;
            if w_norm2 > radius2 {
                scale *= (radius2 / w_norm2).sqrt();
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|x| *x *= scale);
                v_norm2 = v.iter().map(|x| x * x).sum();
                scale = 1.0;
            }
        }

        let weights: Vec<f64> = v[..dim].iter().map(|x| x * scale).collect();
        let bias = v[dim] * scale;
        let obj = objective(&weights, bias, data, lambda);
        if !obj.is_finite() {
            return Err(ReviewError::TrainingDiverged { epoch });
        }
        if obj < best_objective {
            best_objective = obj;
            best_weights = weights;
            best_bias = bias;
            best_epoch = epoch;
        }
    }

    Ok(SvmModel {
        weights: best_weights,
        bias: best_bias,
        training_meta: TrainingMeta {
            epochs: config.epochs,
            lambda_reg: lambda,
            seed: config.seed,
            n_pos,
            n_neg,
            best_epoch,
            objective: best_objective,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(xs: &[f64], label: Label) -> LabeledDocument {
        LabeledDocument {
            vector: SparseVector::from_pairs(
                xs.iter().enumerate().map(|(i, &x)| (i as u32, x)).collect(),
            ),
            label,
        }
    }

    #[test]
    fn two_symmetric_points_give_boundary_at_origin() {
        let data = [doc(&[1.0], Label::Positive), doc(&[-1.0], Label::Negative)];
        let cfg = SvmConfig {
            lambda_reg: 0.1,
            epochs: 5000,
            seed: 42,
        };
        let m = train_linear_svm(&data, 1, &cfg).unwrap();
        assert!(m.weights[0] > 0.0);
        assert!(m.bias.abs() <= 1e-3 * m.weights[0].abs(), "{m:?}");
        assert!((m.weights[0] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64 / 10.0 - 1.0;
                doc(
                    &[x, 0.3 * x + 0.1],
                    if x > 0.05 {
                        Label::Positive
                    } else {
                        Label::Negative
                    },
                )
            })
            .collect();
        let a = train_linear_svm(&data, 2, &SvmConfig::default()).unwrap();
        let b = train_linear_svm(&data, 2, &SvmConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_never_exceeds_zero_model() {
        let data = [
            doc(&[1.0, 0.0], Label::Positive),
            doc(&[0.0, 1.0], Label::Positive),
            doc(&[1.0, 1.0], Label::Negative),
        ];
        let m = train_linear_svm(&data, 2, &SvmConfig::default()).unwrap();
        let zero = objective(&[0.0, 0.0], 0.0, &data, 1e-4);
        assert!(objective(&m.weights, m.bias, &data, 1e-4) <= zero);
    }

    #[test]
    fn empty_data_and_bad_config_are_rejected() {
        assert!(matches!(
            train_linear_svm(&[], 1, &SvmConfig::default()),
            Err(ReviewError::TrainingUnderflow)
        ));
        let data = [doc(&[1.0], Label::Positive)];
        let cfg = SvmConfig {
            lambda_reg: 0.0,
            ..SvmConfig::default()
        };
        assert!(train_linear_svm(&data, 1, &cfg).is_err());
    }

    #[test]
    fn one_class_training_still_scores_positive() {
        let data = [
            doc(&[1.0, 0.0], Label::Positive),
            doc(&[0.6, 0.8], Label::Positive),
        ];
        let m = train_linear_svm(&data, 2, &SvmConfig::default()).unwrap();
        assert!(m.training_meta.negative_free());
        assert!(data.iter().all(|d| m.decision(&d.vector) > 0.0));
    }
}
