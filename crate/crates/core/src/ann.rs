//! Supervised feedforward duty controller.
//!
//! Training pairs `(v_in, v_target)` are labelled with the ideal boost duty
//! `1 − v_in / v_target` and fitted by minibatch gradient descent. At run time
//! the network is fed the measured input voltage and the reference.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Mlp, ParamGrads};

/// Ideal steady-state duty of a lossless boost stage.
pub fn ideal_duty(v_in: f64, v_target: f64) -> f64 {
    1.0 - v_in / v_target
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnSample {
    pub v_in: f64,
    pub v_target: f64,
    pub duty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnDataset {
    pub samples: Vec<AnnSample>,
    pub v_in_range: (f64, f64),
    pub v_target_range: (f64, f64),
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Default generation box, covering the 24–26 V inputs and 48–60 V references with margin.
pub const DEFAULT_V_IN_RANGE: (f64, f64) = (20.0, 30.0);
pub const DEFAULT_V_TARGET_RANGE: (f64, f64) = (40.0, 70.0);

/// Uniform `(v_in, v_target)` pairs with analytic duty labels and an 80/20 split.
pub fn generate_dataset(
    v_in_range: (f64, f64),
    v_target_range: (f64, f64),
    n: usize,
    seed: u64,
) -> Result<AnnDataset> {
    let ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo < hi && hi.is_finite();
    if !ok(v_in_range) || !ok(v_target_range) {
        return Err(Error::Config(format!(
            "degenerate ranges: v_in {v_in_range:?}, v_target {v_target_range:?}"
        )));
    }
    if v_target_range.0 <= v_in_range.1 {
        return Err(Error::Config(
            "target range must lie strictly above the input range".into(),
        ));
    }
    if n < 10 {
        return Err(Error::Config(format!("need at least 10 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<AnnSample> = (0..n)
        .map(|_| {
            let v_in = rng.gen_range(v_in_range.0..v_in_range.1);
            let v_target = rng.gen_range(v_target_range.0..v_target_range.1);
            AnnSample {
                v_in,
                v_target,
                duty: ideal_duty(v_in, v_target),
            }
        })
        .collect();
    let n_train = n * 4 / 5;
    Ok(AnnDataset {
        samples,
        v_in_range,
        v_target_range,
        train_indices: (0..n_train).collect(),
        test_indices: (n_train..n).collect(),
    })
}

pub fn write_dataset_csv<W: Write>(ds: &AnnDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for s in &ds.samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnTrainConfig {
    pub hidden: Vec<usize>,
    pub max_epochs: usize,
    pub target_mse: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AnnTrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![16, 16],
            max_epochs: 400,
            target_mse: 1e-6,
            learning_rate: 0.1,
            batch_size: 16,
            seed: 0,
        }
    }
}

/// A trained duty network together with the input scaling it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub v_in_range: (f64, f64),
    pub v_target_range: (f64, f64),
    pub net: Mlp,
}

fn scale_to_unit(x: f64, (lo, hi): (f64, f64)) -> f64 {
    2.0 * (x - lo) / (hi - lo) - 1.0
}

impl AnnModel {
    fn features(&self, v_in: f64, v_target: f64) -> [f64; 2] {
        [
            scale_to_unit(v_in, self.v_in_range),
            scale_to_unit(v_target, self.v_target_range),
        ]
    }

    /// Raw network prediction, no clamping.
    pub fn predict(&self, v_in: f64, v_target: f64) -> Result<f64> {
        Ok(self.net.predict(&self.features(v_in, v_target))?[0])
    }

    fn within_margin(&self, v_in: f64, v_target: f64) -> bool {
        let inside = |x: f64, (lo, hi): (f64, f64)| {
            let m = 0.1 * (hi - lo);
            x >= lo - m && x <= hi + m
        };
        inside(v_in, self.v_in_range) && inside(v_target, self.v_target_range)
    }

    pub fn mse(&self, ds: &AnnDataset, indices: &[usize]) -> Result<f64> {
        if indices.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for &k in indices {
            let s = &ds.samples[k];
            total += (self.predict(s.v_in, s.v_target)? - s.duty).powi(2);
        }
        Ok(total / indices.len() as f64)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        let model: AnnModel = serde_json::from_str(&text)?;
        // Re-validate the embedded network.
        let net = Mlp::from_json(&serde_json::to_string(&model.net)?)?;
        Ok(AnnModel { net, ..model })
    }
}

#[derive(Debug, Clone)]
pub struct AnnTrainOutcome {
    pub model: AnnModel,
    pub train_mse: f64,
    pub test_mse: f64,
    pub epochs: usize,
}

/// Minimises training-split MSE with minibatch gradient descent until
/// `target_mse` or `max_epochs` is reached.
pub fn train_ann(ds: &AnnDataset, config: &AnnTrainConfig) -> Result<AnnTrainOutcome> {
    if !(config.target_mse > 0.0) {
        return Err(Error::Config("target_mse must be positive".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut sizes = vec![2];
    sizes.extend(&config.hidden);
    sizes.push(1);
    let net = Mlp::new(&sizes, Activation::Tanh, Activation::Identity, config.seed)?;
    let mut model = AnnModel {
        v_in_range: ds.v_in_range,
        v_target_range: ds.v_target_range,
        net,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let mut order = ds.train_indices.clone();
    let mut grads = ParamGrads::zeros_like(&model.net);
    let mut train_mse = model.mse(ds, &ds.train_indices)?;
    let mut epochs = 0;

    while epochs < config.max_epochs && train_mse > config.target_mse {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads.fill_zero();
            let scale = 2.0 / batch.len() as f64;
            for &k in batch {
                let s = &ds.samples[k];
                let (y, cache) = model.net.forward(&model.features(s.v_in, s.v_target))?;
                model
                    .net
                    .backward_accumulate(&cache, &[scale * (y[0] - s.duty)], &mut grads)?;
            }
            model.net.apply_update(&grads, config.learning_rate)?;
        }
        epochs += 1;
        train_mse = model.mse(ds, &ds.train_indices)?;
        if !train_mse.is_finite() {
            return Err(Error::Diverged(format!(
                "ANN training loss became non-finite at epoch {epochs}"
            )));
        }
        log::debug!("ann epoch {epochs}: train mse {train_mse:.3e}");
    }
    let test_mse = model.mse(ds, &ds.test_indices)?;
    Ok(AnnTrainOutcome {
        model,
        train_mse,
        test_mse,
        epochs,
    })
}

/// Duty command for the given measured input and reference, clamped to the
/// duty range. Inputs more than 10 % outside the training box log a warning.
pub fn ann_duty(model: &AnnModel, v_in: f64, v_ref: f64, duty_min: f64, duty_max: f64) -> f64 {
    if !model.within_margin(v_in, v_ref) {
        log::warn!("ANN queried outside its training range: v_in = {v_in}, v_ref = {v_ref}");
    }
    match model.predict(v_in, v_ref) {
        Ok(d) if d.is_finite() => d.clamp(duty_min, duty_max),
        _ => duty_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn analytic_labels() {
        assert_relative_eq!(ideal_duty(24.0, 48.0), 0.5);
        assert_relative_eq!(ideal_duty(24.0, 60.0), 0.6);
        assert_eq!(ideal_duty(30.0, 30.0), 0.0);
    }

    #[test]
    fn dataset_shape_and_split() {
        let ds = generate_dataset((20.0, 30.0), (40.0, 70.0), 1000, 3).unwrap();
        assert_eq!(ds.samples.len(), 1000);
        assert_eq!(ds.train_indices.len(), 800);
        assert_eq!(ds.test_indices.len(), 200);
        for s in &ds.samples {
            assert!(s.duty > 0.0 && s.duty < 1.0);
            assert!(s.v_target > s.v_in);
            assert_relative_eq!(s.duty, 1.0 - s.v_in / s.v_target);
        }
        assert_eq!(ds, generate_dataset((20.0, 30.0), (40.0, 70.0), 1000, 3).unwrap());
    }

    #[test]
    fn dataset_rejects_degenerate_ranges() {
        assert!(generate_dataset((30.0, 20.0), (40.0, 70.0), 100, 0).is_err());
        assert!(generate_dataset((20.0, 50.0), (40.0, 70.0), 100, 0).is_err());
        assert!(generate_dataset((20.0, 30.0), (40.0, 70.0), 9, 0).is_err());
        assert!(generate_dataset((0.0, 30.0), (40.0, 70.0), 100, 0).is_err());
    }

    #[test]
    fn constant_label_regression() {
        let mut ds = generate_dataset((20.0, 30.0), (40.0, 70.0), 1000, 1).unwrap();
        for s in &mut ds.samples {
            s.duty = 0.5;
        }
        let cfg = AnnTrainConfig {
            hidden: vec![4],
            max_epochs: 1000,
            target_mse: 1e-8,
            ..AnnTrainConfig::default()
        };
        let out = train_ann(&ds, &cfg).unwrap();
        assert!(out.train_mse < 1e-6, "{}", out.train_mse);
        assert!((out.model.predict(25.0, 50.0).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let ds = generate_dataset((20.0, 30.0), (40.0, 70.0), 300, 2).unwrap();
        let cfg = AnnTrainConfig {
            max_epochs: 3,
            ..AnnTrainConfig::default()
        };
        let a = train_ann(&ds, &cfg).unwrap();
        let b = train_ann(&ds, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.train_mse, b.train_mse);
    }

    #[test]
    fn duty_is_clamped() {
        let ds = generate_dataset((20.0, 30.0), (40.0, 70.0), 100, 2).unwrap();
        let out = train_ann(
            &ds,
            &AnnTrainConfig {
                max_epochs: 1,
                ..AnnTrainConfig::default()
            },
        )
        .unwrap();
        let d = ann_duty(&out.model, 24.0, 1e6, 0.05, 0.95);
        assert!((0.05..=0.95).contains(&d));
        let d = ann_duty(&out.model, 24.0, 1e-3, 0.05, 0.95);
        assert!((0.05..=0.95).contains(&d));
    }

    #[test]
    fn model_round_trip() {
        let ds = generate_dataset((20.0, 30.0), (40.0, 70.0), 100, 2).unwrap();
        let out = train_ann(
            &ds,
            &AnnTrainConfig {
                max_epochs: 1,
                ..AnnTrainConfig::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.json");
        out.model.save(&path).unwrap();
        assert_eq!(AnnModel::load(&path).unwrap(), out.model);
        assert!(matches!(
            AnnModel::load(dir.path().join("missing.json")),
            Err(Error::MissingArtifact(_))
        ));
    }
}
