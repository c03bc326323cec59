//! Training setup: key=value config files (with `#` comments), flag
//! overrides, and construction of the dataset / network / train config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use gem_core::nn::{
    load_idx, lsuv_rescale, make_synthetic, Dataset, DenseNet, LayerActivation, Mat, Optimizer,
    Schedule, SyntheticKind, TrainConfig,
};
use gem_core::rng::Xoshiro256StarStar;
use gem_core::ActivationSpec;

pub const VALID_KEYS: &[&str] = &[
    "dataset",
    "idx_images",
    "idx_labels",
    "n_per_class",
    "noise",
    "depth",
    "width",
    "act",
    "optimizer",
    "lr",
    "momentum",
    "weight_decay",
    "beta1",
    "beta2",
    "epochs",
    "batch_size",
    "seed",
    "schedule",
    "milestones",
    "gamma",
    "warmup_steps",
    "val_fraction",
    "pre_std",
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn unknown_key(key: &str) -> ConfigError {
    ConfigError(format!(
        "unknown config key `{key}`; valid keys: {}",
        VALID_KEYS.join(", ")
    ))
}

/// Fully resolved training setup.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub dataset: String,
    pub idx_images: Option<String>,
    pub idx_labels: Option<String>,
    pub n_per_class: usize,
    pub noise: f64,
    pub depth: usize,
    pub width: usize,
    pub act: ActivationSpec,
    pub optimizer: String,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub schedule: String,
    pub milestones: Vec<usize>,
    pub gamma: f64,
    pub warmup_steps: usize,
    pub val_fraction: f64,
    pub pre_std: f64,
}

impl Default for TrainSetup {
    fn default() -> Self {
        TrainSetup {
            dataset: "spirals".into(),
            idx_images: None,
            idx_labels: None,
            n_per_class: 500,
            noise: 0.1,
            depth: 2,
            width: 32,
            act: "gem:n=1".parse().expect("valid default"),
            optimizer: "sgd_momentum".into(),
            lr: 0.05,
            momentum: 0.9,
            weight_decay: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epochs: 200,
            batch_size: 64,
            seed: 42,
            schedule: "multistep".into(),
            milestones: vec![100, 150],
            gamma: 0.1,
            warmup_steps: 100,
            val_fraction: 0.2,
            pre_std: 1.0,
        }
    }
}

impl TrainSetup {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut setup = TrainSetup::default();
        setup.apply_lines(text.lines())?;
        Ok(setup)
    }

    pub fn apply_lines<'a>(
        &mut self,
        lines: impl Iterator<Item = &'a str>,
    ) -> Result<(), ConfigError> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in lines.enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        for (key, value) in pairs {
            self.apply(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("bad value `{value}` for `{key}`: {what}"));
        match key {
            "dataset" => self.dataset = value.to_string(),
            "idx_images" => self.idx_images = Some(value.to_string()),
            "idx_labels" => self.idx_labels = Some(value.to_string()),
            "n_per_class" => self.n_per_class = value.parse().map_err(|_| bad("usize"))?,
            "noise" => self.noise = value.parse().map_err(|_| bad("float"))?,
            "depth" => self.depth = value.parse().map_err(|_| bad("usize"))?,
            "width" => self.width = value.parse().map_err(|_| bad("usize"))?,
            "act" => self.act = value.parse().map_err(|e| bad(&format!("{e}")))?,
            "optimizer" => self.optimizer = value.to_string(),
            "lr" => self.lr = value.parse().map_err(|_| bad("float"))?,
            "momentum" => self.momentum = value.parse().map_err(|_| bad("float"))?,
            "weight_decay" => self.weight_decay = value.parse().map_err(|_| bad("float"))?,
            "beta1" => self.beta1 = value.parse().map_err(|_| bad("float"))?,
            "beta2" => self.beta2 = value.parse().map_err(|_| bad("float"))?,
            "epochs" => self.epochs = value.parse().map_err(|_| bad("usize"))?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad("usize"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("u64"))?,
            "schedule" => self.schedule = value.to_string(),
            "milestones" => {
                self.milestones = value
                    .split(|c| c == ',' || c == ';')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim().parse().map_err(|_| bad("usize list")))
                    .collect::<Result<_, _>>()?;
            }
            "gamma" => self.gamma = value.parse().map_err(|_| bad("float"))?,
            "warmup_steps" => self.warmup_steps = value.parse().map_err(|_| bad("usize"))?,
            "val_fraction" => self.val_fraction = value.parse().map_err(|_| bad("float"))?,
            "pre_std" => self.pre_std = value.parse().map_err(|_| bad("float"))?,
            other => return Err(unknown_key(other)),
        }
        Ok(())
    }

    pub fn build_train_config(&self) -> Result<TrainConfig, ConfigError> {
        let optimizer = match self.optimizer.as_str() {
            "sgd_momentum" | "sgd" => Optimizer::SgdMomentum {
                lr: self.lr,
                momentum: self.momentum,
                weight_decay: self.weight_decay,
            },
            "adamw" => Optimizer::AdamW {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                weight_decay: self.weight_decay,
            },
            other => {
                return Err(ConfigError(format!(
                    "unknown optimizer `{other}` (sgd_momentum | adamw)"
                )))
            }
        };
        let schedule = match self.schedule.as_str() {
            "constant" => Schedule::Constant,
            "multistep" => Schedule::Multistep {
                milestones: self.milestones.clone(),
                gamma: self.gamma,
            },
            "cosine" => Schedule::Cosine {
                warmup_steps: self.warmup_steps,
            },
            other => {
                return Err(ConfigError(format!(
                    "unknown schedule `{other}` (constant | multistep | cosine)"
                )))
            }
        };
        Ok(TrainConfig {
            optimizer,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            schedule,
        })
    }

    /// Dataset (split) and network sized to it. Data generation is seeded
    /// by `seed`, initialization by `seed + 1`.
    pub fn build_dataset_and_net(&self) -> Result<(Dataset, DenseNet), ConfigError> {
        let (features, labels, classes) = match self.dataset.as_str() {
            "idx" => {
                let images = self
                    .idx_images
                    .as_ref()
                    .ok_or_else(|| ConfigError("dataset=idx needs idx_images".into()))?;
                let labels_path = self
                    .idx_labels
                    .as_ref()
                    .ok_or_else(|| ConfigError("dataset=idx needs idx_labels".into()))?;
                let (x, y) = load_idx(images, labels_path)
                    .map_err(|e| ConfigError(format!("idx load failed: {e}")))?;
                let classes = y.iter().copied().max().map_or(0, |m| m as usize + 1);
                (x, y, classes.max(2))
            }
            name => {
                let kind: SyntheticKind = name
                    .parse()
                    .map_err(|e| ConfigError(format!("{e} (or `idx`)")))?;
                let (x, y) = make_synthetic(kind, self.n_per_class, self.noise, self.seed);
                (x, y, 2)
            }
        };
        let input = features.cols();
        let data = Dataset::split(features, labels, self.val_fraction, self.seed);
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(self.width, self.depth));
        sizes.push(classes);
        let mut rng = Xoshiro256StarStar::seed_from(self.seed.wrapping_add(1));
        let mut net = DenseNet::mlp(&sizes, LayerActivation::Act(self.act), &mut rng);
        // unit pre-activation variance per layer on a calibration slice,
        // applied uniformly across activations
        let calib_rows = data.train_x.rows().min(256);
        let mut calib = Vec::with_capacity(calib_rows * data.train_x.cols());
        for i in 0..calib_rows {
            calib.extend_from_slice(data.train_x.row(i));
        }
        let calib = Mat::from_vec(calib_rows, data.train_x.cols(), calib);
        lsuv_rescale(&mut net, &calib, 2, self.pre_std);
        Ok((data, net))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut setup = TrainSetup::default();
        setup
            .apply_lines(
                "# a comment\n\ndataset = blobs\nepochs=7 # trailing\nmilestones=10;20\n".lines(),
            )
            .unwrap();
        assert_eq!(setup.dataset, "blobs");
        assert_eq!(setup.epochs, 7);
        assert_eq!(setup.milestones, vec![10, 20]);
    }

    #[test]
    fn unknown_keys_list_valid_ones() {
        let mut setup = TrainSetup::default();
        let err = setup.apply("learning_rate", "0.1").unwrap_err();
        assert!(err.0.contains("unknown config key"));
        assert!(err.0.contains("lr"));
        assert!(err.0.contains("batch_size"));
    }

    #[test]
    fn builds_a_runnable_setup() {
        let mut setup = TrainSetup::default();
        setup.apply("epochs", "1").unwrap();
        setup.apply("n_per_class", "10").unwrap();
        let cfg = setup.build_train_config().unwrap();
        assert_eq!(cfg.epochs, 1);
        let (data, net) = setup.build_dataset_and_net().unwrap();
        assert_eq!(net.input_size(), 2);
        assert_eq!(data.train_y.len() + data.val_y.len(), 20);
    }
}
