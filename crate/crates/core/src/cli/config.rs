//! Run configuration files.

use crate::error::{Error, Result};
use crate::gridfield::Grid;
use crate::kvtext::KvDoc;
use crate::network::ModelConfig;
use crate::trainer::{AdamConfig, TrainConfig};

/// Ablation rows, each switching off one feature of the full model.
pub const ABLATION_ROWS: [&str; 7] = [
    "full",
    "no_fourier",
    "no_scaling",
    "no_xyz",
    "no_skip",
    "no_batchnorm",
    "relu",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Full-size settings: d=12, w=512, m=128, 20 epochs.
    Full,
    /// Laptop-scale settings: d=4, w=64, m=32, 50k steps of 480 samples.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            _ => Err(Error::invalid(format!("unknown profile `{s}` (expected full or desk)"))),
        }
    }
}

impl Profile {
    pub fn model(self) -> ModelConfig {
        // c_t and c_p are resolved against the field
        match self {
            Profile::Full => ModelConfig::uniform(12, 512, 128, 1.6, 1.0, 1.0),
            Profile::Desk => ModelConfig::uniform(4, 64, 32, 1.6, 1.0, 1.0),
        }
    }

    pub fn train(self) -> TrainConfig {
        match self {
            Profile::Full => TrainConfig {
                batch_size: 389_880,
                samples_per_epoch: None,
                epochs: 20,
                log_every: 100,
                ..TrainConfig::default()
            },
            Profile::Desk => TrainConfig {
                batch_size: 480,
                samples_per_epoch: Some(48_000),
                epochs: 500,
                log_every: 5000,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    pub model: ModelConfig,
    /// Explicit normalization constants; `None` derives them from the field.
    pub c_t: Option<f64>,
    pub c_p: Option<f64>,
    pub train: TrainConfig,
    pub ablate_rows: Vec<String>,
    pub ablate_seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_profile(Profile::Full)
    }
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        RunConfig {
            profile,
            model: profile.model(),
            c_t: None,
            c_p: None,
            train: profile.train(),
            ablate_rows: ABLATION_ROWS.iter().map(|s| s.to_string()).collect(),
            ablate_seeds: vec![0],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let mut r = doc.reader();
        let profile = r.or("profile", Profile::Full)?;
        let base = RunConfig::for_profile(profile);
        let c_t: Option<f64> = r.opt("model.c_t")?;
        let c_p: Option<f64> = r.opt("model.c_p")?;
        let mut model = ModelConfig::read_kv(&mut r, "model.", &base.model)?;
        if let Some(c) = c_t {
            model.c_t = c;
        }
        if let Some(c) = c_p {
            model.c_p = c;
        }
        let t = &base.train;
        let train = TrainConfig {
            adam: AdamConfig {
                learning_rate: r.or("train.learning_rate", t.adam.learning_rate)?,
                beta1: r.or("train.beta1", t.adam.beta1)?,
                beta2: r.or("train.beta2", t.adam.beta2)?,
                eps: r.or("train.eps", t.adam.eps)?,
            },
            batch_size: r.or("train.batch_size", t.batch_size)?,
            samples_per_epoch: r.opt("train.samples_per_epoch")?.or(t.samples_per_epoch),
            epochs: r.or("train.epochs", t.epochs)?,
            seed: r.or("train.seed", t.seed)?,
            log_every: r.or("train.log_every", t.log_every)?,
            val_time_stride: r.or("train.val_time_stride", t.val_time_stride)?,
        };
        let ablate_rows = r.list::<String>("ablate.rows")?.unwrap_or(base.ablate_rows);
        let ablate_seeds = r.list::<u64>("ablate.seeds")?.unwrap_or(base.ablate_seeds);
        r.finish()?;
        for row in &ablate_rows {
            if !ABLATION_ROWS.contains(&row.as_str()) {
                return Err(Error::invalid(format!(
                    "unknown ablation row `{row}` (known: {})",
                    ABLATION_ROWS.join(", ")
                )));
            }
        }
        if ablate_rows.is_empty() || ablate_seeds.is_empty() {
            return Err(Error::invalid("ablation needs at least one row and one seed"));
        }
        let cfg = RunConfig {
            profile,
            model,
            c_t,
            c_p,
            train,
            ablate_rows,
            ablate_seeds,
        };
        cfg.train.validate()?;
        Ok(cfg)
    }

    /// Model configuration with `c_t` defaulting to the time-domain length
    /// and `c_p` to the largest pressure level.
    pub fn model_for(&self, grid: &Grid) -> Result<ModelConfig> {
        let mut m = self.model.clone();
        let (t0, t1) = grid.time_span();
        let (_, p1) = grid.pressure_span();
        m.c_t = self.c_t.unwrap_or(if t1 > t0 { t1 - t0 } else { 1.0 });
        m.c_p = self.c_p.unwrap_or(p1);
        m.validate()?;
        Ok(m)
    }
}

/// The model of one ablation row.
pub fn ablation_model(base: &ModelConfig, row: &str) -> Result<ModelConfig> {
    let mut m = base.clone();
    match row {
        "full" => {}
        "no_fourier" => m.use_fourier = false,
        "no_scaling" => m.use_scaling = false,
        "no_xyz" => m.use_xyz = false,
        "no_skip" => m.use_skip = false,
        "no_batchnorm" => m.use_batchnorm = false,
        "relu" => m.activation = crate::network::Activation::Relu,
        _ => return Err(Error::invalid(format!("unknown ablation row `{row}`"))),
    }
    Ok(m)
}
