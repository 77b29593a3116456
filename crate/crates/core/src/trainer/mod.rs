//! Stochastic fitting of the coordinate network to one field.

mod adam;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::mse_loss;

use std::fmt;

use rayon::prelude::*;

use crate::coords::{splitmix64, QuasiSampler, Sample};
use crate::decoder::Model;
use crate::error::{Error, Result};
use crate::features::FourierBasis;
use crate::gridfield::{error_report, sample_value, Grid, GridField4D};
use crate::network::{backward, build_global_scaling_table, build_scaling_table, encode_samples, forward_train, init_params, ModelConfig};
use crate::Real;

/// A loss this many times the first-step loss counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Defaults to the number of grid points.
    pub samples_per_epoch: Option<usize>,
    pub epochs: usize,
    pub seed: u64,
    /// Validate every this many steps (0: only at the end).
    pub log_every: usize,
    /// Validation uses every n-th time slice.
    pub val_time_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 3000,
            samples_per_epoch: None,
            epochs: 1,
            seed: 0,
            log_every: 0,
            val_time_stride: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if self.val_time_stride == 0 {
            return Err(Error::invalid("validation time stride must be positive"));
        }
        if self.samples_per_epoch == Some(0) {
            return Err(Error::invalid("samples per epoch must be positive"));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.eps > 0.0) {
            return Err(Error::invalid("Adam hyperparameters out of range"));
        }
        Ok(())
    }

    /// Optimizer steps for a field with `grid_points` points.
    pub fn total_steps(&self, grid_points: usize) -> usize {
        let spe = self.samples_per_epoch.unwrap_or(grid_points);
        self.epochs * (spe / self.batch_size).max(1)
    }
}

/// Independent streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub basis: u64,
    pub init: u64,
    pub sampler: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        Seeds {
            basis: splitmix64(seed ^ 0xb0a5_15),
            init: splitmix64(seed ^ 0x1417),
            sampler: splitmix64(seed ^ 0x5a3e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub step: usize,
    pub total: usize,
    pub loss: f64,
    /// Weighted RMSE on the validation subsample, in field units.
    pub wrmse: Option<f64>,
}

impl fmt::Display for Progress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={}/{} loss={:.6e}", self.step, self.total, self.loss)?;
        if let Some(w) = self.wrmse {
            write!(f, " wrmse={w:.6e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    /// Training loss per step.
    pub losses: Vec<f64>,
    /// `(step, wrmse)` validation points.
    pub validations: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: Model,
    pub history: History,
}

/// Time-strided copy of `field` used for validation.
pub fn validation_subset(field: &GridField4D, stride: usize) -> Result<GridField4D> {
    if stride <= 1 {
        return Ok(field.clone());
    }
    let g = &field.grid;
    let keep: Vec<usize> = (0..g.times.len()).step_by(stride).collect();
    let grid = Grid::new(
        keep.iter().map(|&i| g.times[i]).collect(),
        g.pressures.clone(),
        g.lats.clone(),
        g.lons.clone(),
    )?;
    let slab = g.pressures.len() * g.lats.len() * g.lons.len();
    let mut values = Vec::with_capacity(keep.len() * slab);
    for &i in &keep {
        values.extend_from_slice(&field.values[i * slab..(i + 1) * slab]);
    }
    GridField4D::new(field.name.clone(), field.units.clone(), grid, values)
}

fn targets(field: &GridField4D, samples: &[Sample]) -> Result<Vec<f64>> {
    let f = |s: &Sample| sample_value(field, s.t, s.p_index, s.psi, s.phi);
    if rayon::current_num_threads() > 1 {
        samples.par_iter().map(f).collect()
    } else {
        samples.iter().map(f).collect()
    }
}

pub fn train(field: &GridField4D, mcfg: &ModelConfig, tcfg: &TrainConfig) -> Result<TrainOutput> {
    train_with(field, mcfg, tcfg, |_| {})
}

/// Fits a model to `field`, reporting progress at each validation point.
pub fn train_with(
    field: &GridField4D,
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
    mut observer: impl FnMut(&Progress),
) -> Result<TrainOutput> {
    field.validate()?;
    mcfg.validate()?;
    tcfg.validate()?;
    let seeds = Seeds::derive(tcfg.seed);
    let basis = FourierBasis::sample(mcfg.m, mcfg.sigma, seeds.basis, mcfg.spatial_dim())?;
    let scaling = if mcfg.use_scaling {
        build_scaling_table(field)?
    } else {
        build_global_scaling_table(field)?
    };
    let mut params = init_params::<Real>(mcfg, seeds.init)?;
    let mut sampler = QuasiSampler::new(seeds.sampler);
    let mut adam = AdamState::new(&params);
    let val_field = validation_subset(field, tcfg.val_time_stride)?;

    let total = tcfg.total_steps(field.grid.len());
    let mut history = History::default();
    let mut first_loss = None;

    for step in 1..=total {
        let samples = sampler.next_batch(tcfg.batch_size, &field.grid);
        let raw_targets = targets(field, &samples)?;
        let target: Vec<Real> = samples
            .iter()
            .zip(&raw_targets)
            .map(|(s, &v)| {
                scaling.normalize(field.grid.pressures[s.p_index], s.psi, v) as Real
            })
            .collect();
        let inputs: Vec<Real> = encode_samples(mcfg, &basis, &samples, &field.grid.pressures);
        let cache = forward_train(&params, mcfg, &inputs)?;
        let (loss, d_raw) = mse_loss(&cache.raw, &target)?;
        let loss = loss as f64;
        let reference = *first_loss.get_or_insert(loss);
        if !loss.is_finite() || (reference > 0.0 && loss > DIVERGENCE_FACTOR * reference) {
            return Err(Error::Numerical(format!(
                "training diverged at step {step}: loss {loss:e} (first step {reference:e})"
            )));
        }
        let grads = backward(&params, mcfg, &cache, &d_raw)?;
        params.update_running_stats(&cache, mcfg.bn_momentum);
        adam_step(&mut adam, &mut params, &grads, &tcfg.adam)
            .map_err(|e| Error::Numerical(format!("step {step}: {e}")))?;
        history.losses.push(loss);

        let validate = step == total || (tcfg.log_every > 0 && step % tcfg.log_every == 0);
        if validate {
            let model = Model {
                config: mcfg.clone(),
                basis: basis.clone(),
                scaling: scaling.clone(),
                params: params.clone(),
            };
            let wrmse = validation_wrmse(&model, &val_field)?;
            history.validations.push((step, wrmse));
            observer(&Progress {
                step,
                total,
                loss,
                wrmse: Some(wrmse),
            });
        }
    }
    if !params.all_finite() {
        return Err(Error::Numerical("trained parameters contain non-finite values".into()));
    }
    Ok(TrainOutput {
        model: Model {
            config: mcfg.clone(),
            basis,
            scaling,
            params,
        },
        history,
    })
}

/// Weighted RMSE of `model` on the points of `field`.
pub fn validation_wrmse(model: &Model, field: &GridField4D) -> Result<f64> {
    let values = model.eval_grid(&field.grid)?;
    let rec = GridField4D::new(field.name.clone(), field.units.clone(), field.grid.clone(), values)?;
    Ok(error_report(field, &rec, 0.99)?.weighted_rmse)
}
