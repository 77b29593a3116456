//! Evaluation of a trained model at arbitrary coordinates.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::coords::{normalize_unchecked, NormalizedCoord};
use crate::error::{Error, Result};
use crate::features::FourierBasis;
use crate::gridfield::{error_report, ErrorReport, Grid, GridField4D};
use crate::network::{apply_scaling, encode_inputs, forward_infer, ModelConfig, ModelParams, ScalingTable};
use crate::Real;

/// Rows per inference pass. Inference is row-independent, so the chunking
/// never changes results.
pub const EVAL_CHUNK: usize = 2048;

/// Physical query coordinate: time (hours), pressure (hPa), latitude and
/// longitude (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub p: f64,
    pub psi: f64,
    pub phi: f64,
}

/// Everything needed to evaluate the field function.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub basis: FourierBasis,
    pub scaling: ScalingTable,
    pub params: ModelParams<Real>,
}

impl Model {
    fn eval_chunk(&self, pts: &[Point]) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let coords: Vec<NormalizedCoord> = pts
            .iter()
            .map(|q| normalize_unchecked(q.t, q.p, q.psi, q.phi, cfg.c_t, cfg.c_p))
            .collect();
        let inputs: Vec<Real> = encode_inputs(cfg, &self.basis, &coords);
        let raw = forward_infer(&self.params, cfg, &inputs)?;
        Ok(pts
            .iter()
            .zip(raw)
            .map(|(q, r)| apply_scaling(&self.scaling, q.p, q.psi, r as f64))
            .collect())
    }

    /// Field values at `pts` without domain checks.
    pub fn eval(&self, pts: &[Point]) -> Result<Vec<f64>> {
        let chunks: Vec<Result<Vec<f64>>> = if rayon::current_num_threads() > 1 && pts.len() > EVAL_CHUNK {
            pts.par_chunks(EVAL_CHUNK).map(|c| self.eval_chunk(c)).collect()
        } else {
            pts.chunks(EVAL_CHUNK).map(|c| self.eval_chunk(c)).collect()
        };
        let mut out = Vec::with_capacity(pts.len());
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }

    /// All points of `grid` in storage order.
    pub fn eval_grid(&self, grid: &Grid) -> Result<Vec<f32>> {
        let pts = grid_points(grid);
        Ok(self.eval(&pts)?.into_iter().map(|v| v as f32).collect())
    }
}

pub fn grid_points(grid: &Grid) -> Vec<Point> {
    let mut pts = Vec::with_capacity(grid.len());
    for &t in &grid.times {
        for &p in &grid.pressures {
            for &psi in &grid.lats {
                for &phi in &grid.lons {
                    pts.push(Point { t, p, psi, phi });
                }
            }
        }
    }
    pts
}

/// A model bound to the domain and metadata of the field it was fitted to.
#[derive(Debug)]
pub struct Decoder {
    pub model: Model,
    pub name: String,
    pub units: String,
    pub grid: Grid,
    evaluations: AtomicU64,
}

impl Decoder {
    pub fn new(model: Model, name: impl Into<String>, units: impl Into<String>, grid: Grid) -> Result<Self> {
        model.params.check_shape(&model.config)?;
        grid.validate()?;
        Ok(Decoder {
            model,
            name: name.into(),
            units: units.into(),
            grid,
            evaluations: AtomicU64::new(0),
        })
    }

    /// Number of network evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn check_point(&self, q: &Point) -> Result<()> {
        let (t0, t1) = self.grid.time_span();
        let (p0, p1) = self.grid.pressure_span();
        if !(q.t >= t0 && q.t <= t1) {
            return Err(Error::Domain(format!("time {} outside [{t0}, {t1}]", q.t)));
        }
        if !(q.p >= p0 && q.p <= p1) {
            return Err(Error::Domain(format!("pressure {} outside [{p0}, {p1}]", q.p)));
        }
        if !(q.psi >= -90.0 && q.psi <= 90.0) {
            return Err(Error::Domain(format!("latitude {} outside [-90, 90]", q.psi)));
        }
        if !q.phi.is_finite() {
            return Err(Error::Domain(format!("longitude {} is not finite", q.phi)));
        }
        Ok(())
    }

    /// Field values at arbitrary in-domain points; longitude wraps.
    pub fn eval_points(&self, pts: &[Point]) -> Result<Vec<f64>> {
        for q in pts {
            self.check_point(q)?;
        }
        let out = self.model.eval(pts)?;
        self.evaluations.fetch_add(pts.len() as u64, Ordering::Relaxed);
        Ok(out)
    }

    pub fn reconstruct_grid(&self, grid: &Grid) -> Result<GridField4D> {
        grid.validate()?;
        let values = self
            .eval_points(&grid_points(grid))?
            .into_iter()
            .map(|v| v as f32)
            .collect();
        GridField4D::new(self.name.clone(), self.units.clone(), grid.clone(), values)
    }

    /// Reconstruction on the grid the model was fitted to.
    pub fn reconstruct(&self) -> Result<GridField4D> {
        self.reconstruct_grid(&self.grid.clone())
    }

    /// Error report of the native-grid reconstruction against `original`.
    pub fn stats(&self, original: &GridField4D, q: f64) -> Result<ErrorReport> {
        if !original.grid.same_coordinates(&self.grid) {
            return Err(Error::Dimension("original field is not on the model grid".into()));
        }
        let rec = self.reconstruct()?;
        error_report(original, &rec, q)
    }
}
