//! Gridded 4D fields over (time, pressure, latitude, longitude).

mod container;
mod interp;
mod metrics;
mod synth;

pub(crate) mod interp_support {
    pub(crate) use super::interp::bracket_clamped;
}

pub use container::{load_field, load_field_header, store_field, FieldHeader, FIELD_MAGIC, FIELD_VERSION};
pub use interp::sample_value;
pub use metrics::{error_report, error_report_with_bins, latitude_weights, ErrorReport, Histogram};
pub use synth::{synth_field, SynthSpec};

use crate::error::{Error, Result};

/// Coordinate vectors of a regular 4D grid.
///
/// Times are in hours, pressures in hPa, latitudes in degrees within
/// [-90, 90] and longitudes in degrees within [0, 360]. Longitude is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub times: Vec<f64>,
    pub pressures: Vec<f64>,
    pub lats: Vec<f64>,
    pub lons: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64], lo: f64, hi: f64) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::Dimension(format!("{name} axis is empty")));
    }
    for (i, &v) in axis.iter().enumerate() {
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::Domain(format!("{name}[{i}] = {v} outside [{lo}, {hi}]")));
        }
    }
    if let Some(i) = axis.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Dimension(format!(
            "{name} axis not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

impl Grid {
    pub fn new(times: Vec<f64>, pressures: Vec<f64>, lats: Vec<f64>, lons: Vec<f64>) -> Result<Self> {
        let grid = Grid {
            times,
            pressures,
            lats,
            lons,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Equiangular sphere grid: latitudes from -90 to 90 inclusive, longitudes
    /// from 0 (inclusive) to 360 (exclusive).
    pub fn equiangular(times: Vec<f64>, pressures: Vec<f64>, n_lat: usize, n_lon: usize) -> Result<Self> {
        if n_lat < 2 || n_lon == 0 {
            return Err(Error::invalid("equiangular grid needs n_lat >= 2 and n_lon >= 1"));
        }
        let dlat = 180.0 / (n_lat - 1) as f64;
        let dlon = 360.0 / n_lon as f64;
        let lats = (0..n_lat).map(|i| -90.0 + dlat * i as f64).collect();
        let lons = (0..n_lon).map(|j| dlon * j as f64).collect();
        Grid::new(times, pressures, lats, lons)
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("time", &self.times, f64::MIN, f64::MAX)?;
        check_axis("pressure", &self.pressures, f64::MIN, f64::MAX)?;
        check_axis("latitude", &self.lats, -90.0, 90.0)?;
        check_axis("longitude", &self.lons, 0.0, 360.0)
    }

    pub fn shape(&self) -> [usize; 4] {
        [
            self.times.len(),
            self.pressures.len(),
            self.lats.len(),
            self.lons.len(),
        ]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index with longitude fastest.
    #[inline]
    pub fn index(&self, t: usize, p: usize, i: usize, j: usize) -> usize {
        ((t * self.pressures.len() + p) * self.lats.len() + i) * self.lons.len() + j
    }

    pub fn time_span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    pub fn pressure_span(&self) -> (f64, f64) {
        (self.pressures[0], *self.pressures.last().unwrap())
    }

    /// Same horizontal and vertical layout, used by metrics.
    pub fn same_coordinates(&self, other: &Grid) -> bool {
        self == other
    }
}

/// One scalar variable on a [`Grid`], stored as 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField4D {
    pub name: String,
    pub units: String,
    pub grid: Grid,
    pub values: Vec<f32>,
}

impl GridField4D {
    pub fn new(name: impl Into<String>, units: impl Into<String>, grid: Grid, values: Vec<f32>) -> Result<Self> {
        let field = GridField4D {
            name: name.into(),
            units: units.into(),
            grid,
            values,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn from_fn(
        name: impl Into<String>,
        units: impl Into<String>,
        grid: Grid,
        mut f: impl FnMut(f64, f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for &t in &grid.times {
            for &p in &grid.pressures {
                for &lat in &grid.lats {
                    for &lon in &grid.lons {
                        values.push(f(t, p, lat, lon) as f32);
                    }
                }
            }
        }
        GridField4D::new(name, units, grid, values)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.values.len() != self.grid.len() {
            return Err(Error::Dimension(format!(
                "payload has {} values, shape {:?} needs {}",
                self.values.len(),
                self.grid.shape(),
                self.grid.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at flat index {i}")));
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 4] {
        self.grid.shape()
    }

    #[inline]
    pub fn at(&self, t: usize, p: usize, i: usize, j: usize) -> f32 {
        self.values[self.grid.index(t, p, i, j)]
    }

    /// Global (min, max) of the stored values.
    pub fn value_range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v as f64), hi.max(v as f64))
        })
    }

    pub fn dynamic_range(&self) -> f64 {
        let (lo, hi) = self.value_range();
        hi - lo
    }

    /// Bytes of the raw 32-bit payload, the numerator of compression ratios.
    pub fn payload_bytes(&self) -> u64 {
        self.values.len() as u64 * 4
    }
}
