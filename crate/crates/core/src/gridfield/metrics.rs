//! Latitude-weighted error statistics.
//!
//! Means over the longitude–latitude plane weight each row by the normalized
//! cosine of its latitude, which is the cell-area weight of a regular grid.
//! Means over time and pressure are plain averages.

use super::GridField4D;
use crate::angles::cos_deg;
use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `cos(ψᵢ) / Σ cos(ψ)` for each latitude row; NaN when every row is a pole.
pub fn latitude_weights(lats: &[f64]) -> Vec<f64> {
    let cos: Vec<f64> = lats.iter().map(|&l| cos_deg(l).max(0.0)).collect();
    let mut total = CompensatedSum::default();
    cos.iter().for_each(|&c| total.add(c));
    let total = total.value();
    cos.into_iter().map(|c| c / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    fn build(errors: impl Iterator<Item = f64> + Clone, bins: usize) -> Histogram {
        let (lo, hi) = errors
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e), b.max(e)));
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins)
            .map(|k| if k == bins { hi } else { lo + width * k as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        for e in errors {
            let k = (((e - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Error statistics of a reconstruction against its original.
///
/// Errors are `reconstructed − original`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub weighted_rmse: f64,
    pub weighted_mae: f64,
    pub max_abs_error: f64,
    /// `(q, value)`: unweighted q-quantile of absolute error over all points.
    pub abs_error_quantile: (f64, f64),
    pub histogram: Histogram,
    pub n_lat: usize,
    pub n_lon: usize,
    /// Mean error at each (lat, lon) over time and pressure, lon fastest.
    pub per_location_mean: Vec<f64>,
    /// Population standard deviation of the error at each (lat, lon).
    pub per_location_std: Vec<f64>,
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 100;

pub fn error_report(original: &GridField4D, reconstructed: &GridField4D, q: f64) -> Result<ErrorReport> {
    error_report_with_bins(original, reconstructed, q, DEFAULT_HISTOGRAM_BINS)
}

pub fn error_report_with_bins(
    original: &GridField4D,
    reconstructed: &GridField4D,
    q: f64,
    bins: usize,
) -> Result<ErrorReport> {
    if !original.grid.same_coordinates(&reconstructed.grid) {
        return Err(Error::Dimension(format!(
            "grids differ: {:?} vs {:?}",
            original.shape(),
            reconstructed.shape()
        )));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile {q} not in (0, 1)")));
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let [nt, np, nlat, nlon] = original.shape();
    let weights = latitude_weights(&original.grid.lats);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("latitude weights vanish: every row lies on a pole".into()));
    }
    let err = |k: usize| reconstructed.values[k] as f64 - original.values[k] as f64;

    let mut sq = CompensatedSum::default();
    let mut abs = CompensatedSum::default();
    let mut max_abs = 0.0f64;
    let mut loc_sum = vec![CompensatedSum::default(); nlat * nlon];
    let mut loc_sq = vec![CompensatedSum::default(); nlat * nlon];
    let plane = nlat * nlon;
    for slab in 0..nt * np {
        for i in 0..nlat {
            let mut row_sq = CompensatedSum::default();
            let mut row_abs = CompensatedSum::default();
            for j in 0..nlon {
                let e = err(slab * plane + i * nlon + j);
                row_sq.add(e * e);
                row_abs.add(e.abs());
                max_abs = max_abs.max(e.abs());
                loc_sum[i * nlon + j].add(e);
                loc_sq[i * nlon + j].add(e * e);
            }
            sq.add(weights[i] * row_sq.value());
            abs.add(weights[i] * row_abs.value());
        }
    }
    let denom = (nt * np * nlon) as f64;
    let weighted_rmse = (sq.value() / denom).max(0.0).sqrt();
    let weighted_mae = abs.value() / denom;

    let slabs = (nt * np) as f64;
    let per_location_mean: Vec<f64> = loc_sum.iter().map(|s| s.value() / slabs).collect();
    let per_location_std = loc_sq
        .iter()
        .zip(&per_location_mean)
        .map(|(s, &m)| (s.value() / slabs - m * m).max(0.0).sqrt())
        .collect();

    let n = original.values.len();
    let mut abs_sorted: Vec<f64> = (0..n).map(|k| err(k).abs()).collect();
    abs_sorted.sort_unstable_by(f64::total_cmp);
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let quantile = abs_sorted[lo] + (h - lo as f64) * (abs_sorted[hi] - abs_sorted[lo]);

    let histogram = Histogram::build((0..n).map(err), bins);

    Ok(ErrorReport {
        weighted_rmse,
        weighted_mae,
        max_abs_error: max_abs,
        abs_error_quantile: (q, quantile),
        histogram,
        n_lat: nlat,
        n_lon: nlon,
        per_location_mean,
        per_location_std,
    })
}
