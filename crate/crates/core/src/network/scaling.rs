//! Per-(pressure, latitude) output scaling.

use crate::error::{Error, Result};
use crate::gridfield::GridField4D;
use crate::gridfield::interp_support::bracket_clamped;

/// Mean and half-range of a field for every (pressure level, latitude row),
/// stored at 32-bit precision. `range` is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub pressures: Vec<f64>,
    pub lats: Vec<f64>,
    /// `pressures.len() × lats.len()`, latitude fastest.
    pub mean: Vec<f32>,
    pub range: Vec<f32>,
}

/// Relative floor applied to every range entry.
pub const RANGE_FLOOR: f64 = 1e-6;

pub fn build_scaling_table(field: &GridField4D) -> Result<ScalingTable> {
    field.validate()?;
    let [nt, np, nlat, nlon] = field.shape();
    let (gmin, gmax) = field.value_range();
    let spread = gmax - gmin;
    let floor = if spread > 0.0 {
        RANGE_FLOOR * spread
    } else {
        RANGE_FLOOR * gmax.abs().max(1.0)
    };
    let mut mean = Vec::with_capacity(np * nlat);
    let mut range = Vec::with_capacity(np * nlat);
    for p in 0..np {
        for i in 0..nlat {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for t in 0..nt {
                for j in 0..nlon {
                    let v = field.at(t, p, i, j) as f64;
                    // Kahan summation keeps the mean exact for constant strata
                    let y = v - comp;
                    let s = sum + y;
                    comp = (s - sum) - y;
                    sum = s;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            mean.push((sum / (nt * nlon) as f64) as f32);
            range.push(((hi - lo) / 2.0).max(floor) as f32);
        }
    }
    let table = ScalingTable {
        pressures: field.grid.pressures.clone(),
        lats: field.grid.lats.clone(),
        mean,
        range,
    };
    table.validate()?;
    Ok(table)
}

/// Ablation stand-in for the per-row table: every entry holds the mean and
/// half-range of the whole field, so the output map is one global affine.
pub fn build_global_scaling_table(field: &GridField4D) -> Result<ScalingTable> {
    field.validate()?;
    let (lo, hi) = field.value_range();
    let spread = hi - lo;
    let floor = if spread > 0.0 {
        RANGE_FLOOR * spread
    } else {
        RANGE_FLOOR * hi.abs().max(1.0)
    };
    let mean = field.values.iter().map(|&v| v as f64).sum::<f64>() / field.values.len() as f64;
    let n = field.grid.pressures.len() * field.grid.lats.len();
    let table = ScalingTable {
        pressures: field.grid.pressures.clone(),
        lats: field.grid.lats.clone(),
        mean: vec![mean as f32; n],
        range: vec![(spread / 2.0).max(floor) as f32; n],
    };
    table.validate()?;
    Ok(table)
}

impl ScalingTable {
    pub fn validate(&self) -> Result<()> {
        let n = self.pressures.len() * self.lats.len();
        if n == 0 || self.mean.len() != n || self.range.len() != n {
            return Err(Error::Dimension(format!(
                "scaling table needs {n} entries, has {} means and {} ranges",
                self.mean.len(),
                self.range.len()
            )));
        }
        if self.range.iter().any(|&r| !(r > 0.0 && r.is_finite())) || self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numerical("scaling table has a nonpositive or non-finite entry".into()));
        }
        Ok(())
    }

    /// Bilinearly interpolated `(mean, range)` at pressure `p` and latitude
    /// `psi`, clamped to the table.
    pub fn lookup(&self, p: f64, psi: f64) -> (f64, f64) {
        let bp = bracket_clamped(&self.pressures, p);
        let bl = bracket_clamped(&self.lats, psi);
        let nlat = self.lats.len();
        let at = |tab: &[f32], pi: usize, li: usize| tab[pi * nlat + li] as f64;
        let interp = |tab: &[f32]| {
            let row = |pi: usize| {
                let a = at(tab, pi, bl.lo);
                if bl.frac == 0.0 {
                    a
                } else {
                    a * (1.0 - bl.frac) + at(tab, pi, bl.hi) * bl.frac
                }
            };
            let a = row(bp.lo);
            if bp.frac == 0.0 {
                a
            } else {
                a * (1.0 - bp.frac) + row(bp.hi) * bp.frac
            }
        };
        (interp(&self.mean), interp(&self.range))
    }

    /// Inverse of [`apply_scaling`]: the raw target for a physical value.
    pub fn normalize(&self, p: f64, psi: f64, value: f64) -> f64 {
        let (mean, range) = self.lookup(p, psi);
        (value - mean) / range
    }
}

/// `mean*(p, ψ) + range*(p, ψ) · raw`.
pub fn apply_scaling(table: &ScalingTable, p: f64, psi: f64, raw: f64) -> f64 {
    let (mean, range) = table.lookup(p, psi);
    mean + range * raw
}
