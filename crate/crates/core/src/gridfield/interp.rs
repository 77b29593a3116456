//! Trilinear target interpolation over (time, latitude, longitude) at an exact
//! pressure level.

use super::GridField4D;
use crate::error::{Error, Result};

/// Bracketing indices and the weight of the upper neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bracket {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

/// `x` must lie within the axis span; values outside are clamped.
pub(crate) fn bracket_clamped(axis: &[f64], x: f64) -> Bracket {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return Bracket { lo: 0, hi: 0, frac: 0.0 };
    }
    if x >= axis[n - 1] {
        return Bracket {
            lo: n - 1,
            hi: n - 1,
            frac: 0.0,
        };
    }
    // first index with axis[i] > x; 1 <= hi <= n-1 here
    let hi = axis.partition_point(|&a| a <= x);
    let lo = hi - 1;
    let frac = (x - axis[lo]) / (axis[hi] - axis[lo]);
    Bracket { lo, hi, frac }
}

/// Periodic bracketing on a longitude axis with period 360°.
pub(crate) fn bracket_periodic(lons: &[f64], phi: f64) -> Bracket {
    let n = lons.len();
    let x = phi.rem_euclid(360.0);
    if n == 1 {
        return Bracket { lo: 0, hi: 0, frac: 0.0 };
    }
    let first = lons[0];
    let last = lons[n - 1];
    if x < first {
        let span = first + 360.0 - last;
        let frac = (x + 360.0 - last) / span;
        Bracket { lo: n - 1, hi: 0, frac }
    } else if x >= last {
        if x == last {
            return Bracket { lo: n - 1, hi: n - 1, frac: 0.0 };
        }
        let span = first + 360.0 - last;
        let frac = (x - last) / span;
        Bracket { lo: n - 1, hi: 0, frac }
    } else {
        let hi = lons.partition_point(|&a| a <= x);
        let lo = hi - 1;
        Bracket {
            lo,
            hi,
            frac: (x - lons[lo]) / (lons[hi] - lons[lo]),
        }
    }
}

#[inline]
fn lerp(a: f64, b: f64, f: f64) -> f64 {
    // exact at f == 0 so grid points reproduce the stored value
    if f == 0.0 {
        a
    } else {
        a * (1.0 - f) + b * f
    }
}

/// Value of `field` at time `t`, pressure level `p_index`, latitude `psi` and
/// longitude `phi` (both degrees).
///
/// Latitudes beyond the outermost rows are clamped to those rows; longitude
/// wraps with period 360° and interpolates across the seam.
pub fn sample_value(field: &GridField4D, t: f64, p_index: usize, psi: f64, phi: f64) -> Result<f64> {
    let g = &field.grid;
    let (t0, t1) = g.time_span();
    if !(t >= t0 && t <= t1) {
        return Err(Error::Domain(format!("time {t} outside [{t0}, {t1}]")));
    }
    if p_index >= g.pressures.len() {
        return Err(Error::Domain(format!(
            "pressure index {p_index} with {} levels",
            g.pressures.len()
        )));
    }
    if !phi.is_finite() || psi.is_nan() {
        return Err(Error::Domain(format!("non-finite horizontal coordinate ({psi}, {phi})")));
    }
    let bt = bracket_clamped(&g.times, t);
    let bl = bracket_clamped(&g.lats, psi);
    let bn = bracket_periodic(&g.lons, phi);

    let plane = |ti: usize| {
        let row = |li: usize| {
            let a = field.at(ti, p_index, li, bn.lo) as f64;
            let b = field.at(ti, p_index, li, bn.hi) as f64;
            lerp(a, b, bn.frac)
        };
        lerp(row(bl.lo), row(bl.hi), bl.frac)
    };
    Ok(lerp(plane(bt.lo), plane(bt.hi), bt.frac))
}
