//! Band-limited synthetic fields used as stand-ins for reanalysis data.
//!
//! ```text
//! f(t, p, ψ, φ) = b(p, ψ) + Σₖ aₖ cos(nₖφ + δₖ) cos(mₖψ) cos(ωₖt + ρₖ) gₖ(p)
//! b(p, ψ)       = c + c_lat cos ψ + c_p (1 − p / p_max)
//! gₖ(p)         = 1 + ½ cos(κₖ p / p_max + ζₖ)
//! ```
//!
//! Latitude orders `mₖ` are odd so every mode vanishes at the poles, which
//! keeps the field single-valued there.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Grid, GridField4D};
use crate::angles::cos_deg;
use crate::error::{Error, Result};
use crate::kvtext::KvDoc;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub name: String,
    pub units: String,
    pub n_times: usize,
    pub time_start: f64,
    /// Hours between consecutive time steps.
    pub time_step: f64,
    pub pressures: Vec<f64>,
    pub n_lat: usize,
    pub n_lon: usize,
    /// Number of random modes; ignored when `wavenumbers` is given.
    pub modes: usize,
    /// Explicit zonal wavenumbers, one mode each.
    pub wavenumbers: Option<Vec<u32>>,
    pub max_wavenumber: u32,
    pub max_lat_order: u32,
    pub amplitude: f64,
    /// Upper bound of the angular frequencies, radians per hour.
    pub max_omega: f64,
    pub baseline: f64,
    pub baseline_lat: f64,
    pub baseline_pressure: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            name: "synthetic".into(),
            units: "1".into(),
            n_times: 8,
            time_start: 0.0,
            time_step: 24.0,
            pressures: vec![300.0, 500.0, 850.0],
            n_lat: 46,
            n_lon: 90,
            modes: 6,
            wavenumbers: None,
            max_wavenumber: 6,
            max_lat_order: 5,
            amplitude: 1.0,
            max_omega: TAU / 96.0,
            baseline: 0.0,
            baseline_lat: 0.0,
            baseline_pressure: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let d = SynthSpec::default();
        let mut r = doc.reader();
        let spec = SynthSpec {
            name: r.or("name", d.name)?,
            units: r.or("units", d.units)?,
            n_times: r.or("n_times", d.n_times)?,
            time_start: r.or("time_start", d.time_start)?,
            time_step: r.or("time_step", d.time_step)?,
            pressures: r.reals("pressures")?.unwrap_or(d.pressures),
            n_lat: r.or("n_lat", d.n_lat)?,
            n_lon: r.or("n_lon", d.n_lon)?,
            modes: r.or("modes", d.modes)?,
            wavenumbers: r.list("wavenumbers")?,
            max_wavenumber: r.or("max_wavenumber", d.max_wavenumber)?,
            max_lat_order: r.or("max_lat_order", d.max_lat_order)?,
            amplitude: r.or("amplitude", d.amplitude)?,
            max_omega: r.or("max_omega", d.max_omega)?,
            baseline: r.or("baseline", d.baseline)?,
            baseline_lat: r.or("baseline_lat", d.baseline_lat)?,
            baseline_pressure: r.or("baseline_pressure", d.baseline_pressure)?,
        };
        r.finish()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.push("name", &self.name);
        doc.push("units", &self.units);
        doc.push("n_times", self.n_times);
        doc.push("time_start", format!("{:?}", self.time_start));
        doc.push("time_step", format!("{:?}", self.time_step));
        doc.push_reals("pressures", &self.pressures);
        doc.push("n_lat", self.n_lat);
        doc.push("n_lon", self.n_lon);
        doc.push("modes", self.modes);
        if let Some(w) = &self.wavenumbers {
            let parts: Vec<String> = w.iter().map(u32::to_string).collect();
            doc.push("wavenumbers", parts.join(","));
        }
        doc.push("max_wavenumber", self.max_wavenumber);
        doc.push("max_lat_order", self.max_lat_order);
        doc.push("amplitude", format!("{:?}", self.amplitude));
        doc.push("max_omega", format!("{:?}", self.max_omega));
        doc.push("baseline", format!("{:?}", self.baseline));
        doc.push("baseline_lat", format!("{:?}", self.baseline_lat));
        doc.push("baseline_pressure", format!("{:?}", self.baseline_pressure));
        doc.to_text()
    }

    pub fn mode_count(&self) -> usize {
        self.wavenumbers.as_ref().map_or(self.modes, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_times == 0 || self.pressures.is_empty() || self.n_lat < 2 || self.n_lon == 0 {
            return Err(Error::invalid("synthetic grid needs n_times>=1, pressures, n_lat>=2, n_lon>=1"));
        }
        if self.n_times > 1 && !(self.time_step > 0.0) {
            return Err(Error::invalid("time_step must be positive"));
        }
        if self.max_wavenumber == 0 || self.max_lat_order == 0 {
            return Err(Error::invalid("max_wavenumber and max_lat_order must be >= 1"));
        }
        if self.pressures.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::invalid("pressure levels must be positive"));
        }
        let finite = [
            self.amplitude,
            self.max_omega,
            self.baseline,
            self.baseline_lat,
            self.baseline_pressure,
            self.time_start,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.max_omega < 0.0 {
            return Err(Error::invalid("synthetic parameters must be finite"));
        }
        let k = self.mode_count();
        if (k == 0 || self.amplitude == 0.0)
            && self.baseline_lat == 0.0
            && self.baseline_pressure == 0.0
            && self.baseline == 0.0
        {
            return Err(Error::invalid(
                "no modes and zero baseline; request a constant field with a nonzero `baseline`",
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let times = (0..self.n_times)
            .map(|k| self.time_start + self.time_step * k as f64)
            .collect();
        Grid::equiangular(times, self.pressures.clone(), self.n_lat, self.n_lon)
    }
}

struct Mode {
    amp: f64,
    n: f64,
    m: f64,
    omega: f64,
    delta: f64,
    rho: f64,
    kappa: f64,
    zeta: f64,
}

pub fn synth_field(spec: &SynthSpec, seed: u64) -> Result<GridField4D> {
    spec.validate()?;
    let grid = spec.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.mode_count();
    let modes: Vec<Mode> = (0..k)
        .map(|i| {
            let n = match &spec.wavenumbers {
                Some(w) => w[i],
                None => rng.random_range(1..=spec.max_wavenumber),
            };
            let m = 2 * rng.random_range(0..=(spec.max_lat_order - 1) / 2) + 1;
            Mode {
                amp: spec.amplitude * rng.random_range(0.5..1.0),
                n: f64::from(n),
                m: f64::from(m),
                omega: spec.max_omega * rng.random::<f64>(),
                delta: TAU * rng.random::<f64>(),
                rho: TAU * rng.random::<f64>(),
                kappa: PI * rng.random::<f64>(),
                zeta: TAU * rng.random::<f64>(),
            }
        })
        .collect();
    let p_max = spec.pressures.iter().cloned().fold(f64::MIN, f64::max);

    GridField4D::from_fn(spec.name.clone(), spec.units.clone(), grid, |t, p, lat, lon| {
        let psi = lat.to_radians();
        let mut v = spec.baseline + spec.baseline_lat * cos_deg(lat) + spec.baseline_pressure * (1.0 - p / p_max);
        for md in &modes {
            let zonal = (md.n * lon.to_radians() + md.delta).cos();
            let merid = (md.m * psi).cos();
            let temporal = (md.omega * t + md.rho).cos();
            let vertical = 1.0 + 0.5 * (md.kappa * p / p_max + md.zeta).cos();
            v += md.amp * zonal * merid * temporal * vertical;
        }
        v
    })
}
