use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kvtext::{format_reals, KvDoc, KvReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Gelu,
    Relu,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Gelu => "gelu",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gelu" => Ok(Activation::Gelu),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::invalid(format!("unknown activation `{s}`"))),
        }
    }
}

/// Network hyper-parameters and feature toggles.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Width of each FCBlock; the block count is `widths.len()`.
    pub widths: Vec<usize>,
    /// Fourier features per block of B.
    pub m: usize,
    pub sigma: f64,
    /// Time normalization constant (hours).
    pub c_t: f64,
    /// Pressure normalization constant (hPa).
    pub c_p: f64,
    pub activation: Activation,
    pub use_scaling: bool,
    pub use_xyz: bool,
    pub use_fourier: bool,
    pub use_skip: bool,
    pub use_batchnorm: bool,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl ModelConfig {
    /// Writes every field under `prefix` (e.g. `"model."`).
    pub fn push_kv(&self, doc: &mut KvDoc, prefix: &str) {
        let widths: Vec<String> = self.widths.iter().map(usize::to_string).collect();
        let on = |b: bool| if b { "on" } else { "off" };
        doc.push(&format!("{prefix}widths"), widths.join(","));
        doc.push(&format!("{prefix}m"), self.m);
        doc.push(&format!("{prefix}sigma"), format_reals(&[self.sigma]));
        doc.push(&format!("{prefix}c_t"), format_reals(&[self.c_t]));
        doc.push(&format!("{prefix}c_p"), format_reals(&[self.c_p]));
        doc.push(&format!("{prefix}activation"), self.activation);
        doc.push(&format!("{prefix}use_scaling"), on(self.use_scaling));
        doc.push(&format!("{prefix}use_xyz"), on(self.use_xyz));
        doc.push(&format!("{prefix}use_fourier"), on(self.use_fourier));
        doc.push(&format!("{prefix}use_skip"), on(self.use_skip));
        doc.push(&format!("{prefix}use_batchnorm"), on(self.use_batchnorm));
        doc.push(&format!("{prefix}bn_momentum"), format_reals(&[self.bn_momentum]));
        doc.push(&format!("{prefix}bn_eps"), format_reals(&[self.bn_eps]));
    }

    /// Reads fields under `prefix`, falling back to `base`. Widths come from
    /// `widths` or else from `depth` and `width`.
    pub fn read_kv(r: &mut KvReader<'_>, prefix: &str, base: &ModelConfig) -> Result<ModelConfig> {
        let key = |k: &str| format!("{prefix}{k}");
        let depth: Option<usize> = r.opt(&key("depth"))?;
        let width: Option<usize> = r.opt(&key("width"))?;
        let widths = match r.list::<usize>(&key("widths"))? {
            Some(w) => {
                if depth.is_some() || width.is_some() {
                    return Err(Error::invalid(format!("give either {prefix}widths or {prefix}depth/width")));
                }
                w
            }
            None => {
                let d = depth.unwrap_or(base.widths.len());
                let w = width.unwrap_or_else(|| base.widths.first().copied().unwrap_or(0));
                vec![w; d]
            }
        };
        let cfg = ModelConfig {
            widths,
            m: r.or(&key("m"), base.m)?,
            sigma: r.or(&key("sigma"), base.sigma)?,
            c_t: r.or(&key("c_t"), base.c_t)?,
            c_p: r.or(&key("c_p"), base.c_p)?,
            activation: r.or(&key("activation"), base.activation)?,
            use_scaling: r.flag(&key("use_scaling"), base.use_scaling)?,
            use_xyz: r.flag(&key("use_xyz"), base.use_xyz)?,
            use_fourier: r.flag(&key("use_fourier"), base.use_fourier)?,
            use_skip: r.flag(&key("use_skip"), base.use_skip)?,
            use_batchnorm: r.flag(&key("use_batchnorm"), base.use_batchnorm)?,
            bn_momentum: r.or(&key("bn_momentum"), base.bn_momentum)?,
            bn_eps: r.or(&key("bn_eps"), base.bn_eps)?,
        };
        Ok(cfg)
    }

    pub fn uniform(d: usize, width: usize, m: usize, sigma: f64, c_t: f64, c_p: f64) -> Self {
        ModelConfig {
            widths: vec![width; d],
            m,
            sigma,
            c_t,
            c_p,
            activation: Activation::Gelu,
            use_scaling: true,
            use_xyz: true,
            use_fourier: true,
            use_skip: true,
            use_batchnorm: true,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn spatial_dim(&self) -> usize {
        if self.use_xyz {
            3
        } else {
            2
        }
    }

    /// Width of the rows fed to the input projection.
    pub fn input_dim(&self) -> usize {
        if self.use_fourier {
            6 * self.m
        } else {
            2 + self.spatial_dim()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::invalid("at least one FCBlock is required"));
        }
        if self.widths.contains(&0) {
            return Err(Error::invalid("FCBlock widths must be >= 1"));
        }
        if self.use_skip && self.widths.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::invalid("skip connections need equal consecutive FCBlock widths"));
        }
        if self.m == 0 || !(self.sigma > 0.0) {
            return Err(Error::invalid("Fourier features need m >= 1 and sigma > 0"));
        }
        if !(self.c_t > 0.0 && self.c_p > 0.0) {
            return Err(Error::invalid("c_t and c_p must be positive"));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) || !(self.bn_eps > 0.0) {
            return Err(Error::invalid("batch-norm momentum must be in (0, 1] and eps > 0"));
        }
        Ok(())
    }
}
