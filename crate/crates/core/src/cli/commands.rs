use std::io::Write;
use std::path::Path;

use super::config::{ablation_model, RunConfig};
use crate::artifact::{compression_ratio, deserialize, serialize, CompressedArtifact, TrainDigest};
use crate::error::{Error, Result};
use crate::gridfield::{load_field, store_field, synth_field, ErrorReport, Grid, GridField4D, SynthSpec};
use crate::kvtext::{format_reals, KvDoc};
use crate::trainer::train_with;

fn emit(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { emit($out, format_args!($($arg)*)) };
}

/// Target coordinates for decompression; missing axes default to the
/// artifact's native grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub times: Option<Vec<f64>>,
    pub pressures: Option<Vec<f64>>,
    pub lats: Option<Vec<f64>>,
    pub lons: Option<Vec<f64>>,
    /// Equiangular latitude rows, poles included.
    pub n_lat: Option<usize>,
    /// Equiangular longitude columns starting at 0°.
    pub n_lon: Option<usize>,
}

impl GridSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let mut r = doc.reader();
        let spec = GridSpec {
            times: r.reals("times")?,
            pressures: r.reals("pressures")?,
            lats: r.reals("lats")?,
            lons: r.reals("lons")?,
            n_lat: r.opt("n_lat")?,
            n_lon: r.opt("n_lon")?,
        };
        r.finish()?;
        if spec.lats.is_some() && spec.n_lat.is_some() || spec.lons.is_some() && spec.n_lon.is_some() {
            return Err(Error::invalid("give either explicit coordinates or a count per axis, not both"));
        }
        Ok(spec)
    }

    pub fn resolve(&self, native: &Grid) -> Result<Grid> {
        let eq = Grid::equiangular(vec![0.0], vec![1.0], self.n_lat.unwrap_or(2), self.n_lon.unwrap_or(1))?;
        let lats = match (&self.lats, self.n_lat) {
            (Some(l), _) => l.clone(),
            (None, Some(_)) => eq.lats.clone(),
            (None, None) => native.lats.clone(),
        };
        let lons = match (&self.lons, self.n_lon) {
            (Some(l), _) => l.clone(),
            (None, Some(_)) => eq.lons.clone(),
            (None, None) => native.lons.clone(),
        };
        Grid::new(
            self.times.clone().unwrap_or_else(|| native.times.clone()),
            self.pressures.clone().unwrap_or_else(|| native.pressures.clone()),
            lats,
            lons,
        )
    }
}

fn print_report(out: &mut dyn Write, r: &ErrorReport, prefix: &str) -> Result<()> {
    say!(out, "{prefix}weighted_rmse={:e}", r.weighted_rmse)?;
    say!(out, "{prefix}weighted_mae={:e}", r.weighted_mae)?;
    say!(out, "{prefix}max_abs_error={:e}", r.max_abs_error)?;
    say!(out, "{prefix}quantile={}", r.abs_error_quantile.0)?;
    say!(out, "{prefix}abs_error_quantile={:e}", r.abs_error_quantile.1)
}

pub fn compress(input: &Path, output: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let field = load_field(input)?;
    let model_cfg = cfg.model_for(&field.grid)?;
    let mut progress_err = None;
    let trained = train_with(&field, &model_cfg, &cfg.train, |p| {
        if progress_err.is_none() {
            progress_err = say!(out, "{p}").err();
        }
    })?;
    if let Some(e) = progress_err {
        return Err(e);
    }
    let digest = TrainDigest::new(&cfg.train, field.grid.len());
    let artifact = CompressedArtifact::from_model(&trained.model, &field.name, &field.units, &field.grid, digest)?;
    serialize(&artifact, output)?;

    let exact = crate::trainer::validation_wrmse(&trained.model, &field)?;
    let report = artifact.decoder()?.stats(&field, 0.99999)?;
    let bytes = std::fs::metadata(output).map_err(|e| Error::io(output, e))?.len();
    let dyn_range = field.dynamic_range();
    say!(out, "steps={}", trained.history.losses.len())?;
    say!(out, "parameters={}", trained.model.params.trainable_count())?;
    say!(out, "wrmse_float={exact:e}")?;
    print_report(out, &report, "")?;
    if dyn_range > 0.0 {
        say!(out, "relative_wrmse={:e}", report.weighted_rmse / dyn_range)?;
    }
    say!(out, "artifact_bytes={bytes}")?;
    say!(out, "compression_ratio={}", compression_ratio(&field.grid, output)?)
}

pub fn decompress(artifact: &Path, output: &Path, grid: Option<&GridSpec>, out: &mut dyn Write) -> Result<()> {
    let a = deserialize(artifact)?;
    let decoder = a.decoder()?;
    let target = match grid {
        Some(spec) => spec.resolve(&a.header.grid)?,
        None => a.header.grid.clone(),
    };
    let field = decoder.reconstruct_grid(&target)?;
    store_field(&field, output)?;
    let [nt, np, nlat, nlon] = field.shape();
    say!(out, "shape={nt},{np},{nlat},{nlon}")?;
    say!(out, "evaluations={}", decoder.evaluations())
}

pub fn stats(artifact: &Path, original: &Path, q: f64, maps: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile {q} not in (0, 1)")));
    }
    let a = deserialize(artifact)?;
    let field = load_field(original)?;
    let report = a.decoder()?.stats(&field, q)?;
    print_report(out, &report, "")?;
    let dyn_range = field.dynamic_range();
    if dyn_range > 0.0 {
        say!(out, "relative_wrmse={:e}", report.weighted_rmse / dyn_range)?;
    }
    if let Some(dir) = maps {
        write_maps(&report, &field, dir)?;
        say!(out, "maps={}", dir.display())?;
    }
    Ok(())
}

fn write_maps(report: &ErrorReport, field: &GridField4D, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = &field.grid;
    let plane = Grid::new(vec![g.times[0]], vec![g.pressures[0]], g.lats.clone(), g.lons.clone())?;
    for (name, values) in [("error_mean", &report.per_location_mean), ("error_std", &report.per_location_std)] {
        let f = GridField4D::new(
            format!("{}_{name}", field.name),
            field.units.clone(),
            plane.clone(),
            values.iter().map(|&v| v as f32).collect(),
        )?;
        store_field(&f, dir.join(format!("{name}.nngf")))?;
    }
    let mut doc = KvDoc::new();
    doc.push("edges", format_reals(&report.histogram.edges));
    let counts: Vec<String> = report.histogram.counts.iter().map(u64::to_string).collect();
    doc.push("counts", counts.join(","));
    let path = dir.join("histogram.txt");
    std::fs::write(&path, doc.to_text()).map_err(|e| Error::io(&path, e))
}

/// WRMSE of one ablation configuration across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub name: String,
    pub seeds: Vec<u64>,
    pub wrmse: Vec<f64>,
}

impl AblationRow {
    pub fn mean(&self) -> f64 {
        self.wrmse.iter().sum::<f64>() / self.wrmse.len() as f64
    }
}

/// Trains every configured row on `field` and returns the half-precision
/// WRMSE per seed.
pub fn ablation_table(field: &GridField4D, cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    let base = cfg.model_for(&field.grid)?;
    let mut rows = Vec::new();
    for name in &cfg.ablate_rows {
        let model = ablation_model(&base, name)?;
        let mut wrmse = Vec::new();
        for &seed in &cfg.ablate_seeds {
            let mut t = cfg.train.clone();
            t.seed = seed;
            t.log_every = 0;
            let trained = train_with(field, &model, &t, |_| {})?;
            let digest = TrainDigest::new(&t, field.grid.len());
            let a = CompressedArtifact::from_model(&trained.model, &field.name, &field.units, &field.grid, digest)?;
            wrmse.push(a.decoder()?.stats(field, 0.5)?.weighted_rmse);
        }
        rows.push(AblationRow {
            name: name.clone(),
            seeds: cfg.ablate_seeds.clone(),
            wrmse,
        });
    }
    Ok(rows)
}

pub fn ablate(input: &Path, report: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<AblationRow>> {
    let field = load_field(input)?;
    let rows = ablation_table(&field, cfg)?;
    let dyn_range = field.dynamic_range();
    let mut text = String::new();
    for r in &rows {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let line = format!(
            "row={} seeds={} wrmse={} mean_wrmse={:e} relative={:e}",
            r.name,
            seeds.join(","),
            format_reals(&r.wrmse),
            r.mean(),
            if dyn_range > 0.0 { r.mean() / dyn_range } else { f64::NAN }
        );
        say!(out, "{line}")?;
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(report, text).map_err(|e| Error::io(report, e))?;
    Ok(rows)
}

pub fn synth(spec: &SynthSpec, seed: u64, output: &Path, out: &mut dyn Write) -> Result<()> {
    let field = synth_field(spec, seed)?;
    store_field(&field, output)?;
    let [nt, np, nlat, nlon] = field.shape();
    let (lo, hi) = field.value_range();
    say!(out, "shape={nt},{np},{nlat},{nlon}")?;
    say!(out, "min={lo:e}")?;
    say!(out, "max={hi:e}")
}
