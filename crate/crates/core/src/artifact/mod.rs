//! Half-precision model artifacts and compression-ratio accounting.
//!
//! File layout, little-endian:
//!
//! ```text
//! "NNCW" | u32 version | u32 header length | header text | u32 header crc32
//! u32 section count (4) | 4 × (u64 offset, u64 length, u32 crc32)
//! weights16 | bnstats16 | basis32 | scaling32
//! ```
//!
//! The header is canonical key-value text. Section offsets are absolute.

mod quantize;

pub use quantize::{dequantize, quantize, HalfBlob};

use std::fs;
use std::io::Cursor;
use std::path::Path;

use crate::binio::{put_u32, put_u64, OffsetReader};
use crate::decoder::{Decoder, Model};
use crate::error::{Error, Result};
use crate::features::FourierBasis;
use crate::gridfield::Grid;
use crate::kvtext::{format_reals, KvDoc};
use crate::network::{ModelConfig, ScalingTable};
use crate::trainer::TrainConfig;

pub const MAGIC: &[u8; 4] = b"NNCW";
pub const VERSION: u32 = 1;
pub const SECTION_NAMES: [&str; 4] = ["weights16", "bnstats16", "basis32", "scaling32"];
const MAX_HEADER: u32 = 1 << 28;

/// Training settings recorded for provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainDigest {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
}

impl TrainDigest {
    pub fn new(cfg: &TrainConfig, grid_points: usize) -> Self {
        TrainDigest {
            learning_rate: cfg.adam.learning_rate,
            batch_size: cfg.batch_size,
            steps: cfg.total_steps(grid_points),
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactHeader {
    pub config: ModelConfig,
    pub train: TrainDigest,
    pub name: String,
    pub units: String,
    pub grid: Grid,
    pub basis_seed: u64,
    pub basis_spatial_dim: usize,
}

impl ArtifactHeader {
    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::new();
        doc.push("format.version", VERSION);
        self.config.push_kv(&mut doc, "model.");
        doc.push("basis.seed", self.basis_seed);
        doc.push("basis.spatial_dim", self.basis_spatial_dim);
        doc.push("train.learning_rate", format_reals(&[self.train.learning_rate]));
        doc.push("train.batch_size", self.train.batch_size);
        doc.push("train.steps", self.train.steps);
        doc.push("train.seed", self.train.seed);
        doc.push("field.name", &self.name);
        doc.push("field.units", &self.units);
        doc.push_reals("field.times", &self.grid.times);
        doc.push_reals("field.pressures", &self.grid.pressures);
        doc.push_reals("field.lats", &self.grid.lats);
        doc.push_reals("field.lons", &self.grid.lons);
        doc.to_text()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = KvDoc::parse(text)?;
        let mut r = doc.reader();
        let version: u32 = r.req("format.version")?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        let base = ModelConfig::uniform(0, 0, 0, 0.0, 0.0, 0.0);
        let config = ModelConfig::read_kv(&mut r, "model.", &base)?;
        let reals = |r: &mut crate::kvtext::KvReader<'_>, key: &str| {
            r.reals(key)?
                .ok_or_else(|| Error::invalid(format!("missing key `{key}`")))
        };
        let header = ArtifactHeader {
            basis_seed: r.req("basis.seed")?,
            basis_spatial_dim: r.req("basis.spatial_dim")?,
            train: TrainDigest {
                learning_rate: r.req("train.learning_rate")?,
                batch_size: r.req("train.batch_size")?,
                steps: r.req("train.steps")?,
                seed: r.req("train.seed")?,
            },
            name: r.req("field.name")?,
            units: r.req("field.units")?,
            grid: Grid::new(
                reals(&mut r, "field.times")?,
                reals(&mut r, "field.pressures")?,
                reals(&mut r, "field.lats")?,
                reals(&mut r, "field.lons")?,
            )?,
            config,
        };
        r.finish()?;
        header.config.validate()?;
        if header.basis_spatial_dim != header.config.spatial_dim() {
            return Err(Error::invalid("basis spatial width disagrees with the model toggles"));
        }
        Ok(header)
    }
}

/// The compressed representation of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedArtifact {
    pub header: ArtifactHeader,
    pub blob: HalfBlob,
    /// `b_t`, `b_p`, then the spatial block, as stored by [`FourierBasis`].
    pub basis: Vec<f32>,
    /// Scaling means then ranges, pressure-major.
    pub scaling: Vec<f32>,
}

impl CompressedArtifact {
    /// Quantizes a trained model.
    pub fn from_model(model: &Model, name: &str, units: &str, grid: &Grid, train: TrainDigest) -> Result<Self> {
        if model.scaling.pressures != grid.pressures || model.scaling.lats != grid.lats {
            return Err(Error::Dimension("scaling table does not match the field grid".into()));
        }
        let b = &model.basis;
        let mut basis = Vec::with_capacity(b.stored_len());
        basis.extend_from_slice(&b.b_t);
        basis.extend_from_slice(&b.b_p);
        basis.extend_from_slice(&b.b_s);
        let mut scaling = model.scaling.mean.clone();
        scaling.extend_from_slice(&model.scaling.range);
        Ok(CompressedArtifact {
            header: ArtifactHeader {
                config: model.config.clone(),
                train,
                name: name.to_string(),
                units: units.to_string(),
                grid: grid.clone(),
                basis_seed: b.seed,
                basis_spatial_dim: b.spatial_dim,
            },
            blob: quantize(&model.params)?,
            basis,
            scaling,
        })
    }

    /// The dequantized model.
    pub fn to_model(&self) -> Result<Model> {
        let h = &self.header;
        let cfg = &h.config;
        let m = cfg.m;
        let sd = h.basis_spatial_dim;
        if self.basis.len() != m * (2 + sd) {
            return Err(Error::Dimension(format!(
                "basis section has {} entries, expected {}",
                self.basis.len(),
                m * (2 + sd)
            )));
        }
        let basis = FourierBasis {
            m,
            sigma: cfg.sigma,
            seed: h.basis_seed,
            spatial_dim: sd,
            b_t: self.basis[..m].to_vec(),
            b_p: self.basis[m..2 * m].to_vec(),
            b_s: self.basis[2 * m..].to_vec(),
        };
        let n = h.grid.pressures.len() * h.grid.lats.len();
        if self.scaling.len() != 2 * n {
            return Err(Error::Dimension(format!(
                "scaling section has {} entries, expected {}",
                self.scaling.len(),
                2 * n
            )));
        }
        let scaling = ScalingTable {
            pressures: h.grid.pressures.clone(),
            lats: h.grid.lats.clone(),
            mean: self.scaling[..n].to_vec(),
            range: self.scaling[n..].to_vec(),
        };
        scaling.validate()?;
        Ok(Model {
            config: cfg.clone(),
            basis,
            scaling,
            params: dequantize(&self.blob, cfg)?,
        })
    }

    pub fn decoder(&self) -> Result<Decoder> {
        let h = &self.header;
        Decoder::new(self.to_model()?, h.name.clone(), h.units.clone(), h.grid.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header.to_text();
        let sections: [Vec<u8>; 4] = [
            self.blob.weights.iter().flat_map(|v| v.to_le_bytes()).collect(),
            self.blob.bn_stats.iter().flat_map(|v| v.to_le_bytes()).collect(),
            self.basis.iter().flat_map(|v| v.to_le_bytes()).collect(),
            self.scaling.iter().flat_map(|v| v.to_le_bytes()).collect(),
        ];
        let table_len = 4 + sections.len() * 20;
        let mut offset = (4 + 4 + 4 + header.len() + 4 + table_len) as u64;
        let mut out = Vec::with_capacity(offset as usize + sections.iter().map(Vec::len).sum::<usize>());
        out.extend_from_slice(MAGIC);
        // writes into a Vec cannot fail
        put_u32(&mut out, VERSION).unwrap();
        put_u32(&mut out, header.len() as u32).unwrap();
        out.extend_from_slice(header.as_bytes());
        put_u32(&mut out, crc32fast::hash(header.as_bytes())).unwrap();
        put_u32(&mut out, sections.len() as u32).unwrap();
        for s in &sections {
            put_u64(&mut out, offset).unwrap();
            put_u64(&mut out, s.len() as u64).unwrap();
            put_u32(&mut out, crc32fast::hash(s)).unwrap();
            offset += s.len() as u64;
        }
        for s in &sections {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = OffsetReader::new(Cursor::new(bytes));
        let magic = r.bytes(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::format(0, "not an NNCW artifact"));
        }
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::Version {
                found: version,
                expected: VERSION,
            });
        }
        let header_at = r.position();
        let header = r.string("header", MAX_HEADER)?;
        let stored = r.u32("header crc")?;
        let computed = crc32fast::hash(header.as_bytes());
        if stored != computed {
            return Err(Error::Checksum {
                section: "header".into(),
                stored,
                computed,
            });
        }
        let header = ArtifactHeader::parse(&header).map_err(|e| Error::format(header_at, e.to_string()))?;
        let count = r.u32("section count")?;
        if count as usize != SECTION_NAMES.len() {
            return Err(Error::format(r.position() - 4, format!("expected 4 sections, found {count}")));
        }
        let mut sections: Vec<&[u8]> = Vec::new();
        for name in SECTION_NAMES {
            let entry_at = r.position();
            let offset = r.u64("section offset")?;
            let len = r.u64("section length")?;
            let stored = r.u32("section crc")?;
            let end = offset.checked_add(len).filter(|&e| e <= bytes.len() as u64);
            let Some(end) = end else {
                return Err(Error::format(
                    entry_at,
                    format!("section {name} [{offset}, +{len}) runs past the end of the file ({} bytes)", bytes.len()),
                ));
            };
            let data = &bytes[offset as usize..end as usize];
            let computed = crc32fast::hash(data);
            if stored != computed {
                return Err(Error::Checksum {
                    section: name.into(),
                    stored,
                    computed,
                });
            }
            sections.push(data);
        }
        let table_end = r.position();
        let mut expect = table_end;
        for (name, s) in SECTION_NAMES.iter().zip(&sections) {
            let at = s.as_ptr() as usize - bytes.as_ptr() as usize;
            if at as u64 != expect {
                return Err(Error::format(at as u64, format!("section {name} is not contiguous")));
            }
            expect += s.len() as u64;
        }
        if expect != bytes.len() as u64 {
            return Err(Error::format(expect, "trailing bytes after the last section"));
        }

        let halves = |s: &[u8], name: &str| -> Result<Vec<u16>> {
            if s.len() % 2 != 0 {
                return Err(Error::Dimension(format!("section {name} has odd length")));
            }
            Ok(s.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
        };
        let singles = |s: &[u8], name: &str| -> Result<Vec<f32>> {
            if s.len() % 4 != 0 {
                return Err(Error::Dimension(format!("section {name} length is not a multiple of 4")));
            }
            Ok(s.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
        };
        let artifact = CompressedArtifact {
            header,
            blob: HalfBlob {
                weights: halves(sections[0], "weights16")?,
                bn_stats: halves(sections[1], "bnstats16")?,
            },
            basis: singles(sections[2], "basis32")?,
            scaling: singles(sections[3], "scaling32")?,
        };
        artifact.to_model()?;
        Ok(artifact)
    }
}

pub fn serialize(artifact: &CompressedArtifact, path: &Path) -> Result<()> {
    fs::write(path, artifact.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn deserialize(path: &Path) -> Result<CompressedArtifact> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    CompressedArtifact::from_bytes(&bytes)
}

/// Field payload bytes (4 per point) over artifact file bytes.
pub fn compression_ratio_for(points: u64, artifact_bytes: u64) -> f64 {
    (points as f64 * 4.0) / artifact_bytes as f64
}

pub fn compression_ratio(grid: &Grid, artifact_path: &Path) -> Result<f64> {
    let bytes = fs::metadata(artifact_path).map_err(|e| Error::io(artifact_path, e))?.len();
    Ok(compression_ratio_for(grid.len() as u64, bytes))
}
