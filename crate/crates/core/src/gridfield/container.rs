//! The `NNGF` field container.
//!
//! Little-endian layout:
//!
//! ```text
//! "NNGF"            4 bytes
//! version           u32
//! name, units       u32 length + UTF-8 each
//! dims              4 × u64   (time, pressure, lat, lon)
//! coordinates       f64 × each dim, same order
//! payload           f32 × product(dims), longitude fastest
//! crc32(payload)    u32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Grid, GridField4D};
use crate::binio::{put_f64s, put_str, put_u32, put_u64, OffsetReader};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"NNGF";
pub const FIELD_VERSION: u32 = 1;

const MAX_LABEL: u32 = 1 << 16;
const MAX_AXIS: u64 = 1 << 32;

/// Everything in a field file except the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub name: String,
    pub units: String,
    pub grid: Grid,
    /// Byte offset of the first payload value.
    pub payload_offset: u64,
}

impl FieldHeader {
    pub fn payload_bytes(&self) -> u64 {
        self.grid.len() as u64 * 4
    }
}

fn read_header<R: Read>(rd: &mut OffsetReader<R>) -> Result<FieldHeader> {
    let mut magic = [0u8; 4];
    rd.fill(&mut magic, "magic")?;
    if &magic != FIELD_MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:?}, expected \"NNGF\"")));
    }
    let version = rd.u32("version")?;
    if version != FIELD_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FIELD_VERSION,
        });
    }
    let name = rd.string("name", MAX_LABEL)?;
    let units = rd.string("units", MAX_LABEL)?;

    let mut dims = [0u64; 4];
    for (d, what) in dims.iter_mut().zip(["time", "pressure", "lat", "lon"]) {
        let at = rd.position();
        *d = rd.u64(what)?;
        if *d == 0 || *d > MAX_AXIS {
            return Err(Error::format(at, format!("{what} dimension {d} out of range")));
        }
    }
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(4);
    for (&d, what) in dims.iter().zip(["time", "pressure", "lat", "lon"]) {
        let at = rd.position();
        let mut axis = Vec::with_capacity(d as usize);
        for _ in 0..d {
            axis.push(rd.f64(what)?);
        }
        if axis.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(at, format!("non-finite {what} coordinate")));
        }
        axes.push(axis);
    }
    let lons = axes.pop().unwrap();
    let lats = axes.pop().unwrap();
    let pressures = axes.pop().unwrap();
    let times = axes.pop().unwrap();
    let grid = Grid {
        times,
        pressures,
        lats,
        lons,
    };
    let payload_offset = rd.position();
    grid.validate().map_err(|e| Error::format(payload_offset, e.to_string()))?;
    Ok(FieldHeader {
        name,
        units,
        grid,
        payload_offset,
    })
}

fn open(path: &Path) -> Result<(File, u64)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    Ok((file, len))
}

/// Reads only the header, leaving the payload untouched.
pub fn load_field_header(path: impl AsRef<Path>) -> Result<FieldHeader> {
    let (file, _) = open(path.as_ref())?;
    read_header(&mut OffsetReader::new(BufReader::new(file)))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<GridField4D> {
    let path = path.as_ref();
    let (file, file_len) = open(path)?;
    let mut rd = OffsetReader::new(BufReader::new(file));
    let header = read_header(&mut rd)?;

    let expected = header.payload_offset + header.payload_bytes() + 4;
    if file_len != expected {
        return Err(Error::Dimension(format!(
            "shape {:?} needs a {}-byte payload but the file holds {} payload bytes",
            header.grid.shape(),
            header.payload_bytes(),
            file_len.saturating_sub(header.payload_offset + 4)
        )));
    }

    let raw = rd.bytes(header.payload_bytes() as usize, "payload")?;
    let crc_at = rd.position();
    let stored = rd.u32("payload checksum")?;
    let computed = crc32fast::hash(&raw);
    if stored != computed {
        return Err(Error::format(
            crc_at,
            format!("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}"),
        ));
    }

    let mut values = Vec::with_capacity(raw.len() / 4);
    for (i, chunk) in raw.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            let at = header.payload_offset + 4 * i as u64;
            return Err(Error::format(at, format!("non-finite payload value {v}")));
        }
        values.push(v);
    }

    Ok(GridField4D {
        name: header.name,
        units: header.units,
        grid: header.grid,
        values,
    })
}

pub fn store_field(field: &GridField4D, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    field.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);

    w.write_all(FIELD_MAGIC).map_err(io)?;
    put_u32(&mut w, FIELD_VERSION).map_err(io)?;
    put_str(&mut w, &field.name).map_err(io)?;
    put_str(&mut w, &field.units).map_err(io)?;
    for d in field.shape() {
        put_u64(&mut w, d as u64).map_err(io)?;
    }
    let g = &field.grid;
    for axis in [&g.times, &g.pressures, &g.lats, &g.lons] {
        put_f64s(&mut w, axis).map_err(io)?;
    }
    let mut crc = crc32fast::Hasher::new();
    for v in &field.values {
        let b = v.to_le_bytes();
        crc.update(&b);
        w.write_all(&b).map_err(io)?;
    }
    put_u32(&mut w, crc.finalize()).map_err(io)?;
    w.flush().map_err(io)
}
