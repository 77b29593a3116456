//! Little-endian primitives with byte-offset tracking for error reports.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub struct OffsetReader<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> OffsetReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, pos: 0 }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn bytes(&mut self, len: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; len];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    pub fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let start = self.pos;
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => {
                Error::format(start, format!("truncated while reading {what}"))
            }
            _ => Error::format(start, format!("read failure in {what}: {e}")),
        })?;
        self.pos += buf.len() as u64;
        Ok(())
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let mut b = [0u8; 8];
        self.fill(&mut b, what)?;
        Ok(f64::from_le_bytes(b))
    }

    /// `u32` length followed by UTF-8 bytes.
    pub fn string(&mut self, what: &str, max_len: u32) -> Result<String> {
        let at = self.pos;
        let len = self.u32(what)?;
        if len > max_len {
            return Err(Error::format(at, format!("{what} length {len} exceeds {max_len}")));
        }
        let raw = self.bytes(len as usize, what)?;
        String::from_utf8(raw).map_err(|_| Error::format(at + 4, format!("{what} is not UTF-8")))
    }

    /// True when the underlying stream has no more bytes.
    pub fn at_end(&mut self) -> Result<bool> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(true),
            Ok(_) => Ok(false),
            Err(e) => Err(Error::format(self.pos, format!("read failure: {e}"))),
        }
    }
}

pub fn put_u32(w: &mut impl Write, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn put_u64(w: &mut impl Write, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub fn put_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub fn put_f64s(w: &mut impl Write, vals: &[f64]) -> io::Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
