//! Timestamp file formats.
//!
//! Binary layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PHTS"
//! 4       2     version (currently 1)
//! 6       2     channel id
//! 8       8     event count N
//! 16      8*N   u64 timestamps, picoseconds
//! ```
//!
//! The CSV form holds one decimal picosecond timestamp per line. Blank lines
//! and lines starting with `#` are ignored.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::stream::EventStream;

pub const MAGIC: &[u8; 4] = b"PHTS";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

/// Timestamps read from a file, verified to be nondecreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampFile {
    /// Channel id from the binary header; `None` for CSV input.
    pub channel: Option<u16>,
    pub times: Vec<u64>,
}

impl TimestampFile {
    pub fn last_time(&self) -> Option<u64> {
        self.times.last().copied()
    }
}

pub fn write_binary<W: Write>(w: &mut W, stream: &EventStream, channel: u16) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    header[6..8].copy_from_slice(&channel.to_le_bytes());
    header[8..16].copy_from_slice(&(stream.len() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(stream.len() * 8);
    for t in stream.times() {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<TimestampFile> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("file shorter than the 16-byte header".into()))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected \"PHTS\"".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let channel = u16::from_le_bytes([header[6], header[7]]);
    let count = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() as u64 != count.saturating_mul(8) {
        return Err(Error::Format(format!(
            "header announces {count} timestamps but body holds {} bytes",
            body.len()
        )));
    }
    let times: Vec<u64> = body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    check_sorted(&times)?;
    Ok(TimestampFile {
        channel: Some(channel),
        times,
    })
}

pub fn write_csv<W: Write>(w: &mut W, stream: &EventStream) -> Result<()> {
    let mut out = String::with_capacity(stream.len() * 14);
    for t in stream.times() {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<TimestampFile> {
    let mut times = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        let t: u64 = field.parse().map_err(|_| {
            Error::Format(format!(
                "line {}: expected integer picoseconds, got {field:?}",
                lineno + 1
            ))
        })?;
        times.push(t);
    }
    check_sorted(&times)?;
    Ok(TimestampFile { channel: None, times })
}

/// Read a timestamp file, choosing the format from its leading bytes.
pub fn read_timestamp_file(path: &Path) -> Result<TimestampFile> {
    let bytes = fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    let parsed = if bytes.starts_with(MAGIC) {
        read_binary(&mut bytes.as_slice())
    } else {
        read_csv(bytes.as_slice())
    };
    parsed.map_err(|e| e.context(path.display().to_string()))
}

fn check_sorted(times: &[u64]) -> Result<()> {
    match times.windows(2).position(|w| w[0] > w[1]) {
        Some(i) => Err(Error::Unsorted {
            index: i + 1,
            prev: times[i],
            next: times[i + 1],
        }),
        None => Ok(()),
    }
}
