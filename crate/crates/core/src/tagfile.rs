//! Binary time-tag file format ("PTAG").
//!
//! Layout, all integers little-endian:
//!   bytes 0..4    magic "PTAG"
//!   bytes 4..6    format version (u16)
//!   bytes 6..10   resolution in ps per timestamp unit (u32)
//!   byte  10      channel count (u8)
//!   bytes 11..19  simulation seed (u64)
//!   bytes 19..51  SHA-256 of the resolved configuration
//!   then records: channel (u8) + timestamp (i64), timestamp-sorted.

use std::io::{Read, Write};
use std::path::Path;

use crate::detection::TimeTag;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"PTAG";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 51;
const RECORD_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TagFileHeader {
    pub version: u16,
    pub resolution_ps: u32,
    pub channel_count: u8,
    pub seed: u64,
    pub config_hash: [u8; 32],
}

impl TagFileHeader {
    pub fn new(channel_count: u8, seed: u64, config_hash: [u8; 32]) -> Self {
        TagFileHeader {
            version: FORMAT_VERSION,
            resolution_ps: 1,
            channel_count,
            seed,
            config_hash,
        }
    }
}

/// Serialize header plus records; rejects unsorted input rather than writing
/// a file that would fail its own read-back check.
pub fn write_tags<W: Write>(mut w: W, header: &TagFileHeader, tags: &[TimeTag]) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + tags.len() * RECORD_LEN);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&header.version.to_le_bytes());
    buf.extend_from_slice(&header.resolution_ps.to_le_bytes());
    buf.push(header.channel_count);
    buf.extend_from_slice(&header.seed.to_le_bytes());
    buf.extend_from_slice(&header.config_hash);
    let mut last = i64::MIN;
    for t in tags {
        if t.timestamp_ps < last {
            return Err(Error::data(format!(
                "tags not timestamp-sorted at {} ps",
                t.timestamp_ps
            )));
        }
        last = t.timestamp_ps;
        buf.push(t.channel);
        buf.extend_from_slice(&t.timestamp_ps.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Parse a tag file, verifying magic, version, and timestamp order.
pub fn read_tags<R: Read>(mut r: R) -> Result<(TagFileHeader, Vec<TimeTag>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::data(format!(
            "tag file truncated: {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::data("bad magic, not a PTAG file".to_string()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::data(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let resolution_ps = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let channel_count = bytes[10];
    let seed = u64::from_le_bytes(bytes[11..19].try_into().unwrap());
    let mut config_hash = [0u8; 32];
    config_hash.copy_from_slice(&bytes[19..51]);
    let body = &bytes[HEADER_LEN..];
    if body.len() % RECORD_LEN != 0 {
        return Err(Error::data(format!(
            "record section length {} is not a multiple of {RECORD_LEN}",
            body.len()
        )));
    }
    let mut tags = Vec::with_capacity(body.len() / RECORD_LEN);
    let mut last = i64::MIN;
    for rec in body.chunks_exact(RECORD_LEN) {
        let channel = rec[0];
        let timestamp_ps = i64::from_le_bytes(rec[1..9].try_into().unwrap());
        if timestamp_ps < last {
            return Err(Error::data(format!(
                "tag file not timestamp-sorted at {timestamp_ps} ps"
            )));
        }
        last = timestamp_ps;
        tags.push(TimeTag {
            timestamp_ps,
            channel,
        });
    }
    Ok((
        TagFileHeader {
            version,
            resolution_ps,
            channel_count,
            seed,
            config_hash,
        },
        tags,
    ))
}

/// Write bytes to `path` atomically: temp file in the same directory, then
/// rename over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
            std::process::id()
        )),
        None => Path::new(&format!(".{}.tmp-{}", path.display(), std::process::id())).to_path_buf(),
    };
    let result = (|| -> Result<()> {
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Atomic tag-file write (temp file + rename).
pub fn write_tagfile(path: &Path, header: &TagFileHeader, tags: &[TimeTag]) -> Result<()> {
    let mut buf = Vec::new();
    write_tags(&mut buf, header, tags)?;
    atomic_write(path, &buf)
}

pub fn read_tagfile(path: &Path) -> Result<(TagFileHeader, Vec<TimeTag>)> {
    let f = std::fs::File::open(path)?;
    read_tags(std::io::BufReader::new(f))
}
