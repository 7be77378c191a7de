//! Binary time-tag files.
//!
//! Layout: the 8-byte magic `HOMTAG1\0`, then 9-byte little-endian records
//! `(u8 channel, u64 time_ps)` in non-decreasing time order. Channel 0 is
//! output port I3, channel 1 is I4. Run metadata lives in a JSON sidecar
//! next to the file, `<file>.meta.json`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HOMTAG1\0";
pub const RECORD_LEN: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub duration_s: f64,
    pub seed: u64,
    pub config_hash: String,
    #[serde(default)]
    pub phi_deg: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeTags {
    pub i3: Vec<u64>,
    pub i4: Vec<u64>,
}

impl TimeTags {
    pub fn len(&self) -> usize {
        self.i3.len() + self.i4.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Merged record sequence, I3 first on equal times.
fn merged(i3: &[u64], i4: &[u64]) -> Result<Vec<(u8, u64)>> {
    for (name, v) in [("I3", i3), ("I4", i4)] {
        if v.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input(format!("{name} times are not sorted")));
        }
    }
    let mut out = Vec::with_capacity(i3.len() + i4.len());
    let (mut a, mut b) = (0, 0);
    while a < i3.len() || b < i4.len() {
        if b >= i4.len() || (a < i3.len() && i3[a] <= i4[b]) {
            out.push((0, i3[a]));
            a += 1;
        } else {
            out.push((1, i4[b]));
            b += 1;
        }
    }
    Ok(out)
}

pub fn encode(tags: &TimeTags) -> Result<Vec<u8>> {
    let records = merged(&tags.i3, &tags.i4)?;
    let mut buf = Vec::with_capacity(MAGIC.len() + RECORD_LEN * records.len());
    buf.extend_from_slice(MAGIC);
    for (ch, t) in records {
        buf.push(ch);
        buf.extend_from_slice(&t.to_le_bytes());
    }
    Ok(buf)
}

pub fn decode(bytes: &[u8]) -> Result<TimeTags> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "missing HOMTAG1 magic".into(),
        });
    }
    let body = &bytes[MAGIC.len()..];
    let full = body.len() / RECORD_LEN * RECORD_LEN;
    if full != body.len() {
        return Err(Error::Format {
            offset: (MAGIC.len() + full) as u64,
            message: format!("truncated record: {} trailing bytes", body.len() - full),
        });
    }
    let mut tags = TimeTags::default();
    let mut last = 0u64;
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let offset = (MAGIC.len() + i * RECORD_LEN) as u64;
        let t = u64::from_le_bytes(rec[1..].try_into().unwrap());
        if t < last {
            return Err(Error::Format {
                offset,
                message: format!("time goes backwards ({t} ps after {last} ps)"),
            });
        }
        last = t;
        match rec[0] {
            0 => tags.i3.push(t),
            1 => tags.i4.push(t),
            c => {
                return Err(Error::Format {
                    offset,
                    message: format!("unknown channel {c}"),
                })
            }
        }
    }
    Ok(tags)
}

pub fn write_timetags(path: &Path, tags: &TimeTags, meta: Option<&RunMetadata>) -> Result<()> {
    let bytes = encode(tags)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    if let Some(meta) = meta {
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    }
    Ok(())
}

/// Reads a file and its sidecar, if present.
pub fn read_timetags(path: &Path) -> Result<(TimeTags, Option<RunMetadata>)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let tags = decode(&bytes)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(side)?)?)
    } else {
        None
    };
    Ok((tags, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_body_gives_empty_streams() {
        let tags = decode(MAGIC).unwrap();
        assert!(tags.i3.is_empty() && tags.i4.is_empty());
    }

    #[test]
    fn two_records() {
        let mut bytes = MAGIC.to_vec();
        bytes.push(0);
        bytes.extend_from_slice(&100u64.to_le_bytes());
        bytes.push(1);
        bytes.extend_from_slice(&200u64.to_le_bytes());
        let tags = decode(&bytes).unwrap();
        assert_eq!(tags.i3, vec![100]);
        assert_eq!(tags.i4, vec![200]);
    }

    #[test]
    fn format_errors_carry_offsets() {
        match decode(b"HOMTAG2\0") {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut bytes = encode(&TimeTags { i3: vec![5], i4: vec![] }).unwrap();
        bytes.extend_from_slice(&[1, 2, 3]);
        match decode(&bytes) {
            Err(Error::Format { offset: 17, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut bytes = MAGIC.to_vec();
        for t in [50u64, 40] {
            bytes.push(0);
            bytes.extend_from_slice(&t.to_le_bytes());
        }
        match decode(&bytes) {
            Err(Error::Format { offset: 17, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut bytes = MAGIC.to_vec();
        bytes.push(7);
        bytes.extend_from_slice(&1u64.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::Format { offset: 8, .. })));
    }

    #[test]
    fn file_and_sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.htag");
        let tags = TimeTags {
            i3: vec![1, 5, 5, 9],
            i4: vec![0, 5, 12],
        };
        let meta = RunMetadata {
            duration_s: 1.5,
            seed: 7,
            config_hash: "abcdef012345".into(),
            phi_deg: Some(90.0),
        };
        write_timetags(&path, &tags, Some(&meta)).unwrap();
        let (back, m) = read_timetags(&path).unwrap();
        assert_eq!(back, tags);
        assert_eq!(m.unwrap(), meta);
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(mut a in proptest::collection::vec(0u64..1_000_000, 0..200),
                                   mut b in proptest::collection::vec(0u64..1_000_000, 0..200)) {
            a.sort_unstable();
            b.sort_unstable();
            let tags = TimeTags { i3: a, i4: b };
            let bytes = encode(&tags).unwrap();
            prop_assert_eq!(bytes.len(), 8 + 9 * tags.len());
            prop_assert_eq!(decode(&bytes).unwrap(), tags);
        }
    }
}
