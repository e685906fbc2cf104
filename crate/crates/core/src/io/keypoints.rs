//! Canonical keypoint text format and a column-offset importer for legacy rows.
//!
//! ```text
//! SKJ-KEYPOINTS 1
//! subject: <id>
//! descriptor_dim: <D>
//! count: <n>
//! x y z sigma d1 ... dD      (n lines)
//! ```
//!
//! Values are written in shortest round-trip decimal form, so reading a file
//! back reproduces every stored value exactly.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Keypoint, KeypointSet, DEFAULT_DESCRIPTOR_DIM};

use super::{create, read_string};

const MAGIC: &str = "SKJ-KEYPOINTS 1";

pub fn render_keypoints(set: &KeypointSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "subject: {}", set.subject_id);
    let _ = writeln!(out, "descriptor_dim: {}", set.descriptor_dim);
    let _ = writeln!(out, "count: {}", set.len());
    for kp in &set.keypoints {
        let [x, y, z] = kp.location;
        let _ = write!(out, "{x} {y} {z} {}", kp.scale);
        for d in &kp.descriptor {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
    }
    out
}

pub fn write_keypoint_file(set: &KeypointSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_all(render_keypoints(set).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| Error::parse(0, format!("missing `{key}` header")))?;
    let value = line
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(':'))
        .ok_or_else(|| Error::parse(no, format!("expected `{key}: ...`")))?;
    Ok((no, value.trim()))
}

fn number<T: std::str::FromStr>(no: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(no, format!("invalid {what} {token:?}")))
}

/// Parses a canonical keypoint file held in memory.
pub fn parse_keypoints(text: &str) -> Result<KeypointSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        Some((no, _)) => return Err(Error::parse(no, format!("expected `{MAGIC}`"))),
        None => return Err(Error::parse(1, "empty file")),
    }
    let (_, subject) = header(&mut lines, "subject")?;
    let (no, dim) = header(&mut lines, "descriptor_dim")?;
    let dim: usize = number(no, dim, "descriptor_dim")?;
    let (no, count) = header(&mut lines, "count")?;
    let count: usize = number(no, count, "count")?;

    let mut keypoints = Vec::with_capacity(count);
    let mut trailing_blank = None;
    for (no, line) in lines {
        if line.trim().is_empty() {
            trailing_blank.get_or_insert(no);
            continue;
        }
        if let Some(blank) = trailing_blank {
            return Err(Error::parse(blank, "blank line inside keypoint data"));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 4 {
            return Err(Error::parse(no, "expected `x y z sigma d1 ... dD`"));
        }
        if tokens.len() - 4 != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: tokens.len() - 4,
            });
        }
        let location = [
            number(no, tokens[0], "x")?,
            number(no, tokens[1], "y")?,
            number(no, tokens[2], "z")?,
        ];
        let scale = number(no, tokens[3], "scale")?;
        let descriptor = tokens[4..]
            .iter()
            .map(|t| number(no, t, "descriptor value"))
            .collect::<Result<Vec<f32>>>()?;
        keypoints.push(Keypoint::new(location, scale, descriptor));
    }
    if keypoints.len() != count {
        return Err(Error::CountMismatch {
            declared: count,
            actual: keypoints.len(),
        });
    }
    KeypointSet::new(subject, dim, keypoints)
}

pub fn read_keypoint_file(path: impl AsRef<Path>) -> Result<KeypointSet> {
    parse_keypoints(&read_string(path.as_ref())?)
}

/// Column offsets of a whitespace-separated legacy keypoint row.
///
/// The default matches rows of `x y z scale`, nine orientation values, one
/// extra column and then the descriptor. Columns outside the mapped ranges
/// are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegacyLayout {
    pub location: usize,
    pub scale: usize,
    pub descriptor: usize,
    pub descriptor_dim: usize,
}

impl Default for LegacyLayout {
    fn default() -> Self {
        LegacyLayout {
            location: 0,
            scale: 3,
            descriptor: 14,
            descriptor_dim: DEFAULT_DESCRIPTOR_DIM,
        }
    }
}

/// Imports legacy rows; lines that are empty or start with `#`, or that do not
/// begin with a number (header lines), are skipped.
pub fn read_legacy_keypoints(
    text: &str,
    subject_id: &str,
    layout: LegacyLayout,
) -> Result<KeypointSet> {
    let needed = (layout.location + 3)
        .max(layout.scale + 1)
        .max(layout.descriptor + layout.descriptor_dim);
    let mut keypoints = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0].parse::<f64>().is_err() {
            continue;
        }
        if tokens.len() < needed {
            return Err(Error::parse(
                no,
                format!("row has {} columns, layout needs {needed}", tokens.len()),
            ));
        }
        let location = [
            number(no, tokens[layout.location], "x")?,
            number(no, tokens[layout.location + 1], "y")?,
            number(no, tokens[layout.location + 2], "z")?,
        ];
        let scale = number(no, tokens[layout.scale], "scale")?;
        let descriptor = tokens[layout.descriptor..layout.descriptor + layout.descriptor_dim]
            .iter()
            .map(|t| number(no, t, "descriptor value"))
            .collect::<Result<Vec<f32>>>()?;
        keypoints.push(Keypoint::new(location, scale, descriptor));
    }
    KeypointSet::new(subject_id, layout.descriptor_dim, keypoints)
}
