//! Distance matrix CSV in long (`subject_a,subject_b,distance`, one row per
//! pair `i < j`) or full (`subject_id,<ids...>` grid) layout.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::DistanceMatrix;

use super::{create, csv_error, format_distance, open, parse_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceFormat {
    Full,
    #[default]
    Long,
}

impl FromStr for DistanceFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(DistanceFormat::Full),
            "long" => Ok(DistanceFormat::Long),
            other => Err(format!("unknown distance format {other:?} (expected full, long)")),
        }
    }
}

impl fmt::Display for DistanceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceFormat::Full => "full",
            DistanceFormat::Long => "long",
        })
    }
}

pub fn write_distances_to(m: &DistanceMatrix, format: DistanceFormat, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ids = m.subject_ids();
    match format {
        DistanceFormat::Long => {
            w.write_record(["subject_a", "subject_b", "distance"])?;
            for (i, j, d) in m.pairs() {
                w.write_record([ids[i].as_str(), &ids[j], &format_distance(d)])?;
            }
        }
        DistanceFormat::Full => {
            w.write_record(std::iter::once("subject_id").chain(ids.iter().map(String::as_str)))?;
            for (i, id) in ids.iter().enumerate() {
                let row: Vec<String> = m.row(i).iter().map(|&d| format_distance(d)).collect();
                w.write_record(std::iter::once(id.clone()).chain(row))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_distances(m: &DistanceMatrix, path: impl AsRef<Path>, format: DistanceFormat) -> Result<()> {
    let path = path.as_ref();
    write_distances_to(m, format, create(path)?).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidConfig(format!("{other:?}")),
    })
}

fn value(line: usize, token: &str) -> Result<f64> {
    parse_distance(token).ok_or_else(|| Error::parse(line, format!("invalid distance {token:?}")))
}

/// Reads either layout, detected from the header row.
pub fn read_distances_from(input: impl Read) -> Result<DistanceMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    match headers.get(0) {
        Some("subject_a") => {
            if headers.iter().ne(["subject_a", "subject_b", "distance"]) {
                return Err(Error::parse(1, "expected header `subject_a,subject_b,distance`"));
            }
            let mut ids: Vec<String> = Vec::new();
            let mut pos: HashMap<String, usize> = HashMap::new();
            let mut rows = Vec::new();
            for row in reader.records() {
                let row = row.map_err(csv_error)?;
                let line = row.position().map_or(0, |p| p.line() as usize);
                if row.len() != 3 {
                    return Err(Error::parse(line, "expected 3 fields"));
                }
                let mut index = |id: &str| {
                    *pos.entry(id.to_string()).or_insert_with(|| {
                        ids.push(id.to_string());
                        ids.len() - 1
                    })
                };
                let a = index(&row[0]);
                let b = index(&row[1]);
                if a == b {
                    return Err(Error::parse(line, "self pair"));
                }
                rows.push((line, a, b, value(line, &row[2])?));
            }
            let n = ids.len();
            let mut values = vec![f64::NAN; n * n];
            for i in 0..n {
                values[i * n + i] = 0.0;
            }
            for (line, a, b, d) in rows {
                if !values[a * n + b].is_nan() {
                    return Err(Error::parse(line, "duplicate pair"));
                }
                values[a * n + b] = d;
                values[b * n + a] = d;
            }
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::CountMismatch {
                    declared: n * (n - 1) / 2,
                    actual: values.iter().filter(|v| !v.is_nan()).count().saturating_sub(n) / 2,
                });
            }
            DistanceMatrix::new(ids, values)
        }
        Some("subject_id") => {
            let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
            let n = ids.len();
            let mut values = Vec::with_capacity(n * n);
            let mut count = 0;
            for row in reader.records() {
                let row = row.map_err(csv_error)?;
                let line = row.position().map_or(0, |p| p.line() as usize);
                if count >= n || row[0] != ids[count] {
                    return Err(Error::parse(line, "row ids must repeat the header order"));
                }
                if row.len() != n + 1 {
                    return Err(Error::parse(line, format!("expected {} fields", n + 1)));
                }
                for t in row.iter().skip(1) {
                    values.push(value(line, t)?);
                }
                count += 1;
            }
            if count != n {
                return Err(Error::CountMismatch {
                    declared: n,
                    actual: count,
                });
            }
            DistanceMatrix::new(ids, values)
        }
        _ => Err(Error::parse(1, "unrecognized distance file header")),
    }
}

pub fn read_distances(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    read_distances_from(open(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> DistanceMatrix {
        let ids = vec!["a".into(), "b".into(), "c".into()];
        DistanceMatrix::from_upper(ids, |i, j| if (i, j) == (0, 2) { f64::INFINITY } else { 0.1 * (i + j) as f64 })
            .unwrap()
    }

    #[test]
    fn long_layout_and_inf_token() {
        let mut out = Vec::new();
        write_distances_to(&sample(), DistanceFormat::Long, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 3);
        assert!(text.contains("a,c,inf\n"));
        let back = read_distances_from(text.as_bytes()).unwrap();
        assert_eq!(back, sample());
        assert_eq!(back.get(2, 0), f64::INFINITY);
    }

    #[test]
    fn full_layout_round_trip() {
        let mut out = Vec::new();
        write_distances_to(&sample(), DistanceFormat::Full, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("subject_id,a,b,c\na,0,"));
        assert_eq!(read_distances_from(text.as_bytes()).unwrap(), sample());
    }

    #[test]
    fn rejects_incomplete_or_asymmetric() {
        let missing = "subject_a,subject_b,distance\na,b,1\na,c,2\n";
        assert!(matches!(read_distances_from(missing.as_bytes()), Err(Error::CountMismatch { .. })));
        let asym = "subject_id,a,b\na,0,1\nb,2,0\n";
        assert!(read_distances_from(asym.as_bytes()).is_err());
        let bad = "subject_a,subject_b,distance\na,b,near\n";
        assert!(matches!(read_distances_from(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn round_trips_both_layouts(n in 2usize..8, seed in prop::collection::vec(0.0f64..50.0, 28)) {
            let ids = (0..n).map(|i| format!("S{i}")).collect();
            let m = DistanceMatrix::from_upper(ids, |i, j| {
                let v = seed[(i * 7 + j) % seed.len()];
                if v > 45.0 { f64::INFINITY } else { v }
            }).unwrap();
            for format in [DistanceFormat::Long, DistanceFormat::Full] {
                let mut out = Vec::new();
                write_distances_to(&m, format, &mut out).unwrap();
                prop_assert_eq!(&read_distances_from(&out[..]).unwrap(), &m);
            }
        }
    }
}
