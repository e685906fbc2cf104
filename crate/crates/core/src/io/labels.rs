//! Subject metadata CSV.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SubjectRecord;

use super::{create, csv_error, open};

pub const LABELS_HEADER: [&str; 8] = [
    "subject_id",
    "family_id",
    "mother_id",
    "father_id",
    "zygosity",
    "sex",
    "race",
    "age",
];

pub fn read_labels_from(input: impl Read) -> Result<Vec<SubjectRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers().map_err(csv_error)?;
    if headers.iter().ne(LABELS_HEADER) {
        return Err(Error::parse(1, format!("expected header `{}`", LABELS_HEADER.join(","))));
    }
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| row.get(i).unwrap_or("").to_string();
        let subject_id = field(0);
        if subject_id.is_empty() {
            return Err(Error::parse(line, "empty subject_id"));
        }
        if !seen.insert(subject_id.clone()) {
            return Err(Error::DuplicateSubject(subject_id));
        }
        let zygosity = field(4).parse().map_err(|e: String| Error::parse(line, e))?;
        let sex = field(5).parse().map_err(|e: String| Error::parse(line, e))?;
        let age: f64 = field(7)
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid age {:?}", field(7))))?;
        records.push(SubjectRecord {
            subject_id,
            family_id: field(1),
            mother_id: field(2),
            father_id: field(3),
            zygosity,
            sex,
            race: field(6),
            age,
        });
    }
    Ok(records)
}

pub fn read_labels_csv(path: impl AsRef<Path>) -> Result<Vec<SubjectRecord>> {
    read_labels_from(open(path.as_ref())?)
}

pub fn write_labels_to(records: &[SubjectRecord], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LABELS_HEADER)?;
    for r in records {
        w.write_record([
            r.subject_id.as_str(),
            &r.family_id,
            &r.mother_id,
            &r.father_id,
            r.zygosity.as_str(),
            r.sex.as_str(),
            &r.race,
            &r.age.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_labels_csv(records: &[SubjectRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_labels_to(records, create(path)?).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidConfig(format!("{other:?}")),
    })
}
