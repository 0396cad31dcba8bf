//! Survival data CSV files.
//!
//! Layout: a header row, then `subject,replicate,time,status` followed by any
//! number of numeric covariate columns. `status` is 1 for an observed event
//! and 0 for right censoring; for censored rows `time` holds the censoring time.

use std::io::{Read, Write};
use std::path::Path;

use pwexp::model::{SurvivalDataset, SurvivalRecord};

const KIDNEY_CSV: &str = include_str!("../data/kidney.csv");
const FIXED_COLUMNS: [&str; 4] = ["subject", "replicate", "time", "status"];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("header must start with subject,replicate,time,status; found {0:?}")]
    Header(Vec<String>),
    #[error(transparent)]
    Dataset(#[from] pwexp::model::ModelError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The catheter infection data: 38 patients, two insertions each, with sex
/// (1 = female) and age (years) at each insertion. Disease type is not carried.
pub fn kidney() -> SurvivalDataset {
    read_dataset(KIDNEY_CSV.as_bytes()).expect("bundled kidney data is valid")
}

pub fn kidney_csv() -> &'static str {
    KIDNEY_CSV
}

pub fn read_dataset_file(path: &Path) -> Result<SurvivalDataset, DataError> {
    read_dataset(std::fs::File::open(path)?)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<SurvivalDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let fixed_ok = header.len() >= FIXED_COLUMNS.len()
        && header
            .iter()
            .zip(FIXED_COLUMNS)
            .all(|(h, want)| h.eq_ignore_ascii_case(want));
    if !fixed_ok {
        return Err(DataError::Header(header));
    }
    let covariate_names = header[FIXED_COLUMNS.len()..].to_vec();

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| DataError::Row { line, message };
        if row.len() != header.len() {
            return Err(fail(format!(
                "expected {} fields, found {}",
                header.len(),
                row.len()
            )));
        }
        let int = |i: usize| -> Result<usize, DataError> {
            row[i].parse().map_err(|_| {
                fail(format!(
                    "{} must be a positive integer, got {:?}",
                    header[i], &row[i]
                ))
            })
        };
        let subject = int(0)?;
        let replicate = int(1)?;
        let event = match &row[3] {
            "1" => true,
            "0" => false,
            other => return Err(fail(format!("status must be 0 or 1, got {other:?}"))),
        };
        if row[2].is_empty() {
            return Err(fail(if event {
                "event row (status 1) has no time".into()
            } else {
                "censored row (status 0) needs its censoring time in the time column".into()
            }));
        }
        let time: f64 = row[2]
            .parse()
            .map_err(|_| fail(format!("time must be a number, got {:?}", &row[2])))?;
        if time <= 0.0 || !time.is_finite() {
            return Err(fail(format!(
                "time must be positive and finite, got {time}"
            )));
        }
        let covariates = (FIXED_COLUMNS.len()..row.len())
            .map(|i| {
                row[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        fail(format!(
                            "covariate {} must be a finite number, got {:?}",
                            header[i], &row[i]
                        ))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        records.push(SurvivalRecord {
            subject,
            replicate,
            time,
            event,
            covariates,
        });
    }
    Ok(SurvivalDataset::new(covariate_names, records)?)
}

pub fn write_dataset<W: Write>(data: &SurvivalDataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = FIXED_COLUMNS.to_vec();
    header.extend(data.covariate_names().iter().map(String::as_str));
    w.write_record(&header)?;
    for r in data.records() {
        let mut row = vec![
            r.subject.to_string(),
            r.replicate.to_string(),
            r.time.to_string(),
            u8::from(r.event).to_string(),
        ];
        row.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
