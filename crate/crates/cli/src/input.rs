//! CSV ingestion. One header row; an outcome column, a censor column and
//! covariate columns. Censor codes: `L`/`lower` (below a detection limit,
//! outcome holds the limit), empty/`none` (observed), `U`/`upper`.

use std::io::{Read, Write};
use std::path::Path;

use cpm_core::{CensorCode, CensoredObservation};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Which columns play which role. `None` means positional defaults: first
/// column outcome, second censor, the rest covariates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnLayout {
    pub outcome: Option<String>,
    pub censor: Option<String>,
    pub covariates: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub header: Vec<String>,
    pub outcome: String,
    pub censor: String,
    pub covariates: Vec<String>,
    pub observations: Vec<CensoredObservation>,
}

pub fn parse_censor_code(raw: &str) -> Option<CensorCode> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "l" | "lower" => Some(CensorCode::BelowDL),
        "" | "none" => Some(CensorCode::Observed),
        "u" | "upper" => Some(CensorCode::AboveDL),
        _ => None,
    }
}

pub fn censor_code_str(code: CensorCode) -> &'static str {
    match code {
        CensorCode::BelowDL => "L",
        CensorCode::Observed => "",
        CensorCode::AboveDL => "U",
    }
}

fn position(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::MissingColumn(name.to_string()))
}

pub fn read_csv(path: &Path, layout: &ColumnLayout) -> Result<InputTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv_from(file, layout)
}

pub fn read_csv_from<R: Read>(reader: R, layout: &ColumnLayout) -> Result<InputTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(CliError::Parse {
            line: 1,
            column: String::new(),
            message: "need at least an outcome and a censor column".into(),
        });
    }
    let outcome = layout.outcome.clone().unwrap_or_else(|| header[0].clone());
    let censor = layout.censor.clone().unwrap_or_else(|| header[1].clone());
    let (yi, ci) = (position(&header, &outcome)?, position(&header, &censor)?);
    let covariates = match &layout.covariates {
        Some(c) => c.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != yi && *i != ci)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let xi: Vec<usize> = covariates.iter().map(|c| position(&header, c)).collect::<Result<_>>()?;

    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: String::new(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| CliError::Parse {
                line,
                column: header[i].clone(),
                message: format!("`{raw}` is not a number"),
            })
        };
        let code = record.get(ci).unwrap_or("");
        let delta = parse_censor_code(code).ok_or_else(|| CliError::UnknownCensorCode {
            line,
            code: code.to_string(),
        })?;
        let z = number(yi)?;
        let x = xi.iter().map(|&i| number(i)).collect::<Result<Vec<f64>>>()?;
        observations.push(CensoredObservation::new(z, delta, x));
    }
    Ok(InputTable {
        header,
        outcome,
        censor,
        covariates,
        observations,
    })
}

/// Writes observations in the format [`read_csv`] accepts, with full
/// round-trip precision.
pub fn write_csv<W: Write>(writer: W, covariates: &[String], observations: &[CensoredObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string(), "censor".to_string()];
    header.extend(covariates.iter().cloned());
    let fail = |e: csv::Error| CliError::io("<csv>", e);
    w.write_record(&header).map_err(fail)?;
    for o in observations {
        let mut row = vec![o.z.to_string(), censor_code_str(o.delta).to_string()];
        row.extend(o.x.iter().map(f64::to_string));
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

/// Rounds uncensored outcomes to `digits` decimals so that near-equal
/// measurements form ties.
pub fn round_outcomes(observations: &mut [CensoredObservation], digits: u32) {
    let scale = 10f64.powi(digits as i32);
    for o in observations.iter_mut().filter(|o| o.delta == CensorCode::Observed) {
        o.z = (o.z * scale).round() / scale;
    }
}
