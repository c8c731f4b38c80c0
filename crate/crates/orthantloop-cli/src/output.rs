//! Output records and their text / CSV / jsonlines encodings.
//!
//! CSV columns per record kind (one header per run):
//!
//! | kind        | columns                                                   |
//! |-------------|-----------------------------------------------------------|
//! | compute     | N,n,nu,value_re,value_im,abs_error,method                 |
//! | coefficient | series,d_base,k_shift,order,value_re,value_im,abs_error   |
//! | check       | check,status,detail                                       |
//! | oracle      | oracle,value_re,value_im,stderr,samples                   |
//!
//! Floats are written with 17 significant digits.

use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Text,
    Csv,
    Jsonlines,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skip => "skip",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Compute {
        #[serde(rename = "N")]
        legs: usize,
        n: f64,
        nu: u32,
        value_re: f64,
        value_im: f64,
        abs_error: f64,
        method: String,
    },
    Coefficient {
        series: String,
        d_base: i32,
        k_shift: f64,
        order: usize,
        value_re: f64,
        value_im: f64,
        abs_error: f64,
    },
    Check {
        check: String,
        status: Status,
        detail: String,
    },
    Oracle {
        oracle: String,
        value_re: f64,
        value_im: f64,
        stderr: f64,
        samples: u64,
    },
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Record {
    pub fn csv_header(&self) -> &'static str {
        match self {
            Record::Compute { .. } => "N,n,nu,value_re,value_im,abs_error,method",
            Record::Coefficient { .. } => "series,d_base,k_shift,order,value_re,value_im,abs_error",
            Record::Check { .. } => "check,status,detail",
            Record::Oracle { .. } => "oracle,value_re,value_im,stderr,samples",
        }
    }

    pub fn csv_row(&self) -> String {
        let f = fmt_f64;
        match self {
            Record::Compute {
                legs,
                n,
                nu,
                value_re,
                value_im,
                abs_error,
                method,
            } => format!(
                "{legs},{},{nu},{},{},{},{method}",
                f(*n),
                f(*value_re),
                f(*value_im),
                f(*abs_error)
            ),
            Record::Coefficient {
                series,
                d_base,
                k_shift,
                order,
                value_re,
                value_im,
                abs_error,
            } => format!(
                "{},{d_base},{},{order},{},{},{}",
                csv_field(series),
                f(*k_shift),
                f(*value_re),
                f(*value_im),
                f(*abs_error)
            ),
            Record::Check { check, status, detail } => {
                format!("{},{},{}", csv_field(check), status.as_str(), csv_field(detail))
            }
            Record::Oracle {
                oracle,
                value_re,
                value_im,
                stderr,
                samples,
            } => format!(
                "{},{},{},{},{samples}",
                csv_field(oracle),
                f(*value_re),
                f(*value_im),
                f(*stderr)
            ),
        }
    }

    pub fn text(&self) -> String {
        match self {
            Record::Compute {
                legs,
                n,
                nu,
                value_re,
                value_im,
                abs_error,
                method,
            } => format!(
                "J^{legs}(n={n}; nu={nu}) = {value_re:.12e} {:+.12e}i  +- {abs_error:.2e}  [{method}]",
                value_im
            ),
            Record::Coefficient {
                series,
                order,
                value_re,
                value_im,
                abs_error,
                ..
            } => format!("{series} eps^{order}: {value_re:.12e} {value_im:+.12e}i  +- {abs_error:.2e}"),
            Record::Check { check, status, detail } => {
                format!("{:<4} {check}: {detail}", status.as_str().to_uppercase())
            }
            Record::Oracle {
                oracle,
                value_re,
                value_im,
                stderr,
                samples,
            } => format!("{oracle}: {value_re:.12e} {value_im:+.12e}i  +- {stderr:.2e}  ({samples} samples)"),
        }
    }
}

/// Writes records in the chosen format. A CSV header is emitted whenever the
/// record kind changes.
pub fn write_records<W: Write>(out: &mut W, format: Format, records: &[Record]) -> std::io::Result<()> {
    let mut last_header = None;
    for r in records {
        match format {
            Format::Text => writeln!(out, "{}", r.text())?,
            Format::Csv => {
                let h = r.csv_header();
                if last_header != Some(h) {
                    writeln!(out, "{h}")?;
                    last_header = Some(h);
                }
                writeln!(out, "{}", r.csv_row())?;
            }
            Format::Jsonlines => {
                let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}
