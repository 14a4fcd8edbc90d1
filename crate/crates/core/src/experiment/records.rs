use std::io::{BufRead, Write};

use super::{ExperimentError, TrialRecord};

pub const TRIALS_HEADER: &str =
    "model_class,variant,train_size,lambda,alpha,trial_index,win_seed,mse";

/// Floats use the shortest representation that parses back to the same bits.
pub fn write_trials_csv<W: Write>(records: &[TrialRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRIALS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.model_class,
            r.variant,
            r.train_size,
            r.lambda,
            r.alpha,
            r.trial_index,
            r.win_seed,
            r.mse
        )?;
    }
    out.flush()
}

pub fn read_trials_csv<R: BufRead>(input: R) -> Result<Vec<TrialRecord>, ExperimentError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| ExperimentError::Csv {
            line: 1,
            message: e.to_string(),
        })?
        .unwrap_or_default();
    if header.trim() != TRIALS_HEADER {
        return Err(ExperimentError::Csv {
            line: 1,
            message: format!("expected header `{TRIALS_HEADER}`"),
        });
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let err = |message: String| ExperimentError::Csv {
            line: line_no,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", f.len())));
        }
        fn field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            s.trim()
                .parse()
                .map_err(|e| format!("bad {name} `{s}`: {e}"))
        }
        let record = (|| -> Result<TrialRecord, String> {
            Ok(TrialRecord {
                model_class: field(f[0], "model_class")?,
                variant: field(f[1], "variant")?,
                train_size: field(f[2], "train_size")?,
                lambda: field(f[3], "lambda")?,
                alpha: field(f[4], "alpha")?,
                trial_index: field(f[5], "trial_index")?,
                win_seed: field(f[6], "win_seed")?,
                mse: field(f[7], "mse")?,
            })
        })()
        .map_err(err)?;
        if !(record.mse.is_finite() && record.mse >= 0.0) {
            return Err(err(format!(
                "mse must be finite and non-negative, got {}",
                record.mse
            )));
        }
        records.push(record);
    }
    Ok(records)
}
