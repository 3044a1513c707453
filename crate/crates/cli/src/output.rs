use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use ddqmc::{Observable, SimRecord};
use serde::Serialize;

use crate::error::CliError;

/// Time-series writer. Each record goes out as one complete line, so an
/// interrupted run leaves a parseable prefix.
pub struct CsvWriter {
    file: File,
    path: PathBuf,
    line: String,
}

pub fn header(observables: &[Observable]) -> String {
    let mut h = String::from("step,time,shift,n_diag,n_total");
    for o in observables {
        write!(h, ",{o}_num_re,{o}_num_im,{o}_den").unwrap();
    }
    h
}

impl CsvWriter {
    pub fn create(path: &Path, observables: &[Observable]) -> Result<Self, CliError> {
        let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
        writeln!(file, "{}", header(observables)).map_err(|e| CliError::io(path, e))?;
        Ok(CsvWriter {
            file,
            path: path.to_path_buf(),
            line: String::new(),
        })
    }

    pub fn write(&mut self, r: &SimRecord<f64>) -> Result<(), CliError> {
        self.line.clear();
        write!(self.line, "{},{},{},{},{}", r.step, r.time, r.shift, r.n_diag, r.n_total).unwrap();
        for m in &r.observables {
            write!(self.line, ",{},{},{}", m.num_re, m.num_im, m.den).unwrap();
        }
        self.line.push('\n');
        self.file
            .write_all(self.line.as_bytes())
            .map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
