use std::fmt;
use std::fs;
use std::path::Path;

use peakgain_core::model::{load_system, LtiSystem, SystemRecord};
use peakgain_core::Error;
use serde::Serialize;

/// Exit code 2.
pub const EXIT_INPUT: i32 = 2;
/// Exit code 3.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension { .. }
            | Error::Unstable { .. }
            | Error::LiftingNeedsTwoStates { .. }
            | Error::AlphaOutOfRange { .. }
            | Error::NotPlanar { .. }
            | Error::InvalidArgument { .. } => CliError::Input(e.to_string()),
            Error::Linalg(_) | Error::SweepInfeasible { .. } | Error::TailNotShrinking { .. } => {
                CliError::Numeric(e.to_string())
            }
        }
    }
}

/// A system file together with the name it reports under.
pub struct LoadedSystem {
    pub name: String,
    pub sys: LtiSystem,
}

pub fn read_system(path: &Path) -> Result<LoadedSystem, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let record: SystemRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let sys = load_system(&record).map_err(|e| match CliError::from(e) {
        CliError::Input(m) | CliError::Numeric(m) => CliError::Input(format!("{}: {m}", path.display())),
    })?;
    let name = record.name.unwrap_or_else(|| {
        path.file_stem()
            .map_or_else(|| "system".into(), |s| s.to_string_lossy().into_owned())
    });
    Ok(LoadedSystem { name, sys })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serializing report: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes `rows` under `header` to `path`, or to standard output if absent.
pub fn write_csv(path: Option<&Path>, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let sink: Box<dyn std::io::Write> = match path {
        Some(p) => Box::new(
            fs::File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io_err = |e: csv::Error| CliError::Input(format!("writing csv: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.12e}"))).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing csv: {e}")))
}
