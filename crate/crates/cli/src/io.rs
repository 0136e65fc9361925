use std::fs;
use std::path::Path;
use std::process::ExitCode;

use lie_gdt::train::TrainConfig;
use lie_gdt::LieError;
use serde::{Deserialize, Serialize};

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input files: exit 2.
    Usage(String),
    /// Numerical failure: exit 1 with an error object on stdout.
    Domain(LieError),
    /// A check ran but did not pass; its report is already printed: exit 1.
    Failed,
}

impl From<LieError> for CliError {
    fn from(e: LieError) -> Self {
        match e {
            LieError::Config(msg) => Self::Usage(msg),
            e => Self::Domain(e),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn report(&self) -> ExitCode {
        match self {
            Self::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Self::Domain(e) => {
                let body = ErrorReport {
                    error: ErrorBody {
                        kind: e.kind(),
                        message: e.to_string(),
                    },
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&body).expect("serialisable")
                );
                ExitCode::from(1)
            }
            Self::Failed => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A matrix file holds nine row-major reals, either flat or as three rows.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Flat([f64; 9]),
    Rows([[f64; 3]; 3]),
}

pub fn read_matrix(path: &Path) -> CliResult<[f64; 9]> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let parsed: MatrixFile = serde_json::from_str(&text).map_err(|_| {
        CliError::Usage(format!(
            "{}: expected a JSON array of nine numbers or three rows of three",
            path.display()
        ))
    })?;
    Ok(match parsed {
        MatrixFile::Flat(v) => v,
        MatrixFile::Rows(r) => std::array::from_fn(|k| r[k / 3][k % 3]),
    })
}

pub fn read_train_config(path: &Path) -> CliResult<TrainConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}
