//! `traceform`: file-based experiments on interval geometries, their energy
//! forms and the associated diffusions.

mod args;
mod commands;
mod output;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use traceform::ErrorKind;

use args::Cli;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const VALIDATION: u8 = 2;
    pub const PRECONDITION: u8 = 3;
    pub const IO: u8 = 4;

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: Self::VALIDATION,
            message: message.into(),
        }
    }

    pub fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: Self::PRECONDITION,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: Self::IO,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn internal(message: String) -> Self {
        Self { code: 1, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<traceform::Error> for CliError {
    fn from(e: traceform::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Validation => Self::VALIDATION,
            ErrorKind::Precondition => Self::PRECONDITION,
            ErrorKind::Io => Self::IO,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Flags that name input files; their values are made absolute in the
/// manifest so a rerun works from any directory.
const PATH_FLAGS: &[&str] = &["--set", "--u", "--v", "--phi", "--speed", "--path", "--manifest"];
/// Flags that do not change any output.
const RUN_FLAGS: &[&str] = &["--out", "--workers"];

/// The arguments worth recording: run flags dropped, input paths absolute.
fn recorded_argv(raw: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let arg = &raw[i];
        let (flag, inline) = match arg.split_once('=') {
            Some((f, v)) if f.starts_with("--") => (f, Some(v.to_string())),
            _ => (arg.as_str(), None),
        };
        if RUN_FLAGS.contains(&flag) {
            i += if inline.is_some() { 1 } else { 2 };
            continue;
        }
        if PATH_FLAGS.contains(&flag) {
            let value = match inline {
                Some(v) => v,
                None => {
                    i += 1;
                    raw.get(i).cloned().unwrap_or_default()
                }
            };
            let abs = std::fs::canonicalize(&value)
                .map(|p| p.display().to_string())
                .unwrap_or(value);
            out.push(flag.to_string());
            out.push(abs);
        } else {
            out.push(arg.clone());
        }
        i += 1;
    }
    out
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&raw);
    let argv = recorded_argv(&raw[1..]);
    match commands::run(cli, argv) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn run_flags_are_not_recorded() {
        let argv = recorded_argv(&s(&["--out", "x", "feller", "--workers=3", "--d", "1"]));
        assert_eq!(argv, s(&["feller", "--d", "1"]));
    }

    #[test]
    fn missing_paths_are_kept_verbatim() {
        let argv = recorded_argv(&s(&["trace", "measure", "--set=/no/such/file.json"]));
        assert_eq!(argv, s(&["trace", "measure", "--set", "/no/such/file.json"]));
    }
}
