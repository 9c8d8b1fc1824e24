use std::io::Write;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub command: &'static str,
    /// Files read, hashed into the input digest.
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// key=value result lines.
    pub values: Vec<(String, String)>,
    /// CSV to print on stdout when no output file was given.
    pub stdout_csv: Option<String>,
    /// Free text appended after the values.
    pub text: Option<String>,
}

impl Outcome {
    pub fn new(command: &'static str) -> Self {
        Outcome {
            command,
            ..Outcome::default()
        }
    }

    pub fn value(&mut self, key: &str, v: impl ToString) {
        self.values.push((key.to_string(), v.to_string()));
    }
}

/// SHA-256 over the argument vector and the bytes of every input file.
pub fn input_digest(argv: &[String], inputs: &[PathBuf]) -> String {
    let mut h = Sha256::new();
    for a in argv {
        h.update(a.as_bytes());
        h.update([0u8]);
    }
    for p in inputs {
        if let Ok(bytes) = std::fs::read(p) {
            h.update(&bytes);
        }
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// Writes results: CSV on stdout when requested, key=value lines on
/// stdout otherwise (stderr when stdout carries CSV). Warnings always go
/// to stderr as well.
pub fn emit(outcome: &Outcome, argv: &[String], with_report: bool) {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let info: &mut dyn Write = if let Some(csv) = &outcome.stdout_csv {
        let _ = out.write_all(csv.as_bytes());
        &mut err
    } else {
        &mut out
    };
    for (k, v) in &outcome.values {
        let _ = writeln!(info, "{k}={v}");
    }
    if let Some(text) = &outcome.text {
        let _ = write!(info, "{text}");
    }
    if with_report {
        let _ = writeln!(info, "command={}", outcome.command);
        let _ = writeln!(info, "input_digest={}", input_digest(argv, &outcome.inputs));
        for p in &outcome.outputs {
            let _ = writeln!(info, "output={}", p.display());
        }
        for w in &outcome.warnings {
            let _ = writeln!(info, "warning={w}");
        }
    }
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
}
