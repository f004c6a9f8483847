//! Deterministic text emission: float formatting, metadata blocks and files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Shortest round-trip decimal, switching to exponent form outside `[1e-5, 1e16)`.
/// Negative zero prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    let x = x + 0.0;
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// `x` rounded to six significant digits, then printed as [`fmt_f64`].
pub fn fmt_sig6(x: f64) -> String {
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    fmt_f64(rounded)
}

/// Every resolved input, keyed by its dotted config path, echoed into each output.
pub type Metadata = BTreeMap<String, String>;

/// `# key = value` lines.
pub fn comment_block(meta: &Metadata) -> String {
    meta.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
}

/// A CSV table with a metadata preamble.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(meta: &Metadata, header: &str) -> Self {
        Self {
            text: format!("{}{header}\n", comment_block(meta)),
        }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        let line: Vec<String> = fields.into_iter().collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Text annotation safe to put after a `#` in a CSV row.
pub fn annotation(message: &str) -> String {
    message.replace([',', '\n', '\r'], ";")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Where command outputs go.
#[derive(Debug, Clone)]
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn dir(&self) -> &Path {
        self.dir.as_deref().unwrap_or(Path::new("."))
    }

    /// Always written to a file, in the output directory or the working directory.
    pub fn file(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let dir = self.dir();
        let io = |path: &Path, source| CliError::Io { path: path.to_owned(), source };
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| io(&path, e))?;
        Ok(path)
    }

    /// JSON report: a file when an output directory was given, stdout otherwise.
    pub fn report(&self, name: &str, json: &str) -> Result<Option<PathBuf>, CliError> {
        if self.dir.is_some() {
            self.file(name, json).map(Some)
        } else {
            print!("{json}");
            Ok(None)
        }
    }
}
