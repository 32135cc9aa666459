use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Environment variable that sets the output directory when `--out-dir` is absent.
pub const OUT_DIR_ENV: &str = "SEMILINEAR_OUT_DIR";

/// A failed run, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad input: arguments, configuration files, regimes.
    Validation(String),
    /// The numerics gave up or a run failed its own check.
    Numerical(String),
    /// Output could not be written.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "validation",
            Failure::Numerical(_) => "numerical",
            Failure::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }

    /// One-line JSON record for standard error.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.message(),
            },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl From<semilinear::Error> for Failure {
    fn from(e: semilinear::Error) -> Self {
        if e.is_numerical() || matches!(e, semilinear::Error::Step { .. }) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Where CSV tables and JSON sidecars go.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// `--out-dir` wins over the environment, which wins over `.`.
    pub fn resolve(flag: Option<PathBuf>) -> Self {
        let root = flag
            .or_else(|| {
                std::env::var_os(OUT_DIR_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            })
            .unwrap_or_else(|| PathBuf::from("."));
        Self { root }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Outcome<PathBuf> {
        fs::create_dir_all(&self.root)
            .map_err(|e| Failure::Io(format!("cannot create {}: {e}", self.root.display())))?;
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Io(format!("cannot serialize report: {e}")))
}

/// A numeric table rendered with 17 significant digits.
#[derive(Debug, Clone)]
pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            width: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{}", fmt_float(*v)).expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Read a file, treating failure as bad input.
pub fn read_input(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}
