//! CSV and JSON-lines artifacts, the run manifest and golden-file checks.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use apergodic_core::periodic::MeshMeasure;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Result, RunError};

/// One named output file held in memory until the run succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Outputs of an experiment; the first artifact is the primary one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: Vec<Artifact>,
}

impl Artifacts {
    pub fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push(Artifact { name: name.into(), bytes });
    }

    pub fn get(&self, name: &str) -> Option<&Artifact> {
        self.files.iter().find(|a| a.name == name)
    }

    pub fn primary(&self) -> &Artifact {
        &self.files[0]
    }

    pub fn is_csv(name: &str) -> bool {
        name.ends_with(".csv")
    }
}

/// A CSV cell. Floats use the shortest round-tripping form, switching to
/// scientific notation outside `[1e-4, 1e15)`.
pub trait Field {
    fn field(&self) -> String;
}

impl Field for f64 {
    fn field(&self) -> String {
        let a = self.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            self.to_string()
        } else {
            format!("{self:e}")
        }
    }
}

macro_rules! display_field {
    ($($t:ty),*) => {$(
        impl Field for $t {
            fn field(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_field!(u32, u64, usize, &str, String);

/// Builds a CSV file with a fixed header.
pub struct Csv {
    inner: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut inner = csv::Writer::from_writer(Vec::new());
        inner.write_record(header).expect("in-memory write");
        Csv { inner }
    }

    pub fn row(&mut self, fields: &[&dyn Field]) {
        let rec: Vec<String> = fields.iter().map(|f| f.field()).collect();
        self.inner.write_record(&rec).expect("in-memory write");
    }

    pub fn finish(self) -> Vec<u8> {
        self.inner.into_inner().expect("in-memory flush")
    }
}

pub fn json_lines(records: &[Value]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("json value serializes");
        out.push(b'\n');
    }
    out
}

/// `cell_center,weight`.
pub fn mesh_measure_csv(m: &MeshMeasure) -> Vec<u8> {
    let mut w = Csv::new(&["cell_center", "weight"]);
    for (x, p) in m.mesh().centers().zip(m.weights()) {
        w.row(&[&x, p]);
    }
    w.finish()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Manifest record; `timestamp_unix` is the only field that changes
/// between identical runs.
pub fn manifest(config_json: &str, seed: u64, kind: &str, artifacts: &Artifacts) -> Vec<u8> {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let files: Vec<Value> =
        artifacts.files.iter().map(|a| json!({ "name": a.name, "sha256": sha256_hex(&a.bytes) })).collect();
    json_lines(&[json!({
        "record": "manifest",
        "kind": kind,
        "config_sha256": sha256_hex(config_json.as_bytes()),
        "seed": seed,
        "versions": {
            "apergodic": env!("CARGO_PKG_VERSION"),
            "apergodic-core": apergodic_core::VERSION,
        },
        "timestamp_unix": ts,
        "artifacts": files,
    })])
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| RunError::io(path, e))
}

/// Compare every CSV artifact byte-for-byte with the file of the same name
/// in `dir`.
pub fn check_golden(artifacts: &Artifacts, dir: &Path) -> Result<()> {
    for a in artifacts.files.iter().filter(|a| Artifacts::is_csv(&a.name)) {
        let path = dir.join(&a.name);
        let golden = fs::read(&path).map_err(|e| RunError::io(&path, e))?;
        if golden != a.bytes {
            let line = golden
                .split(|b| *b == b'\n')
                .zip(a.bytes.split(|b| *b == b'\n'))
                .position(|(x, y)| x != y)
                .map_or_else(|| " (length differs)".to_string(), |i| format!(" (first difference on line {})", i + 1));
            return Err(RunError::GoldenMismatch { name: a.name.clone(), detail: line });
        }
    }
    Ok(())
}
