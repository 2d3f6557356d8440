//! Deterministic report files: JSON with 17 significant digits, CSV curves
//! tagged with the run id, binary field containers and a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{PmnsError, Result};
use crate::grid::SpectralVectorField;
use crate::io::save_field;

/// Pretty formatter that prints every float as `{:.16e}` (17 significant
/// digits) and non-finite floats as `null`.
struct FloatFormatter<'a>(PrettyFormatter<'a>);

fn write_float<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{v:.16e}")
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for FloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as indented JSON with fixed float formatting. Struct
/// fields keep declaration order and maps are `BTreeMap`s, so the output is
/// byte-stable.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FloatFormatter(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| PmnsError::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| PmnsError::Format(e.to_string()))
}

/// Single-line variant of [`to_json_string`].
pub fn to_json_line<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    struct Compact(CompactFormatter);
    impl Formatter for Compact {
        fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
            write_float(w, v)
        }
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Compact(CompactFormatter));
    value
        .serialize(&mut ser)
        .map_err(|e| PmnsError::Format(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| PmnsError::Format(e.to_string()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Run id: first 16 hex digits of `sha256(command \0 config)`.
pub fn run_id(command: &str, config: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(config);
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Named columns written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            columns: Vec::new(),
        }
    }

    pub fn column(mut self, header: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push((header.into(), values));
        self
    }

    /// `# run_id: ...` line, a header row, then one row per index. Columns
    /// must share their length.
    pub fn render(&self, run_id: &str) -> Result<String> {
        let len = self.columns.first().map(|c| c.1.len()).unwrap_or(0);
        if self.columns.iter().any(|c| c.1.len() != len) {
            return Err(PmnsError::Input(format!("columns of {} differ in length", self.name)));
        }
        let mut out = format!("# run_id: {run_id}\n");
        let headers: Vec<&str> = self.columns.iter().map(|c| c.0.as_str()).collect();
        out.push_str(&headers.join(","));
        out.push('\n');
        for i in 0..len {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| {
                    let v = c.1[i];
                    if v.is_finite() {
                        format!("{v:.16e}")
                    } else {
                        "nan".to_string()
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub pmns_core: String,
    pub field_container: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            pmns_core: env!("CARGO_PKG_VERSION").to_string(),
            field_container: crate::io::VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    /// Parsed configuration echoed back.
    pub config: serde_json::Value,
    pub versions: Versions,
    /// SHA-256 of every input file, keyed by path.
    pub input_hashes: BTreeMap<String, String>,
    /// Output paths relative to the output directory, sorted.
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: serde_json::Value, run_id: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            command: command.into(),
            config,
            versions: Versions::default(),
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }
}

/// Everything a run writes besides the manifest.
pub struct ReportBundle<'a, P: Serialize> {
    pub payload: &'a P,
    pub tables: Vec<CsvTable>,
    /// `(name, field)`; written as `fields/<name>.<run_id>.pmns`.
    pub fields: Vec<(String, &'a SpectralVectorField)>,
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes `report.json`, one CSV per table, the field containers and finally
/// `manifest.json`. Rewriting with the same run id replaces the same files.
/// The payload JSON is byte-identical across repeated runs; the manifest
/// differs only in `wall_time_s`.
pub fn emit_report<P: Serialize>(dir: &Path, mut manifest: RunManifest, bundle: &ReportBundle<'_, P>) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let id = manifest.run_id.clone();
    let mut outputs = Vec::new();

    #[derive(Serialize)]
    struct Wrapped<'b, P: Serialize> {
        run_id: &'b str,
        command: &'b str,
        report: &'b P,
    }
    let json = to_json_string(&Wrapped {
        run_id: &id,
        command: &manifest.command,
        report: bundle.payload,
    })?;
    write_file(dir, "report.json", json.as_bytes())?;
    outputs.push("report.json".to_string());

    for t in &bundle.tables {
        let rel = format!("{}.csv", t.name);
        write_file(dir, &rel, t.render(&id)?.as_bytes())?;
        outputs.push(rel);
    }
    for (name, f) in &bundle.fields {
        let rel = format!("fields/{name}.{id}.pmns");
        let path: PathBuf = dir.join(&rel);
        fs::create_dir_all(path.parent().expect("has parent"))?;
        save_field(&path, f)?;
        outputs.push(rel);
    }
    outputs.push("manifest.json".to_string());
    outputs.sort();
    manifest.outputs = outputs;
    write_file(dir, "manifest.json", to_json_string(&manifest)?.as_bytes())?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_line(&[0.1, 1.0 / 3.0, f64::NAN, -2.5e-300]).unwrap();
        assert_eq!(
            s,
            "[1.0000000000000001e-1,3.3333333333333331e-1,null,-2.5000000000000000e-300]"
        );
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[1], Some(1.0 / 3.0));
    }

    #[test]
    fn csv_layout() {
        let t = CsvTable::new("curve").column("t", vec![0.0, 1.0]).column("v", vec![2.0, f64::INFINITY]);
        let s = t.render("abc").unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# run_id: abc");
        assert_eq!(lines[1], "t,v");
        assert_eq!(lines[3], "1.0000000000000000e0,nan");
        assert!(CsvTable::new("x").column("a", vec![1.0]).column("b", vec![]).render("r").is_err());
    }

    #[test]
    fn run_id_depends_on_command_and_config() {
        assert_eq!(run_id("solve", b"a"), run_id("solve", b"a"));
        assert_ne!(run_id("solve", b"a"), run_id("solve", b"b"));
        assert_ne!(run_id("solve", b"a"), run_id("stationary", b"a"));
        assert_eq!(run_id("solve", b"a").len(), 16);
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
