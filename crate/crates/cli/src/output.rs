//! CSV emission with a header row and a config-hash footer.

use std::path::{Path, PathBuf};

use np_core::C64;

use crate::CliError;

/// Where outputs go and what identifies the run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out_dir: PathBuf,
    pub config_hash: String,
    pub seed: u64,
}

impl RunContext {
    pub fn footer(&self) -> String {
        format!("# config-sha256: {} seed: {}", self.config_hash, self.seed)
    }
}

pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
    notes: Vec<String>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        CsvTable {
            writer,
            width: header.len(),
            notes: Vec::new(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.width, "row width differs from header");
        self.writer.write_record(fields).expect("in-memory write");
    }

    /// A `# key: value` comment placed above the hash footer.
    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn render(self, ctx: &RunContext) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        let mut text = String::from_utf8(bytes).expect("fields are UTF-8");
        for n in &self.notes {
            text.push_str("# ");
            text.push_str(n);
            text.push('\n');
        }
        text.push_str(&ctx.footer());
        text.push('\n');
        text
    }

    pub fn write(self, ctx: &RunContext, name: &str) -> Result<PathBuf, CliError> {
        let path = ctx.out_dir.join(name);
        write_file(&path, &self.render(ctx))?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Shortest round-trip form, switching to exponent notation outside [1e-4, 1e7).
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e7).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn re_im(z: C64) -> [String; 2] {
    [num(z.re), num(z.im)]
}
