use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::failure::Failure;

/// Output directory; records every data file it writes so the metadata
/// sidecar can list them.
pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn open(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes with a function from the core crate.
    pub fn with<F>(&mut self, name: &str, f: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut BufWriter<File>) -> slowfast_core::Result<()>,
    {
        let mut w = self.open(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Rows as `<stem>.csv` or `<stem>.json` depending on the format.
    pub fn table<T: Serialize>(&mut self, stem: &str, format: Format, rows: &[T]) -> Result<(), Failure> {
        match format {
            Format::Csv => self.csv(&format!("{stem}.csv"), rows),
            Format::Json => self.json(&format!("{stem}.json"), rows),
        }
    }

    /// Plain-text sidecar with everything that varies between runs.
    pub fn metadata(&self, command: &str, cfg: &ExperimentConfig, started: &str, status: &str) -> Result<(), Failure> {
        let mut w = BufWriter::new(File::create(self.dir.join("run_metadata.txt"))?);
        writeln!(w, "tool: {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "command: {command}")?;
        writeln!(w, "arguments: {}", std::env::args().skip(1).collect::<Vec<_>>().join(" "))?;
        writeln!(w, "started: {started}")?;
        writeln!(w, "finished: {}", chrono::Utc::now().to_rfc3339())?;
        writeln!(w, "threads: {}", rayon::current_num_threads())?;
        writeln!(w, "status: {status}")?;
        writeln!(w, "files: {}", self.written.join(", "))?;
        writeln!(w, "config: {}", serde_json::to_string(cfg)?)?;
        w.flush()?;
        Ok(())
    }
}

/// File-name tag for an eps value, e.g. `eps0.05`.
pub fn eps_tag(eps: f64) -> String {
    format!("eps{eps}")
}
