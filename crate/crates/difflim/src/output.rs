//! CSV emission. Every file starts with a `#schema=<name>` comment line
//! naming the versioned column layout, followed by the header row. Fields
//! are written through shortest-roundtrip float formatting, so a rerun with
//! identical inputs produces byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// An open CSV file with its schema line and header already written.
pub struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    /// Creates `dir/name`, writes the schema comment and the header.
    pub fn create(dir: &Path, name: &str, schema: &str, header: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join(name);
        let file = File::create(&path)
            .with_context(|| format!("creating output file {}", path.display()))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "#schema={schema}").context("writing schema line")?;
        let mut writer = csv::WriterBuilder::new().from_writer(buf);
        writer.write_record(header).context("writing CSV header")?;
        Ok(Self { path, writer })
    }

    /// Writes one row; fields are preformatted strings.
    pub fn write_row(&mut self, fields: &[String]) -> Result<()> {
        self.writer
            .write_record(fields)
            .with_context(|| format!("writing row to {}", self.path.display()))
    }

    /// Flushes and returns the file name (not the full path) for the verdict.
    pub fn finish(mut self) -> Result<String> {
        self.writer
            .flush()
            .with_context(|| format!("flushing {}", self.path.display()))?;
        Ok(self
            .path
            .file_name()
            .expect("csv path has a file name")
            .to_string_lossy()
            .into_owned())
    }
}

/// Shortest-roundtrip decimal form of `v`; deterministic for equal bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
