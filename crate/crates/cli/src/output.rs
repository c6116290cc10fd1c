use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Output directory plus the list of files written into it.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Path for `name`, recorded in the manifest.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Comma-separated table with a header row.
    pub fn table<C: Display>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<C>],
    ) -> Result<()> {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `report.json`: the command's summary plus `command` and `timestamp`.
    pub fn report(&mut self, command: &str, body: Value) -> Result<()> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut doc = match body {
            Value::Object(map) => map,
            other => {
                let mut map = serde_json::Map::new();
                map.insert("result".into(), other);
                map
            }
        };
        doc.insert("command".into(), json!(command));
        doc.insert("timestamp".into(), json!(timestamp));
        let path = self.path("report.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&Value::Object(doc))? + "\n",
        )?;
        Ok(())
    }

    pub fn manifest(&mut self, manifest: Value) -> Result<()> {
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

/// Short exponential formatting for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
