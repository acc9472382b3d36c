//! Output directory bookkeeping: every written file is hashed into `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a value.
pub fn value_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub nodes: usize,
    pub config: FileEntry,
    pub inputs: Vec<FileEntry>,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<FileEntry>,
}

/// Writes files below an output directory and records them.
pub struct OutDir {
    root: PathBuf,
    outputs: Vec<FileEntry>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    /// Writes `rel` through `fill`, then hashes the result.
    pub fn write_with<F>(&mut self, rel: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        {
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            fill(&mut w)?;
            w.flush()?;
        }
        let bytes = fs::read(&path)?;
        self.outputs.retain(|e| e.path != rel);
        self.outputs.push(FileEntry {
            path: rel.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write_with(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        self.write_with(rel, |w| Ok(w.write_all(text.as_bytes())?))
    }

    /// Writes `manifest.json` listing everything written so far.
    pub fn finish(mut self, mut manifest: Manifest) -> Result<()> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.outputs = std::mem::take(&mut self.outputs);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Entry for an input file, named by its file name so manifests do not depend
/// on where the inputs live.
pub fn input_entry(path: &Path) -> Result<FileEntry> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileEntry {
        path: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn outputs_are_listed_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        out.write_text("b.txt", "b").unwrap();
        out.write_text("sub/a.txt", "a").unwrap();
        out.finish(Manifest {
            tool: "t",
            version: "0",
            core_version: "0",
            command: "x".into(),
            seed: 0,
            nodes: 3,
            config: FileEntry {
                path: "c".into(),
                sha256: String::new(),
                bytes: 0,
            },
            inputs: vec![],
            parameters: BTreeMap::new(),
            outputs: vec![],
        })
        .unwrap();
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["outputs"][0]["path"], "b.txt");
        assert_eq!(m["outputs"][1]["path"], "sub/a.txt");
    }
}
