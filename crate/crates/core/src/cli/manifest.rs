//! Run manifests: the resolved configuration of a step plus SHA-256 hashes of
//! its inputs and outputs, written beside the outputs. A step whose manifest
//! matches the current config and inputs, and whose outputs are unchanged, is
//! skipped.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Hash over the resolved config and every input hash.
    pub key: String,
    pub config: serde_json::Value,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Regular files under `path` (or `path` itself), sorted.
pub fn files_under(path: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(out);
    }
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let p = entry.map_err(|e| Error::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn artifacts(paths: &[PathBuf]) -> Result<Vec<Artifact>> {
    paths
        .iter()
        .map(|p| {
            Ok(Artifact {
                path: p.clone(),
                sha256: hash_file(p)?,
            })
        })
        .collect()
}

/// One pipeline step in progress.
pub struct Step {
    command: String,
    path: PathBuf,
    key: String,
    config: serde_json::Value,
    inputs: Vec<Artifact>,
}

impl Step {
    /// `inputs` are files or directories; directories are hashed file by file.
    pub fn new(command: &str, out_dir: &Path, config: &impl Serialize, inputs: &[PathBuf]) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let mut files = Vec::new();
        for p in inputs {
            files.extend(files_under(p)?);
        }
        let inputs = artifacts(&files)?;
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(serde_json::to_vec(&config)?);
        for a in &inputs {
            hasher.update(a.path.to_string_lossy().as_bytes());
            hasher.update(a.sha256.as_bytes());
        }
        Ok(Self {
            command: command.to_string(),
            path: out_dir.join(format!("{command}.run.json")),
            key: hex::encode(hasher.finalize()),
            config,
            inputs,
        })
    }

    pub fn manifest_path(&self) -> &Path {
        &self.path
    }

    /// True when a previous run with the same key left all its outputs intact.
    pub fn is_complete(&self) -> bool {
        let Ok(text) = fs::read_to_string(&self.path) else {
            return false;
        };
        let Ok(previous) = serde_json::from_str::<RunManifest>(&text) else {
            return false;
        };
        previous.key == self.key
            && !previous.outputs.is_empty()
            && previous
                .outputs
                .iter()
                .all(|a| hash_file(&a.path).map_or(false, |h| h == a.sha256))
    }

    pub fn finish(self, outputs: &[PathBuf]) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            key: self.key,
            config: self.config,
            inputs: self.inputs,
            outputs: artifacts(outputs)?,
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&self.path, text).map_err(|e| Error::io(&self.path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        fs::write(&p, "abc").unwrap();
        assert_eq!(
            hash_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn completes_until_something_changes() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        let output = dir.path().join("out.txt");
        fs::write(&input, "x").unwrap();
        let step = Step::new("demo", dir.path(), &1u32, &[input.clone()]).unwrap();
        assert!(!step.is_complete());
        fs::write(&output, "y").unwrap();
        step.finish(&[output.clone()]).unwrap();

        assert!(Step::new("demo", dir.path(), &1u32, &[input.clone()]).unwrap().is_complete());
        assert!(!Step::new("demo", dir.path(), &2u32, &[input.clone()]).unwrap().is_complete());
        fs::write(&output, "tampered").unwrap();
        assert!(!Step::new("demo", dir.path(), &1u32, &[input.clone()]).unwrap().is_complete());
        fs::write(&output, "y").unwrap();
        fs::write(&input, "changed").unwrap();
        assert!(!Step::new("demo", dir.path(), &1u32, &[input]).unwrap().is_complete());
    }
}
