use std::path::{Path, PathBuf};

use anyhow::Context;
use camrobot::kinematics::{panda_like, RobotSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{Classify, CmdResult};

/// Reads a JSON input file; any failure is an input error.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .input()?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid JSON in {}", path.display()))
        .input()
}

/// Resolves `p` against the directory of the config file that named it.
pub fn relative_to(config: Option<&Path>, p: &Path) -> PathBuf {
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

/// Robot spec from `path`, or the bundled arm when absent.
pub fn load_robot(path: Option<&Path>) -> CmdResult<RobotSpec> {
    match path {
        None => {
            let (chain, layout) = panda_like();
            Ok(RobotSpec::new("panda_like", &chain, &layout))
        }
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read robot spec {}", p.display()))
                .input()?;
            let spec = RobotSpec::from_json(&text)
                .with_context(|| format!("invalid robot spec {}", p.display()))
                .input()?;
            spec.build::<f64>()
                .with_context(|| format!("invalid robot spec {}", p.display()))
                .input()?;
            Ok(spec)
        }
    }
}

pub fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .runtime()
}

pub fn write_text(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .runtime()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).runtime()?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_csv<R: AsRef<[String]>>(path: &Path, header: &[String], rows: &[R]) -> CmdResult {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))
        .runtime()?;
    w.write_record(header).runtime()?;
    for r in rows {
        w.write_record(r.as_ref()).runtime()?;
    }
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))
        .runtime()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
