//! `run_manifest.json` written next to every output.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

#[derive(Serialize)]
struct RunManifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    argv: &'a [String],
    config: &'a C,
}

/// `<dir>/run_manifest.json` for a directory output, `<file>.run_manifest.json` otherwise.
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("run_manifest.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".run_manifest.json");
        out.with_file_name(name)
    }
}

pub fn write(out: &Path, subcommand: &str, argv: &[String], config: &impl Serialize) -> anyhow::Result<()> {
    let manifest = RunManifest {
        tool: "skj",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        argv,
        config,
    };
    let path = manifest_path(out);
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
