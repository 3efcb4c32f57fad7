//! Output plumbing: JSON payloads embed their manifest; CSV files carry it
//! as a leading comment line.

use std::path::PathBuf;

use serde::Serialize;

use crate::manifest::RunManifest;

pub fn write_json<T: Serialize>(
    manifest: &RunManifest,
    payload: &T,
    out: Option<PathBuf>,
) -> anyhow::Result<()> {
    let doc = serde_json::json!({
        "manifest": manifest,
        "result": payload,
    });
    let rendered = serde_json::to_string_pretty(&doc)?;
    emit(rendered, out)
}

pub fn write_csv(manifest: &RunManifest, body: &str, out: Option<PathBuf>) -> anyhow::Result<()> {
    let manifest_line = serde_json::to_string(manifest)?;
    let rendered = format!("# manifest: {manifest_line}\n{body}");
    emit(rendered, out)
}

fn emit(rendered: String, out: Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(&path, rendered.as_bytes())
                .map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
        }
        None => println!("{rendered}"),
    }
    Ok(())
}
