use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const TOOL: &str = "clusterpath";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every report carries the tool version and the exact configuration used.
#[derive(Serialize)]
struct Envelope<'a, C, R> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    result: &'a R,
}

pub fn render<C: Serialize, R: Serialize>(command: &str, config: &C, result: &R) -> Result<String> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        config,
        result,
    };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

/// Writes the report to `out`, or stdout when no path is given.
pub fn emit<C: Serialize, R: Serialize>(out: Option<&Path>, command: &str, config: &C, result: &R) -> Result<()> {
    let text = render(command, config, result)?;
    match out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
