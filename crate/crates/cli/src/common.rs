//! Shared plumbing: exit codes, config-file merging, reproducibility echo.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bioimg_core::CoreError;

/// Exit codes: 0 ok, 2 config error, 3 algorithm error, 4 I/O error.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ALGORITHM: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Algorithm(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Algorithm(m) => write!(f, "algorithm error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_) | CoreError::InvalidParameter(_) | CoreError::DimensionMismatch(_) => {
                CliError::Config(e.to_string())
            }
            CoreError::Io(_) | CoreError::Codec(_) => CliError::Io(e.to_string()),
            _ => CliError::Algorithm(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(EXIT_CONFIG),
            CliError::Algorithm(_) => ExitCode::from(EXIT_ALGORITHM),
            CliError::Io(_) => ExitCode::from(EXIT_IO),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Load the named section of a TOML config file into a partial-args value.
pub fn load_config_section<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
    section: &str,
) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    match table.get(section) {
        None => Ok(T::default()),
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|e| CliError::Config(format!("[{section}]: {e}"))),
    }
}

/// Flag-over-config resolution.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_required<T>(flag: Option<T>, file: Option<T>, name: &str) -> CliResult<T> {
    flag.or(file).ok_or_else(|| CliError::Config(format!("missing required parameter `{name}`")))
}

/// Echo the resolved configuration (seed included) for reproducibility.
pub fn echo_resolved<T: serde::Serialize>(command: &str, resolved: &T) {
    match toml::to_string(resolved) {
        Ok(body) => println!("[resolved.{command}]\n{body}"),
        Err(_) => println!("[resolved.{command}] <unprintable>"),
    }
}

/// Parse "x,y,w,h".
pub fn parse_rect(s: &str) -> CliResult<(u32, u32, u32, u32)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Config(format!("rectangle `{s}` must be x,y,w,h")));
    }
    let mut vals = [0u32; 4];
    for (i, p) in parts.iter().enumerate() {
        vals[i] = p
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad rectangle component `{p}`")))?;
    }
    Ok((vals[0], vals[1], vals[2], vals[3]))
}

/// Parse "x,y;x,y;..." seed lists.
pub fn parse_points(s: &str) -> CliResult<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    for pair in s.split(';') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let mut it = pair.split(',');
        let x = it
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| CliError::Config(format!("bad point `{pair}`")))?;
        let y = it
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| CliError::Config(format!("bad point `{pair}`")))?;
        if it.next().is_some() {
            return Err(CliError::Config(format!("bad point `{pair}`")));
        }
        out.push((x, y));
    }
    if out.is_empty() {
        return Err(CliError::Config("empty point list".into()));
    }
    Ok(out)
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
