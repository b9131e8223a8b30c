//! Config files, flag overlay and the metadata header.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{Map, Value};

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    /// The reader went away, as with `| head`; not worth a message.
    PipeClosed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::PipeClosed => 0,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
            CliError::PipeClosed => "",
        }
    }
}

impl From<ris_align::Error> for CliError {
    fn from(e: ris_align::Error) -> Self {
        use ris_align::Error::*;
        match e {
            Infeasible(_) | Estimation(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return CliError::PipeClosed;
        }
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Flags shared by every subcommand; never echoed in output.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct IoArgs {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accepts `1000000`, `1e6` or `1_000_000`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let cleaned = s.replace('_', "");
    if let Ok(n) = cleaned.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = cleaned.parse().map_err(|_| format!("not a number: {s}"))?;
    count_from_f64(x)
}

fn count_from_f64(x: f64) -> Result<u64, String> {
    if !(x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15) {
        return Err(format!("expected a non-negative whole count, got {x}"));
    }
    Ok(x as u64)
}

/// JSON side of [`parse_count`]: integers, floats such as `1e6`, or strings.
pub fn count_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Float(f64),
        Text(String),
    }
    let raw = Option::<Raw>::deserialize(d)?;
    raw.map(|r| match r {
        Raw::Int(n) => Ok(n),
        Raw::Float(x) => count_from_f64(x),
        Raw::Text(s) => parse_count(&s),
    })
    .transpose()
    .map_err(serde::de::Error::custom)
}

fn strip_nulls(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Reads a JSON object from `path`. A `command` key, if present, must name
/// the running subcommand.
pub fn read_config(path: &Path, command: &str) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    if let Some(c) = map.remove("command") {
        if c.as_str() != Some(command) {
            return Err(CliError::Config(format!("config is for command {c}, not {command:?}")));
        }
    }
    Ok(map)
}

/// Overlays the flags in `cli` onto the config file and validates the result
/// against `T`. Returns the merged settings and their JSON echo.
pub fn merge<T: Serialize + DeserializeOwned>(cli: &T, io: &IoArgs, command: &str) -> CliResult<(T, Value)> {
    let mut map = match &io.config {
        Some(p) => read_config(p, command)?,
        None => Map::new(),
    };
    let flags = serde_json::to_value(cli).map_err(|e| CliError::Config(e.to_string()))?;
    map.extend(strip_nulls(flags));
    let merged = Value::Object(map);
    let parsed: T =
        serde_json::from_value(merged.clone()).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    // Flattened groups rule out deny_unknown_fields, so compare key sets:
    // every field serializes, unset ones as null.
    let known = serde_json::to_value(&parsed).map_err(|e| CliError::Config(e.to_string()))?;
    if let (Value::Object(known), Value::Object(given)) = (&known, &merged) {
        if let Some(k) = given.keys().find(|k| !known.contains_key(*k)) {
            return Err(CliError::Config(format!("unknown config key {k:?}")));
        }
    }
    Ok((parsed, merged))
}

/// `# key: value` lines that open every CSV artifact.
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn new(command: &str, seed: Option<u64>, config: &Value) -> Self {
        Metadata(vec![
            ("tool".into(), format!("ris-align {}", env!("CARGO_PKG_VERSION"))),
            ("command".into(), command.into()),
            ("seed".into(), seed.map_or_else(|| "none".into(), |s| s.to_string())),
            ("config".into(), config.to_string()),
        ])
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

pub fn open_output(io: &IoArgs) -> CliResult<Box<dyn Write>> {
    Ok(match &io.out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(io::BufWriter::new(io::stdout())),
    })
}

pub fn require_seed(seed: Option<u64>) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Config("--seed is required for Monte Carlo runs".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("2_000"), Ok(2000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }
}
