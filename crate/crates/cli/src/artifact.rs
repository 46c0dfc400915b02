//! Artifact plumbing: provenance blocks, JSON/CSV writers and input loading.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use parisian_core::numerics::{Precision, GUARD_BITS_ENV};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// The configuration block embedded in every artifact. Worker count is left
/// out on purpose: it never changes results.
#[derive(Serialize)]
pub struct Provenance<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub guard_bits: u32,
    pub args: &'a A,
}

impl<'a, A: Serialize> Provenance<'a, A> {
    pub fn new(command: &'a str, args: &'a A) -> Self {
        Self {
            tool: "parisian",
            version: env!("CARGO_PKG_VERSION"),
            command,
            guard_bits: Precision::global().guard_bits(),
            args,
        }
    }

    fn value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

/// `{"config": …, key: payload, …}`, pretty-printed with a trailing
/// newline.
pub fn json_artifact<A: Serialize>(prov: &Provenance<A>, fields: Vec<(&str, Value)>) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), prov.value()?);
    for (k, v) in fields {
        doc.insert(k.into(), v);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc))?;
    s.push('\n');
    Ok(s)
}

/// Prefixes a CSV body with a `# config:` line.
pub fn csv_artifact<A: Serialize>(prov: &Provenance<A>, extra: &[String], body: &str) -> Result<String> {
    let mut s = format!("# config: {}\n", serde_json::to_string(&prov.value()?)?);
    for line in extra {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s.push_str(body);
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Reads a JSON document that is either the bare object or an artifact
/// carrying it under `key`.
pub fn load<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let inner = match doc.as_object_mut() {
        Some(obj) if obj.contains_key("config") && obj.contains_key(key) => obj.remove(key).expect("present"),
        _ => doc,
    };
    serde_json::from_value(inner).with_context(|| format!("decoding {key} from {}", path.display()))
}

/// Rejects a guard-bit override that would otherwise be silently ignored.
pub fn check_guard_env() -> Result<()> {
    use parisian_core::numerics::{MAX_GUARD_BITS, MIN_GUARD_BITS};
    if let Ok(v) = std::env::var(GUARD_BITS_ENV) {
        let bits: u32 = v
            .trim()
            .parse()
            .with_context(|| format!("{GUARD_BITS_ENV}={v:?} is not an integer"))?;
        anyhow::ensure!(
            (MIN_GUARD_BITS..=MAX_GUARD_BITS).contains(&bits),
            "{GUARD_BITS_ENV}={bits} outside [{MIN_GUARD_BITS}, {MAX_GUARD_BITS}]"
        );
    }
    Ok(())
}
