//! Kernel and constants files. Parsers report failures with a JSON pointer to
//! the offending node and never panic on malformed input.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::BoundConstants;
use crate::kernel::{ChaosCoefficients, MultiIndex, SymmetricKernel};

/// Largest level accepted from a file; factorials beyond this overflow the
/// diagnostics long before any desk-scale use.
pub const MAX_FILE_LEVEL: usize = 32;

/// A decoded kernel file.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedKernel {
    pub coefficients: ChaosCoefficients,
    pub meta: Map<String, Value>,
    /// Non-fatal notes, each prefixed with a JSON pointer.
    pub warnings: Vec<String>,
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn as_object<'a>(v: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(pointer, "expected an object"))
}

fn as_array<'a>(v: &'a Value, pointer: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| schema(pointer, "expected an array"))
}

fn as_count(v: &Value, pointer: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| schema(pointer, "expected a non-negative integer"))
}

fn as_finite(v: &Value, pointer: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(schema(pointer, "expected a finite number")),
    }
}

/// Parses the kernel schema
/// `{"max_level": N, "levels": [{"m": m, "entries": [[[i, ...], value], ...]}], "meta": {...}}`.
pub fn parse_kernel_json(text: &str) -> Result<LoadedKernel> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("", e.to_string()))?;
    let obj = as_object(&root, "")?;
    let mut warnings = Vec::new();
    for key in obj.keys() {
        if !matches!(key.as_str(), "max_level" | "levels" | "meta") {
            warnings.push(format!("/{key}: unknown field ignored"));
        }
    }
    let max_level = as_count(
        obj.get("max_level")
            .ok_or_else(|| schema("/max_level", "missing field"))?,
        "/max_level",
    )?;
    if max_level > MAX_FILE_LEVEL {
        return Err(schema(
            "/max_level",
            format!("level {max_level} exceeds the supported maximum {MAX_FILE_LEVEL}"),
        ));
    }
    let levels = as_array(
        obj.get("levels")
            .ok_or_else(|| schema("/levels", "missing field"))?,
        "/levels",
    )?;
    let meta = match obj.get("meta") {
        None => Map::new(),
        Some(v) => as_object(v, "/meta")?.clone(),
    };
    let mut kernels: BTreeMap<usize, SymmetricKernel> = BTreeMap::new();
    for (li, level) in levels.iter().enumerate() {
        let lp = format!("/levels/{li}");
        let lobj = as_object(level, &lp)?;
        let m = as_count(
            lobj.get("m")
                .ok_or_else(|| schema(format!("{lp}/m"), "missing field"))?,
            &format!("{lp}/m"),
        )?;
        if m == 0 || m > max_level {
            return Err(Error::LevelOutOfRange {
                level: m,
                max_level,
            }
            .at(format!("{lp}/m")));
        }
        if kernels.contains_key(&m) {
            return Err(schema(format!("{lp}/m"), format!("level {m} listed twice")));
        }
        let entries = as_array(
            lobj.get("entries")
                .ok_or_else(|| schema(format!("{lp}/entries"), "missing field"))?,
            &format!("{lp}/entries"),
        )?;
        let mut parsed: Vec<(Vec<u32>, f64)> = Vec::with_capacity(entries.len());
        let mut seen: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for (ei, entry) in entries.iter().enumerate() {
            let ep = format!("{lp}/entries/{ei}");
            let pair = as_array(entry, &ep)?;
            if pair.len() != 2 {
                return Err(schema(&ep, "expected [indices, value]"));
            }
            let raw = as_array(&pair[0], &format!("{ep}/0"))?;
            let mut key = Vec::with_capacity(raw.len());
            for (ki, k) in raw.iter().enumerate() {
                let idx = k
                    .as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| {
                        schema(format!("{ep}/0/{ki}"), "expected an index in 1..=2^32-1")
                    })?;
                key.push(idx);
            }
            if key.len() != m {
                return Err(Error::BadLevel {
                    expected: m,
                    got: key.len(),
                }
                .at(&ep));
            }
            let value = as_finite(&pair[1], &format!("{ep}/1"))?;
            let canonical = MultiIndex::new(key.clone()).map_err(|e| e.at(&ep))?;
            let canonical = canonical.as_slice().to_vec();
            if canonical != key {
                warnings.push(format!("{ep}: key {key:?} canonicalized to {canonical:?}"));
            }
            if let Some(first) = seen.insert(canonical.clone(), ei) {
                return Err(Error::DuplicateKey(canonical)
                    .at(format!("{ep} (first at {lp}/entries/{first})")));
            }
            parsed.push((canonical, value));
        }
        let kernel = SymmetricKernel::new(m, parsed).map_err(|e| e.at(&lp))?;
        kernels.insert(m, kernel);
    }
    let coefficients = ChaosCoefficients::new(max_level, kernels.into_values().collect())?;
    Ok(LoadedKernel {
        coefficients,
        meta,
        warnings,
    })
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn load_kernel(path: &Path) -> Result<LoadedKernel> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_kernel_json(&text)
}

/// `{:.16e}`: 17 significant digits, enough to round-trip every double.
fn number(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cannot serialize non-finite value {v}"
        )));
    }
    Ok(format!("{v:.16e}"))
}

/// Canonical text of a kernel file: levels ascending, keys in storage order,
/// one entry per line.
pub fn kernel_to_json(c: &ChaosCoefficients, meta: &Map<String, Value>) -> Result<String> {
    let mut levels = Vec::new();
    for k in c.levels() {
        let entries = k
            .iter()
            .map(|(key, v)| {
                let idx: Vec<String> = key.iter().map(u32::to_string).collect();
                Ok(format!("        [[{}], {}]", idx.join(", "), number(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let body = if entries.is_empty() {
            String::new()
        } else {
            format!("\n{}\n      ", entries.join(",\n"))
        };
        levels.push(format!(
            "    {{\n      \"m\": {},\n      \"entries\": [{body}]\n    }}",
            k.level()
        ));
    }
    let levels = if levels.is_empty() {
        String::new()
    } else {
        format!("\n{}\n  ", levels.join(",\n"))
    };
    let meta = serde_json::to_string(meta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(format!(
        "{{\n  \"max_level\": {},\n  \"levels\": [{levels}],\n  \"meta\": {meta}\n}}\n",
        c.max_level()
    ))
}

pub fn save_kernel(path: &Path, c: &ChaosCoefficients, meta: &Map<String, Value>) -> Result<()> {
    let text = kernel_to_json(c, meta)?;
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Parses a constants file; absent fields keep their defaults.
pub fn parse_constants_json(text: &str) -> Result<BoundConstants> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("", e.to_string()))?;
    let obj = as_object(&root, "")?;
    let mut k = BoundConstants::default();
    for (key, v) in obj {
        let pointer = format!("/{key}");
        match key.as_str() {
            "b_p" => {
                for (p, bv) in as_object(v, &pointer)? {
                    let bp = format!("{pointer}/{p}");
                    let order: u32 = p
                        .parse()
                        .map_err(|_| schema(&bp, "Burkholder orders must be integers"))?;
                    k.b_p.insert(order, as_finite(bv, &bp)?);
                }
            }
            "C_p" => k.c_p = as_finite(v, &pointer)?,
            "C_star" => k.big_c_star = as_finite(v, &pointer)?,
            "d_star" => k.d_star = as_finite(v, &pointer)?,
            "c_star" => k.c_star = as_finite(v, &pointer)?,
            "M_star" => k.m_star = as_finite(v, &pointer)?,
            "p_star" => k.p_star = as_finite(v, &pointer)?,
            _ => return Err(schema(pointer, "unknown constant")),
        }
    }
    k.validate()?;
    Ok(k)
}

pub fn load_constants(path: &Path) -> Result<BoundConstants> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_constants_json(&text)
}
