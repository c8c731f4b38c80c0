//! Flat sectioned config files:
//!
//! ```text
//! [legs]
//! mass_1 = 1.0
//! mass_2 = 1.0
//! [invariants]
//! k2_1_2 = 1.0
//! [powers]          # optional, default 1
//! nu_1 = 1
//! [dimension]
//! n = 2             # or: d = 4 and epsilon_order = 2
//! [momenta]         # optional, tensor command only
//! metric = euclidean
//! p_1 = 0, 0, 0, 0
//! ```
//!
//! Legs are numbered from 1. `#` starts a comment.

use crate::error::CliError;
use orthantloop::kinematics::{Dimension, KinematicConfig};
use orthantloop::tensor::{FourVector, Metric};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: KinematicConfig,
    pub momenta: Option<Vec<FourVector>>,
    pub metric: Metric,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Legs,
    Invariants,
    Powers,
    Dimension,
    Momenta,
}

impl Section {
    fn parse(name: &str) -> Option<Section> {
        Some(match name {
            "legs" => Section::Legs,
            "invariants" => Section::Invariants,
            "powers" => Section::Powers,
            "dimension" => Section::Dimension,
            "momenta" => Section::Momenta,
            _ => return None,
        })
    }

    fn of_key(key: &str) -> Option<Section> {
        let head = key.split('_').next().unwrap_or("");
        Some(match head {
            "mass" => Section::Legs,
            "k2" => Section::Invariants,
            "nu" => Section::Powers,
            "n" | "d" | "epsilon" => Section::Dimension,
            "p" | "metric" => Section::Momenta,
            _ => return None,
        })
    }
}

// (value, line) per key, per section.
type Entries = BTreeMap<Section, BTreeMap<String, (String, usize)>>;

fn parse_error(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        message: msg.into(),
    }
}

fn invalid(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: msg.into(),
    }
}

fn read_entries(text: &str) -> Result<Entries, CliError> {
    let mut entries = Entries::new();
    let mut section = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_error(line_no, "unterminated section header"))?
                .trim();
            section = Some(
                Section::parse(name).ok_or_else(|| parse_error(line_no, format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let sec = section.ok_or_else(|| parse_error(line_no, "entry before the first section"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(line_no, "expected `key = value`"))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if Section::of_key(&key) != Some(sec) {
            return Err(parse_error(line_no, format!("key `{key}` does not belong in this section")));
        }
        if entries.entry(sec).or_default().insert(key.clone(), (value, line_no)).is_some() {
            return Err(parse_error(line_no, format!("duplicate key `{key}`")));
        }
    }
    Ok(entries)
}

fn parse_f64(value: &str, line: usize, key: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| parse_error(line, format!("`{key}`: expected a number, got `{value}`")))
}

fn parse_int<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T, CliError> {
    value
        .parse::<T>()
        .map_err(|_| parse_error(line, format!("`{key}`: expected an integer, got `{value}`")))
}

/// 1-based leg indices after `prefix`, e.g. `k2_1_3` -> [1, 3].
fn indices(key: &str, prefix: &str, count: usize, line: usize) -> Result<Vec<usize>, CliError> {
    let rest = key
        .strip_prefix(prefix)
        .ok_or_else(|| parse_error(line, format!("malformed key `{key}`")))?;
    let idx: Vec<usize> = rest
        .split('_')
        .map(|s| s.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_error(line, format!("malformed leg index in `{key}`")))?;
    if idx.len() != count || idx.iter().any(|&i| i == 0) {
        return Err(parse_error(line, format!("malformed leg index in `{key}`")));
    }
    Ok(idx)
}

/// Applies `key=value` overrides; keys name config entries (`mass_2`, `k2_1_2`,
/// `nu_3`, `n`, `d`, `epsilon_order`, `p_1`, `metric`).
fn apply_overrides(entries: &mut Entries, overrides: &[(String, String)]) -> Result<(), CliError> {
    for (key, value) in overrides {
        let sec = Section::of_key(key).ok_or_else(|| invalid(key, "unknown override key"))?;
        let map = entries.entry(sec).or_default();
        if sec == Section::Dimension {
            // A dimension override replaces the whole specification.
            if key == "n" {
                map.clear();
            } else {
                map.remove("n");
            }
        }
        map.insert(key.clone(), (value.clone(), 0));
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, CliError> {
    parse_config_with(text, &[])
}

pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<ParsedConfig, CliError> {
    let mut entries = read_entries(text)?;
    apply_overrides(&mut entries, overrides)?;
    let empty = BTreeMap::new();
    let get = |s: Section| entries.get(&s).unwrap_or(&empty);
    let mut warnings = Vec::new();

    // Legs.
    let mut masses = BTreeMap::new();
    for (key, (value, line)) in get(Section::Legs) {
        let i = indices(key, "mass_", 1, *line)?[0];
        masses.insert(i, (parse_f64(value, *line, key)?, key.clone()));
    }
    let legs = masses.len();
    if legs == 0 {
        return Err(invalid("legs", "no masses given"));
    }
    if masses.keys().copied().ne(1..=legs) {
        return Err(invalid("legs", format!("masses must be numbered 1..{legs}")));
    }
    for (m, key) in masses.values() {
        if !(*m > 0.0) || !m.is_finite() {
            return Err(invalid(key, format!("mass must be positive, got {m}")));
        }
    }
    let mass_values: Vec<f64> = masses.values().map(|(m, _)| *m).collect();

    // Invariants.
    let mut inv = vec![vec![None::<f64>; legs]; legs];
    for (key, (value, line)) in get(Section::Invariants) {
        let ij = indices(key, "k2_", 2, *line)?;
        let (i, j) = (ij[0] - 1, ij[1] - 1);
        if i >= legs || j >= legs {
            return Err(invalid(key, format!("leg index beyond the {legs} legs")));
        }
        let v = parse_f64(value, *line, key)?;
        if i == j {
            warnings.push(format!("diagonal invariant `{key}` ignored"));
            continue;
        }
        inv[i][j] = Some(v);
    }
    let mut invariants = vec![vec![0.0; legs]; legs];
    let mut upper_only = false;
    for i in 0..legs {
        for j in i + 1..legs {
            let v = match (inv[i][j], inv[j][i]) {
                (Some(a), Some(b)) if a != b => {
                    return Err(invalid(
                        &format!("k2_{}_{}", i + 1, j + 1),
                        format!("asymmetric invariants: {a} vs {b} for k2_{}_{}", j + 1, i + 1),
                    ))
                }
                (Some(a), Some(_)) => a,
                (Some(a), None) | (None, Some(a)) => {
                    upper_only = true;
                    a
                }
                (None, None) => {
                    return Err(invalid(
                        &format!("k2_{}_{}", i + 1, j + 1),
                        "missing invariant",
                    ))
                }
            };
            invariants[i][j] = v;
            invariants[j][i] = v;
        }
    }
    if upper_only && legs > 1 {
        warnings.push("invariants given on one triangle only; symmetrized".into());
    }

    // Powers.
    let mut powers = vec![1u32; legs];
    for (key, (value, line)) in get(Section::Powers) {
        let i = indices(key, "nu_", 1, *line)?[0];
        if i > legs {
            return Err(invalid(key, format!("leg index beyond the {legs} legs")));
        }
        let p: u32 = parse_int(value, *line, key)?;
        if p == 0 {
            return Err(invalid(key, "propagator powers must be positive integers"));
        }
        powers[i - 1] = p;
    }

    // Dimension.
    let dim = get(Section::Dimension);
    let dimension = match (dim.get("n"), dim.get("d")) {
        (Some((v, line)), None) => {
            if dim.contains_key("epsilon_order") {
                return Err(invalid("epsilon_order", "only valid together with `d`"));
            }
            Dimension::Fixed(parse_f64(v, *line, "n")?)
        }
        (None, Some((v, line))) => {
            let d: i32 = parse_int(v, *line, "d")?;
            let order = match dim.get("epsilon_order") {
                Some((o, l)) => parse_int(o, *l, "epsilon_order")?,
                None => orthantloop::dimshift::DEFAULT_ORDER,
            };
            Dimension::Expansion { d, order }
        }
        (Some(_), Some(_)) => return Err(invalid("dimension", "give either `n` or `d`, not both")),
        (None, None) => return Err(invalid("dimension", "missing `n` or `d`")),
    };
    if let Some(k) = dim.keys().find(|k| !matches!(k.as_str(), "n" | "d" | "epsilon_order")) {
        return Err(invalid(k, "unknown dimension key"));
    }

    // Momenta.
    let mut metric = Metric::default();
    let mut moms = BTreeMap::new();
    for (key, (value, line)) in get(Section::Momenta) {
        if key == "metric" {
            metric = match value.as_str() {
                "minkowski" => Metric::Minkowski,
                "euclidean" => Metric::Euclidean,
                _ => return Err(parse_error(*line, format!("unknown metric `{value}`"))),
            };
            continue;
        }
        let i = indices(key, "p_", 1, *line)?[0];
        let comps: Vec<f64> = value
            .split(',')
            .map(|c| parse_f64(c.trim(), *line, key))
            .collect::<Result<_, _>>()?;
        let v: FourVector = comps
            .try_into()
            .map_err(|_| parse_error(*line, format!("`{key}` needs four components")))?;
        moms.insert(i, v);
    }
    let momenta = if moms.is_empty() {
        None
    } else {
        if moms.keys().copied().ne(1..=legs) {
            return Err(invalid("momenta", format!("one momentum per leg, numbered 1..{legs}")));
        }
        Some(moms.into_values().collect())
    };

    let config = KinematicConfig::new(mass_values, invariants, powers, dimension)
        .map_err(|e| invalid("config", e.to_string()))?;
    Ok(ParsedConfig {
        config,
        momenta,
        metric,
        warnings,
    })
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
