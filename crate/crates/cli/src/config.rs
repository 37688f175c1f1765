//! Run configuration: defaults, TOML or `key=value` files, and overrides.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

/// Invalid configuration; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError(format!("invalid value {value:?} for `{key}`"))
}

/// Every parameter a command may read, with its resolved value. The whole
/// struct is echoed in the output envelope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub p: u64,
    pub e: u32,
    /// Precision m in p-adic digits.
    pub prec: u32,
    pub g: usize,
    /// Truncation degree D of the induction module.
    pub deg: u32,
    /// Truncation degree D_A of affinoid bases.
    pub deg_a: u32,
    /// Algebraic weight (k_1 ≥ … ≥ k_g).
    pub weight: Option<Vec<i64>>,
    /// Slope cut, as an integer or a fraction `a/b`.
    pub h: Option<String>,
    /// `strict`, `lower_inclusive` or `lower_exclusive`.
    pub side: String,
    /// Fredholm truncation N (number of basis vectors kept).
    pub n: Option<usize>,
    /// |I| for Čech checks.
    pub rank: usize,
    pub lambda0: Option<i64>,
    pub normalization: Option<usize>,
    /// Torus points for `weights`; random unit points when absent.
    pub torus: Option<Vec<Vec<i64>>>,
    pub samples: usize,
    /// Analyticity radius w of the universal chart.
    pub w: String,
    /// Total degree of the universal character expansion.
    pub universal_degree: u32,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 5,
            e: 1,
            prec: 20,
            g: 2,
            deg: 12,
            deg_a: 8,
            weight: None,
            h: None,
            side: "lower_inclusive".into(),
            n: None,
            rank: 1,
            lambda0: None,
            normalization: None,
            torus: None,
            samples: 5,
            w: "1".into(),
            universal_degree: 12,
            seed: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| bad(key, v))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<i64>, ConfigError> {
    let t = v.trim().trim_start_matches(['[', '(']).trim_end_matches([']', ')']);
    if t.trim().is_empty() {
        return Ok(Vec::new());
    }
    t.split(',').map(|x| parse_num(key, x)).collect()
}

pub fn parse_ratio(key: &str, v: &str) -> Result<Ratio<i64>, ConfigError> {
    let v = v.trim();
    match v.split_once('/') {
        Some((a, b)) => {
            let b: i64 = parse_num(key, b)?;
            if b == 0 {
                return Err(bad(key, v));
            }
            Ok(Ratio::new(parse_num(key, a)?, b))
        }
        None => Ok(Ratio::from(parse_num::<i64>(key, v)?)),
    }
}

impl RunConfig {
    /// Sets one parameter from its textual form. Keys from nested sections
    /// (`section.key`) are matched on their last component.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let k = key.rsplit('.').next().unwrap_or(key).trim();
        let v = value.trim().trim_matches('"');
        match k {
            "p" => self.p = parse_num(k, v)?,
            "e" => self.e = parse_num(k, v)?,
            "prec" | "m" => self.prec = parse_num(k, v)?,
            "g" => self.g = parse_num(k, v)?,
            "deg" | "D" | "degree" => self.deg = parse_num(k, v)?,
            "deg_a" | "D_A" | "base_degree" => self.deg_a = parse_num(k, v)?,
            "weight" | "kappa" => self.weight = Some(parse_list(k, v)?),
            "h" => {
                parse_ratio(k, v)?;
                self.h = Some(v.to_string());
            }
            "side" => {
                if !matches!(v, "strict" | "lower_inclusive" | "lower_exclusive") {
                    return Err(bad(k, v));
                }
                self.side = v.to_string();
            }
            "n" | "N" => self.n = Some(parse_num(k, v)?),
            "rank" | "I" => self.rank = parse_num(k, v)?,
            "lambda0" => self.lambda0 = Some(parse_num(k, v)?),
            "normalization" => self.normalization = Some(parse_num(k, v)?),
            "torus" => {
                let pts = v
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_list(k, s))
                    .collect::<Result<Vec<_>, _>>()?;
                self.torus = Some(pts);
            }
            "samples" => self.samples = parse_num(k, v)?,
            "w" => {
                parse_ratio(k, v)?;
                self.w = v.to_string();
            }
            "universal_degree" => self.universal_degree = parse_num(k, v)?,
            "seed" => self.seed = parse_num(k, v)?,
            _ => return Err(ConfigError(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a configuration file: TOML (with optional sections), or
    /// plain `key=value` lines with `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        match text.parse::<toml::Table>() {
            Ok(table) => self.apply_table("", &table),
            Err(_) => {
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() || line.starts_with('[') {
                        continue;
                    }
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
                    self.set(k, v)?;
                }
                Ok(())
            }
        }
    }

    fn apply_table(&mut self, prefix: &str, table: &toml::Table) -> Result<(), ConfigError> {
        for (k, v) in table {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                toml::Value::Table(t) => self.apply_table(&key, t)?,
                other => self.set(&key, &toml_to_text(&key, other)?)?,
            }
        }
        Ok(())
    }

    /// Checks ranges shared by all commands.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.e == 0 || self.prec == 0 || self.g == 0 {
            return Err(ConfigError("e, prec and g must be positive".into()));
        }
        if self.deg == 0 || self.deg_a == 0 || self.rank == 0 || self.universal_degree == 0 {
            return Err(ConfigError("truncation degrees and rank must be positive".into()));
        }
        if let Some(w) = &self.weight {
            if w.len() != self.g {
                return Err(ConfigError(format!("weight has {} entries but g = {}", w.len(), self.g)));
            }
        }
        Ok(())
    }

    pub fn h_ratio(&self) -> Result<Option<Ratio<i64>>, ConfigError> {
        self.h.as_deref().map(|h| parse_ratio("h", h)).transpose()
    }

    pub fn w_ratio(&self) -> Result<Ratio<i64>, ConfigError> {
        parse_ratio("w", &self.w)
    }
}

fn toml_to_text(key: &str, v: &toml::Value) -> Result<String, ConfigError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(a) => {
            // a list of points becomes `a,b;c,d`, a flat list `a,b`
            if a.iter().all(|x| x.is_array()) {
                a.iter().map(|x| toml_to_text(key, x)).collect::<Result<Vec<_>, _>>()?.join(";")
            } else {
                a.iter().map(|x| toml_to_text(key, x)).collect::<Result<Vec<_>, _>>()?.join(",")
            }
        }
        _ => return Err(bad(key, &v.to_string())),
    })
}
