use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cachelab::rational::{int, parse_rational, Rational};
use serde::Deserialize;

use crate::output::Format;
use crate::UsageError;

/// A rational written as a string (`"1/3"`, `"0.25"`) or a bare integer.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RationalValue {
    Int(i64),
    Text(String),
}

impl RationalValue {
    fn parse(&self) -> Result<Rational> {
        match self {
            RationalValue::Int(v) => Ok(int(i128::from(*v))),
            RationalValue::Text(s) => Ok(parse_rational(s)?),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Count(u64),
    List(Vec<RationalValue>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    alphas: Option<Vec<RationalValue>>,
    n_range: Option<[u64; 2]>,
    k_range: Option<[u64; 2]>,
    m_grid: Option<GridValue>,
    output_path: Option<PathBuf>,
    format: Option<String>,
    exact: Option<bool>,
    seed: Option<u64>,
    demand_limit: Option<u64>,
}

/// How memory values for a curve are chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemoryGrid {
    /// Evenly spaced points on `[0, N]`, endpoints included.
    Count(u64),
    List(Vec<Rational>),
}

impl MemoryGrid {
    pub fn points(&self, num_files: u64) -> Vec<Rational> {
        match self {
            MemoryGrid::Count(c) => {
                let steps = (*c).max(2) as i128 - 1;
                (0..=steps)
                    .map(|i| int(i * num_files as i128) / steps)
                    .collect()
            }
            MemoryGrid::List(v) => v.clone(),
        }
    }
}

/// Sweep settings read from a flat TOML file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepConfig {
    pub alphas: Option<Vec<Rational>>,
    pub n_range: Option<(u64, u64)>,
    pub k_range: Option<(u64, u64)>,
    pub m_grid: Option<MemoryGrid>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub exact: Option<bool>,
    pub seed: Option<u64>,
    pub demand_limit: Option<u64>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).map_err(|e| UsageError(format!("{}: {e:#}", path.display())).into())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let range = |name: &str, r: Option<[u64; 2]>| -> Result<Option<(u64, u64)>> {
            match r {
                Some([lo, hi]) if lo > hi => bail!("{name} [{lo}, {hi}] is empty"),
                Some([lo, hi]) => Ok(Some((lo, hi))),
                None => Ok(None),
            }
        };
        let alphas = match raw.alphas {
            Some(v) if v.is_empty() => bail!("alphas must not be empty"),
            Some(v) => Some(
                v.iter()
                    .map(RationalValue::parse)
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let m_grid = match raw.m_grid {
            Some(GridValue::Count(c)) if c < 2 => bail!("m_grid needs at least 2 points"),
            Some(GridValue::Count(c)) => Some(MemoryGrid::Count(c)),
            Some(GridValue::List(v)) if v.is_empty() => bail!("m_grid must not be empty"),
            Some(GridValue::List(v)) => Some(MemoryGrid::List(
                v.iter().map(RationalValue::parse).collect::<Result<_>>()?,
            )),
            None => None,
        };
        let format = raw
            .format
            .map(|f| match f.as_str() {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                other => bail!("format must be csv or json, got {other:?}"),
            })
            .transpose()?;
        if raw.demand_limit == Some(0) {
            bail!("demand_limit must be at least 1");
        }
        Ok(SweepConfig {
            alphas,
            n_range: range("n_range", raw.n_range)?,
            k_range: range("k_range", raw.k_range)?,
            m_grid,
            output_path: raw.output_path,
            format,
            exact: raw.exact,
            seed: raw.seed,
            demand_limit: raw.demand_limit,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cachelab::rational::ratio;

    #[test]
    fn full_config() {
        let c = SweepConfig::parse(
            r#"
alphas = ["1/3", "0.5", 2]
n_range = [1, 20]
k_range = [2, 2]
m_grid = 5
output_path = "out.csv"
format = "json"
exact = true
seed = 9
demand_limit = 100
"#,
        )
        .unwrap();
        assert_eq!(c.alphas, Some(vec![ratio(1, 3), ratio(1, 2), int(2)]));
        assert_eq!(c.k_range, Some((2, 2)));
        assert_eq!(
            c.m_grid.unwrap().points(4),
            vec![int(0), int(1), int(2), int(3), int(4)]
        );
        assert_eq!(c.format, Some(Format::Json));
    }

    #[test]
    fn explicit_grid() {
        let c = SweepConfig::parse(r#"m_grid = ["0", "1/2", 3]"#).unwrap();
        assert_eq!(
            c.m_grid,
            Some(MemoryGrid::List(vec![int(0), ratio(1, 2), int(3)]))
        );
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SweepConfig::parse("k_range = [3, 2]").is_err());
        assert!(SweepConfig::parse("demand_limit = 0").is_err());
        assert!(SweepConfig::parse("alphas = []").is_err());
        assert!(SweepConfig::parse("colour = 1").is_err());
        assert!(SweepConfig::parse(r#"format = "xml""#).is_err());
        assert!(SweepConfig::parse(r#"alphas = ["1/0"]"#).is_err());
    }
}
