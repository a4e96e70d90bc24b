pub mod analyze;
pub mod simulate;
pub mod sweep;

use anyhow::{bail, Result};
use basalt_sim::adversary::Strategy;
use basalt_sim::sim::Algorithm;

use crate::UsageError;

/// Parse a comma-separated list of values: "0.1,0.2,0.3".
pub fn parse_list<T: std::str::FromStr>(field: &str, s: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        match part.trim().parse() {
            Ok(v) => out.push(v),
            Err(_) => bail!(UsageError(format!("bad value `{part}` for --{field}"))),
        }
    }
    if out.is_empty() {
        bail!(UsageError(format!("--{field} must not be empty")));
    }
    Ok(out)
}

/// Parse seeds: either "a..b" (inclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) if a <= b => (a, b),
            _ => bail!(UsageError(format!("bad seed range `{s}`"))),
        };
        return Ok((a..=b).collect());
    }
    parse_list("seeds", s)
}

pub fn parse_algo(s: &str) -> Result<Algorithm> {
    match s {
        "basalt" => Ok(Algorithm::Basalt),
        "basalt-simple" => Ok(Algorithm::BasaltSimple),
        "brahms" => Ok(Algorithm::Brahms),
        other => bail!(UsageError(format!(
            "unknown algorithm `{other}` (basalt | basalt-simple | brahms)"
        ))),
    }
}

pub fn parse_strategy(s: &str, advertised: usize) -> Result<Strategy> {
    match s {
        "flood" => Ok(Strategy::Flood),
        "hitpoison" => Ok(Strategy::HitPoison {
            advertised_correct: advertised,
        }),
        other => bail!(UsageError(format!(
            "unknown strategy `{other}` (flood | hitpoison)"
        ))),
    }
}
