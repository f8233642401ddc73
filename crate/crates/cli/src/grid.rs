//! Numeric grids: `start:step:stop`, comma lists, or a single value.

use serde::{Deserialize, Serialize};

/// A grid as written by the user. Ranges keep their textual form so that
/// manifests reproduce them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range(String),
    Values(Vec<f64>),
}

impl Grid {
    pub fn parse(text: &str) -> Result<Grid, String> {
        let text = text.trim();
        if text.contains(':') {
            parse_range(text)?;
            Ok(Grid::Range(text.to_string()))
        } else {
            parse_list(text).map(Grid::Values)
        }
    }

    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::Range(s) if s.contains(':') => parse_range(s),
            Grid::Range(s) => parse_list(s),
            Grid::Values(v) => {
                if v.is_empty() {
                    return Err("grid is empty".into());
                }
                if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                    return Err(format!("grid value {x} is not finite"));
                }
                Ok(v.clone())
            }
        }
    }
}

fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    if text.trim().is_empty() {
        return Err("grid is empty".into());
    }
    text.split(',').map(number).collect()
}

/// Rounds to 12 significant digits so `0.05 + 2 * 0.01` reads back as `0.07`.
fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Expands `start:step:stop`. Points are `start + k step` for every `k` that
/// does not pass `stop` by more than half a step.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, step, stop] = parts[..] else {
        return Err(format!("range '{text}' must have the form start:step:stop"));
    };
    let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
    if step <= 0.0 {
        return Err(format!("range '{text}': step must be positive"));
    }
    if stop < start {
        return Err(format!("range '{text}': stop is below start"));
    }
    let count = ((stop - start) / step + 0.5).floor();
    if count > 1e7 {
        return Err(format!("range '{text}' has more than 10^7 points"));
    }
    Ok((0..=count as usize).map(|k| tidy(start + k as f64 * step)).collect())
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("'{}' is not a non-negative integer", s.trim())))
        .collect()
}
