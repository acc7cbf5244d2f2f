//! Plain-text key=value configuration for the separation experiment.
//!
//! Lines hold `key = value`; `#` starts a comment; blank lines are skipped.
//! Integer lists are comma separated, and `a..b` denotes an inclusive range.
//! Validation collects every problem before reporting.

use std::path::PathBuf;

use lapnode::identify::{RadiusSource, SeparationConfig};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub separation: SeparationConfig,
    pub out_dir: PathBuf,
}

fn parse_usize_list(value: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in value.split(',') {
        let item = item.trim();
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
            let b: usize = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
            if b < a {
                return Err(format!("empty range `{item}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().map_err(|_| format!("bad integer `{item}`"))?);
        }
    }
    Ok(out)
}

/// Parses and validates a config file's text. On failure returns every
/// error found, one message per line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let mut errors = Vec::new();
    let mut n_values = None;
    let mut r = None;
    let mut k_grid = None;
    let mut trials = None;
    let mut seed = None;
    let mut m = None;
    let mut t = None;
    let mut radius = RadiusSource::Truncated;
    let mut out_dir = PathBuf::from(".");

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected `key = value`, got `{line}`"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => match parse_usize_list(value) {
                Ok(v) => n_values = Some(v),
                Err(e) => errors.push(format!("line {line_no}: n: {e}")),
            },
            "r" => match value.parse() {
                Ok(v) => r = Some(v),
                Err(_) => errors.push(format!("line {line_no}: r: bad integer `{value}`")),
            },
            "k" => match parse_usize_list(value) {
                Ok(v) => k_grid = Some(v),
                Err(e) => errors.push(format!("line {line_no}: k: {e}")),
            },
            "trials" => match value.parse() {
                Ok(v) => trials = Some(v),
                Err(_) => errors.push(format!("line {line_no}: trials: bad integer `{value}`")),
            },
            "seed" => match value.parse() {
                Ok(v) => seed = Some(v),
                Err(_) => errors.push(format!("line {line_no}: seed: bad integer `{value}`")),
            },
            "m" => match value.parse() {
                Ok(v) => m = Some(v),
                Err(_) => errors.push(format!("line {line_no}: m: bad integer `{value}`")),
            },
            "t" => match value.parse() {
                Ok(v) => t = Some(v),
                Err(_) => errors.push(format!("line {line_no}: t: bad number `{value}`")),
            },
            "radius" => match RadiusSource::parse(value) {
                Some(v) => radius = v,
                None => errors.push(format!(
                    "line {line_no}: radius: `{value}` is not one of psi, full, truncated"
                )),
            },
            "out_dir" => out_dir = PathBuf::from(value),
            other => errors.push(format!("line {line_no}: unknown key `{other}`")),
        }
    }

    let mut require = |name: &str, missing: bool| {
        if missing {
            errors.push(format!("missing required key `{name}`"));
        }
    };
    require("n", n_values.is_none());
    require("r", r.is_none());
    require("k", k_grid.is_none());
    require("trials", trials.is_none());
    require("seed", seed.is_none());
    require("m", m.is_none());
    require("t", t.is_none());

    if !errors.is_empty() {
        return Err(errors);
    }

    let separation = SeparationConfig {
        n_values: n_values.unwrap(),
        r: r.unwrap(),
        k_grid: k_grid.unwrap(),
        trials: trials.unwrap(),
        seed: seed.unwrap(),
        m: m.unwrap(),
        t: t.unwrap(),
        radius_source: radius,
    };
    separation.validate()?;
    Ok(ExperimentConfig { separation, out_dir })
}

/// The default experiment grid, written out as a config file.
pub fn default_config_text() -> &'static str {
    "# separation experiment\n\
     n = 512,1024,2048\n\
     r = 3\n\
     k = 0..12\n\
     trials = 500\n\
     seed = 1\n\
     m = 2\n\
     t = 1.0\n\
     radius = truncated\n\
     out_dir = out\n"
}
