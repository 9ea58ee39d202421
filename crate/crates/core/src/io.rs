//! Scenario files, tunnel export and number formatting for tabular output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::PowerPolicy;
use crate::scenario::{Arrival, HarvestScenario};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    e_max: f64,
    arrivals: Vec<Arrival>,
}

/// Parses scenario JSON and normalizes it. Field problems are reported with
/// their JSON path, syntax problems with line and column.
pub fn parse_scenario(text: &str) -> Result<HarvestScenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    if !(file.e_max.is_finite() && file.e_max > 0.0) {
        return Err(Error::parse(
            "e_max",
            format!("must be positive, got {}", file.e_max),
        ));
    }
    for (i, a) in file.arrivals.iter().enumerate() {
        if !(a.t.is_finite() && a.t >= 0.0) {
            return Err(Error::parse(
                format!("arrivals[{i}].t"),
                format!("invalid time {}", a.t),
            ));
        }
        if !(a.e.is_finite() && a.e >= 0.0) {
            return Err(Error::parse(
                format!("arrivals[{i}].e"),
                format!("invalid energy {}", a.e),
            ));
        }
    }
    HarvestScenario::new(file.e_max, file.arrivals).normalize()
}

/// JSON text with arrivals sorted by time.
pub fn scenario_to_json(scenario: &HarvestScenario) -> String {
    let mut arrivals = scenario.arrivals().to_vec();
    arrivals.sort_by(|a, b| a.t.total_cmp(&b.t));
    let file = ScenarioFile {
        e_max: scenario.e_max(),
        arrivals,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<HarvestScenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("{}: {context}", path.display()),
            message,
        },
        other => other,
    })
}

pub fn write_scenario(scenario: &HarvestScenario, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &scenario_to_json(scenario))
}

pub fn read_policy(path: impl AsRef<Path>) -> Result<PowerPolicy> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    PowerPolicy::from_json(&text)
}

/// Writes through a sibling temp file and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, contents).map_err(|e| io_error(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// scientific notation only for very large or small magnitudes.
pub fn fmt_num(x: f64) -> String {
    fmt_sig(x, 12)
}

pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        return format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelRow {
    pub t: f64,
    pub cum_harvest: f64,
    pub lower_wall: f64,
    pub cum_spent: Option<f64>,
}

/// Step-plot rows of the energy tunnel: cumulative harvest (upper wall), the
/// same shifted down by `e_max` and floored at zero (lower wall), and the
/// cumulative spend of `policy` when one is given. Each arrival yields a row
/// just before and just after its jump; policy breakpoints yield one row.
pub fn export_tunnel(scenario: &HarvestScenario, policy: Option<&PowerPolicy>) -> Vec<TunnelRow> {
    let policy = policy.filter(|p| !p.is_empty());
    let e_max = scenario.e_max();
    let horizon = policy.map(|p| p.horizon);

    let mut instants: Vec<f64> = scenario
        .arrivals()
        .iter()
        .filter(|a| a.e > 0.0 && !horizon.is_some_and(|h| a.t > h))
        .map(|a| a.t)
        .collect();
    if let Some(p) = policy {
        instants.push(0.0);
        instants.extend(p.breakpoints());
        instants.push(p.horizon);
    }
    instants.sort_by(f64::total_cmp);
    instants.dedup();

    let row = |t: f64, harvest: f64| TunnelRow {
        t,
        cum_harvest: harvest,
        lower_wall: (harvest - e_max).max(0.0),
        cum_spent: policy.map(|p| p.energy_spent_by(t)),
    };

    let mut rows = Vec::with_capacity(2 * instants.len());
    for t in instants {
        let before = scenario.energy_before(t);
        let after = scenario.energy_through(t);
        rows.push(row(t, before));
        if after != before {
            rows.push(row(t, after));
        }
    }
    rows
}

pub fn tunnel_csv(rows: &[TunnelRow], with_policy: bool) -> String {
    let mut out = String::from("t,cum_harvest,lower_wall");
    if with_policy {
        out.push_str(",cum_spent");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{}",
            fmt_num(r.t),
            fmt_num(r.cum_harvest),
            fmt_num(r.lower_wall)
        ));
        if with_policy {
            out.push(',');
            out.push_str(&fmt_num(r.cum_spent.unwrap_or(0.0)));
        }
        out.push('\n');
    }
    out
}
