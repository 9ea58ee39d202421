//! Piecewise-constant transmit-power schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::RateFunction;

/// Transmit at `power` on `(previous until, until]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub until: f64,
    pub power: f64,
}

impl Segment {
    pub fn new(until: f64, power: f64) -> Self {
        Self { until, power }
    }
}

/// A schedule on `[0, horizon]`. Power is zero after the last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPolicy {
    pub horizon: f64,
    pub segments: Vec<Segment>,
}

impl PowerPolicy {
    pub fn new(horizon: f64, segments: Vec<Segment>) -> Result<Self> {
        let policy = Self { horizon, segments };
        policy.validate()?;
        Ok(policy)
    }

    /// Transmit nothing until `horizon`.
    pub fn idle(horizon: f64) -> Self {
        Self {
            horizon,
            segments: Vec::new(),
        }
    }

    /// A single constant-power run over `(0, horizon]`.
    pub fn constant(horizon: f64, power: f64) -> Result<Self> {
        Self::new(horizon, vec![Segment::new(horizon, power)])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidPolicy(format!(
                "bad horizon {}",
                self.horizon
            )));
        }
        let mut prev = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if !seg.until.is_finite() || seg.until <= prev {
                return Err(Error::InvalidPolicy(format!(
                    "segment {i} ends at {} which does not follow {prev}",
                    seg.until
                )));
            }
            if !(seg.power.is_finite() && seg.power >= 0.0) {
                return Err(Error::InvalidPolicy(format!(
                    "segment {i} has invalid power {}",
                    seg.power
                )));
            }
            prev = seg.until;
        }
        if prev > self.horizon {
            return Err(Error::InvalidPolicy(format!(
                "last segment ends at {prev} past horizon {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `(start, end, power)` for every segment.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let starts = std::iter::once(0.0).chain(self.segments.iter().map(|s| s.until));
        starts
            .zip(self.segments.iter())
            .map(|(start, seg)| (start, seg.until, seg.power))
    }

    /// Segment end instants, in order.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(|s| s.until)
    }

    /// Power in effect on the left-open piece containing `t`.
    pub fn power_at(&self, t: f64) -> f64 {
        self.pieces()
            .find(|&(start, end, _)| t > start && t <= end)
            .map_or(0.0, |(_, _, p)| p)
    }

    /// Energy spent on `[0, t]`.
    pub fn energy_spent_by(&self, t: f64) -> f64 {
        let mut spent = 0.0;
        for (start, end, power) in self.pieces() {
            if t <= start {
                break;
            }
            spent += power * (end.min(t) - start);
        }
        spent
    }

    pub fn total_energy(&self) -> f64 {
        self.pieces().map(|(a, b, p)| p * (b - a)).sum()
    }

    /// Bits departed over the whole horizon.
    pub fn throughput(&self, rate: &dyn RateFunction) -> f64 {
        throughput(self, rate)
    }

    /// Merges adjacent segments whose powers are exactly equal.
    pub fn coalesced(&self) -> PowerPolicy {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for seg in &self.segments {
            match out.last_mut() {
                Some(last) if last.power == seg.power => last.until = seg.until,
                _ => out.push(*seg),
            }
        }
        PowerPolicy {
            horizon: self.horizon,
            segments: out,
        }
    }

    /// Drops trailing zero-power segments.
    pub fn trimmed(&self) -> PowerPolicy {
        let mut segments = self.segments.clone();
        while segments.last().is_some_and(|s| s.power == 0.0) {
            segments.pop();
        }
        PowerPolicy {
            horizon: self.horizon,
            segments,
        }
    }

    /// True when both policies have the same number of segments and every
    /// end time and power agrees within `tol * max(1, |x|)`.
    pub fn approx_eq(&self, other: &PowerPolicy, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        self.segments.len() == other.segments.len()
            && self
                .segments
                .iter()
                .zip(&other.segments)
                .all(|(a, b)| close(a.until, b.until) && close(a.power, b.power))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let policy: PowerPolicy = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        policy.validate()?;
        Ok(policy)
    }

    /// Two-column `until,power` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("until,power\n");
        for seg in &self.segments {
            out.push_str(&crate::io::fmt_num(seg.until));
            out.push(',');
            out.push_str(&crate::io::fmt_num(seg.power));
            out.push('\n');
        }
        out
    }
}

/// Exact throughput of a piecewise-constant schedule: `sum (i_n - i_{n-1}) r(p_n)`.
pub fn throughput(policy: &PowerPolicy, rate: &dyn RateFunction) -> f64 {
    policy
        .pieces()
        .map(|(start, end, power)| (end - start) * rate.eval(power))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::Awgn;

    fn reference() -> PowerPolicy {
        PowerPolicy::new(
            12.0,
            vec![
                Segment::new(4.0, 0.75),
                Segment::new(7.0, 8.0 / 3.0),
                Segment::new(12.0, 2.2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn throughput_of_reference_schedule() {
        // independent summation of 4 r(0.75) + 3 r(8/3) + 5 r(2.2)
        let expected = 2.0 * 1.75f64.log2() + 1.5 * (11.0f64 / 3.0).log2() + 2.5 * 3.2f64.log2();
        assert!((reference().throughput(&Awgn) - expected).abs() < 1e-12);
        assert!((expected - 8.621593283771).abs() < 1e-11);
    }

    #[test]
    fn throughput_trivial_cases() {
        assert_eq!(PowerPolicy::idle(12.0).throughput(&Awgn), 0.0);
        let p = PowerPolicy::constant(4.0, 1.0).unwrap();
        assert!((p.throughput(&Awgn) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn energy_and_power_lookup() {
        let p = reference();
        assert_eq!(p.energy_spent_by(4.0), 3.0);
        assert!((p.energy_spent_by(7.0) - 11.0).abs() < 1e-12);
        assert!((p.total_energy() - 22.0).abs() < 1e-12);
        assert_eq!(p.energy_spent_by(0.0), 0.0);
        assert_eq!(p.power_at(4.0), 0.75);
        assert_eq!(p.power_at(4.5), 8.0 / 3.0);
        assert_eq!(p.power_at(13.0), 0.0);
    }

    #[test]
    fn validation_rejects_malformed_schedules() {
        assert!(
            PowerPolicy::new(5.0, vec![Segment::new(2.0, 1.0), Segment::new(2.0, 1.0)]).is_err()
        );
        assert!(PowerPolicy::new(5.0, vec![Segment::new(6.0, 1.0)]).is_err());
        assert!(PowerPolicy::new(5.0, vec![Segment::new(2.0, -1.0)]).is_err());
        assert!(PowerPolicy::new(5.0, vec![Segment::new(0.0, 1.0)]).is_err());
        assert!(PowerPolicy::new(5.0, vec![Segment::new(2.0, f64::NAN)]).is_err());
    }

    #[test]
    fn json_and_csv_shapes() {
        let p = reference();
        let json = p.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["horizon"], 12.0);
        assert_eq!(value["segments"][0]["until"], 4.0);
        assert_eq!(value["segments"][0]["power"], 0.75);
        assert_eq!(PowerPolicy::from_json(&json).unwrap(), p);

        let csv = p.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "until,power");
        assert_eq!(lines[1], "4,0.75");
        assert_eq!(lines[2], "7,2.66666666667");
        assert_eq!(lines[3], "12,2.2");
    }

    #[test]
    fn coalesce_and_trim() {
        let p = PowerPolicy::new(
            6.0,
            vec![
                Segment::new(1.0, 2.0),
                Segment::new(2.0, 2.0),
                Segment::new(3.0, 1.0),
                Segment::new(4.0, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(p.coalesced().segments.len(), 3);
        assert_eq!(p.trimmed().segments.len(), 3);
        assert_eq!(p.coalesced().total_energy(), p.total_energy());
    }
}
