//! Recorded cursor traces shared with the browser client.
//!
//! ```text
//! # comment lines start with '#'
//! header base_radius=300 gain=40 sensitivity=2 decay_rate=0.7 brush_sigma=1.5 decay_enabled=1
//! 0.000 500 60
//! 0.016 503.2 61.0
//! ```
//!
//! The header may also carry `center_x`, `center_y` (default 0) and `dt_cap`
//! (default 0.05). Each record is `t x y`, whitespace separated, with `t`
//! non-decreasing. Replay starts from all-zero values; for every record it
//! applies the cursor update with the previous record's timestamp, then a
//! decay step over the same capped interval. The first record has a zero
//! interval. Replay output is one value per line with nine significant
//! digits in exponent form, e.g. `-1.35647001e0`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::latent::{CursorEvent, InteractionConfig, LatentVector, Point, TickRingState};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceHeader<T> {
    pub center: Point<T>,
    pub base_radius: T,
    pub gain: T,
    pub config: InteractionConfig<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTrace<T> {
    pub header: TraceHeader<T>,
    pub events: Vec<CursorEvent<T>>,
}

impl<T: Scalar> InteractionTrace<T> {
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<TraceHeader<T>> = None;
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::TraceParse {
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix("header") {
                if header.is_some() {
                    return Err(err("duplicate header".into()));
                }
                header = Some(parse_header(rest).map_err(err)?);
                continue;
            }
            if header.is_none() {
                return Err(err("record before header".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected `t x y`, found {} fields",
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<T> {
                s.parse::<T>()
                    .map_err(|_| err(format!("{s:?} is not a number")))
            };
            let ev = CursorEvent {
                timestamp: num(fields[0])?,
                position: Point::new(num(fields[1])?, num(fields[2])?),
            };
            if let Some(prev) = events.last().map(|e: &CursorEvent<T>| e.timestamp) {
                if ev.timestamp < prev {
                    return Err(err("timestamp decreased".into()));
                }
            }
            events.push(ev);
        }
        let header = header.ok_or(Error::TraceParse {
            line: 0,
            message: "missing header".into(),
        })?;
        Ok(InteractionTrace { header, events })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let c = &h.config;
        let mut out = String::new();
        writeln!(
            out,
            "header base_radius={} gain={} sensitivity={} decay_rate={} brush_sigma={} decay_enabled={} center_x={} center_y={} dt_cap={}",
            h.base_radius,
            h.gain,
            c.sensitivity,
            c.decay_rate,
            c.brush_sigma,
            u8::from(c.decay_enabled),
            h.center.x,
            h.center.y,
            c.dt_cap
        )
        .unwrap();
        for e in &self.events {
            writeln!(out, "{} {} {}", e.timestamp, e.position.x, e.position.y).unwrap();
        }
        out
    }

    /// Replays the trace from a zeroed ring and returns the final values.
    pub fn replay(&self) -> Result<LatentVector<T>> {
        let h = &self.header;
        h.config.validate()?;
        let mut ring = TickRingState::new(h.center, h.base_radius, h.gain)?;
        let mut prev = match self.events.first() {
            Some(e) => e.timestamp,
            None => return Ok(ring.values().clone()),
        };
        for ev in &self.events {
            ring.apply_cursor(ev, prev, &h.config)?;
            ring.decay_step((ev.timestamp - prev).min(h.config.dt_cap), &h.config);
            prev = ev.timestamp;
        }
        Ok(ring.values().clone())
    }
}

fn parse_header<T: Scalar>(rest: &str) -> Result<TraceHeader<T>, String> {
    let mut base_radius = None;
    let mut gain = None;
    let mut config = InteractionConfig::<T>::default();
    let (mut sensitivity, mut decay_rate, mut sigma, mut decay) = (None, None, None, None);
    let mut center = Point::new(T::zero(), T::zero());
    for tok in rest.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("header token {tok:?} is not key=value"))?;
        let num = || {
            value
                .parse::<T>()
                .map_err(|_| format!("header {key}: {value:?} is not a number"))
        };
        match key {
            "base_radius" => base_radius = Some(num()?),
            "gain" => gain = Some(num()?),
            "sensitivity" => sensitivity = Some(num()?),
            "decay_rate" => decay_rate = Some(num()?),
            "brush_sigma" => sigma = Some(num()?),
            "decay_enabled" => {
                decay = Some(match value {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(format!("decay_enabled: {value:?} is not a flag")),
                })
            }
            "center_x" => center.x = num()?,
            "center_y" => center.y = num()?,
            "dt_cap" => config.dt_cap = num()?,
            _ => return Err(format!("unknown header key {key:?}")),
        }
    }
    let need = |v: Option<T>, k: &str| v.ok_or_else(|| format!("header missing {k}"));
    config.sensitivity = need(sensitivity, "sensitivity")?;
    config.decay_rate = need(decay_rate, "decay_rate")?;
    config.brush_sigma = need(sigma, "brush_sigma")?;
    config.decay_enabled = decay.ok_or("header missing decay_enabled")?;
    Ok(TraceHeader {
        center,
        base_radius: need(base_radius, "base_radius")?,
        gain: need(gain, "gain")?,
        config,
    })
}

/// Formats values one per line with nine significant digits.
pub fn format_values<T: Scalar>(values: &[T]) -> String {
    let mut out = String::with_capacity(values.len() * 16);
    for v in values {
        writeln!(out, "{:.8e}", v.to_f64_lossless()).unwrap();
    }
    out
}

/// Parses a one-float-per-line file; blank lines and `#` comments are skipped.
pub fn parse_values<T: Scalar>(text: &str) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<T>().map_err(|_| Error::TraceParse {
            line: idx + 1,
            message: format!("{line:?} is not a number"),
        })?);
    }
    Ok(out)
}
