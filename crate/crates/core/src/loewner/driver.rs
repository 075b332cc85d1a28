//! Driving functions for the Loewner equation.
//!
//! A path holds knot values `U_0 = 0, U_1, ..., U_M`. During step `k`
//! (the interval `[t_{k-1}, t_k]`) the driver is held at `U_{k-1}`; the jump
//! to `U_k` takes effect at `t_k`.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};
use crate::params::SleParams;
use crate::rng;

pub const DEFAULT_STEP_CAP: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverKind {
    Brownian,
    Constant,
    Custom,
    /// Brownian path sampled on a state-dependent (non-uniform) grid.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrivingPath {
    /// Uniform step, or the smallest step for adaptive paths.
    pub dt: f64,
    pub values: Vec<f64>,
    /// Knot times for non-uniform paths; `None` means `t_k = k * dt`.
    pub knots: Option<Vec<f64>>,
    /// Step lengths of non-uniform paths, kept separately because steps far
    /// below the resolution of the clock still move the flow.
    pub lengths: Option<Vec<f64>>,
    pub seed: u64,
    pub kind: DriverKind,
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    dt: f64,
    seed: u64,
    kind: DriverKind,
    count: usize,
}

impl DrivingPath {
    pub fn constant(value: f64, dt: f64, steps: usize) -> Result<Self> {
        check_step(dt)?;
        let mut values = vec![value; steps + 1];
        values[0] = 0.0;
        Ok(Self {
            dt,
            values,
            knots: None,
            lengths: None,
            seed: 0,
            kind: DriverKind::Constant,
        })
    }

    pub fn custom(dt: f64, values: Vec<f64>) -> Result<Self> {
        check_step(dt)?;
        validate_values(&values)?;
        Ok(Self {
            dt,
            values,
            knots: None,
            lengths: None,
            seed: 0,
            kind: DriverKind::Custom,
        })
    }

    /// Non-uniform path from knot times and values (both starting at zero).
    pub fn from_knots(times: Vec<f64>, values: Vec<f64>, seed: u64) -> Result<Self> {
        validate_values(&values)?;
        if times.len() != values.len() || times[0] != 0.0 {
            return Err(SleError::Validation(
                "knot times must match values and start at 0".into(),
            ));
        }
        let lengths: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        if lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(SleError::Validation("knot times must increase".into()));
        }
        Self::from_steps(lengths, values, seed)
    }

    /// Non-uniform path from step lengths and the `M + 1` knot values.
    pub fn from_steps(lengths: Vec<f64>, values: Vec<f64>, seed: u64) -> Result<Self> {
        validate_values(&values)?;
        if lengths.len() + 1 != values.len() {
            return Err(SleError::Validation(format!(
                "{} step lengths for {} knot values",
                lengths.len(),
                values.len()
            )));
        }
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SleError::Validation("step lengths must be positive".into()));
        }
        let dt = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut times = Vec::with_capacity(values.len());
        let mut t = 0.0;
        times.push(t);
        for l in &lengths {
            t += l;
            times.push(t);
        }
        Ok(Self {
            dt,
            values,
            knots: Some(times),
            lengths: Some(lengths),
            seed,
            kind: DriverKind::Adaptive,
        })
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        match &self.knots {
            Some(t) => t[k],
            None => k as f64 * self.dt,
        }
    }

    pub fn step_len(&self, k: usize) -> f64 {
        match &self.lengths {
            Some(l) => l[k - 1],
            None => self.dt,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    /// Smallest `m` with `t_m >= t` (up to rounding), clamped to `M`.
    pub fn step_covering(&self, t: f64) -> usize {
        let slack = 1e-12 * t.abs().max(self.dt);
        if t >= self.horizon() - slack {
            return self.steps();
        }
        match &self.knots {
            Some(times) => times.partition_point(|&s| s < t - slack).min(self.steps()),
            None => (((t - slack) / self.dt).ceil().max(0.0) as usize).min(self.steps()),
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = DumpHeader {
            dt: self.dt,
            seed: self.seed,
            kind: self.kind,
            count: self.values.len(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        if let Some(lengths) = &self.lengths {
            out.write_all(&0f64.to_le_bytes())?;
            for l in lengths {
                out.write_all(&l.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Inverse of [`DrivingPath::write_to`]: a JSON header line
    /// `{dt, seed, kind, count}` followed by `count` little-endian f64
    /// values (and, for adaptive paths, a zero followed by the `count - 1`
    /// step lengths).
    pub fn read_from<R: BufRead>(mut input: R) -> Result<Self> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: DumpHeader = serde_json::from_str(line.trim_end())?;
        let read_block = |input: &mut R| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; header.count * 8];
            input
                .read_exact(&mut buf)
                .map_err(|e| SleError::Format(format!("truncated driver payload: {e}")))?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        };
        let values = read_block(&mut input)?;
        let mut path = if header.kind == DriverKind::Adaptive {
            let mut lengths = read_block(&mut input)?;
            lengths.remove(0);
            DrivingPath::from_steps(lengths, values, header.seed)?
        } else {
            DrivingPath::custom(header.dt, values)?
        };
        path.seed = header.seed;
        path.kind = header.kind;
        Ok(path)
    }
}

fn check_step(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(SleError::Validation(format!("time step {dt} must be positive")))
    }
}

fn validate_values(values: &[f64]) -> Result<()> {
    if values.len() < 2 {
        return Err(SleError::Validation("a driving path needs at least one step".into()));
    }
    if values[0] != 0.0 {
        return Err(SleError::Validation("driving path must start at U_0 = 0".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SleError::Validation("driving path contains non-finite values".into()));
    }
    Ok(())
}

/// Brownian driver on a uniform grid: `ceil(horizon/dt)` increments with
/// variance `dt`, reproducible from `seed`.
///
/// In the `a = 2/kappa` parametrisation the driver is a standard Brownian
/// motion for every kappa, so `params` only participates in validation.
pub fn sample_driver(
    params: &SleParams,
    horizon: f64,
    dt: f64,
    seed: u64,
    step_cap: usize,
) -> Result<DrivingPath> {
    let _ = params;
    check_step(dt)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SleError::Validation(format!("horizon {horizon} must be positive")));
    }
    let ratio = horizon / dt;
    let steps = (ratio - 1e-9 * ratio).ceil().max(1.0);
    if steps > step_cap as f64 {
        return Err(SleError::Resource(format!(
            "{steps} steps requested, cap is {step_cap}"
        )));
    }
    let steps = steps as usize;
    let mut rng = rng::stream(seed, 0);
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps + 1);
    let mut u = 0.0;
    values.push(u);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        u += sd * z;
        values.push(u);
    }
    Ok(DrivingPath {
        dt,
        values,
        knots: None,
        lengths: None,
        seed,
        kind: DriverKind::Brownian,
    })
}
