//! Forward Loewner flow of boundary and interior points on a fixed driver.
//!
//! Each step is integrated exactly for a constant driver,
//! `gap' = sqrt(gap^2 + 2 a dt)`, and the driver jump is applied at the
//! step boundary.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driver::DrivingPath;
use crate::error::{Result, SleError};

pub const DEFAULT_GRID_CAP: u32 = 16;

/// Gap below which a boundary point counts as swallowed.
pub fn swallow_tolerance(a: f64, dt: f64) -> f64 {
    0.1 * (a * dt).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointStatus {
    Alive,
    Swallowed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedPoint {
    pub x0: f64,
    /// `g_t(x0) - U_t`
    pub gap: f64,
    /// `g_t'(x0)`
    pub deriv: f64,
    pub status: PointStatus,
}

impl TrackedPoint {
    pub fn new(x0: f64) -> Self {
        Self {
            x0,
            gap: x0,
            deriv: 1.0,
            status: PointStatus::Alive,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.status == PointStatus::Alive
    }
}

/// Advance `point` across step `step` (1-based) of duration `dt`.
pub fn advance_step(
    point: TrackedPoint,
    u_before: f64,
    u_after: f64,
    dt: f64,
    a: f64,
    step: usize,
) -> TrackedPoint {
    if !point.is_alive() {
        return point;
    }
    let flowed = (point.gap * point.gap + 2.0 * a * dt).sqrt();
    let gap = flowed + u_before - u_after;
    let deriv = point.deriv * point.gap / flowed;
    let status = if gap <= swallow_tolerance(a, dt) {
        PointStatus::Swallowed(step)
    } else {
        PointStatus::Alive
    };
    TrackedPoint {
        x0: point.x0,
        gap,
        deriv,
        status,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SwallowTime {
    Finite { step: usize, time: f64 },
    Survived { horizon: f64 },
}

impl SwallowTime {
    pub fn time(&self) -> Option<f64> {
        match *self {
            SwallowTime::Finite { time, .. } => Some(time),
            SwallowTime::Survived { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SwallowTime::Finite { .. })
    }

    /// Total order with survivors after every finite time.
    pub fn order_key(&self) -> (u8, f64) {
        match *self {
            SwallowTime::Finite { time, .. } => (0, time),
            SwallowTime::Survived { horizon } => (1, horizon),
        }
    }
}

fn check_point(x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(SleError::Domain(format!("boundary point {x} must be positive")))
    }
}

pub fn swallow_time(driver: &DrivingPath, x: f64, a: f64) -> Result<SwallowTime> {
    check_point(x)?;
    let mut p = TrackedPoint::new(x);
    for k in 1..=driver.steps() {
        p = advance_step(
            p,
            driver.values[k - 1],
            driver.values[k],
            driver.step_len(k),
            a,
            k,
        );
        if let PointStatus::Swallowed(step) = p.status {
            return Ok(SwallowTime::Finite {
                step,
                time: driver.time(step),
            });
        }
    }
    Ok(SwallowTime::Survived {
        horizon: driver.horizon(),
    })
}

/// Flow `x` to time `t` (rounded up to a step end); returns the tracked state.
pub fn flow_point_to(driver: &DrivingPath, x: f64, a: f64, t: f64) -> Result<TrackedPoint> {
    check_point(x)?;
    let m = driver.step_covering(t);
    let mut p = TrackedPoint::new(x);
    for k in 1..=m {
        p = advance_step(p, driver.values[k - 1], driver.values[k], driver.step_len(k), a, k);
        if !p.is_alive() {
            break;
        }
    }
    Ok(p)
}

/// Swallowing times of `x = k 2^-n`, `k = 1..2^n`, from one sweep.
pub fn swallow_times_grid(
    driver: &DrivingPath,
    n: u32,
    a: f64,
    cap: u32,
) -> Result<Vec<SwallowTime>> {
    if n == 0 || n > cap {
        return Err(SleError::Resource(format!(
            "grid level {n} outside 1..={cap}"
        )));
    }
    let count = 1usize << n;
    let h = 1.0 / count as f64;
    let mut gaps: Vec<f64> = (1..=count).map(|k| k as f64 * h).collect();
    let mut out = vec![
        SwallowTime::Survived {
            horizon: driver.horizon()
        };
        count
    ];
    // swallowed points always form a prefix
    let mut first = 0;
    for k in 1..=driver.steps() {
        if first == count {
            break;
        }
        let dt = driver.step_len(k);
        let shift = driver.values[k - 1] - driver.values[k];
        let c = 2.0 * a * dt;
        for g in &mut gaps[first..] {
            *g = (*g * *g + c).sqrt() + shift;
        }
        let tol = swallow_tolerance(a, dt);
        while first < count && gaps[first] <= tol {
            out[first] = SwallowTime::Finite {
                step: k,
                time: driver.time(k),
            };
            first += 1;
        }
    }
    Ok(out)
}

/// Forward image `g_t(z)` of a point of the closed upper half-plane, or
/// `None` if it was swallowed before `t`.
pub fn forward_map(driver: &DrivingPath, z: Complex64, a: f64, t: f64) -> Option<Complex64> {
    let m = driver.step_covering(t);
    let mut gap = z;
    for k in 1..=m {
        let dt = driver.step_len(k);
        gap = upper_sqrt(gap * gap + 2.0 * a * dt) + (driver.values[k - 1] - driver.values[k]);
        if gap.norm() <= swallow_tolerance(a, dt) {
            return None;
        }
    }
    Some(gap + driver.values[m])
}

/// Swallowing time of an interior point `z`.
///
/// Within a step the flow is explicit, `(g - U)^2` moving by `2 a s`, so a
/// point whose squared gap crosses zero inside the step is located exactly
/// in time. Otherwise the point counts as swallowed once its gap drops
/// below the step tolerance.
pub fn swallow_time_interior(driver: &DrivingPath, z: Complex64, a: f64) -> Result<SwallowTime> {
    if !(z.im > 0.0 && z.re.is_finite() && z.im.is_finite()) {
        return Err(SleError::Domain(format!("{z} is not in the upper half-plane")));
    }
    let mut gap = z;
    for k in 1..=driver.steps() {
        let dt = driver.step_len(k);
        let sq = gap * gap;
        let span = 2.0 * a * dt;
        if sq.re < 0.0 && sq.re + span >= 0.0 && sq.im.abs() <= 1e-12 * sq.norm() {
            let s = -sq.re / (2.0 * a);
            return Ok(SwallowTime::Finite {
                step: k,
                time: driver.time(k - 1) + s,
            });
        }
        gap = upper_sqrt(sq + span) + (driver.values[k - 1] - driver.values[k]);
        if gap.norm() <= swallow_tolerance(a, dt) || gap.im <= 0.0 {
            let sq = gap * gap;
            let rest = if sq.re < 0.0 && sq.im.abs() <= 1e-12 * sq.norm() {
                -sq.re / (2.0 * a)
            } else {
                0.0
            };
            return Ok(SwallowTime::Finite {
                step: k,
                time: driver.time(k) + rest,
            });
        }
    }
    Ok(SwallowTime::Survived {
        horizon: driver.horizon(),
    })
}

/// Square root on the branch with non-negative imaginary part.
pub fn upper_sqrt(w: Complex64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}
