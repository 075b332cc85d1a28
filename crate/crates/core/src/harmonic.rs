//! Harmonic measure in the half-plane and the strip `R x [0, pi]`, and a
//! Brownian exit sampler for checking them, optionally with a vertical slit
//! `[0, i phi]` cut into the strip.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};
use crate::rng;

/// `P_z(exit the half-plane in [x1, x2])`; either end may be infinite.
pub fn hm_halfplane_interval(z: Complex64, x1: f64, x2: f64) -> Result<f64> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(SleError::Domain(format!("{z} is not an interior point of the half-plane")));
    }
    if !(x1 < x2) {
        return Err(SleError::Domain(format!("need x1 < x2, got [{x1}, {x2}]")));
    }
    let arg_to = |x: f64| {
        if x == f64::INFINITY {
            PI
        } else if x == f64::NEG_INFINITY {
            0.0
        } else {
            (z - x).arg()
        }
    };
    Ok((arg_to(x2) - arg_to(x1)) / PI)
}

/// `P_{i theta}(exit the strip R x [0, pi] through R) = (pi - theta) / pi`.
pub fn hm_strip_bottom(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(SleError::Domain(format!("theta = {theta} outside [0, pi]")));
    }
    Ok((PI - theta) / PI)
}

/// `arg(1 - eps/(z - y))` against its bound `(16/3) eps Im z / (x - y)^2`,
/// valid for `|z - x| <= (x - y)/4` and `eps <= (x - y)/2`.
pub fn arg_interval_bound(z: Complex64, y: f64, eps: f64, x: f64) -> Result<(f64, f64)> {
    let span = x - y;
    if !(span > 0.0) || !(z.im >= 0.0) || !(eps >= 0.0) {
        return Err(SleError::Domain(format!(
            "need y < x, eps >= 0 and Im z >= 0 (y = {y}, x = {x}, eps = {eps}, z = {z})"
        )));
    }
    if (z - x).norm() > span / 4.0 || eps > span / 2.0 {
        return Err(SleError::OutOfRegime(format!(
            "need |z - x| <= (x - y)/4 and eps <= (x - y)/2 (z = {z}, eps = {eps})"
        )));
    }
    let lhs = (Complex64::new(1.0, 0.0) - eps / (z - y)).arg();
    let rhs = 16.0 / 3.0 * eps * z.im / (span * span);
    Ok((lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    HalfPlane,
    /// `R x [0, pi]`
    Strip,
    /// The strip minus the segment `[0, i phi]`.
    StripWithSlit { phi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryLabel {
    /// The real line.
    Bottom,
    /// The line `Im z = pi`.
    Top,
    Slit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub label: BoundaryLabel,
    pub point: Complex64,
    pub steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Distance to the boundary at which the walk snaps to it.
    pub step: f64,
    pub max_steps: u64,
    /// Half-plane walks this far out finish with an exact Poisson draw.
    pub escape_radius: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            max_steps: 1_000_000,
            escape_radius: 1e4,
        }
    }
}

impl Domain {
    fn validate(&self) -> Result<()> {
        match *self {
            Domain::StripWithSlit { phi } if !(phi > 0.0 && phi < PI) => Err(SleError::Domain(
                format!("slit height {phi} must lie in (0, pi)"),
            )),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Domain::HalfPlane => z.im >= 0.0,
            Domain::Strip | Domain::StripWithSlit { .. } => z.im >= 0.0 && z.im <= PI,
        }
    }

    /// Distance to the boundary and the nearest boundary point.
    fn nearest(&self, z: Complex64) -> (f64, BoundaryLabel, Complex64) {
        let bottom = (z.im, BoundaryLabel::Bottom, Complex64::new(z.re, 0.0));
        match *self {
            Domain::HalfPlane => bottom,
            Domain::Strip => {
                let top = (PI - z.im, BoundaryLabel::Top, Complex64::new(z.re, PI));
                if top.0 < bottom.0 {
                    top
                } else {
                    bottom
                }
            }
            Domain::StripWithSlit { phi } => {
                let top = (PI - z.im, BoundaryLabel::Top, Complex64::new(z.re, PI));
                let foot = Complex64::new(0.0, z.im.clamp(0.0, phi));
                let slit = ((z - foot).norm(), BoundaryLabel::Slit, foot);
                [top, slit]
                    .into_iter()
                    .fold(bottom, |best, c| if c.0 < best.0 { c } else { best })
            }
        }
    }
}

/// Walk-on-spheres: jump to a uniform point of the largest disk around the
/// current point that stays in the domain, until within `cfg.step` of the
/// boundary, then snap to the nearest boundary point.
pub fn brownian_exit<R: Rng + ?Sized>(
    domain: Domain,
    z: Complex64,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<ExitSample> {
    domain.validate()?;
    if !(cfg.step > 0.0) {
        return Err(SleError::Validation(format!("step {} must be positive", cfg.step)));
    }
    if !domain.contains(z) || !z.re.is_finite() {
        return Err(SleError::Domain(format!("{z} is outside the domain")));
    }
    let mut w = z;
    for steps in 0..cfg.max_steps {
        let (d, label, foot) = domain.nearest(w);
        if d <= cfg.step {
            return Ok(ExitSample {
                label,
                point: foot,
                steps,
            });
        }
        if domain == Domain::HalfPlane && w.norm() > cfg.escape_radius {
            // exact Poisson kernel draw from here
            let u: f64 = rng.random();
            let x = w.re + w.im * (PI * (u - 0.5)).tan();
            return Ok(ExitSample {
                label: BoundaryLabel::Bottom,
                point: Complex64::new(x, 0.0),
                steps,
            });
        }
        let angle: f64 = rng.random::<f64>() * 2.0 * PI;
        w += Complex64::from_polar(d, angle);
    }
    Err(SleError::Sampler(format!(
        "no exit within {} steps from {z}",
        cfg.max_steps
    )))
}

/// Fraction of `n` exits from `z` accepted by `hit`, sample `i` drawing from
/// its own stream so the result does not depend on scheduling.
pub fn exit_frequency<P>(
    domain: Domain,
    z: Complex64,
    cfg: &SamplerConfig,
    n: u64,
    seed: u64,
    hit: P,
) -> Result<u64>
where
    P: Fn(&ExitSample) -> bool + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::substream(seed, rng::domain::HARMONIC, i);
            brownian_exit(domain, z, cfg, &mut r).map(|s| u64::from(hit(&s)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}
