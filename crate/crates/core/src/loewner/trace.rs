//! Trace points by reverse flow, and distances from boundary points to the
//! hull.
//!
//! With the driver constant on each step the hull is a union of slits, and
//! the inverse of one step is explicit:
//! `w -> c + sqrt((w - c)^2 - 2 a s)` on the upper branch. Starting the
//! reverse flow at `U_t + i delta` gives a point within `O(delta)` of the
//! tip; `delta = 0` gives the tip of the discretised hull itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driver::DrivingPath;
use super::flow::{swallow_tolerance, upper_sqrt};
use crate::error::{Result, SleError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time: f64,
    pub point: Complex64,
    /// Starting height of the reverse flow.
    pub mesh: f64,
}

fn check_time(driver: &DrivingPath, t: f64) -> Result<()> {
    let horizon = driver.horizon();
    if t.is_finite() && t >= 0.0 && t <= horizon * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(SleError::Domain(format!("time {t} outside [0, {horizon}]")))
    }
}

/// Step containing `t` and the part of it elapsed by `t`.
fn locate(driver: &DrivingPath, t: f64) -> (usize, f64) {
    if t >= driver.horizon() {
        let m = driver.steps();
        return (m, driver.step_len(m));
    }
    let m = driver.step_covering(t).max(1);
    let start = driver.time(m - 1);
    (m, (t - start).clamp(0.0, driver.step_len(m)))
}

fn inverse_step(w: Complex64, c: f64, span: f64) -> Complex64 {
    let v = w - c;
    c + upper_sqrt(v * v - span)
}

/// Approximate `gamma(t)` by running the reverse flow from `U_t + i delta`.
pub fn trace_point(driver: &DrivingPath, t: f64, delta: f64, a: f64) -> Result<TracePoint> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(SleError::Validation(format!("mesh {delta} must be non-negative")));
    }
    let point = trace_points(driver, &[t], delta, a)?[0];
    Ok(TracePoint {
        time: t,
        point,
        mesh: delta,
    })
}

/// Reverse-flow images for many times at once; `times` may be in any order.
///
/// All reverse flows share the backward pass over the driver, so the cost
/// is the number of steps times the number of points still being carried.
pub fn trace_points(driver: &DrivingPath, times: &[f64], delta: f64, a: f64) -> Result<Vec<Complex64>> {
    let mut starts = Vec::with_capacity(times.len());
    for (j, &t) in times.iter().enumerate() {
        check_time(driver, t)?;
        if t == 0.0 {
            continue;
        }
        let (m, part) = locate(driver, t);
        starts.push((m, part, j));
    }
    let mut out = vec![Complex64::new(0.0, delta); times.len()];
    // latest start first
    starts.sort_by(|p, q| q.0.cmp(&p.0));
    let mut live: Vec<(usize, Complex64)> = Vec::with_capacity(starts.len());
    let mut next = 0;
    let top = starts.first().map_or(0, |s| s.0);
    for k in (1..=top).rev() {
        let c = driver.values[k - 1];
        let span = 2.0 * a * driver.step_len(k);
        for w in live.iter_mut() {
            w.1 = inverse_step(w.1, c, span);
        }
        while next < starts.len() && starts[next].0 == k {
            let (_, part, j) = starts[next];
            live.push((j, inverse_step(Complex64::new(c, delta), c, 2.0 * a * part)));
            next += 1;
        }
        if let Some(bad) = live.iter().find(|w| !(w.1.re.is_finite() && w.1.im.is_finite())) {
            return Err(SleError::Solver {
                step: k,
                detail: format!("reverse flow of time {} left the plane", times[bad.0]),
            });
        }
    }
    for (j, w) in live {
        out[j] = w;
    }
    Ok(out)
}

/// Forward state of a real point at every knot up to `t`.
struct Track {
    gap: Vec<f64>,
    deriv: Vec<f64>,
    alive: bool,
}

fn track(driver: &DrivingPath, x: f64, a: f64, t: f64) -> Track {
    let (m, part) = locate(driver, t);
    track_steps(driver, x, a, m, part)
}

/// Like [`track`], up to `part` of step `m`.
fn track_steps(driver: &DrivingPath, x: f64, a: f64, m: usize, part: f64) -> Track {
    let mut gap = Vec::with_capacity(m + 1);
    let mut deriv = Vec::with_capacity(m + 1);
    let (mut g, mut d) = (x, 1.0);
    gap.push(g);
    deriv.push(d);
    for k in 1..=m {
        let dt = if k == m { part } else { driver.step_len(k) };
        let flowed = (g * g + 2.0 * a * dt).sqrt();
        d *= g / flowed;
        let next = if k == m && part < driver.step_len(k) {
            driver.values[k - 1]
        } else {
            driver.values[k]
        };
        g = flowed + driver.values[k - 1] - next;
        if g <= swallow_tolerance(a, driver.step_len(k)) {
            return Track {
                gap,
                deriv,
                alive: false,
            };
        }
        gap.push(g);
        deriv.push(d);
    }
    Track {
        gap,
        deriv,
        alive: true,
    }
}

/// Whether `x` is still unswallowed at time `t`.
pub fn alive_at(driver: &DrivingPath, x: f64, a: f64, t: f64) -> bool {
    x > 0.0 && track(driver, x, a, t).alive
}

/// `g_t(x) - U_t`, or `None` once `x` is swallowed.
pub fn gap_at(driver: &DrivingPath, x: f64, a: f64, t: f64) -> Option<f64> {
    let tx = track(driver, x, a, t);
    if x > 0.0 && tx.alive {
        tx.gap.last().copied()
    } else {
        None
    }
}

/// Relative gap below which a point counts as swallowed when locating the
/// edge of the hull: at a swallowing time the point just taken still has a
/// tiny positive gap.
pub const EDGE_RATIO: f64 = 1e-6;

/// Bracket `[lo, hi]` around the right end of the hull on `[0, x)`: `lo` is
/// swallowed by `t` (or 0) and `hi` is alive. Points whose gap is below
/// `EDGE_RATIO` times that of `x` are counted as swallowed.
pub fn swallowed_edge(driver: &DrivingPath, x: f64, a: f64, t: f64, rel_tol: f64) -> (f64, f64) {
    edge_above(driver, x, a, t, rel_tol, 0.0)
}

fn edge_above(driver: &DrivingPath, x: f64, a: f64, t: f64, rel_tol: f64, known: f64) -> (f64, f64) {
    let (m, part) = locate(driver, t);
    edge_at(driver, x, a, (m, part), rel_tol, known)
}

fn edge_at(driver: &DrivingPath, x: f64, a: f64, at: (usize, f64), rel_tol: f64, known: f64) -> (f64, f64) {
    let (m, part) = at;
    let floor = EDGE_RATIO * track_steps(driver, x, a, m, part).gap.last().copied().unwrap_or(x);
    let (mut lo, mut hi) = (known, x);
    while hi - lo > rel_tol * x {
        let mid = 0.5 * (lo + hi);
        let tm = track_steps(driver, mid, a, m, part);
        if tm.alive && tm.gap.last().is_some_and(|g| *g > floor) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// `dist(x, K_t)` for an unswallowed boundary point.
///
/// The hull is sampled by exact tips of the discretised chain at every knot
/// and at relative spacing `mesh` along the slit grown in each step, plus its real part
/// `[0, s_t]`. Tips are flowed backward in time together, and a tip is
/// dropped as soon as a Koebe distortion bound shows it ends farther from
/// `x` than the real part of the hull; `b`, an alive point just right of
/// `s_t`, fixes the disk on which the bound holds.
pub fn hull_distance(driver: &DrivingPath, t: f64, x: f64, a: f64, mesh: f64) -> Result<f64> {
    hull_distance_below(driver, t, x, a, mesh, f64::INFINITY)
}

/// Like [`hull_distance`], but the search stops once the distance is known
/// to exceed `cap`. Values up to `cap` are exact; a larger value only
/// certifies that the distance is above `cap`.
pub fn hull_distance_below(
    driver: &DrivingPath,
    t: f64,
    x: f64,
    a: f64,
    mesh: f64,
    cap: f64,
) -> Result<f64> {
    hull_distance_past(driver, t, x, a, mesh, cap, 0.0)
}

/// Like [`hull_distance_below`], given a point `known < x` of the hull at
/// time `t`, such as a point swallowed exactly at `t`. Near a swallowing
/// time the clock of a recorded path cannot resolve the last steps, and
/// the replayed gaps of just-swallowed points stay slightly positive.
pub fn hull_distance_past(
    driver: &DrivingPath,
    t: f64,
    x: f64,
    a: f64,
    mesh: f64,
    cap: f64,
    known: f64,
) -> Result<f64> {
    check_time(driver, t)?;
    if !(known >= 0.0 && known < x) {
        return Err(SleError::Domain(format!("hull point {known} must lie in [0, {x})")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(SleError::Domain(format!("boundary point {x} must be positive")));
    }
    if !(mesh > 0.0 && mesh <= 1.0) {
        return Err(SleError::Validation(format!("mesh {mesh} must lie in (0, 1]")));
    }
    if t == 0.0 {
        return Ok(x);
    }
    let tx = track(driver, x, a, t);
    if !tx.alive {
        return Err(SleError::Domain(format!("{x} is swallowed before time {t}")));
    }
    let (lo, hi) = edge_above(driver, x, a, t, 1e-9, known);
    let mut best = x - lo;

    let (m, part) = locate(driver, t);
    // The hull edge only moves right, so an alive point right of the edge
    // at a checkpoint serves for every earlier knot; refreshing it keeps the
    // disks below as large as possible.
    const CHECKPOINTS: usize = 16;
    let mut edges: Vec<(usize, Track)> = Vec::with_capacity(CHECKPOINTS);
    let mut prev = 0;
    for i in 1..=CHECKPOINTS {
        let q = (m * i).div_ceil(CHECKPOINTS);
        if q == prev {
            continue;
        }
        prev = q;
        let at = if q == m { (m, part) } else { (q, driver.step_len(q)) };
        let b = if q == m { hi } else { edge_at(driver, x, a, at, 1e-6, 0.0).1 };
        let tb = track_steps(driver, b, a, at.0, at.1);
        if !tb.alive {
            return Err(SleError::Solver {
                step: q,
                detail: format!("edge point {b} not alive at its checkpoint"),
            });
        }
        edges.push((q, tb));
    }
    let mut edge = edges.len() - 1;
    let pieces = (1.0 / mesh).ceil() as usize;
    // Tips are carried backward together. At knot `j` a tip `w` sits in the
    // plane of `g_{t_j}`; with `c = g_{t_j}(x)` and `R = c - g_{t_j}(b)` the
    // inverse map is univalent on the disk `D(c, R)`, so by the Koebe
    // distortion bound the tip ends at least
    // `R phi(min(|w - c| / R, 1)) / g'_{t_j}(x)`, `phi(r) = r / (1 + r)^2`,
    // away from `x`. Tips that provably end beyond `limit` are dropped.
    let limit = best.min(cap);
    let mut live: Vec<Complex64> = Vec::new();
    let mut work = 0usize;
    for k in (1..=m).rev() {
        let c = driver.values[k - 1];
        let span = 2.0 * a * driver.step_len(k);
        for w in live.iter_mut() {
            *w = inverse_step(*w, c, span);
        }
        let len = if k == m { part } else { driver.step_len(k) };
        for p in 1..=pieces {
            // the slit grown in a step has height ~ sqrt(time): space the
            // samples evenly in height
            let s = len * (p as f64 / pieces as f64).powi(2);
            live.push(inverse_step(Complex64::new(c, 0.0), c, 2.0 * a * s));
        }
        let j = k - 1;
        while edge > 0 && edges[edge - 1].0 >= j {
            edge -= 1;
        }
        let centre = c + tx.gap[j];
        let radius = tx.gap[j] - edges[edge].1.gap[j];
        let scale = radius / tx.deriv[j];
        work += live.len();
        live.retain(|w| {
            let r = ((w - centre).norm() / radius).min(1.0);
            scale * r / ((1.0 + r) * (1.0 + r)) <= limit
        });
        if let Some(bad) = live.iter().find(|w| !(w.re.is_finite() && w.im.is_finite())) {
            return Err(SleError::Solver {
                step: k,
                detail: format!("reverse flow reached {bad}"),
            });
        }
    }
    log::debug!("hull distance: {work} tip updates over {m} steps");
    for w in live {
        best = best.min((w - x).norm());
    }
    Ok(best)
}
