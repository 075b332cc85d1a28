//! Adaptive-step Monte Carlo engine for swallowing order on the real line.
//!
//! The driver is a standard Brownian motion sampled at state-dependent
//! times: each step lasts `rel_step * g^2`, where `g` is the gap of the
//! leftmost unswallowed point, so resolution follows the point that is
//! about to be swallowed. Within a step the driver increment is applied
//! between two half steps of the Loewner drift; this keeps the swallowing
//! order second order accurate in `rel_step`. The gap of every point is a Bessel process of
//! dimension `1 + 2a`; its hitting time of zero has a power-law tail, and
//! the adaptive step is what keeps those long runs affordable.
//!
//! Swallowing is resolved on the relative geometry of the leftmost point
//! `i` and its right neighbour:
//!
//! * `gap_i <= hit_ratio * gap_{i+1}`: point `i` is swallowed alone and the
//!   curve hits `(x_i, x_{i+1}]` before enclosing `x_{i+1}`;
//! * `gap_{i+1} - gap_i <= tie_ratio * gap_{i+1}`: the two images have
//!   merged and both are swallowed at the same time.
//!
//! Points swallowed at the same time share a group id; group ids increase
//! with `x`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::driver::DrivingPath;
use crate::error::{Result, SleError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Step length relative to the squared leftmost gap.
    pub rel_step: f64,
    pub hit_ratio: f64,
    pub tie_ratio: f64,
    /// A lone remaining point is retired once `gap <= floor_ratio * x0`; the
    /// rest of its lifetime is drawn from the exact Bessel hitting law.
    pub floor_ratio: f64,
    pub max_steps: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            rel_step: 0.02,
            hit_ratio: 1e-8,
            tie_ratio: 1e-9,
            floor_ratio: 1e-8,
            max_steps: 20_000_000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_step > 0.0
            && self.rel_step <= 0.5
            && self.hit_ratio > 0.0
            && self.hit_ratio < 1.0
            && self.tie_ratio > 0.0
            && self.tie_ratio < 1.0
            && self.floor_ratio > 0.0
            && self.floor_ratio < 1.0
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(SleError::Validation(format!("invalid sweep configuration {self:?}")))
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveSweep {
    a: f64,
    cfg: SweepConfig,
    x0: Vec<f64>,
    gaps: Vec<f64>,
    derivs: Option<Vec<f64>>,
    /// first unswallowed point
    first: usize,
    /// first point whose group is still open
    open: usize,
    group: Vec<u32>,
    swallowed_at: Vec<f64>,
    next_group: u32,
    t: f64,
    u: f64,
    steps: usize,
    /// Step lengths and values of the recorded path, plus the half step
    /// still owed to the next knot.
    record: Option<(Vec<f64>, Vec<f64>, f64)>,
    censored: bool,
    remainder: Option<Gamma<f64>>,
}

impl AdaptiveSweep {
    /// `points` must be positive and strictly increasing.
    pub fn new(points: &[f64], a: f64, cfg: SweepConfig) -> Result<Self> {
        cfg.validate()?;
        if !(a > 0.0 && a < 0.5) {
            return Err(SleError::Validation(format!(
                "adaptive sweep needs 0 < a < 1/2 (kappa > 4), got a = {a}"
            )));
        }
        if points.is_empty() || !(points[0] > 0.0) || points.iter().any(|x| !x.is_finite()) {
            return Err(SleError::Domain("sweep points must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SleError::Domain("sweep points must be strictly increasing".into()));
        }
        let n = points.len();
        let remainder = Gamma::new(0.5 - a, 1.0).ok();
        Ok(Self {
            a,
            cfg,
            x0: points.to_vec(),
            gaps: points.to_vec(),
            derivs: None,
            first: 0,
            open: 0,
            group: vec![u32::MAX; n],
            swallowed_at: vec![f64::NAN; n],
            next_group: 0,
            t: 0.0,
            u: 0.0,
            steps: 0,
            record: None,
            censored: false,
            remainder,
        })
    }

    pub fn with_derivatives(mut self) -> Self {
        self.derivs = Some(vec![1.0; self.x0.len()]);
        self
    }

    /// Keep the sampled driver so the path can be replayed (trace points,
    /// hull distances).
    pub fn recording(mut self) -> Self {
        self.record = Some((Vec::new(), vec![0.0], 0.0));
        self
    }

    pub fn len(&self) -> usize {
        self.x0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.x0
    }

    pub fn finished(&self) -> bool {
        self.first == self.x0.len() || self.censored
    }

    pub fn censored(&self) -> bool {
        self.censored
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn driver(&self) -> f64 {
        self.u
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn first_alive(&self) -> Option<usize> {
        (self.first < self.x0.len()).then_some(self.first)
    }

    pub fn is_alive(&self, i: usize) -> bool {
        i >= self.first
    }

    /// `g_t(x_i) - U_t` for an unswallowed point.
    pub fn gap(&self, i: usize) -> f64 {
        self.gaps[i]
    }

    pub fn deriv(&self, i: usize) -> Option<f64> {
        self.derivs.as_ref().map(|d| d[i])
    }

    /// Group id once the point's swallowing time is settled.
    pub fn group(&self, i: usize) -> Option<u32> {
        (self.group[i] != u32::MAX).then_some(self.group[i])
    }

    pub fn groups(&self) -> &[u32] {
        &self.group
    }

    pub fn swallow_time(&self, i: usize) -> Option<f64> {
        let t = self.swallowed_at[i];
        (!t.is_nan()).then_some(t)
    }

    pub fn swallow_times(&self) -> &[f64] {
        &self.swallowed_at
    }

    /// The recorded driver up to the current time.
    ///
    /// The split step is the same as holding the driver constant between
    /// step midpoints, so the knots sit at midpoints and a replay through the
    /// constant-driver flow reproduces the sweep.
    pub fn path(&self, seed: u64) -> Option<Result<DrivingPath>> {
        let (lengths, values, pending) = self.record.as_ref()?;
        if self.t <= 0.0 {
            return None;
        }
        let mut lengths = lengths.clone();
        let mut values = values.clone();
        lengths.push(*pending);
        values.push(self.u);
        Some(DrivingPath::from_steps(lengths, values, seed))
    }

    /// One step of length at most `max_dt`. Returns false once finished.
    pub fn step_at_most<R: Rng + ?Sized>(&mut self, rng: &mut R, max_dt: f64) -> bool {
        if self.finished() {
            return false;
        }
        if self.steps >= self.cfg.max_steps {
            self.censor();
            return false;
        }
        let g = self.gaps[self.first];
        let dt = (self.cfg.rel_step * g * g).min(max_dt);
        if !(dt > 0.0) {
            return false;
        }
        let z: f64 = rng.sample(StandardNormal);
        let du = dt.sqrt() * z;
        // Symmetric splitting: half of the Loewner drift, the driver
        // increment, then the other half. The plain drift-then-jump order is
        // only first order in the step and visibly over-counts hits.
        let half = self.a * dt;
        let first = self.first;
        match self.derivs.as_mut() {
            Some(derivs) => {
                for (g, d) in self.gaps[first..].iter_mut().zip(&mut derivs[first..]) {
                    let h1 = (*g * *g + half).sqrt();
                    let m = h1 - du;
                    *d *= *g / h1;
                    if m > 0.0 {
                        let h2 = (m * m + half).sqrt();
                        *d *= m / h2;
                        *g = h2;
                    } else {
                        *g = m;
                    }
                }
            }
            None => {
                for g in &mut self.gaps[first..] {
                    let m = (*g * *g + half).sqrt() - du;
                    *g = if m > 0.0 { (m * m + half).sqrt() } else { m };
                }
            }
        }
        if let Some((lengths, values, pending)) = self.record.as_mut() {
            let half_dt = 0.5 * dt;
            lengths.push(*pending + half_dt);
            values.push(self.u + du);
            *pending = half_dt;
        }
        self.t += dt;
        self.u += du;
        self.steps += 1;
        self.resolve(rng);
        true
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        self.step_at_most(rng, f64::INFINITY)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        while self.step(rng) {}
    }

    /// Run until point `i` has a settled group (its swallowing time).
    pub fn run_until_swallowed<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) {
        while self.group(i).is_none() && self.step(rng) {}
    }

    /// Run until the clock reaches `t` exactly (or everything is swallowed).
    pub fn run_until_time<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        while self.t < t && self.step_at_most(rng, t - self.t) {}
    }

    fn close_group(&mut self, last: usize, time: f64) {
        for j in self.open..=last {
            self.group[j] = self.next_group;
            self.swallowed_at[j] = time;
        }
        self.next_group += 1;
        self.open = last + 1;
    }

    fn resolve<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.x0.len();
        // points overrun by a driver jump go together
        let mut last_jumped = None;
        while self.first < n && self.gaps[self.first] <= 0.0 {
            last_jumped = Some(self.first);
            self.first += 1;
        }
        if let Some(last) = last_jumped {
            self.close_group(last, self.t);
        }
        while self.first < n {
            let i = self.first;
            let gi = self.gaps[i];
            if i + 1 < n {
                let gn = self.gaps[i + 1];
                if gi <= self.cfg.hit_ratio * gn {
                    self.first += 1;
                    self.close_group(i, self.t);
                } else if gn - gi <= self.cfg.tie_ratio * gn {
                    self.first += 1;
                } else {
                    break;
                }
            } else if gi <= self.cfg.floor_ratio * self.x0[i] {
                let rest = match &self.remainder {
                    Some(law) => gi * gi / (2.0 * law.sample(rng)),
                    None => 0.0,
                };
                self.first += 1;
                self.close_group(i, self.t + rest);
            } else {
                break;
            }
        }
    }

    fn censor(&mut self) {
        self.censored = true;
        // unresolved points are treated as swallowed strictly later, one
        // group each
        for i in self.open..self.x0.len() {
            self.group[i] = self.next_group;
            self.next_group += 1;
        }
        self.open = self.x0.len();
    }
}
