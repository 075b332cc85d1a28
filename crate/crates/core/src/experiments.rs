//! Monte Carlo campaigns: one- and two-interval hitting probabilities,
//! dyadic hit matrices and the box-counting fit, second-moment tables,
//! near misses, the Brownian scaling of swallowing times, and the Koebe
//! distance bounds.
//!
//! Every campaign draws sample `i` from its own random stream, so results
//! are reproducible for a given seed whatever the thread count.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{adjacent_two_interval, hit_prob_interval, near_point_asymptote, HitMap};
use crate::error::{Result, SleError};
use crate::loewner::flow::{flow_point_to, swallow_times_grid, SwallowTime, DEFAULT_GRID_CAP};
use crate::loewner::trace::{gap_at, hull_distance, hull_distance_past, swallowed_edge};
use crate::loewner::{sample_driver, AdaptiveSweep, DrivingPath, SweepConfig};
use crate::params::SleParams;
use crate::rng::{self, domain, SimRng};
use crate::stats::{ks_two_sample, linear_fit, Estimate, KsReport, LinearFit};

/// Censored fraction above which a result carries a reliability warning.
pub const CENSOR_WARN_FRACTION: f64 = 0.01;

/// Joint hits below which a second-moment cell is flagged.
pub const LOW_CONFIDENCE_HITS: u64 = 10;

/// Pooled joint hits a lag needs to enter the reported constant.
pub const POOLED_MIN_HITS: u64 = 30;

/// Smallest replayed gap, relative to the driver's range, trusted by the
/// near-miss distance.
pub const RESOLVED_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kappa: f64,
    pub samples: u64,
    pub seed: u64,
    /// Dyadic grid level `n`.
    #[serde(default = "default_level")]
    pub level: u32,
    /// Interior margin: only `delta <= k 2^-n <= 1 - delta` are used.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub intervals: Vec<(f64, f64)>,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Relative spacing of hull samples along each step, for distances.
    #[serde(default = "default_mesh")]
    pub mesh: f64,
}

fn default_level() -> u32 {
    8
}

fn default_delta() -> f64 {
    0.25
}

fn default_mesh() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn new(kappa: f64, samples: u64, seed: u64) -> Self {
        Self {
            kappa,
            samples,
            seed,
            level: default_level(),
            delta: default_delta(),
            intervals: Vec::new(),
            sweep: SweepConfig::default(),
            mesh: default_mesh(),
        }
    }

    pub fn params(&self) -> Result<SleParams> {
        SleParams::for_hitting(self.kappa)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.sweep.validate()?;
        if self.samples == 0 {
            return Err(SleError::Validation("samples must be at least 1".into()));
        }
        if self.level == 0 || self.level > DEFAULT_GRID_CAP {
            return Err(SleError::Resource(format!(
                "grid level {} outside 1..={DEFAULT_GRID_CAP}",
                self.level
            )));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(SleError::Validation(format!(
                "delta = {} must lie in (0, 1/2)",
                self.delta
            )));
        }
        if !(self.mesh > 0.0 && self.mesh <= 1.0) {
            return Err(SleError::Validation(format!("mesh {} must lie in (0, 1]", self.mesh)));
        }
        for &(y, x) in &self.intervals {
            if !(0.0 < y && y <= x && x <= 1.0) {
                return Err(SleError::Domain(format!("interval ({y}, {x}) needs 0 < y <= x <= 1")));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// One line of the JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub experiment: String,
    pub kappa: f64,
    pub params: BTreeMap<String, f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub exact_or_bound: Option<f64>,
    pub n_samples: u64,
    pub seed: u64,
    pub censored: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Record {
    pub fn new(experiment: &str, cfg: &ExperimentConfig, estimate: &Estimate) -> Self {
        Self {
            experiment: experiment.to_string(),
            kappa: cfg.kappa,
            params: BTreeMap::new(),
            estimate: estimate.value,
            stderr: estimate.stderr,
            ci_lo: estimate.ci_lo,
            ci_hi: estimate.ci_hi,
            exact_or_bound: None,
            n_samples: estimate.n,
            seed: cfg.seed,
            censored: 0,
            warnings: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn exact(mut self, value: f64) -> Self {
        self.exact_or_bound = Some(value);
        self
    }

    pub fn censored(mut self, count: u64, warnings: &[String]) -> Self {
        self.censored = count;
        self.warnings = warnings.to_vec();
        self
    }
}

pub fn write_jsonl<W: Write>(records: &[Record], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Human-facing summary, one row per record.
pub fn write_summary_csv<W: Write>(records: &[Record], mut out: W) -> Result<()> {
    writeln!(out, "experiment,kappa,params,estimate,stderr,ci_lo,ci_hi,exact_or_bound,n_samples,censored")?;
    for r in records {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let exact = r.exact_or_bound.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.kappa,
            params.join(";"),
            r.estimate,
            r.stderr,
            r.ci_lo,
            r.ci_hi,
            exact,
            r.n_samples,
            r.censored
        )?;
    }
    Ok(())
}

fn par_samples<T, F>(seed: u64, tag: u64, n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut rng::substream(seed, tag, i)))
        .collect()
}

fn censor_warning(censored: u64, total: u64) -> Vec<String> {
    let frac = censored as f64 / total as f64;
    if frac > CENSOR_WARN_FRACTION {
        let msg = format!(
            "{censored} of {total} samples censored ({:.2}%); estimate may be biased",
            100.0 * frac
        );
        log::warn!("{msg}");
        vec![msg]
    } else {
        Vec::new()
    }
}

/// Bernoulli estimate over the uncensored outcomes.
fn tally(outcomes: &[Option<bool>]) -> Result<(Estimate, u64)> {
    let censored = outcomes.iter().filter(|o| o.is_none()).count() as u64;
    let n = outcomes.len() as u64 - censored;
    if n == 0 {
        return Err(SleError::Sampler("every sample was censored".into()));
    }
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    Ok((Estimate::bernoulli(hits, n)?, censored))
}

/// Group ids of `points` once the last one is settled, or `None` if the
/// sweep ran out of steps first.
fn settled_groups(points: &[f64], a: f64, sweep: SweepConfig, rng: &mut SimRng) -> Result<Option<Vec<u32>>> {
    let mut sw = AdaptiveSweep::new(points, a, sweep)?;
    let last = points.len() - 1;
    sw.run_until_swallowed(last, rng);
    if sw.censored() {
        return Ok(None);
    }
    Ok(Some(sw.groups().to_vec()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneInterval {
    pub y: f64,
    pub x: f64,
    pub estimate: Estimate,
    pub exact: f64,
    pub censored: u64,
    pub warnings: Vec<String>,
}

impl OneInterval {
    pub fn record(&self, cfg: &ExperimentConfig) -> Record {
        Record::new("one-interval", cfg, &self.estimate)
            .param("y", self.y)
            .param("x", self.x)
            .exact(self.exact)
            .censored(self.censored, &self.warnings)
    }
}

/// Estimate `P(T_x > T_y)`, the probability that the curve hits `[y, x]`.
pub fn one_interval(cfg: &ExperimentConfig, y: f64, x: f64) -> Result<OneInterval> {
    cfg.validate()?;
    let params = cfg.params()?;
    if !(0.0 < y && y <= x && x <= 1.0) {
        return Err(SleError::Domain(format!("need 0 < y <= x <= 1, got y = {y}, x = {x}")));
    }
    let hitmap = HitMap::for_params(&params)?;
    let exact = hit_prob_interval(y, x, &hitmap)?.value;
    if y == x {
        // one point cannot be swallowed strictly after itself
        let estimate = Estimate {
            value: 0.0,
            stderr: 0.0,
            n: cfg.samples,
            ci_lo: 0.0,
            ci_hi: 0.0,
        };
        return Ok(OneInterval {
            y,
            x,
            estimate,
            exact,
            censored: 0,
            warnings: Vec::new(),
        });
    }
    let points = [y, x];
    let outcomes = par_samples(cfg.seed, domain::ONE_INTERVAL, cfg.samples, |r| {
        Ok(settled_groups(&points, params.a, cfg.sweep, r)?.map(|g| g[0] != g[1]))
    })?;
    let (estimate, censored) = tally(&outcomes)?;
    Ok(OneInterval {
        y,
        x,
        estimate,
        exact,
        censored,
        warnings: censor_warning(censored, cfg.samples),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoInterval {
    pub y: f64,
    pub x: f64,
    pub eps: f64,
    pub estimate: Estimate,
    /// `eps^(2(4a-1)) (x-y)^(1-4a)`, the bound without its constant.
    pub bound: f64,
    pub censored: u64,
    pub warnings: Vec<String>,
}

impl TwoInterval {
    pub fn record(&self, cfg: &ExperimentConfig) -> Record {
        Record::new("two-interval", cfg, &self.estimate)
            .param("y", self.y)
            .param("x", self.x)
            .param("eps", self.eps)
            .exact(self.bound)
            .censored(self.censored, &self.warnings)
    }
}

pub fn two_interval_bound(params: &SleParams, y: f64, x: f64, eps: f64) -> f64 {
    let beta = 4.0 * params.a - 1.0;
    eps.powf(2.0 * beta) * (x - y).powf(-beta)
}

/// Estimate `P(T_y < T_{y+eps}, T_x < T_{x+eps})`: both `[y, y+eps]` and
/// `[x, x+eps]` are hit.
pub fn two_interval(cfg: &ExperimentConfig, y: f64, x: f64, eps: f64) -> Result<TwoInterval> {
    cfg.validate()?;
    let params = cfg.params()?;
    let d = cfg.delta;
    if !(d < y && y < x && x < 1.0 - d) {
        return Err(SleError::Domain(format!(
            "need delta < y < x < 1 - delta, got y = {y}, x = {x}, delta = {d}"
        )));
    }
    if !(eps > 0.0 && eps <= (x - y) / 2.0) {
        return Err(SleError::Domain(format!(
            "need 0 < eps <= (x - y)/2, got eps = {eps}"
        )));
    }
    let points = [y, y + eps, x, x + eps];
    let outcomes = par_samples(cfg.seed, domain::TWO_INTERVAL, cfg.samples, |r| {
        Ok(settled_groups(&points, params.a, cfg.sweep, r)?.map(|g| g[0] != g[1] && g[2] != g[3]))
    })?;
    let (estimate, censored) = tally(&outcomes)?;
    Ok(TwoInterval {
        y,
        x,
        eps,
        estimate,
        bound: two_interval_bound(&params, y, x, eps),
        censored,
        warnings: censor_warning(censored, cfg.samples),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoIntervalDecay {
    pub runs: Vec<TwoInterval>,
    /// Regression of `ln P` on `ln eps`.
    pub fit: LinearFit,
    /// `2(4a - 1)`
    pub predicted: f64,
}

impl TwoIntervalDecay {
    /// One record per `eps`, then the fitted exponent against `2(4a - 1)`.
    pub fn records(&self, cfg: &ExperimentConfig) -> Vec<Record> {
        let mut out: Vec<Record> = self.runs.iter().map(|r| r.record(cfg)).collect();
        let n = self.runs.iter().map(|r| r.estimate.n).sum();
        let est = Estimate {
            value: self.fit.slope,
            stderr: self.fit.slope_stderr,
            n,
            ci_lo: self.fit.slope - crate::stats::Z99 * self.fit.slope_stderr,
            ci_hi: self.fit.slope + crate::stats::Z99 * self.fit.slope_stderr,
        };
        let censored = self.runs.iter().map(|r| r.censored).sum();
        let warnings: Vec<String> = self.runs.iter().flat_map(|r| r.warnings.clone()).collect();
        out.push(
            Record::new("two-interval-decay", cfg, &est)
                .exact(self.predicted)
                .censored(censored, &warnings),
        );
        out
    }
}

/// Two-interval estimates over several `eps`, each from an independent
/// seed, and the fitted power of `eps`.
pub fn two_interval_decay(cfg: &ExperimentConfig, y: f64, x: f64, eps: &[f64]) -> Result<TwoIntervalDecay> {
    let params = cfg.params()?;
    let runs = eps
        .iter()
        .enumerate()
        .map(|(j, &e)| two_interval(&cfg.with_seed(rng::splitmix64(cfg.seed.wrapping_add(j as u64))), y, x, e))
        .collect::<Result<Vec<_>>>()?;
    let used: Vec<&TwoInterval> = runs.iter().filter(|r| r.estimate.value > 0.0).collect();
    if used.len() < 2 {
        return Err(SleError::Numeric {
            achieved: used.len() as f64,
            tolerance: 2.0,
        });
    }
    let lx: Vec<f64> = used.iter().map(|r| r.eps.ln()).collect();
    let ly: Vec<f64> = used.iter().map(|r| r.estimate.value.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(TwoIntervalDecay {
        runs,
        fit,
        predicted: 2.0 * (4.0 * params.a - 1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdjacentIntervals {
    pub points: [f64; 3],
    pub estimate: Estimate,
    pub exact: f64,
    pub censored: u64,
    pub warnings: Vec<String>,
}

/// Estimate `P(T_{x1} < T_{x2} < T_{x3})` against its closed form.
pub fn adjacent_intervals(cfg: &ExperimentConfig, x1: f64, x2: f64, x3: f64) -> Result<AdjacentIntervals> {
    cfg.validate()?;
    let params = cfg.params()?;
    let exact = adjacent_two_interval(x1, x2, x3, &HitMap::for_params(&params)?)?;
    let points = [x1, x2, x3];
    let outcomes = par_samples(cfg.seed, domain::TWO_INTERVAL, cfg.samples, |r| {
        Ok(settled_groups(&points, params.a, cfg.sweep, r)?.map(|g| g[0] != g[1] && g[1] != g[2]))
    })?;
    let (estimate, censored) = tally(&outcomes)?;
    Ok(AdjacentIntervals {
        points,
        estimate,
        exact,
        censored,
        warnings: censor_warning(censored, cfg.samples),
    })
}

/// The events `D_k^n = {T(k 2^-n) > T((k-1) 2^-n)}`, `k = 1..2^n`, for one
/// driver. `D_1` always holds since `T(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitMatrix {
    pub level: u32,
    pub bits: Vec<bool>,
    /// Set where a swallowing time involved was not resolved.
    pub censored: Vec<bool>,
}

impl HitMatrix {
    /// From group ids of the grid points `k 2^-n`, `k = 1..2^n`; `unresolved`
    /// marks points whose group is a placeholder.
    pub fn from_groups(level: u32, groups: &[u32], unresolved: &[bool]) -> Result<Self> {
        let m = 1usize << level;
        if groups.len() != m || unresolved.len() != m {
            return Err(SleError::Validation(format!(
                "level {level} needs {m} grid points, got {}",
                groups.len()
            )));
        }
        let mut bits = vec![true; m];
        let mut censored = vec![false; m];
        censored[0] = unresolved[0];
        for k in 1..m {
            bits[k] = groups[k] != groups[k - 1];
            censored[k] = unresolved[k] || unresolved[k - 1];
        }
        Ok(Self { level, bits, censored })
    }

    /// From a finished sweep over the level-`n` grid.
    pub fn from_sweep(level: u32, sweep: &AdaptiveSweep) -> Result<Self> {
        let unresolved: Vec<bool> = (0..sweep.len()).map(|i| sweep.swallow_time(i).is_none()).collect();
        Self::from_groups(level, sweep.groups(), &unresolved)
    }

    /// From swallowing times on a fixed driver. Points that survive the
    /// horizon compare as equal and are flagged.
    pub fn from_swallow_times(level: u32, times: &[SwallowTime]) -> Result<Self> {
        let m = 1usize << level;
        if times.len() != m {
            return Err(SleError::Validation(format!(
                "level {level} needs {m} grid points, got {}",
                times.len()
            )));
        }
        let mut bits = vec![true; m];
        let mut censored = vec![false; m];
        censored[0] = !times[0].is_finite();
        for k in 1..m {
            let (lo, hi) = (times[k - 1], times[k]);
            censored[k] = !lo.is_finite() || !hi.is_finite();
            bits[k] = match (lo, hi) {
                (SwallowTime::Finite { time: t0, .. }, SwallowTime::Finite { time: t1, .. }) => t1 > t0,
                (SwallowTime::Finite { .. }, SwallowTime::Survived { .. }) => true,
                _ => false,
            };
        }
        Ok(Self { level, bits, censored })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// `D_k^n`, 1-based.
    pub fn bit(&self, k: usize) -> bool {
        self.bits[k - 1]
    }

    /// `N_n`, the number of level-`n` intervals hit.
    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|b| **b).count() as u64
    }

    pub fn any_censored(&self) -> bool {
        self.censored.iter().any(|c| *c)
    }

    /// Level `n - 1`: a parent interval is hit iff one of its halves is.
    pub fn coarsen(&self) -> Option<Self> {
        if self.level == 0 {
            return None;
        }
        let bits = self.bits.chunks(2).map(|c| c[0] || c[1]).collect();
        let censored = self.censored.chunks(2).map(|c| c[0] || c[1]).collect();
        Some(Self {
            level: self.level - 1,
            bits,
            censored,
        })
    }

    pub fn coarsen_to(&self, level: u32) -> Option<Self> {
        if level > self.level {
            return None;
        }
        let mut m = self.clone();
        while m.level > level {
            m = m.coarsen()?;
        }
        Some(m)
    }

    /// Whether `coarse` is the OR-refinement of `self` one level down.
    pub fn refines(&self, coarse: &HitMatrix) -> bool {
        coarse.level + 1 == self.level && self.coarsen().is_some_and(|c| c.bits == coarse.bits)
    }
}

/// Hit matrix of a fixed driver at level `n`.
pub fn hit_matrix(driver: &DrivingPath, n: u32, params: &SleParams) -> Result<HitMatrix> {
    let times = swallow_times_grid(driver, n, params.a, DEFAULT_GRID_CAP)?;
    HitMatrix::from_swallow_times(n, &times)
}

/// Grid points `k 2^-n`, `k = 1..2^n`.
pub fn dyadic_grid(level: u32) -> Vec<f64> {
    let m = 1usize << level;
    (1..=m).map(|k| k as f64 / m as f64).collect()
}

/// One hit matrix per sample at `cfg.level`, each from a full sweep.
pub fn hit_matrices(cfg: &ExperimentConfig) -> Result<Vec<HitMatrix>> {
    cfg.validate()?;
    let params = cfg.params()?;
    let grid = dyadic_grid(cfg.level);
    par_samples(cfg.seed, domain::HIT_MATRIX, cfg.samples, |r| {
        let mut sw = AdaptiveSweep::new(&grid, params.a, cfg.sweep)?;
        sw.run(r);
        HitMatrix::from_sweep(cfg.level, &sw)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub levels: Vec<u32>,
    /// Mean of `N_n` per level.
    pub counts: Vec<f64>,
    pub count_stderr: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub samples: u64,
    pub censored: u64,
    pub dropped: Vec<u32>,
    pub warnings: Vec<String>,
}

impl DimensionFit {
    pub fn record(&self, cfg: &ExperimentConfig, exact: Option<f64>) -> Record {
        let est = Estimate {
            value: self.slope,
            stderr: self.slope_stderr,
            n: self.samples,
            ci_lo: self.slope - crate::stats::Z99 * self.slope_stderr,
            ci_hi: self.slope + crate::stats::Z99 * self.slope_stderr,
        };
        let mut r = Record::new("dimension", cfg, &est)
            .param("level_min", f64::from(self.levels[0]))
            .param("level_max", f64::from(*self.levels.last().unwrap_or(&0)))
            .censored(self.censored, &self.warnings);
        r.exact_or_bound = exact;
        r
    }
}

/// Least-squares slope of `log2 E[N_n]` against `n`, the counts at each
/// level read off the finest matrices by coarsening.
pub fn dimension_fit(samples: &[HitMatrix], levels: std::ops::RangeInclusive<u32>) -> Result<DimensionFit> {
    const MIN_SAMPLES: usize = 50;
    let (lo, hi) = (*levels.start(), *levels.end());
    if hi < lo + 1 {
        return Err(SleError::Validation(format!(
            "dimension fit needs at least two levels, got {lo}..={hi}"
        )));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(SleError::Validation(format!(
            "dimension fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let finest = samples[0].level;
    if samples.iter().any(|m| m.level != finest) || hi > finest || lo == 0 {
        return Err(SleError::Validation(format!(
            "levels {lo}..={hi} not available from level-{finest} matrices"
        )));
    }
    let mut per_level: Vec<Vec<f64>> = vec![Vec::with_capacity(samples.len()); (hi - lo + 1) as usize];
    for m in samples {
        let mut cur = m.coarsen_to(hi).expect("level checked");
        for lvl in (lo..=hi).rev() {
            per_level[(lvl - lo) as usize].push(cur.count() as f64);
            if lvl > lo {
                cur = cur.coarsen().expect("level above zero");
            }
        }
    }
    let mut used = Vec::new();
    let mut counts = Vec::new();
    let mut count_stderr = Vec::new();
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    for (j, values) in per_level.iter().enumerate() {
        let lvl = lo + j as u32;
        let est = Estimate::mean(values)?;
        if est.value > 0.0 {
            used.push(lvl);
            counts.push(est.value);
            count_stderr.push(est.stderr);
        } else {
            let msg = format!("level {lvl} has no hits and was dropped");
            log::warn!("{msg}");
            warnings.push(msg);
            dropped.push(lvl);
        }
    }
    if used.len() < 2 {
        return Err(SleError::Validation("fewer than two levels with hits".into()));
    }
    let x: Vec<f64> = used.iter().map(|&l| f64::from(l)).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.log2()).collect();
    let fit = linear_fit(&x, &y)?;
    let censored = samples.iter().filter(|m| m.any_censored()).count() as u64;
    warnings.extend(censor_warning(censored, samples.len() as u64));
    Ok(DimensionFit {
        levels: used,
        counts,
        count_stderr,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        intercept: fit.intercept,
        residuals: fit.residuals,
        samples: samples.len() as u64,
        censored,
        dropped,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentCell {
    pub j: usize,
    pub k: usize,
    pub joint: u64,
    pub estimate: f64,
    /// `P(D_j and D_k) 2^((1-s)n) (k-j)^(1-s)`
    pub normalized: f64,
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagSummary {
    pub lag: usize,
    pub cells: usize,
    pub joint: u64,
    pub mean_estimate: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentTable {
    pub level: u32,
    pub s: f64,
    pub samples: u64,
    /// Interior indices `k_lo..=k_hi`.
    pub k_lo: usize,
    pub k_hi: usize,
    /// Cells with `j < k`, row by row.
    pub cells: Vec<SecondMomentCell>,
    pub lags: Vec<LagSummary>,
    /// Largest pooled normalized statistic over lags with enough hits: the
    /// empirical constant in the second-moment bound.
    pub constant: f64,
}

impl SecondMomentTable {
    /// Cell for the unordered pair `{j, k}`.
    pub fn get(&self, j: usize, k: usize) -> Option<&SecondMomentCell> {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        if j == k || j < self.k_lo || k > self.k_hi {
            return None;
        }
        let width = self.k_hi - self.k_lo + 1;
        let row = j - self.k_lo;
        // rows before `row` hold width-1, width-2, ... cells
        let start = row * (2 * width - row - 1) / 2;
        self.cells.get(start + (k - j - 1))
    }
}

/// Interior index range `delta <= k 2^-n <= 1 - delta`.
pub fn interior_range(level: u32, delta: f64) -> (usize, usize) {
    let m = (1usize << level) as f64;
    ((delta * m).ceil() as usize, ((1.0 - delta) * m).floor() as usize)
}

/// Empirical `P(D_j and D_k)` on the interior cells, normalized by the
/// decay `2^(-(1-s)n) (k-j)^(-(1-s))`.
pub fn second_moment_table(samples: &[HitMatrix], params: &SleParams, delta: f64) -> Result<SecondMomentTable> {
    let Some(first) = samples.first() else {
        return Err(SleError::Validation("no hit matrices".into()));
    };
    let level = first.level;
    if samples.iter().any(|m| m.level != level) {
        return Err(SleError::Validation("hit matrices of mixed levels".into()));
    }
    let (k_lo, k_hi) = interior_range(level, delta);
    if !(delta > 0.0 && delta < 0.5) || k_lo < 1 || k_hi <= k_lo {
        return Err(SleError::Validation(format!(
            "delta = {delta} leaves no interior pairs at level {level}"
        )));
    }
    let width = k_hi - k_lo + 1;
    let mut joint = vec![0u64; width * width];
    for m in samples {
        let hit: Vec<usize> = (k_lo..=k_hi).filter(|&k| m.bit(k)).map(|k| k - k_lo).collect();
        for (p, &a) in hit.iter().enumerate() {
            for &b in &hit[p + 1..] {
                joint[a * width + b] += 1;
            }
        }
    }
    let n = samples.len() as f64;
    let decay = 1.0 - params.s;
    let scale = 2f64.powf(decay * f64::from(level));
    let mut cells = Vec::with_capacity(width * (width - 1) / 2);
    let mut lag_joint = vec![0u64; width];
    let mut lag_cells = vec![0usize; width];
    for a in 0..width {
        for b in a + 1..width {
            let c = joint[a * width + b];
            let lag = b - a;
            let estimate = c as f64 / n;
            cells.push(SecondMomentCell {
                j: a + k_lo,
                k: b + k_lo,
                joint: c,
                estimate,
                normalized: estimate * scale * (lag as f64).powf(decay),
                low_confidence: c < LOW_CONFIDENCE_HITS,
            });
            lag_joint[lag] += c;
            lag_cells[lag] += 1;
        }
    }
    let lags: Vec<LagSummary> = (1..width)
        .map(|lag| {
            let mean_estimate = lag_joint[lag] as f64 / (n * lag_cells[lag] as f64);
            LagSummary {
                lag,
                cells: lag_cells[lag],
                joint: lag_joint[lag],
                mean_estimate,
                normalized: mean_estimate * scale * (lag as f64).powf(decay),
            }
        })
        .collect();
    let constant = lags
        .iter()
        .filter(|l| l.joint >= POOLED_MIN_HITS)
        .map(|l| l.normalized)
        .fold(0.0, f64::max);
    Ok(SecondMomentTable {
        level,
        s: params.s,
        samples: samples.len() as u64,
        k_lo,
        k_hi,
        cells,
        lags,
        constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub k: usize,
    pub estimate: Estimate,
    pub exact: f64,
}

/// `P(D_k^n)` per interior `k` against the exact `F((k-1)/k)`.
pub fn marginal_checks(samples: &[HitMatrix], params: &SleParams, delta: f64) -> Result<Vec<CellCheck>> {
    let level = samples.first().map(|m| m.level).unwrap_or(0);
    let (k_lo, k_hi) = interior_range(level, delta);
    let hitmap = HitMap::for_params(params)?;
    (k_lo.max(2)..=k_hi)
        .map(|k| {
            let hits = samples.iter().filter(|m| m.bit(k)).count() as u64;
            Ok(CellCheck {
                k,
                estimate: Estimate::bernoulli(hits, samples.len() as u64)?,
                exact: hitmap.f_real((k - 1) as f64 / k as f64)?,
            })
        })
        .collect()
}

/// `P(D_k and D_{k+1})` per interior `k` against the exact adjacent-interval
/// formula.
pub fn lag_one_checks(samples: &[HitMatrix], params: &SleParams, delta: f64) -> Result<Vec<CellCheck>> {
    let level = samples.first().map(|m| m.level).unwrap_or(0);
    let (k_lo, k_hi) = interior_range(level, delta);
    let hitmap = HitMap::for_params(params)?;
    let h = 1.0 / (1usize << level) as f64;
    (k_lo.max(2)..k_hi)
        .map(|k| {
            let hits = samples.iter().filter(|m| m.bit(k) && m.bit(k + 1)).count() as u64;
            let (x1, x2, x3) = ((k - 1) as f64 * h, k as f64 * h, (k + 1) as f64 * h);
            Ok(CellCheck {
                k,
                estimate: Estimate::bernoulli(hits, samples.len() as u64)?,
                exact: adjacent_two_interval(x1, x2, x3, &hitmap)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMissRow {
    pub r: f64,
    pub estimate: Estimate,
    /// The part of `estimate` where `x` outlives `y`.
    pub separated: Estimate,
    /// Linear-in-`r` shape at `theta = pi/2`, without its constant.
    pub asymptote: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub x: f64,
    pub y: f64,
    pub rows: Vec<NearMissRow>,
    /// `P(T_y < T_x) = F(y/x)`, which bounds every `separated` estimate.
    pub ceiling: f64,
    /// Regression of `ln P` on `ln r` over the radii with hits.
    pub exponent: Option<LinearFit>,
    pub censored: u64,
    pub warnings: Vec<String>,
}

impl NearMiss {
    pub fn records(&self, cfg: &ExperimentConfig) -> Vec<Record> {
        self.rows
            .iter()
            .map(|row| {
                Record::new("near-miss", cfg, &row.estimate)
                    .param("x", self.x)
                    .param("y", self.y)
                    .param("r", row.r)
                    .exact(row.asymptote)
                    .censored(self.censored, &self.warnings)
            })
            .collect()
    }
}

/// Estimate, for each radius, the probability that the curve comes within
/// `r` of `x` before it swallows `y`. When `x` outlives `y` this is
/// `dist(x, K_{T_y}) <= r`; when both go at once the distance is taken to
/// the curve up to that moment, since the hull then contains `x` itself.
/// The last stretch of curve, where the replay of the driver cannot
/// resolve `x`, is covered only through the point where it lands on the
/// real line.
pub fn near_miss(cfg: &ExperimentConfig, x: f64, y: f64, radii: &[f64]) -> Result<NearMiss> {
    cfg.validate()?;
    let params = cfg.params()?;
    if !(0.0 < y && y < x && x.is_finite()) {
        return Err(SleError::Domain(format!("need 0 < y < x, got y = {y}, x = {x}")));
    }
    let r_max = (x - y) / 4.0;
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r <= r_max)) {
        return Err(SleError::Domain(format!("radii must lie in (0, (x - y)/4 = {r_max}]")));
    }
    let cap = radii.iter().cloned().fold(0.0, f64::max);
    // x - r and x + r for every radius ride along. The curve closes its
    // loop on the real line at T_y, within r of x exactly when x - r goes
    // with y or x goes with y while x + r stays out.
    let mut offsets: Vec<f64> = radii.to_vec();
    offsets.sort_by(f64::total_cmp);
    offsets.dedup();
    let k = offsets.len();
    let points: Vec<f64> = std::iter::once(y)
        .chain(offsets.iter().rev().map(|r| x - r))
        .chain(std::iter::once(x))
        .chain(offsets.iter().map(|r| x + r))
        .collect();
    let a = params.a;
    let dists = par_samples(cfg.seed, domain::NEAR_MISS, cfg.samples, |r| {
        let mut sw = AdaptiveSweep::new(&points, a, cfg.sweep)?.recording();
        sw.run_until_swallowed(0, r);
        if sw.censored() {
            return Ok(None);
        }
        let with_y = |i: usize| sw.group(i) == sw.group(0);
        // points[k - j] = x - offsets[j - 1], points[k + 1 + j] = x + offsets[j]
        let landing = if with_y(k + 1) {
            (0..k).find(|&j| !with_y(k + 2 + j)).map(|j| offsets[j])
        } else {
            (1..=k).find(|&j| with_y(k + 1 - j)).map(|j| offsets[j - 1])
        }
        .unwrap_or(f64::INFINITY);
        // The replay loses x once its gap nears the rounding error of the
        // driver values, and points just left of x then look swallowed; the
        // curve is followed up to the last knot where x is well resolved.
        let path = sw.path(cfg.seed).expect("recording sweep has moved")?;
        let scale = 1.0 + path.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let resolved = |t: f64| {
            gap_at(&path, x, a, t).is_some_and(|g| g > RESOLVED_GAP * scale)
        };
        let m = path.steps();
        let last = if resolved(path.horizon()) {
            m
        } else {
            let (mut lo, mut hi) = (0, m);
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if resolved(path.time(mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let seen = hull_distance_past(&path, path.time(last), x, a, cfg.mesh, cap, y)?;
        Ok(Some((seen.min(landing), !with_y(k + 1))))
    })?;
    let censored = dists.iter().filter(|d| d.is_none()).count() as u64;
    let n = cfg.samples - censored;
    if n == 0 {
        return Err(SleError::Sampler("every sample was censored".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let hits = dists.iter().filter(|d| matches!(d, Some((v, _)) if *v <= r)).count() as u64;
        let apart = dists
            .iter()
            .filter(|d| matches!(d, Some((v, true)) if *v <= r))
            .count() as u64;
        rows.push(NearMissRow {
            r,
            estimate: Estimate::bernoulli(hits, n)?,
            separated: Estimate::bernoulli(apart, n)?,
            asymptote: near_point_asymptote(x, y, r, std::f64::consts::FRAC_PI_2, &params)?,
        });
    }
    let with_hits: Vec<&NearMissRow> = rows.iter().filter(|row| row.estimate.value > 0.0).collect();
    let exponent = if with_hits.len() >= 2 {
        let lx: Vec<f64> = with_hits.iter().map(|row| row.r.ln()).collect();
        let ly: Vec<f64> = with_hits.iter().map(|row| row.estimate.value.ln()).collect();
        Some(linear_fit(&lx, &ly)?)
    } else {
        None
    };
    let ceiling = hit_prob_interval(y, x, &HitMap::for_params(&params)?)?.value;
    Ok(NearMiss {
        x,
        y,
        rows,
        ceiling,
        exponent,
        censored,
        warnings: censor_warning(censored, cfg.samples),
    })
}

/// Swallowing times of a single point, `None` where censored.
pub fn swallow_time_samples(params: &SleParams, x: f64, n: u64, seed: u64, sweep: SweepConfig) -> Result<Vec<Option<f64>>> {
    params.require_hitting_regime()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(SleError::Domain(format!("need x > 0, got {x}")));
    }
    par_samples(seed, domain::SCALING, n, |r| {
        let mut sw = AdaptiveSweep::new(&[x], params.a, sweep)?;
        sw.run(r);
        Ok(if sw.censored() { None } else { sw.swallow_time(0) })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub x: f64,
    pub ks: KsReport,
    /// Pairs dropped because either sample was censored.
    pub censored: u64,
}

impl ScalingReport {
    /// The KS statistic as the estimate; its p-value goes in `params`.
    pub fn record(&self, cfg: &ExperimentConfig) -> Record {
        let d = self.ks.statistic;
        let est = Estimate {
            value: d,
            stderr: 0.0,
            n: self.ks.n1 as u64,
            ci_lo: d,
            ci_hi: d,
        };
        let total = self.ks.n1 as u64 + self.censored;
        Record::new("scaling", cfg, &est)
            .param("x", self.x)
            .param("p_value", self.ks.p_value)
            .censored(self.censored, &censor_warning(self.censored, total))
    }
}

/// Two-sample KS test of `{T_x}` against `{x^2 T_1}`, sample `i` of each
/// drawn from stream `i` of its own seed.
pub fn scaling_test(
    params: &SleParams,
    x: f64,
    n: u64,
    seed_x: u64,
    seed_1: u64,
    sweep: SweepConfig,
) -> Result<ScalingReport> {
    let tx = swallow_time_samples(params, x, n, seed_x, sweep)?;
    let t1 = swallow_time_samples(params, 1.0, n, seed_1, sweep)?;
    let mut a = Vec::with_capacity(n as usize);
    let mut b = Vec::with_capacity(n as usize);
    let mut censored = 0;
    for (p, q) in tx.iter().zip(&t1) {
        match (p, q) {
            (Some(p), Some(q)) => {
                a.push(*p);
                b.push(x * x * q);
            }
            _ => censored += 1,
        }
    }
    Ok(ScalingReport {
        x,
        ks: ks_two_sample(&a, &b)?,
        censored,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoebeSample {
    pub t: f64,
    pub x: f64,
    /// `dist(x, K_t)`
    pub distance: f64,
    /// `g_t(x) - U_t`
    pub gap: f64,
    /// `g_t'(x)`
    pub deriv: f64,
    /// `g_t(s_t+) - U_t`, from an alive point just right of the hull
    pub eta: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoebeReport {
    pub samples: Vec<KoebeSample>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Samples with ratio in `[1/5, 5]`.
    pub within: usize,
}

/// Ratio `d_t(x) g_t'(x) / (g_t(x) - eta_t)` on random configurations: a
/// Brownian driver on steps of `dt`, a knot time `t` in `[0.005, 0.2]` and a
/// point `x` between 0.02 and 0.5 right of the hull. The lemma holds for any
/// Loewner chain, so the piecewise-constant chain is checked exactly, its
/// hull sampled at relative spacing `mesh` along each step.
pub fn koebe_check(params: &SleParams, n: u64, seed: u64, dt: f64, mesh: f64) -> Result<KoebeReport> {
    params.require_hitting_regime()?;
    let a = params.a;
    let samples = par_samples(seed, domain::KOEBE, n, |r| {
        let t = (r.random_range(0.005..0.2) / dt).ceil() * dt;
        let path = sample_driver(params, t, dt, r.random(), usize::MAX)?;
        let t = path.horizon();
        // (lo, hi) brackets the right end of the hull; any alive point
        // beyond it will do as a probe
        let (_, hi) = swallowed_edge(&path, 10.0, a, t, 1e-11);
        let x = hi + r.random_range(0.02..0.5);
        let eta = flow_point_to(&path, hi, a, t)?.gap;
        let px = flow_point_to(&path, x, a, t)?;
        if !px.is_alive() {
            return Err(SleError::Consistency(format!("{x} right of the hull is swallowed")));
        }
        let distance = hull_distance(&path, t, x, a, mesh)?;
        Ok(KoebeSample {
            t,
            x,
            distance,
            gap: px.gap,
            deriv: px.deriv,
            eta,
            ratio: distance * px.deriv / (px.gap - eta),
        })
    })?;
    let ratios = samples.iter().map(|s| s.ratio);
    let min_ratio = ratios.clone().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.fold(f64::NEG_INFINITY, f64::max);
    let within = samples.iter().filter(|s| (0.2..=5.0).contains(&s.ratio)).count();
    Ok(KoebeReport {
        samples,
        min_ratio,
        max_ratio,
        within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(samples: u64) -> ExperimentConfig {
        ExperimentConfig::new(6.0, samples, 7)
    }

    #[test]
    fn config_validation() {
        assert!(cfg(10).validate().is_ok());
        assert!(ExperimentConfig::new(9.0, 10, 1).validate().is_err());
        assert!(ExperimentConfig::new(6.0, 0, 1).validate().is_err());
        let mut c = cfg(10);
        c.delta = 0.5;
        assert!(c.validate().is_err());
        let mut c = cfg(10);
        c.intervals = vec![(0.6, 0.5)];
        assert!(c.validate().is_err());
        let json = serde_json::to_string(&cfg(10)).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg(10));
        let bad = r#"{"kappa": 6, "samples": 1, "seed": 1, "dt": 0.1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(bad).is_err());
    }

    #[test]
    fn degenerate_interval() {
        let out = one_interval(&cfg(100), 0.5, 0.5).unwrap();
        assert_eq!(out.estimate.value, 0.0);
        assert_eq!(out.estimate.stderr, 0.0);
        assert_eq!(out.exact, 0.0);
    }

    #[test]
    fn one_interval_is_deterministic() {
        let run = || one_interval(&cfg(300), 0.5, 1.0).unwrap();
        let (p, q) = (run(), run());
        assert_eq!(p, q);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_jsonl(&[p.record(&cfg(300))], &mut a).unwrap();
        write_jsonl(&[q.record(&cfg(300))], &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_interval_regime() {
        let c = cfg(10);
        assert!(two_interval(&c, 0.1, 0.5, 0.1).is_err());
        assert!(two_interval(&c, 0.3, 0.5, 0.2).is_err());
        assert!(two_interval(&c, 0.3, 0.5, 0.05).is_ok());
    }

    #[test]
    fn zero_driver_matrix() {
        let params = SleParams::for_hitting(6.0).unwrap();
        let driver = DrivingPath::constant(0.0, 1e-3, 1000).unwrap();
        let m = hit_matrix(&driver, 5, &params).unwrap();
        assert!(m.bits[1..].iter().all(|b| !b));
        assert!(m.bit(1));
        assert_eq!(m.count(), 1);
    }

    #[test]
    fn coarsening_is_coherent() {
        let mut c = cfg(5);
        c.level = 6;
        for m in hit_matrices(&c).unwrap() {
            let coarse = m.coarsen().unwrap();
            assert!(m.refines(&coarse));
            assert!(coarse.count() <= m.count());
            assert!(coarse.bit(1));
        }
    }

    #[test]
    fn sweep_and_fixed_driver_agree() {
        // a recorded sweep replayed on the grid gives the same bits, apart
        // from near-ties
        let params = SleParams::for_hitting(6.0).unwrap();
        let grid = dyadic_grid(4);
        let mut r = rng::stream(3, 0);
        let mut sw = AdaptiveSweep::new(&grid, params.a, SweepConfig::default()).unwrap().recording();
        sw.run(&mut r);
        let from_sweep = HitMatrix::from_sweep(4, &sw).unwrap();
        let path = sw.path(3).unwrap().unwrap();
        let replay = hit_matrix(&path, 4, &params).unwrap();
        let differ = from_sweep.bits.iter().zip(&replay.bits).filter(|(p, q)| p != q).count();
        assert!(differ <= 1, "{from_sweep:?} vs {replay:?}");
    }

    #[test]
    fn dimension_fit_contract() {
        let one = HitMatrix::from_groups(2, &[0, 1, 2, 3], &[false; 4]).unwrap();
        let many = vec![one; 60];
        assert!(dimension_fit(&many, 2..=2).is_err());
        assert!(dimension_fit(&many[..10], 1..=2).is_err());
        let fit = dimension_fit(&many, 1..=2).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert_eq!(fit.counts, vec![2.0, 4.0]);
    }

    #[test]
    fn second_moment_symmetry_and_indexing() {
        let params = SleParams::for_hitting(6.0).unwrap();
        let mut c = cfg(40);
        c.level = 5;
        let mats = hit_matrices(&c).unwrap();
        let table = second_moment_table(&mats, &params, 0.25).unwrap();
        for cell in &table.cells {
            let found = table.get(cell.k, cell.j).unwrap();
            assert_eq!(found, cell);
            let direct = mats.iter().filter(|m| m.bit(cell.j) && m.bit(cell.k)).count() as u64;
            assert_eq!(direct, cell.joint);
        }
        assert!(table.get(table.k_lo, table.k_lo).is_none());
    }

    #[test]
    fn near_miss_is_monotone() {
        let mut c = cfg(100);
        c.sweep.rel_step = 0.05;
        let out = near_miss(&c, 0.75, 0.25, &[0.02, 0.04, 0.08, 0.125]).unwrap();
        let v: Vec<f64> = out.rows.iter().map(|r| r.estimate.value).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        for row in &out.rows {
            assert!(row.separated.value <= row.estimate.value);
        }
        let top = &out.rows[3].separated;
        assert!(top.value <= out.ceiling + 3.0 * top.stderr + 0.05);
        assert!(near_miss(&c, 0.75, 0.25, &[0.2]).is_err());
    }

    #[test]
    fn scaling_identity_at_one() {
        let params = SleParams::for_hitting(6.0).unwrap();
        let rep = scaling_test(&params, 1.0, 200, 5, 5, SweepConfig::default()).unwrap();
        assert_eq!(rep.ks.statistic, 0.0);
    }

    #[test]
    fn koebe_small() {
        let params = SleParams::for_hitting(6.0).unwrap();
        let rep = koebe_check(&params, 10, 1, 1e-3, 0.5).unwrap();
        assert_eq!(rep.samples.len(), 10);
        assert!(rep.min_ratio >= 0.2 && rep.max_ratio <= 5.0, "{rep:?}");
    }
}
