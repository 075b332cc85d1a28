use std::io::Write;

use anyhow::{bail, Result};
use slelab_core::analytic::HitMap;
use slelab_core::experiments::{
    dimension_fit, hit_matrices, near_miss, one_interval, scaling_test, two_interval, two_interval_decay, Record,
};
use slelab_core::rng::splitmix64;

use crate::config::{parse_grid, Resolved};

pub enum Outcome {
    Records(Vec<Record>),
    /// CSV already written; nothing to store.
    Table,
}

/// Run one experiment. Tables go straight to `out`.
pub fn execute<W: Write>(cfg: &Resolved, out: &mut W) -> Result<Outcome> {
    let ec = cfg.experiment_config();
    let records = match cfg.experiment.as_str() {
        "hit" => vec![one_interval(&ec, cfg.y, cfg.x)?.record(&ec)],
        "two-hit" => match cfg.eps.as_slice() {
            [] => bail!("two-hit needs at least one eps"),
            [eps] => vec![two_interval(&ec, cfg.y, cfg.x, *eps)?.record(&ec)],
            many => two_interval_decay(&ec, cfg.y, cfg.x, many)?.records(&ec),
        },
        "dimension" => {
            let [lo, hi] = cfg.levels;
            let mats = hit_matrices(&ec)?;
            let fit = dimension_fit(&mats, lo..=hi)?;
            let params = ec.params()?;
            vec![fit.record(&ec, Some(params.s))]
        }
        "near-miss" => near_miss(&ec, cfg.x, cfg.y, &cfg.radii)?.records(&ec),
        "scaling" => {
            let params = ec.params()?;
            let rep = scaling_test(&params, cfg.x, cfg.samples, cfg.seed, splitmix64(cfg.seed), ec.sweep)?;
            vec![rep.record(&ec)]
        }
        "tables" => {
            let (lo, hi, step) = parse_grid(&cfg.grid)?;
            let hm = HitMap::for_params(&ec.params()?)?;
            let rows = hm.table(lo, hi, step)?;
            hm.write_table_csv(&rows, out)?;
            return Ok(Outcome::Table);
        }
        other => bail!("unknown experiment `{other}`"),
    };
    Ok(Outcome::Records(records))
}

/// Aligned table for the terminal.
pub fn write_summary<W: Write>(records: &[Record], out: &mut W) -> Result<()> {
    writeln!(
        out,
        "{:<20} {:>6} {:<28} {:>11} {:>10} {:>23} {:>11} {:>8} {:>8}",
        "experiment", "kappa", "params", "estimate", "stderr", "99% ci", "exact|bound", "n", "censored"
    )?;
    for r in records {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v:.4}")).collect();
        let exact = r.exact_or_bound.map_or("-".to_string(), |v| format!("{v:.6}"));
        writeln!(
            out,
            "{:<20} {:>6} {:<28} {:>11.6} {:>10.6} {:>23} {:>11} {:>8} {:>8}",
            r.experiment,
            r.kappa,
            params.join(" "),
            r.estimate,
            r.stderr,
            format!("[{:.5}, {:.5}]", r.ci_lo, r.ci_hi),
            exact,
            r.n_samples,
            r.censored
        )?;
        for w in &r.warnings {
            writeln!(out, "  warning: {w}")?;
        }
    }
    Ok(())
}
