//! Batch runs of the learners over heuristics, horizons and seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;

use crate::boundedcore::{learn_finite_core, StoreKind};
use crate::learncore::{learn_core, CoreResult, Heuristic, LearnConfig, LearnError};
use crate::numerics::Horizon;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub epsilon: f64,
    pub store: StoreKind,
    pub learn: LearnConfig,
    /// Per-run time limit; a run exceeding it is recorded as a failure.
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub model: String,
    pub heuristic: Heuristic,
    pub horizon: Horizon,
    pub seed: u64,
    pub core_size: usize,
    pub fraction: f64,
    pub wall_time: f64,
    pub verified: bool,
}

/// Runs every combination of heuristic, horizon and repetition; the seed
/// of repetition `i` is `seed_base + i`. Runs execute in parallel, rows come
/// back in job order, and failing runs are recorded, never propagated.
pub fn run_bench<M: Model + ?Sized>(
    mdp: &M,
    model: &str,
    heuristics: &[Heuristic],
    horizons: &[Horizon],
    repetitions: u32,
    seed_base: u64,
    cfg: &BenchConfig,
) -> Vec<BenchRow> {
    let mut jobs = Vec::new();
    for &h in heuristics {
        for &hz in horizons {
            for i in 0..repetitions {
                jobs.push((h, hz, seed_base + i as u64));
            }
        }
    }
    let learn = LearnConfig {
        time_limit: cfg.time_limit.or(cfg.learn.time_limit),
        ..cfg.learn.clone()
    };
    let n = mdp.num_states() as f64;
    jobs.into_par_iter()
        .map(|(heuristic, horizon, seed)| {
            let result = match horizon {
                Horizon::Unbounded => learn_core(mdp, cfg.epsilon, heuristic, seed, &learn, None),
                Horizon::Steps(k) => learn_finite_core(mdp, cfg.epsilon, k, heuristic, cfg.store, seed, &learn, None),
            };
            let (core_size, wall_time, verified) = match &result {
                Ok(core) => (core.states.len(), core.stats.wall_time_secs, core.verified),
                Err(LearnError::ResourceCap(partial)) => {
                    let p: &CoreResult = partial;
                    (p.states.len(), p.stats.wall_time_secs, false)
                }
                Err(e) => {
                    log::info!("{model}/{heuristic}/{horizon}/{seed}: {e}");
                    (0, 0.0, false)
                }
            };
            BenchRow {
                model: model.to_string(),
                heuristic,
                horizon,
                seed,
                core_size,
                fraction: core_size as f64 / n,
                wall_time,
                verified,
            }
        })
        .collect()
}

pub const CSV_HEADER: &str = "model,heuristic,horizon,seed,core_size,fraction,wall_time,verified";

/// CSV with one row per run. With `timing == false` the wall-time column
/// is left empty so that repeated runs compare byte for byte.
pub fn rows_to_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let time = if timing { format!("{:.6}", r.wall_time) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.model, r.heuristic, r.horizon, r.seed, r.core_size, r.fraction, time, r.verified
        );
    }
    out
}

/// Aggregate per heuristic and horizon: runs, failures, mean core size,
/// mean fraction and (optionally) mean time over verified runs.
pub fn summary_table(rows: &[BenchRow], timing: bool) -> String {
    let mut groups: BTreeMap<(Heuristic, String), Vec<&BenchRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.heuristic, r.horizon.to_string())).or_default().push(r);
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>9} {:>5} {:>8} {:>10} {:>12} {:>9}",
        "heuristic", "horizon", "runs", "failures", "mean_size", "mean_frac", "mean_time"
    );
    for ((h, hz), rs) in groups {
        let ok: Vec<&&BenchRow> = rs.iter().filter(|r| r.verified).collect();
        let failures = rs.len() - ok.len();
        let mean = |f: &dyn Fn(&BenchRow) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        let size = mean(&|r| r.core_size as f64);
        let frac = mean(&|r| r.fraction);
        let time = if timing { format!("{:.3}", mean(&|r| r.wall_time)) } else { "-".into() };
        let _ = writeln!(
            out,
            "{:<18} {:>9} {:>5} {:>8} {:>10.1} {:>12.4e} {:>9}",
            h.name(),
            hz,
            rs.len(),
            failures,
            size,
            frac,
            time
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generators::build_fig3;

    fn cfg() -> BenchConfig {
        BenchConfig {
            epsilon: 0.3,
            store: StoreKind::Sparse { k: 5 },
            learn: LearnConfig::default(),
            time_limit: None,
        }
    }

    #[test]
    fn fig3_all_heuristics_verify() {
        let m = build_fig3(0.3).unwrap();
        let rows = run_bench(&m, "fig3", &Heuristic::ALL, &[Horizon::Unbounded, Horizon::Steps(1)], 2, 0, &cfg());
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.verified && (r.core_size == 3 || r.core_size == 4)));
        assert!(rows.iter().filter(|r| r.core_size == 3).count() >= 10);
        assert_eq!(rows[0].heuristic, Heuristic::Prob);
        assert_eq!(rows[1].seed, 1);
        let csv = rows_to_csv(&rows, false);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("fig3,prob,unbounded,0,3,0.75,,true"));
        let table = summary_table(&rows, false);
        assert_eq!(table.lines().count(), 11);
    }

    #[test]
    fn deterministic_without_timing() {
        let m = build_fig3(0.3).unwrap();
        let a = rows_to_csv(&run_bench(&m, "fig3", &Heuristic::ALL, &[Horizon::Unbounded], 3, 7, &cfg()), false);
        let b = rows_to_csv(&run_bench(&m, "fig3", &Heuristic::ALL, &[Horizon::Unbounded], 3, 7, &cfg()), false);
        assert_eq!(a, b);
    }

    #[test]
    fn failures_are_recorded() {
        let m = build_fig3(0.3).unwrap();
        let c = BenchConfig { epsilon: 1.5, ..cfg() };
        let rows = run_bench(&m, "fig3", &[Heuristic::Prob], &[Horizon::Unbounded], 1, 0, &c);
        assert!(!rows[0].verified);
        assert!(summary_table(&rows, true).contains("NaN"));
    }
}
