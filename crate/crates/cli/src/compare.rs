//! Seeded observer comparison: the configured gain set against the linear
//! baseline (the same observer with both nonlinear correction gains zeroed),
//! on identical initial states and the identical attack schedule. Runs fan
//! out across worker threads (capped by COR_THREADS) and merge by seed
//! order, so the table is identical however many workers execute it.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use cor_core::observer::ObserverParams;
use cor_core::sim::{run_observer_only, settling_time, RunOptions, ScenarioDesign};
use rand_core::{RngCore, SeedableRng};

pub struct Row {
    pub seed: u64,
    pub full: Option<f64>,
    pub baseline: Option<f64>,
}

pub struct Spread {
    pub count: usize,
    pub std: Option<f64>,
}

fn uniform(rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + u * (hi - lo)
}

fn worker_count(jobs: usize) -> usize {
    let configured = std::env::var("COR_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let available = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    configured.unwrap_or(available).max(1).min(jobs.max(1))
}

pub fn run_comparison(
    design: &ScenarioDesign,
    opts: &RunOptions,
    base_seed: u64,
    n_seeds: usize,
    threshold: f64,
) -> Result<Vec<Row>, String> {
    let dim = design.exo.dim() * (1 + design.agents.len());
    let baseline = ObserverParams { mu2: 0.0, mu3: 0.0, ..design.observer };
    let compute = |k: usize| -> Result<Row, String> {
        let seed = base_seed + k as u64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let init: Vec<f64> = (0..dim).map(|_| uniform(&mut rng, -10.0, 10.0)).collect();
        let full_run = run_observer_only(design, &design.observer, &init, opts)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let base_run = run_observer_only(design, &baseline, &init, opts)
            .map_err(|e| format!("seed {seed} baseline: {e}"))?;
        Ok(Row {
            seed,
            full: settling_time(&full_run.times, &full_run.worst_err, threshold),
            baseline: settling_time(&base_run.times, &base_run.worst_err, threshold),
        })
    };

    let mut rows: Vec<Option<Result<Row, String>>> = Vec::with_capacity(n_seeds);
    rows.resize_with(n_seeds, || None);
    let workers = worker_count(n_seeds);
    if workers <= 1 {
        for (k, slot) in rows.iter_mut().enumerate() {
            *slot = Some(compute(k));
        }
    } else {
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                let compute = &compute;
                scope.spawn(move || loop {
                    let k = next.fetch_add(1, Ordering::Relaxed);
                    if k >= n_seeds || tx.send((k, compute(k))).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (k, row) in rx {
                rows[k] = Some(row);
            }
        });
    }
    rows.into_iter().map(|slot| slot.expect("every row is delivered")).collect()
}

pub fn spread(values: impl Iterator<Item = Option<f64>>) -> Spread {
    let settled: Vec<f64> = values.flatten().collect();
    if settled.len() < 2 {
        return Spread { count: settled.len(), std: None };
    }
    let mean = settled.iter().sum::<f64>() / settled.len() as f64;
    let var = settled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / settled.len() as f64;
    Spread { count: settled.len(), std: Some(var.sqrt()) }
}

pub fn fmt_settle(value: Option<f64>) -> String {
    match value {
        Some(t) => format!("{t:.4} s"),
        None => "not settled".to_string(),
    }
}

pub fn fmt_std(spread: &Spread) -> String {
    match spread.std {
        Some(s) => format!("{s:.4} s"),
        None => "n/a".to_string(),
    }
}

pub fn fmt_csv(value: Option<f64>) -> String {
    match value {
        Some(t) => format!("{t:.6}"),
        None => "nan".to_string(),
    }
}
