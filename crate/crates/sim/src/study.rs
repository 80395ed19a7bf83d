//! Replication runner: generate, fit every estimator, score, aggregate.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::estimator::{evaluate, Draw, Estimator};
use crate::generate::{generate, replicate_rng};
use crate::metrics::{summarize, MetricsRow};
use crate::scenario::{targets, ScenarioSpec, Target};

pub const COVERAGE_LEVEL: f64 = 0.95;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CPM_THREADS";

/// Replicates an estimator could not use, grouped by error kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub estimator: String,
    pub reason: String,
    pub count: usize,
    /// First replicate index that failed this way.
    pub first_replicate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub spec: ScenarioSpec,
    pub estimators: Vec<Estimator>,
    pub targets: Vec<Target>,
    pub rows: Vec<MetricsRow>,
    pub exclusions: Vec<Exclusion>,
}

impl StudyReport {
    pub fn row(&self, estimator: Estimator, parameter: &str) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator.name() && r.parameter == parameter)
    }

    pub fn excluded(&self, estimator: Estimator) -> usize {
        self.exclusions
            .iter()
            .filter(|e| e.estimator == estimator.name())
            .map(|e| e.count)
            .sum()
    }
}

type ReplicateOutcome = Vec<std::result::Result<Vec<Option<Draw>>, String>>;

fn run_replicate(spec: &ScenarioSpec, targets: &[Target], estimators: &[Estimator], r: usize) -> ReplicateOutcome {
    let mut rng = replicate_rng(spec.seed, r as u64);
    match generate(spec.family, spec.n, &mut rng) {
        Err(e) => estimators.iter().map(|_| Err(e.kind().to_string())).collect(),
        Ok(data) => estimators
            .iter()
            .map(|est| evaluate(*est, &data, spec.link, targets, COVERAGE_LEVEL).map_err(|e| e.kind().to_string()))
            .collect(),
    }
}

/// Worker count from `CPM_THREADS`, or rayon's default when unset or invalid.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

pub fn run_study(spec: &ScenarioSpec, estimators: &[Estimator]) -> Result<StudyReport> {
    run_study_with_threads(spec, estimators, thread_count())
}

/// Runs the study on a dedicated pool of `threads` workers. Per-replicate
/// outcomes are collected in replicate order and reduced sequentially, so the
/// report is identical for every thread count.
pub fn run_study_with_threads(spec: &ScenarioSpec, estimators: &[Estimator], threads: usize) -> Result<StudyReport> {
    spec.validate()?;
    if estimators.is_empty() {
        return Err(SimError::InvalidSpec("no estimators requested".into()));
    }
    let targets = targets(spec.family);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    let outcomes: Vec<ReplicateOutcome> = pool.install(|| {
        (0..spec.replicates)
            .into_par_iter()
            .map(|r| run_replicate(spec, &targets, estimators, r))
            .collect()
    });

    let mut rows = Vec::new();
    let mut exclusions: BTreeMap<(usize, String), Exclusion> = BTreeMap::new();
    for (e_idx, est) in estimators.iter().enumerate() {
        let mut per_target: Vec<Vec<Draw>> = vec![Vec::with_capacity(spec.replicates); targets.len()];
        for (r, outcome) in outcomes.iter().enumerate() {
            match &outcome[e_idx] {
                Ok(draws) => {
                    for (t, d) in draws.iter().enumerate() {
                        if let Some(d) = d {
                            per_target[t].push(*d);
                        }
                    }
                }
                Err(reason) => {
                    exclusions
                        .entry((e_idx, reason.clone()))
                        .or_insert_with(|| Exclusion {
                            estimator: est.name().to_string(),
                            reason: reason.clone(),
                            count: 0,
                            first_replicate: r,
                        })
                        .count += 1;
                }
            }
        }
        for (t, draws) in targets.iter().zip(&per_target) {
            if !draws.is_empty() {
                rows.push(summarize(est.name(), &t.name, t.truth, t.published_truth, draws));
            }
        }
    }
    Ok(StudyReport {
        spec: *spec,
        estimators: estimators.to_vec(),
        targets,
        rows,
        exclusions: exclusions.into_values().collect(),
    })
}
