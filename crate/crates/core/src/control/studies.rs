//! Stability and vanishing-regularization experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::control::admissible::AdmissibleSpec;
use crate::control::objective::ObjectiveSpec;
use crate::control::optimize::{control_distance, optimize, OptOptions, OptState};
use crate::error::{Error, Result};
use crate::field::SpaceTimeField;
use crate::forward::{Controls, Model};

/// Relative slack allowed when checking monotone sequences.
pub const MONOTONE_SLACK: f64 = 0.05;

/// `true` if each entry is at most `(1 + slack)` times its predecessor.
pub fn nonincreasing_with_slack(values: &[f64], slack: f64) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + slack) + f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub delta: f64,
    pub distance: f64,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub seed: u64,
    pub baseline_objective: f64,
    pub rows: Vec<PerturbationRow>,
    pub monotone: bool,
}

/// Unit-peak Gaussian noise on the observed part of the space-time grid.
pub fn target_noise(model: &Model, spec: &ObjectiveSpec, seed: u64) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = model.zero_field();
    for v in noise.as_mut_slice() {
        *v = StandardNormal.sample(&mut rng);
    }
    let peak = noise.max_abs().max(f64::MIN_POSITIVE);
    let scale = spec.target.max_abs().max(1.0) / peak;
    noise.scaled(scale)
}

/// Re-optimizes for `p_d + delta * noise` over a ladder of `delta` values
/// (largest first) and records how far the minimizer moves.
pub fn run_target_perturbation_study(
    model: &Model,
    spec: &ObjectiveSpec,
    adm: &AdmissibleSpec,
    opts: &OptOptions,
    init: &Controls,
    deltas: &[f64],
    seed: u64,
) -> Result<PerturbationReport> {
    if deltas.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::Domain("perturbation sizes must be nonnegative".into()));
    }
    let base = optimize(model, init, spec, adm, opts)?;
    let noise = target_noise(model, spec, seed);
    let mut ladder = deltas.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let runs: Vec<Result<OptState>> = ladder
        .par_iter()
        .map(|&delta| {
            let mut target = spec.target.clone();
            target.axpy(delta, &noise);
            let perturbed = ObjectiveSpec { target, ..spec.clone() };
            optimize(model, init, &perturbed, adm, opts)
        })
        .collect();
    let mut rows = Vec::with_capacity(ladder.len());
    for (delta, run) in ladder.iter().zip(runs) {
        let st = run?;
        rows.push(PerturbationRow {
            delta: *delta,
            distance: control_distance(model, &st.controls, &base.controls),
            objective: st.objective(),
            iterations: st.iterations,
        });
    }
    let distances: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok(PerturbationReport {
        seed,
        baseline_objective: base.objective(),
        monotone: nonincreasing_with_slack(&distances, MONOTONE_SLACK),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub cost: f64,
    pub tracking_error: f64,
    pub objective: f64,
    pub iterations: usize,
    pub stationarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub rows: Vec<LadderRow>,
    pub monotone: bool,
}

/// The five-rung ladder `1e-1, ..., 1e-5`.
pub fn default_cost_ladder() -> Vec<f64> {
    (1..=5).map(|e| 10f64.powi(-e)).collect()
}

/// Solves with `gamma = eta = cost` for each rung, largest cost first, each
/// rung warm-started from the previous minimizer.
pub fn run_vanishing_regularization_study(
    model: &Model,
    spec: &ObjectiveSpec,
    adm: &AdmissibleSpec,
    opts: &OptOptions,
    init: &Controls,
    costs: &[f64],
) -> Result<LadderReport> {
    if costs.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::Domain("regularization weights must be nonnegative".into()));
    }
    let mut ladder = costs.to_vec();
    ladder.sort_by(|a, b| b.total_cmp(a));
    let mut start = init.clone();
    let mut rows = Vec::with_capacity(ladder.len());
    for cost in ladder {
        let rung = spec.with_costs(cost, cost);
        let st = optimize(model, &start, &rung, adm, opts)?;
        log::info!(
            "cost {cost:e}: tracking error {:e} after {} iterations",
            st.value.tracking_error(),
            st.iterations
        );
        rows.push(LadderRow {
            cost,
            tracking_error: st.value.tracking_error(),
            objective: st.objective(),
            iterations: st.iterations,
            stationarity: st.stationarity,
        });
        start = st.controls;
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.tracking_error).collect();
    Ok(LadderReport {
        monotone: nonincreasing_with_slack(&errors, MONOTONE_SLACK),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_check() {
        assert!(nonincreasing_with_slack(&[3.0, 2.0, 2.05, 1.0], 0.05));
        assert!(!nonincreasing_with_slack(&[3.0, 2.0, 2.2], 0.05));
        assert!(nonincreasing_with_slack(&[0.0, 0.0], 0.05));
    }

    #[test]
    fn ladder_values() {
        let l = default_cost_ladder();
        assert_eq!(l.len(), 5);
        assert!((l[0] - 0.1).abs() < 1e-16 && (l[4] - 1e-5).abs() < 1e-20);
    }
}
