//! Thread-pool Monte Carlo drivers with deterministic, index-ordered
//! reduction.
//!
//! Replication `rep` always draws from the stream `(seed, rep)`, so the
//! per-replication outcomes do not depend on which worker computes them;
//! the outcomes are collected into a vector indexed by replication and
//! folded sequentially. Reports are therefore bitwise identical for any
//! thread count.

use rayon::prelude::*;

use shift_core::error::{Error, Result};
use shift_core::experiments::{
    summarize_bayes, summarize_risk, van_trees_bound, BayesExperiment, BayesReplicate,
    BayesRiskReport, Replicate, RiskExperiment, RiskReport,
};

/// Maps `0..reps` through `work` on up to `threads` workers, preserving
/// replication order in the output.
pub fn run_indexed<T, F>(reps: usize, threads: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if threads <= 1 {
        return (0..reps as u64).map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| (0..reps as u64).into_par_iter().map(work).collect())
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 100 {
        return Err(Error::InvalidInput(format!(
            "risk experiments need at least 100 replications, got {reps}"
        )));
    }
    Ok(())
}

/// Parallel fixed-signal risk experiment; same report as the serial driver.
pub fn mc_risk(
    exp: &RiskExperiment,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<RiskReport> {
    check_reps(reps)?;
    let outcomes: Vec<Replicate> = run_indexed(reps, threads, |rep| exp.replicate(seed, rep))?;
    Ok(summarize_risk(exp.estimator.id(), seed, &outcomes))
}

/// Parallel Bayes risk experiment with the Van Trees bound attached.
pub fn bayes_risk(
    exp: &BayesExperiment,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<BayesRiskReport> {
    check_reps(reps)?;
    let bound = van_trees_bound(&exp.prior, exp.eps)?;
    let outcomes: Vec<BayesReplicate> =
        run_indexed(reps, threads, |rep| exp.replicate(seed, rep))?;
    Ok(summarize_bayes(
        exp.estimator.id(),
        seed,
        bound.mean_info,
        bound.raw,
        &outcomes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use shift_core::estimators::{EstimatorSpec, SearchOptions};
    use shift_core::signal::{ParamDomain, SignalSpectrum};
    use shift_core::weights::WeightSequence;

    fn experiment() -> RiskExperiment {
        RiskExperiment {
            estimator: EstimatorSpec::AdaptiveContrast {
                weights: WeightSequence::projection(2, 2).unwrap(),
            },
            signal: SignalSpectrum::new(vec![1.0, 0.4]).unwrap(),
            theta: 0.03,
            eps: 0.05,
            truncation: 2,
            domain: ParamDomain::new(0.2).unwrap(),
            search: SearchOptions::default(),
        }
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let exp = experiment();
        let serial = mc_risk(&exp, 400, 42, 1).unwrap();
        for threads in [2, 3, 7] {
            let parallel = mc_risk(&exp, 400, 42, threads).unwrap();
            assert_eq!(serial, parallel, "threads = {threads}");
        }
    }

    #[test]
    fn parallel_matches_the_serial_core_driver() {
        let exp = experiment();
        let core_serial = shift_core::experiments::mc_risk(&exp, 300, 9).unwrap();
        let here = mc_risk(&exp, 300, 9, 4).unwrap();
        assert_eq!(core_serial, here);
    }
}
