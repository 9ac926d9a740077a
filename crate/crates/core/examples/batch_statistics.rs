//! Population statistics over profiles, seeds and initial synergies, run in
//! parallel.

use synergid::harness::{batch_jobs, run_batch, summarize, BatchConfig};

fn main() -> synergid::Result<()> {
    let config = BatchConfig {
        profiles: (1..=9).map(|i| format!("subject{i}")).collect(),
        seeds: vec![0, 1, 2],
        theta_inits: vec![1.2, 1.6, 2.5],
        iterations: None,
        rest_after: None,
        alpha: None,
        noise_sd: None,
    };
    let jobs = batch_jobs(&config)?;
    let records = run_batch(&jobs)?;
    let summary = summarize(&records)?;
    println!(
        "{} runs, {:.0}% steady, median steady-state iteration {:?}",
        summary.runs.len(),
        100.0 * summary.converged_fraction,
        summary.median_steady_state_iteration
    );
    for run in summary.runs.iter().step_by(9) {
        println!(
            "{} seed {} init {:?}: steady {:?}, final trunk {:.4} m",
            run.profile_id,
            run.seed,
            run.theta_init,
            run.steady_state_iteration,
            run.final_mean_trunk
        );
    }
    Ok(())
}
