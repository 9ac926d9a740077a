//! Record a run, write its trial log, and replay it with a different cost
//! weighting and a fresh personaliser.

use synergid::harness::{
    default_personalizer_config, replay, run_personalization, PersonalizationProtocol,
    ReplayOptions,
};
use synergid::objective::CostSpec;
use synergid::subject::SubjectProfile;

fn main() -> synergid::Result<()> {
    let profile = SubjectProfile::preset("subject3")?;
    let record = run_personalization(&profile, &PersonalizationProtocol::default(), 0)?;
    let dir = std::env::temp_dir().join("synergid_replay_example");
    let files = record.write(&dir, "session")?;
    let log = files.trial_log.expect("run keeps its trials");
    println!("wrote {}", log.display());

    let trunk_heavy = CostSpec::zero_targets().with_alpha(0.8)?;
    let options = ReplayOptions {
        reoptimize: Some(default_personalizer_config(1.5)),
        ..ReplayOptions::default()
    };
    let replayed = replay(&log, &profile, &trunk_heavy, &options)?;
    for (a, b) in record.rows.iter().zip(&replayed.rows).step_by(10) {
        println!(
            "{:>3}: cost {:.2e} (alpha 0.5) vs {:.2e} (alpha 0.8), theta_hat {:?}",
            a.iteration, a.cost_m2, b.cost_m2, b.theta_hat
        );
    }
    Ok(())
}
