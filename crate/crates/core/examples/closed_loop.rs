//! Closed-loop personalisation of one subject with a rest halfway through.

use synergid::harness::{run_personalization, summarize_run, PersonalizationProtocol};
use synergid::subject::SubjectProfile;

fn main() -> synergid::Result<()> {
    let profile = SubjectProfile::preset("subject1")?;
    let protocol = PersonalizationProtocol::default().with_theta_init(1.2);
    let record = run_personalization(&profile, &protocol, 3)?;
    for row in record.rows.iter().step_by(5) {
        println!(
            "{:>3} theta {:.3} trunk {:.4} shoulder {:.4} cost {:.2e} {}",
            row.iteration,
            row.theta_cmd,
            row.trunk_disp_m,
            row.shoulder_disp_m,
            row.cost_m2,
            row.event
        );
    }
    let summary = summarize_run(&record);
    println!(
        "steady at {:?}, final theta_hat {:?}, final trunk {:.4} m",
        summary.steady_state_iteration, summary.final_theta_hat, summary.final_mean_trunk
    );
    Ok(())
}
