//! Steady-state sweep of the synergy grid and the fitted cost map.

use synergid::harness::{run_sweep, SweepProtocol};
use synergid::subject::SubjectProfile;

fn main() -> synergid::Result<()> {
    for name in ["subject1", "subject2", "subject3"] {
        let profile = SubjectProfile::preset(name)?.noiseless();
        let (record, map) = run_sweep(&profile, &SweepProtocol::default(), 0)?;
        println!(
            "{name}: {} reaches, theta* {:.3}, rmse {:.1e}",
            record.rows.len(),
            map.theta_star.unwrap_or(f64::NAN),
            map.fit_rmse
        );
    }
    Ok(())
}
