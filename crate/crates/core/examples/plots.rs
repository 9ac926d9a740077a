//! SVG figures for a sweep and a personalisation run.

use synergid::harness::{run_personalization, run_sweep, PersonalizationProtocol, SweepProtocol};
use synergid::plot::emit_plots;
use synergid::subject::SubjectProfile;

fn main() -> synergid::Result<()> {
    let profile = SubjectProfile::preset("subject2")?;
    let dir = std::env::temp_dir().join("synergid_plots_example");
    let (sweep, map) = run_sweep(&profile, &SweepProtocol::default(), 0)?;
    let run = run_personalization(&profile, &PersonalizationProtocol::default(), 0)?;
    let mut written = emit_plots(&sweep.rows, Some(&map), &dir, "sweep")?;
    written.extend(emit_plots(&run.rows, None, &dir, "run")?);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
