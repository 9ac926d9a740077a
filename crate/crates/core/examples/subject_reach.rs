//! A simulated subject: steady-state compensation across synergies, then a
//! few practice reaches, a rest and the warm-up decrement.

use synergid::subject::{
    perform_reach, rest_event, sample_outcome, steady_state_outcome, MotorState, SubjectProfile,
};

fn main() -> synergid::Result<()> {
    let profile = SubjectProfile::preset("subject2")?;
    println!("{} (natural synergy {})", profile.id, profile.theta_natural);
    for theta in [1.0, 1.5, 1.9, 2.3, 2.7] {
        let o = steady_state_outcome(&profile, theta);
        println!(
            "theta {theta:.1}: trunk {:.4} m, shoulder {:.4} m",
            o.trunk_disp, o.shoulder_disp
        );
    }

    let mut state = MotorState::new(&profile, 0);
    for _ in 0..10 {
        let (trial, next) = perform_reach(&profile, &state, profile.theta_natural);
        println!(
            "reach {:>2}: learned {:.2}, {} sensor samples",
            trial.iteration_index,
            next.learned_fraction,
            trial.samples.len()
        );
        state = next;
    }
    state = rest_event(&profile, &state);
    let o = sample_outcome(&profile, &mut state.clone(), profile.theta_natural);
    println!(
        "after rest: learned {:.2}, trunk {:.4} m",
        state.learned_fraction, o.trunk_disp
    );
    Ok(())
}
