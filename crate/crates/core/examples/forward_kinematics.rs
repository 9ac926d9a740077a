//! Where the fingertip lands for a few postures, and how much trunk lean a
//! short prosthetic elbow needs to reach the screen.

use synergid::body::{
    fingertip_position, required_trunk_pitch, screen_for_subject, trunk_displacement, BodyModel,
    Posture,
};

fn main() -> synergid::Result<()> {
    let body = BodyModel::typical();
    let screen = screen_for_subject(&body);
    println!(
        "screen at {:.3} m forward, {:.3} m high",
        screen.forward_distance, screen.height
    );

    for (label, posture) in [
        ("hanging", Posture::default()),
        ("arm forward", Posture::new(0.0, 0.0, 1.57, 0.0)?),
        ("lean + bent elbow", Posture::new(0.3, 0.02, 1.57, 0.6)?),
    ] {
        let (x, y) = fingertip_position(&body, &posture);
        println!("{label:>18}: fingertip ({x:.3}, {y:.3})");
    }

    for elbow in [0.4, 0.7, 1.0, 1.3] {
        let pitch = required_trunk_pitch(&body, &screen, elbow, std::f64::consts::FRAC_PI_2, 0.0)?;
        let p = Posture::new(pitch, 0.0, std::f64::consts::FRAC_PI_2, elbow)?;
        println!(
            "elbow flexed {elbow:.1} rad: lean {pitch:.3} rad, C7 forward {:.3} m",
            trunk_displacement(&body, &p)
        );
    }
    Ok(())
}
