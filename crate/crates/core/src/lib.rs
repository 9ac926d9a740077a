//! Simulation and personalisation of synergy-based prosthetic elbows.
//!
//! A prosthetic elbow driven by a synergy `elbow_rate = theta * shoulder_rate`
//! forces its user to compensate with trunk lean and shoulder protraction
//! when `theta` is wrong. This crate measures that compensation from body
//! IMUs, turns it into a cost, and tunes `theta` per user with an
//! iteration-domain extremum seeker, against simulated subjects or
//! recorded logs.
//!
//! | module | role |
//! |---|---|
//! | [`body`] | planar rigid-link arm and trunk |
//! | [`imu`] | trial logs, joint angles, compensation features |
//! | [`objective`] | compensation cost and quadratic cost maps |
//! | [`personalizer`] | the extremum seeker |
//! | [`subject`] | simulated subjects with learning, rest and noise |
//! | [`harness`] | sweep and personalisation protocols, replay, batches |
//! | [`plot`] | SVG figures |
//! | [`cli`] | the `synergid` command |

pub mod body;
pub mod cli;
pub mod harness;
pub mod imu;
pub mod objective;
pub mod personalizer;
pub mod plot;
pub mod subject;

use thiserror::Error;

/// Any error produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Kinematics(#[from] body::KinematicsError),
    #[error(transparent)]
    Imu(#[from] imu::ImuError),
    #[error(transparent)]
    Objective(#[from] objective::ObjectiveError),
    #[error(transparent)]
    Personalizer(#[from] personalizer::PersonalizerError),
    #[error(transparent)]
    Subject(#[from] subject::SubjectError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
    #[error(transparent)]
    Plot(#[from] plot::PlotError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
