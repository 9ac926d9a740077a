//! Compensation-motion cost and synergy–cost map identification.
//!
//! The cost of a reach is a convex combination of squared deviations of
//! trunk and shoulder forward displacement from their targets:
//!
//! ```text
//! J = alpha * (target_trunk - trunk)^2 + (1 - alpha) * (target_shoulder - shoulder)^2
//! ```
//!
//! A synergy sweep gives `(theta, J)` samples; an ordinary least-squares
//! quadratic over all samples locates the optimal synergy.

use crate::imu::ReachOutcome;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("need at least 3 samples, got {0}")]
    InsufficientData(usize),
    #[error("need at least 3 distinct theta values, got {0}")]
    DegenerateDesign(usize),
    #[error("line {line}: {message}")]
    FormatError { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Weights and targets of the compensation cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub alpha: f64,
    /// Desired trunk forward displacement, metres.
    pub target_trunk: f64,
    /// Desired shoulder forward displacement, metres.
    pub target_shoulder: f64,
}

impl CostSpec {
    pub fn new(
        alpha: f64,
        target_trunk: f64,
        target_shoulder: f64,
    ) -> Result<Self, ObjectiveError> {
        let spec = Self {
            alpha,
            target_trunk,
            target_shoulder,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Equal weights, zero targets.
    pub fn zero_targets() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            target_trunk: 0.0,
            target_shoulder: 0.0,
        }
    }

    /// Equal weights, targets at typical able-bodied displacements
    /// (no trunk lean, about 4 cm of shoulder motion).
    pub fn able_bodied_targets() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            target_trunk: 0.0,
            target_shoulder: 0.04,
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self, ObjectiveError> {
        Self::new(alpha, self.target_trunk, self.target_shoulder)
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.alpha > 0.0 && self.alpha < 1.0 {
            Ok(())
        } else {
            Err(ObjectiveError::InvalidAlpha(self.alpha))
        }
    }
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::zero_targets()
    }
}

/// Cost of one reach, m².
pub fn evaluate_cost(spec: &CostSpec, outcome: &ReachOutcome) -> f64 {
    let trunk = spec.target_trunk - outcome.trunk_disp;
    let shoulder = spec.target_shoulder - outcome.shoulder_disp;
    spec.alpha * trunk * trunk + (1.0 - spec.alpha) * shoulder * shoulder
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSample {
    pub theta: f64,
    pub cost: f64,
    pub iteration_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapStatus {
    /// Convex fit with its vertex inside the sampled range.
    InteriorMinimum,
    NoInteriorMinimum,
}

/// Fitted `J(theta) ≈ a2·theta² + a1·theta + a0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynergyCostMap {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// Vertex of the fit; `None` unless `status` is `InteriorMinimum`.
    pub theta_star: Option<f64>,
    pub fit_rmse: f64,
    pub theta_range: (f64, f64),
    pub status: MapStatus,
}

impl SynergyCostMap {
    pub fn eval(&self, theta: f64) -> f64 {
        (self.a2 * theta + self.a1) * theta + self.a0
    }

    /// Strictly positive curvature, ignoring round-off on linear data.
    pub fn is_convex(&self) -> bool {
        self.a2 > 1e-10 * (self.a1.abs() + self.a0.abs())
    }

    pub fn vertex(&self) -> Option<f64> {
        self.is_convex().then(|| -self.a1 / (2.0 * self.a2))
    }

    pub fn has_interior_minimum(&self) -> bool {
        self.status == MapStatus::InteriorMinimum
    }

    /// Shape of the JSON sidecar written next to the cost-map CSV.
    pub fn sidecar(&self) -> CostMapSidecar {
        CostMapSidecar {
            a2: self.a2,
            a1: self.a1,
            a0: self.a0,
            theta_star: self.theta_star,
            fit_rmse: self.fit_rmse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMapSidecar {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub theta_star: Option<f64>,
    pub fit_rmse: f64,
}

fn distinct_thetas(samples: &[CostSample]) -> usize {
    let mut thetas: Vec<f64> = samples.iter().map(|s| s.theta).collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    thetas.len()
}

/// Least-squares quadratic fit over every sample (not per-theta means).
pub fn fit_cost_map(samples: &[CostSample]) -> Result<SynergyCostMap, ObjectiveError> {
    if samples.len() < 3 {
        return Err(ObjectiveError::InsufficientData(samples.len()));
    }
    let distinct = distinct_thetas(samples);
    if distinct < 3 {
        return Err(ObjectiveError::DegenerateDesign(distinct));
    }

    let lo = samples
        .iter()
        .map(|s| s.theta)
        .fold(f64::INFINITY, f64::min);
    let hi = samples
        .iter()
        .map(|s| s.theta)
        .fold(f64::NEG_INFINITY, f64::max);
    // Centre and scale theta so the design matrix stays well conditioned.
    let centre = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);

    let n = samples.len();
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let u = (samples[i].theta - centre) / scale;
        u.powi(j as i32)
    });
    let costs = DVector::from_iterator(n, samples.iter().map(|s| s.cost));
    let svd = design.svd(true, true);
    let coef = svd
        .solve(&costs, 1e-12)
        .map_err(|_| ObjectiveError::DegenerateDesign(distinct))?;
    let (b0, b1, b2) = (coef[0], coef[1], coef[2]);

    // Expand b0 + b1*u + b2*u^2 with u = (theta - c)/s.
    let a2 = b2 / (scale * scale);
    let a1 = b1 / scale - 2.0 * b2 * centre / (scale * scale);
    let a0 = b0 - b1 * centre / scale + b2 * centre * centre / (scale * scale);

    let ssr: f64 = samples
        .iter()
        .map(|s| {
            let u = (s.theta - centre) / scale;
            let r = s.cost - (b0 + b1 * u + b2 * u * u);
            r * r
        })
        .sum();
    let fit_rmse = (ssr / n as f64).sqrt();

    let mut map = SynergyCostMap {
        a2,
        a1,
        a0,
        theta_star: None,
        fit_rmse,
        theta_range: (lo, hi),
        status: MapStatus::NoInteriorMinimum,
    };
    // Flat or concave fits fail the b2 test; relative tolerance on b2.
    let b_scale = b0.abs().max(b1.abs()).max(b2.abs()).max(f64::MIN_POSITIVE);
    if b2 > 1e-12 * b_scale {
        let star = centre - scale * b1 / (2.0 * b2);
        if star >= lo && star <= hi {
            map.theta_star = Some(star);
            map.status = MapStatus::InteriorMinimum;
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub convex: bool,
    pub interior_minimum: bool,
    /// Residual standard deviation of the samples about the fit.
    pub noise_sd: f64,
    /// Width of the theta interval whose fitted cost lies within one noise
    /// standard deviation of the minimum; zero when not convex.
    pub flat_region_width: f64,
    pub flat_region: Option<(f64, f64)>,
}

impl ConvexityReport {
    pub fn passes(&self) -> bool {
        self.convex && self.interior_minimum
    }
}

pub fn convexity_screen(map: &SynergyCostMap, samples: &[CostSample]) -> ConvexityReport {
    let noise_sd = if samples.is_empty() {
        map.fit_rmse
    } else {
        let ssr: f64 = samples
            .iter()
            .map(|s| (s.cost - map.eval(s.theta)).powi(2))
            .sum();
        (ssr / samples.len() as f64).sqrt()
    };
    let convex = map.is_convex();
    let interior_minimum = map.has_interior_minimum();
    let (flat_region_width, flat_region) = match map.vertex() {
        Some(vertex) if convex => {
            // a2 * d^2 = sd  =>  d = sqrt(sd / a2)
            let half = (noise_sd / map.a2).sqrt();
            (2.0 * half, Some((vertex - half, vertex + half)))
        }
        _ => (0.0, None),
    };
    ConvexityReport {
        convex,
        interior_minimum,
        noise_sd,
        flat_region_width,
        flat_region,
    }
}

/// Writes `theta,cost` rows.
pub fn write_cost_csv<W: Write>(writer: W, samples: &[CostSample]) -> Result<(), ObjectiveError> {
    let mut csv = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| ObjectiveError::Io(std::io::Error::other(e));
    csv.write_record(["theta", "cost"]).map_err(to_io)?;
    for s in samples {
        csv.write_record(&[s.theta.to_string(), s.cost.to_string()])
            .map_err(to_io)?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads `theta,cost` rows; iteration indices are assigned by row order.
pub fn read_cost_csv<R: Read>(reader: R) -> Result<Vec<CostSample>, ObjectiveError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, record) in csv.records().enumerate() {
        let record = record.map_err(|e| ObjectiveError::FormatError {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(idx as u64 + 1);
        if idx == 0 {
            if record.iter().collect::<Vec<_>>() != ["theta", "cost"] {
                return Err(ObjectiveError::FormatError {
                    line,
                    message: "expected header theta,cost".into(),
                });
            }
            continue;
        }
        if record.len() != 2 {
            return Err(ObjectiveError::FormatError {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ObjectiveError::FormatError {
                    line,
                    message: format!("bad number '{s}'"),
                })
        };
        out.push(CostSample {
            theta: parse(&record[0])?,
            cost: parse(&record[1])?,
            iteration_index: out.len(),
        });
    }
    Ok(out)
}

pub fn write_sidecar<W: Write>(writer: W, map: &SynergyCostMap) -> Result<(), ObjectiveError> {
    serde_json::to_writer_pretty(writer, &map.sidecar())?;
    Ok(())
}
