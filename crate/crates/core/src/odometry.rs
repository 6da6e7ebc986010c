//! Frame-to-frame tracking, trajectory I/O and relative pose error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use thiserror::Error;

use crate::flow::{register, FlowError, RegistrationConfig, StopReason};
use crate::liegroup::{rot_distance, Isometry3, LieError, Rotation};
use crate::rgbd::{select_points, CameraIntrinsics, RgbdError, RgbdFrame, TumSequence};
use crate::rkhs::LabeledCloud3;

#[derive(Debug, Error)]
pub enum OdometryError {
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("timestamps must be strictly increasing (at {0})")]
    Unordered(f64),
    #[error("ground truth [{start}, {end}] does not cover estimate time {t}")]
    Coverage { t: f64, start: f64, end: f64 },
    #[error("need at least two frames, got {0}")]
    TooFewFrames(usize),
    #[error(transparent)]
    Rgbd(#[from] RgbdError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Timestamped poses, each mapping its camera frame into the reference
/// frame. Tracked trajectories start at the identity; ground truth need not.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    entries: Vec<(f64, Isometry3)>,
}

impl Trajectory {
    pub fn new(entries: Vec<(f64, Isometry3)>) -> Result<Self, OdometryError> {
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(OdometryError::Unordered(w[1].0));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, Isometry3)] {
        &self.entries
    }

    pub fn push(&mut self, t: f64, pose: Isometry3) -> Result<(), OdometryError> {
        if self.entries.last().is_some_and(|e| t <= e.0) {
            return Err(OdometryError::Unordered(t));
        }
        self.entries.push((t, pose));
        Ok(())
    }

    /// Pose at `t`, interpolating between the bracketing samples: linear in
    /// translation, geodesic in rotation.
    pub fn interpolate(&self, t: f64) -> Option<Isometry3> {
        let (first, last) = (self.entries.first()?, self.entries.last()?);
        if t < first.0 || t > last.0 {
            return None;
        }
        let hi = self.entries.partition_point(|e| e.0 < t);
        let (t1, p1) = self.entries[hi];
        if t1 == t || hi == 0 {
            return Some(p1);
        }
        let (t0, p0) = self.entries[hi - 1];
        let s = (t - t0) / (t1 - t0);
        let q = p0.rotation.to_quaternion().slerp(&p1.rotation.to_quaternion(), s);
        Some(Isometry3::from_quaternion(p0.translation.lerp(&p1.translation, s), &q))
    }

    /// TUM format: `timestamp tx ty tz qx qy qz qw`; values print in their
    /// shortest round-trip form.
    pub fn write_tum<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (t, pose) in &self.entries {
            writeln!(out, "{t} {pose}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), OdometryError> {
        let io_err = |err| OdometryError::Io { path: path.to_path_buf(), err };
        let mut out = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
        self.write_tum(&mut out).and_then(|_| out.flush()).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, OdometryError> {
        let text = fs::read_to_string(path).map_err(|err| OdometryError::Io { path: path.to_path_buf(), err })?;
        let mut traj = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| OdometryError::Parse { path: path.to_path_buf(), line: n + 1, msg };
            let values: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            if values.len() != 8 {
                return Err(parse_err(format!("expected 8 fields, found {}", values.len())));
            }
            let pose = Isometry3::from_pose_fields(&values[1..]).map_err(|e| parse_err(e.to_string()))?;
            traj.push(values[0], pose).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Index of the later frame of the pair.
    pub frame: usize,
    pub timestamp: f64,
    pub motion: Isometry3,
    pub iterations: usize,
    pub converged: bool,
    pub reason: Option<StopReason>,
    /// Set when a degenerate frame forced an identity step.
    pub skipped: Option<String>,
}

pub const STEPS_HEADER: &str = "frame,t,iterations,converged,reason,skipped";

#[derive(Debug, Clone)]
pub struct TrackResult {
    pub trajectory: Trajectory,
    pub steps: Vec<StepRecord>,
}

impl TrackResult {
    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }

    pub fn write_steps<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{STEPS_HEADER}")?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.frame,
                s.timestamp,
                s.iterations,
                s.converged,
                s.reason.map_or("none", |r| r.as_str()),
                s.skipped.is_some()
            )?;
        }
        Ok(())
    }
}

/// Tracks consecutive frames from the identity. `cloud_at(k)` yields the
/// cloud for frame `k`; a degenerate frame turns the steps touching it
/// into identity motions, any other error aborts.
///
/// Each step registers `X = cloud_{k+1}` against `Z = cloud_k`, so the
/// result maps frame `k+1` coordinates into frame `k` and composes as
/// `pose_{k+1} = pose_k · h_k`.
pub fn track_sequence<F>(timestamps: &[f64], mut cloud_at: F, cfg: &RegistrationConfig) -> Result<TrackResult, OdometryError>
where
    F: FnMut(usize) -> Result<LabeledCloud3, RgbdError>,
{
    if timestamps.len() < 2 {
        return Err(OdometryError::TooFewFrames(timestamps.len()));
    }
    let mut load = |k: usize| match cloud_at(k) {
        Ok(c) => Ok(Some(c)),
        Err(RgbdError::Degenerate { found }) => {
            warn!("frame {k}: degenerate ({found} points)");
            Ok(None)
        }
        Err(e) => Err(e),
    };

    let mut trajectory = Trajectory::new(vec![(timestamps[0], Isometry3::identity())])?;
    let mut steps = Vec::with_capacity(timestamps.len() - 1);
    let mut previous = load(0)?;
    let mut pose = Isometry3::identity();
    for k in 1..timestamps.len() {
        let current = load(k)?;
        let step = match (&previous, &current) {
            (Some(z), Some(x)) => {
                let result = register(x, z, cfg)?;
                if !result.converged {
                    warn!("frame {k}: not converged ({}) after {} iterations", result.reason.as_str(), result.iterations);
                }
                StepRecord {
                    frame: k,
                    timestamp: timestamps[k],
                    motion: result.transform,
                    iterations: result.iterations,
                    converged: result.converged,
                    reason: Some(result.reason),
                    skipped: None,
                }
            }
            _ => {
                let bad = if current.is_none() { k } else { k - 1 };
                StepRecord {
                    frame: k,
                    timestamp: timestamps[k],
                    motion: Isometry3::identity(),
                    iterations: 0,
                    converged: false,
                    reason: None,
                    skipped: Some(format!("frame {bad} is degenerate")),
                }
            }
        };
        info!("frame {k}: {} iterations, converged {}", step.iterations, step.converged);
        pose = pose * step.motion;
        trajectory.push(timestamps[k], pose)?;
        steps.push(step);
        previous = current;
    }
    Ok(TrackResult { trajectory, steps })
}

/// Loads, selects and tracks the first `max_frames` frames of a sequence
/// (all frames when `None`).
pub fn track_tum(
    seq: &TumSequence,
    intrinsics: &CameraIntrinsics,
    target_points: usize,
    max_frames: Option<usize>,
    cfg: &RegistrationConfig,
) -> Result<TrackResult, OdometryError> {
    let frames = &seq.frames[..max_frames.unwrap_or(usize::MAX).min(seq.frames.len())];
    let timestamps: Vec<f64> = frames.iter().map(|f| f.color_time).collect();
    track_sequence(&timestamps, |k| select_points(&RgbdFrame::load(&frames[k])?, intrinsics, target_points), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpeStep {
    pub step: usize,
    pub t: f64,
    /// `‖log ΔR‖_F` (√2 times the angle).
    pub rot_err: f64,
    /// Meters.
    pub trans_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub mean: f64,
    pub rmse: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        Some(Self {
            mean: sorted.iter().sum::<f64>() / n,
            rmse: (sorted.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            median: quantile(&sorted, 0.5),
            p90: quantile(&sorted, 0.9),
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Linear interpolation between order statistics of a sorted slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical CDF samples `(value, fraction ≤ value)`.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.into_iter().enumerate().map(|(i, v)| (v, (i + 1) as f64 / n)).collect()
}

pub const RPE_HEADER: &str = "step,t,rot_err,trans_err";
pub const CDF_HEADER: &str = "value,cumulative_fraction";

#[derive(Debug, Clone, PartialEq)]
pub struct RpeReport {
    pub steps: Vec<RpeStep>,
}

impl RpeReport {
    pub fn rot_errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.rot_err).collect()
    }

    pub fn trans_errors(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.trans_err).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{RPE_HEADER}")?;
        for s in &self.steps {
            writeln!(out, "{},{},{},{}", s.step, s.t, s.rot_err, s.trans_err)?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "steps {}", self.steps.len())?;
        for (name, values) in [("rot_err", self.rot_errors()), ("trans_err", self.trans_errors())] {
            if let Some(q) = Quantiles::of(&values) {
                writeln!(
                    out,
                    "{name} mean {} rmse {} median {} p90 {} max {}",
                    q.mean, q.rmse, q.median, q.p90, q.max
                )?;
            }
        }
        Ok(())
    }
}

pub fn write_cdf<W: Write>(values: &[f64], mut out: W) -> io::Result<()> {
    writeln!(out, "{CDF_HEADER}")?;
    for (v, f) in empirical_cdf(values) {
        writeln!(out, "{v},{f}")?;
    }
    Ok(())
}

/// Per consecutive pair, compares the estimated relative motion with the
/// interpolated ground-truth one: `Δ = G_rel⁻¹ E_rel`, errors are
/// `‖log ΔR‖_F` and `‖Δt‖`.
pub fn relative_pose_errors(estimate: &Trajectory, truth: &Trajectory) -> Result<RpeReport, OdometryError> {
    let span = match (truth.entries.first(), truth.entries.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => (f64::NAN, f64::NAN),
    };
    let gt: Vec<Isometry3> = estimate
        .entries
        .iter()
        .map(|&(t, _)| truth.interpolate(t).ok_or(OdometryError::Coverage { t, start: span.0, end: span.1 }))
        .collect::<Result<_, _>>()?;
    let steps = estimate
        .entries
        .windows(2)
        .zip(gt.windows(2))
        .enumerate()
        .map(|(i, (e, g))| {
            let est_rel = e[0].1.inverse() * e[1].1;
            let gt_rel = g[0].inverse() * g[1];
            let delta = gt_rel.inverse() * est_rel;
            RpeStep {
                step: i + 1,
                t: e[1].0,
                rot_err: rot_distance(&delta.rotation, &Rotation::identity()),
                trans_err: delta.translation.norm(),
            }
        })
        .collect();
    Ok(RpeReport { steps })
}
