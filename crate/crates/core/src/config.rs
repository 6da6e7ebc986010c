//! Flat `key = value` run configuration.
//!
//! Keys are the parameter names of the published evaluation table, plus a
//! few extras for the metric, iteration cap, point budget and camera.
//! Length-scale steps use the key `kernel characteristic length-scale
//! (iteration > N)` for any `N`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::flow::{RegistrationConfig, ScheduleStep};
use crate::rgbd::{CameraIntrinsics, DEFAULT_MAX_OFFSET, DEFAULT_TARGET_POINTS};

pub const TRANSFORM_EPS: &str = "transformation convergence threshold";
pub const GRADIENT_EPS: &str = "gradient norm convergence threshold";
pub const ELL: &str = "kernel characteristic length-scale";
pub const SIGMA: &str = "kernel signal variance";
pub const MIN_STEP: &str = "minimum step length";
pub const LABEL_SCALE: &str = "color space inner product scale";
pub const SPARSIFY: &str = "kernel sparsification threshold";
pub const A_SQ: &str = "rotation metric weight";
pub const B_SQ: &str = "translation metric weight";
pub const MAX_ITERS: &str = "maximum iterations";
pub const TARGET_POINTS: &str = "target points";
pub const MAX_OFFSET: &str = "association max offset";
pub const FX: &str = "camera fx";
pub const FY: &str = "camera fy";
pub const CX: &str = "camera cx";
pub const CY: &str = "camera cy";
pub const DEPTH_SCALE: &str = "camera depth scale";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("bad length-scale schedule `{0}`")]
    BadSchedule(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub registration: RegistrationConfig,
    pub intrinsics: CameraIntrinsics,
    pub target_points: usize,
    pub max_offset: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            registration: RegistrationConfig::default(),
            intrinsics: CameraIntrinsics::FR1,
            target_points: DEFAULT_TARGET_POINTS,
            max_offset: DEFAULT_MAX_OFFSET,
        }
    }
}

fn schedule_key(after: usize) -> String {
    if after == 0 {
        ELL.to_string()
    } else {
        format!("{ELL} (iteration > {after})")
    }
}

fn parse_schedule_key(key: &str) -> Option<usize> {
    if key == ELL {
        return Some(0);
    }
    key.strip_prefix(ELL)?
        .trim()
        .strip_prefix("(iteration >")?
        .strip_suffix(')')?
        .trim()
        .parse()
        .ok()
}

/// Parses `0.15,3:0.10,10:0.06,20:0.03`; an entry without `after:` applies
/// from the first iteration.
pub fn parse_schedule(text: &str) -> Result<Vec<ScheduleStep>, ConfigError> {
    let bad = || ConfigError::BadSchedule(text.to_string());
    let mut steps = BTreeMap::new();
    for item in text.split(',').map(str::trim) {
        let (after, ell) = match item.split_once(':') {
            Some((a, e)) => (a.trim().parse().map_err(|_| bad())?, e),
            None => (0, item),
        };
        let ell: f64 = ell.trim().parse().map_err(|_| bad())?;
        if steps.insert(after, ell).is_some() {
            return Err(bad());
        }
    }
    Ok(steps.into_iter().map(|(after, ell)| ScheduleStep { after, ell }).collect())
}

pub fn format_schedule(steps: &[ScheduleStep]) -> String {
    steps
        .iter()
        .map(|s| if s.after == 0 { s.ell.to_string() } else { format!("{}:{}", s.after, s.ell) })
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Sets one parameter by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue { key: key.to_string(), value: value.to_string() };
        let float = || value.parse::<f64>().map_err(|_| bad());
        let count = || value.parse::<usize>().map_err(|_| bad());
        let r = &mut self.registration;
        match key {
            TRANSFORM_EPS => r.transform_eps = float()?,
            GRADIENT_EPS => r.gradient_eps = float()?,
            SIGMA => r.kernel.sigma = float()?,
            MIN_STEP => r.min_step = float()?,
            LABEL_SCALE => r.kernel.label_scale = float()?,
            SPARSIFY => r.kernel.sparsify_threshold = float()?,
            A_SQ => r.a_sq = float()?,
            B_SQ => r.b_sq = float()?,
            MAX_ITERS => r.max_iterations = count()?,
            TARGET_POINTS => self.target_points = count()?,
            MAX_OFFSET => self.max_offset = float()?,
            FX => self.intrinsics.fx = float()?,
            FY => self.intrinsics.fy = float()?,
            CX => self.intrinsics.cx = float()?,
            CY => self.intrinsics.cy = float()?,
            DEPTH_SCALE => self.intrinsics.depth_scale = float()?,
            _ => {
                let after = parse_schedule_key(key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
                let ell = float()?;
                match r.ell_schedule.binary_search_by_key(&after, |s| s.after) {
                    Ok(i) => r.ell_schedule[i].ell = ell,
                    Err(i) => r.ell_schedule.insert(i, ScheduleStep { after, ell }),
                }
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.registration.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.intrinsics.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.max_offset >= 0.0) {
            return Err(ConfigError::Invalid("association offset must be non-negative".into()));
        }
        Ok(())
    }

    /// Every effective parameter, in a form [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let r = &self.registration;
        let k = &self.intrinsics;
        let mut out = String::new();
        let mut line = |key: &str, value: &dyn fmt::Display| {
            let _ = writeln!(out, "{key} = {value}");
        };
        line(TRANSFORM_EPS, &r.transform_eps);
        line(GRADIENT_EPS, &r.gradient_eps);
        for s in &r.ell_schedule {
            line(&schedule_key(s.after), &s.ell);
        }
        line(SIGMA, &r.kernel.sigma);
        line(MIN_STEP, &r.min_step);
        line(LABEL_SCALE, &r.kernel.label_scale);
        line(SPARSIFY, &r.kernel.sparsify_threshold);
        line(A_SQ, &r.a_sq);
        line(B_SQ, &r.b_sq);
        line(MAX_ITERS, &r.max_iterations);
        line(TARGET_POINTS, &self.target_points);
        line(MAX_OFFSET, &self.max_offset);
        line(FX, &k.fx);
        line(FY, &k.fy);
        line(CX, &k.cx);
        line(CY, &k.cy);
        line(DEPTH_SCALE, &k.depth_scale);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let mut back = RunConfig { target_points: 1, ..Default::default() };
        back.registration.ell_schedule.clear();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn table_keys() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "# evaluation table\n\
             transformation convergence threshold = 2e-5\n\
             kernel characteristic length-scale (iteration > 10) = 0.05\n\
             color space inner product scale = 10e-5  # table value\n\
             kernel signal variance = 0.2\n",
        )
        .unwrap();
        let r = &cfg.registration;
        assert_eq!(r.transform_eps, 2e-5);
        assert_eq!(r.kernel.label_scale, 1e-4);
        assert_eq!(r.kernel.sigma, 0.2);
        assert_eq!(r.ell_at(11), 0.05);
        assert_eq!(r.ell_at(21), 0.03);
    }

    #[test]
    fn new_schedule_step_is_inserted() {
        let mut cfg = RunConfig::default();
        cfg.set("kernel characteristic length-scale (iteration > 50)", "0.01").unwrap();
        assert_eq!(cfg.registration.ell_schedule.len(), 5);
        assert_eq!(cfg.registration.ell_at(51), 0.01);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let mut cfg = RunConfig::default();
        assert_eq!(
            cfg.apply_text("kernel signal varience = 0.1"),
            Err(ConfigError::UnknownKey("kernel signal varience".into()))
        );
        assert_eq!(cfg.apply_text("just words"), Err(ConfigError::Syntax { line: 1 }));
        assert!(matches!(cfg.apply_text("minimum step length = fast"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn schedule_flag_syntax() {
        let s = parse_schedule("0.15,3:0.10,10:0.06,20:0.03").unwrap();
        assert_eq!(s, crate::flow::default_ell_schedule());
        assert_eq!(format_schedule(&s), "0.15,3:0.1,10:0.06,20:0.03");
        assert!(parse_schedule("0.1,0.2").is_err());
        assert!(parse_schedule("x").is_err());
    }
}
