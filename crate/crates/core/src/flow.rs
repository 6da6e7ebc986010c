//! Gradient-flow registration on SE(n).
//!
//! The solver ascends `F(h) = Σ c_ij k(x_i, h⁻¹ z_j)` along the
//! left-invariant gradient, integrates each step with the group exponential
//! and picks the step length by maximizing a quartic Taylor model of
//! `G(t) = F(h exp(tξ))`.

use std::io::{self, Write};
use std::ops::Add;

use log::debug;
use thiserror::Error;

use crate::liegroup::{exp_twist, iso_distance, rot_distance, trans_distance, Dim, Isometry, LieError, Matrix, SpecialEuclidean, Twist, Vector};
use crate::rkhs::{
    build_kernel_matrix_indexed, check_labels, inner_product_with, pair_weight, KernelParams, LabeledCloud, RkhsError,
    SparseKernelMatrix, VoxelGrid,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("cannot register an empty cloud")]
    EmptyCloud,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Rkhs(#[from] RkhsError),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// One step of the length-scale schedule: `ell` applies once the iteration
/// count exceeds `after`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleStep {
    pub after: usize,
    pub ell: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationConfig<const N: usize = 3> {
    /// `kernel.ell` is ignored by [`register`]; the schedule decides.
    pub kernel: KernelParams,
    pub a_sq: f64,
    pub b_sq: f64,
    pub ell_schedule: Vec<ScheduleStep>,
    pub transform_eps: f64,
    pub gradient_eps: f64,
    pub min_step: f64,
    pub max_iterations: usize,
    pub initial_guess: Isometry<N>,
}

pub fn default_ell_schedule() -> Vec<ScheduleStep> {
    [(0, 0.15), (3, 0.10), (10, 0.06), (20, 0.03)]
        .into_iter()
        .map(|(after, ell)| ScheduleStep { after, ell })
        .collect()
}

impl<const N: usize> Default for RegistrationConfig<N> {
    fn default() -> Self {
        Self {
            kernel: KernelParams::default(),
            a_sq: 7.0,
            b_sq: 7.0,
            ell_schedule: default_ell_schedule(),
            transform_eps: 1e-5,
            gradient_eps: 5e-5,
            min_step: 0.2,
            max_iterations: 2000,
            initial_guess: Isometry::identity(),
        }
    }
}

impl<const N: usize> RegistrationConfig<N> {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        self.kernel.validate()?;
        if !(self.a_sq > 0.0 && self.b_sq > 0.0) {
            return bad("metric weights must be positive");
        }
        if !(self.transform_eps > 0.0 && self.gradient_eps > 0.0) {
            return bad("convergence thresholds must be positive");
        }
        if !(self.min_step > 0.0 && self.min_step.is_finite()) {
            return bad("minimum step must be positive");
        }
        if self.max_iterations == 0 {
            return bad("at least one iteration is required");
        }
        match self.ell_schedule.first() {
            Some(first) if first.after == 0 => {}
            _ => return bad("length-scale schedule must start at iteration 0"),
        }
        for pair in self.ell_schedule.windows(2) {
            if pair[1].after <= pair[0].after || pair[1].ell > pair[0].ell {
                return bad("length-scale schedule must have increasing iterations and nonincreasing values");
            }
        }
        if self.ell_schedule.iter().any(|s| !(s.ell > 0.0 && s.ell.is_finite())) {
            return bad("length-scales must be positive");
        }
        if !self.initial_guess.is_finite() {
            return bad("initial guess is not finite");
        }
        Ok(())
    }

    /// Length-scale in effect at 1-based `iteration`.
    pub fn ell_at(&self, iteration: usize) -> f64 {
        self.ell_schedule
            .iter()
            .take_while(|s| iteration > s.after || s.after == 0)
            .last()
            .map_or(self.kernel.ell, |s| s.ell)
    }
}

/// `b² ⟨v, u⟩ + (a²/2) Σ ω_pq η_pq`.
///
/// For n = 3 this is `b²⟨v,u⟩ - a² ((n-2)/2) tr(ω̂ η̂)`. The same
/// orthonormal-basis form is used for n = 2, where the trace term would vanish.
pub fn metric_inner<const N: usize>(xi1: &Twist<N>, xi2: &Twist<N>, cfg: &RegistrationConfig<N>) -> f64 {
    cfg.b_sq * xi1.v.dot(&xi2.v) + 0.5 * cfg.a_sq * xi1.skew().component_mul(xi2.skew()).sum()
}

pub fn metric_norm<const N: usize>(xi: &Twist<N>, cfg: &RegistrationConfig<N>) -> f64 {
    metric_inner(xi, xi, cfg).max(0.0).sqrt()
}

#[derive(Clone, Copy)]
struct GradientSum<const N: usize> {
    rot: Matrix<N>,
    trans: Vector<N>,
}

impl<const N: usize> Add for GradientSum<N> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self { rot: self.rot + rhs.rot, trans: self.trans + rhs.trans }
    }
}

/// Gradient over an already-built kernel matrix with `z_moved[j] = h⁻¹ z_j`.
pub fn gradient_from_matrix<const N: usize>(
    matrix: &SparseKernelMatrix,
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    z_moved: &[Vector<N>],
    p: &KernelParams,
    a_sq: f64,
    b_sq: f64,
) -> Twist<N> {
    let zero = GradientSum { rot: Matrix::<N>::zeros(), trans: Vector::<N>::zeros() };
    let inv_ell_sq = 1.0 / (p.ell * p.ell);
    let sum = matrix.reduce(zero, |i, j, k| {
        let w = pair_weight(x, z, i, j, p) * k;
        let (xi, zj) = (x.point(i), &z_moved[j]);
        GradientSum { rot: (zj * xi.transpose() - xi * zj.transpose()) * w, trans: (zj - xi) * w }
    });
    Twist::from_skew_part(sum.rot * (inv_ell_sq / a_sq), sum.trans * (inv_ell_sq / b_sq))
}

/// Left-trivialized gradient of `F` at `h` under [`metric_inner`]:
/// `ω̂ = (1/a²ℓ²) Σ c k (z̃ xᵀ - x z̃ᵀ)` (for n = 3, `ω = (1/a²ℓ²) Σ c k x × z̃`)
/// and `v = (1/b²ℓ²) Σ c k (z̃ - x)`, with `z̃ = h⁻¹ z`.
pub fn gradient<const N: usize>(
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    h: &Isometry<N>,
    cfg: &RegistrationConfig<N>,
) -> Result<Twist<N>, FlowError> {
    check_labels(x, z)?;
    let state = State::new(x, z, h, &cfg.kernel);
    Ok(gradient_from_matrix(&state.matrix, x, z, &state.z_moved, &cfg.kernel, cfg.a_sq, cfg.b_sq))
}

struct State<const N: usize> {
    z_moved: Vec<Vector<N>>,
    matrix: SparseKernelMatrix,
}

impl<const N: usize> State<N> {
    fn new(x: &LabeledCloud<N>, z: &LabeledCloud<N>, h: &Isometry<N>, p: &KernelParams) -> Self {
        let grid = VoxelGrid::build(x.points(), p.cutoff_radius().unwrap_or(0.0));
        Self::with_grid(&grid, x, z, h, p)
    }

    fn with_grid(grid: &VoxelGrid<N>, x: &LabeledCloud<N>, z: &LabeledCloud<N>, h: &Isometry<N>, p: &KernelParams) -> Self {
        let z_moved: Vec<Vector<N>> = z.points().iter().map(|q| h.inverse_act(q)).collect();
        let matrix = build_kernel_matrix_indexed(grid, x, &z_moved, p);
        Self { z_moved, matrix }
    }
}

/// Exponent increments of one pair: `k(x, exp(-tξ) z̃) = σ² exp(α + βt + γt² + δt³ + εt⁴ + O(t⁵))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairExpansion {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl PairExpansion {
    /// Coefficients `g¹..g⁴` of `exp(βt + γt² + δt³ + εt⁴) - 1` up to `t⁴`.
    pub fn growth(&self) -> [f64; 4] {
        let (b, c, d, e) = (self.beta, self.gamma, self.delta, self.epsilon);
        [
            b,
            c + 0.5 * b * b,
            d + b * c + b * b * b / 6.0,
            e + b * d + 0.5 * b * b * c + 0.5 * c * c + b.powi(4) / 24.0,
        ]
    }
}

/// Expansion of the kernel exponent for the pair `(x, z̃)` along `ξ`.
///
/// The moving point is `y(t) = exp(-tξ) z̃ = z̃ + Σ_k aₖ tᵏ` with
/// `aₖ = (-1)ᵏ/k! · (ω̂ᵏ z̃ + ω̂ᵏ⁻¹ v)`, and the exponent
/// `-‖x - y(t)‖² / 2ℓ²` is collected by powers of `t`.
pub fn pair_expansion<const N: usize>(x: &Vector<N>, z_moved: &Vector<N>, xi: &Twist<N>, ell: f64) -> PairExpansion {
    let omega = xi.skew();
    let mut w = omega * z_moved + xi.v;
    let mut a = [Vector::<N>::zeros(); 4];
    let mut factor = -1.0;
    for (k, ak) in a.iter_mut().enumerate() {
        *ak = w * factor;
        w = omega * w;
        factor *= -1.0 / (k as f64 + 2.0);
    }
    let d = x - z_moved;
    let s = -0.5 / (ell * ell);
    PairExpansion {
        alpha: s * d.norm_squared(),
        beta: s * (-2.0 * a[0].dot(&d)),
        gamma: s * (a[0].norm_squared() - 2.0 * a[1].dot(&d)),
        delta: s * (2.0 * a[0].dot(&a[1]) - 2.0 * a[2].dot(&d)),
        epsilon: s * (a[1].norm_squared() + 2.0 * a[0].dot(&a[2]) - 2.0 * a[3].dot(&d)),
    }
}

/// Quartic model `G(t) - G(0) ≈ σ² (g₁t + g₂t² + g₃t³ + g₄t⁴)`.
///
/// The σ² factor is left out of the coefficients; it does not move the
/// maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TaylorCoeffs {
    pub g: [f64; 4],
}

impl Add for TaylorCoeffs {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut g = self.g;
        for (a, b) in g.iter_mut().zip(rhs.g) {
            *a += b;
        }
        Self { g }
    }
}

impl TaylorCoeffs {
    pub fn eval(&self, t: f64) -> f64 {
        let [g1, g2, g3, g4] = self.g;
        t * (g1 + t * (g2 + t * (g3 + t * g4)))
    }

    /// Second-order truncation of the same model.
    pub fn eval_quadratic(&self, t: f64) -> f64 {
        t * (self.g[0] + t * self.g[1])
    }

    pub fn is_finite(&self) -> bool {
        self.g.iter().all(|v| v.is_finite())
    }
}

pub fn taylor_from_matrix<const N: usize>(
    matrix: &SparseKernelMatrix,
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    z_moved: &[Vector<N>],
    xi: &Twist<N>,
    p: &KernelParams,
) -> TaylorCoeffs {
    if xi.is_zero() {
        return TaylorCoeffs::default();
    }
    let peak = p.sigma * p.sigma;
    matrix.reduce(TaylorCoeffs::default(), |i, j, k| {
        let e = pair_expansion(x.point(i), &z_moved[j], xi, p.ell);
        // e^α = k / σ²
        let w = pair_weight(x, z, i, j, p) * (k / peak);
        TaylorCoeffs { g: e.growth().map(|g| g * w) }
    })
}

/// Quartic Taylor model of `t ↦ F(h exp(tξ))` about `t = 0`, evaluated at
/// the transformed points `h⁻¹ z`.
pub fn taylor_poly<const N: usize>(
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    h: &Isometry<N>,
    xi: &Twist<N>,
    cfg: &RegistrationConfig<N>,
) -> Result<TaylorCoeffs, FlowError> {
    check_labels(x, z)?;
    let state = State::new(x, z, h, &cfg.kernel);
    Ok(taylor_from_matrix(&state.matrix, x, z, &state.z_moved, xi, &cfg.kernel))
}

/// Real roots of `a t³ + b t² + c t + d`, ascending.
pub fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let mut roots = if a == 0.0 {
        real_quadratic_roots(b, c, d)
    } else {
        let (p, q, r) = (b / a, c / a, d / a);
        // t = y - p/3  →  y³ + P y + Q = 0
        let shift = p / 3.0;
        let big_p = q - p * p / 3.0;
        let big_q = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
        let disc = 0.25 * big_q * big_q + big_p * big_p * big_p / 27.0;
        let ys = if disc > 0.0 {
            let u = (-0.5 * big_q - big_q.signum() * disc.sqrt()).cbrt();
            let y = if u == 0.0 { 0.0 } else { u - big_p / (3.0 * u) };
            vec![y]
        } else if big_p == 0.0 {
            vec![0.0]
        } else {
            let m = 2.0 * (-big_p / 3.0).sqrt();
            let arg = (3.0 * big_q / (big_p * m)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            (0..3).map(|k| m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()).collect()
        };
        ys.into_iter().map(|y| y - shift).collect()
    };
    for t in roots.iter_mut() {
        *t = polish_root(a, b, c, d, *t);
    }
    roots.retain(|t| t.is_finite());
    roots.sort_by(f64::total_cmp);
    roots
}

fn real_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn polish_root(a: f64, b: f64, c: f64, d: f64, mut t: f64) -> f64 {
    for _ in 0..3 {
        let f = ((a * t + b) * t + c) * t + d;
        let df = (3.0 * a * t + 2.0 * b) * t + c;
        if df == 0.0 || !f.is_finite() {
            break;
        }
        let next = t - f / df;
        if !next.is_finite() {
            break;
        }
        t = next;
    }
    t
}

/// Step length maximizing the quartic model over `t > 0`.
///
/// Critical points come from the analytic roots of the cubic derivative;
/// among positive ones, the one with the largest positive model value wins
/// (smallest `t` on ties). Without such a point, `min_step` is returned.
pub fn step_size(poly: &TaylorCoeffs, min_step: f64) -> f64 {
    let [g1, g2, g3, g4] = poly.g;
    if !poly.is_finite() || poly.g.iter().all(|&g| g == 0.0) {
        return min_step;
    }
    // Rescale t so every term is O(1) near the interesting region.
    let scale = [(g2, 1), (g3, 2), (g4, 3)]
        .iter()
        .filter(|(g, _)| *g != 0.0 && g1 != 0.0)
        .map(|(g, k)| (g1.abs() / g.abs()).powf(1.0 / *k as f64))
        .fold(f64::INFINITY, f64::min);
    let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let c = [g1 * scale, g2 * scale.powi(2), g3 * scale.powi(3), g4 * scale.powi(4)];
    let norm = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c = c.map(|v| v / norm);
    let scaled = TaylorCoeffs { g: c };

    let mut best: Option<(f64, f64)> = None;
    for tau in real_cubic_roots(4.0 * c[3], 3.0 * c[2], 2.0 * c[1], c[0]) {
        if tau <= 0.0 {
            continue;
        }
        let value = scaled.eval(tau);
        if value <= 0.0 {
            continue;
        }
        match best {
            Some((_, v)) if value <= v => {}
            _ => best = Some((tau, value)),
        }
    }
    match best {
        Some((tau, _)) if (tau * scale).is_finite() => tau * scale,
        _ => min_step,
    }
}

/// `h · exp(t ξ)`: `R ← R ΔR`, `T ← R ΔT + T`.
pub fn integrate_step<const N: usize>(h: &Isometry<N>, xi: &Twist<N>, t: f64) -> Result<Isometry<N>, FlowError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    Ok(*h * exp_twist(xi, t)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TransformEps,
    GradientEps,
    MaxIterations,
    /// No kernel entry survived sparsification: the clouds do not overlap.
    EmptyOverlap,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TransformEps => "transform-eps",
            StopReason::GradientEps => "gradient-eps",
            StopReason::MaxIterations => "max-iterations",
            StopReason::EmptyOverlap => "empty-overlap",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, StopReason::TransformEps | StopReason::GradientEps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<const N: usize = 3> {
    pub iteration: usize,
    /// Estimate at the start of the iteration.
    pub pose: Isometry<N>,
    pub ell: f64,
    /// `F` at the start of the iteration.
    pub value: f64,
    pub gradient_norm: f64,
    pub step: f64,
    pub rot_increment: f64,
    pub trans_increment: f64,
    pub nnz: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult<const N: usize = 3> {
    pub transform: Isometry<N>,
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub final_value: f64,
    pub converged: bool,
    pub reason: StopReason,
    pub trace: Vec<IterationRecord<N>>,
}

pub const TRACE_HEADER: &str = "iteration,ell,value,gradient_norm,step,rot_increment,trans_increment,nnz";

impl<const N: usize> RegistrationResult<N> {
    /// Per-iteration CSV.
    pub fn write_trace<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.iteration, r.ell, r.value, r.gradient_norm, r.step, r.rot_increment, r.trans_increment, r.nnz
            )?;
        }
        Ok(())
    }
}

/// Maximizes `F(h)` by following its gradient flow from `cfg.initial_guess`.
pub fn register<const N: usize>(
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    cfg: &RegistrationConfig<N>,
) -> Result<RegistrationResult<N>, FlowError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    if x.is_empty() || z.is_empty() {
        return Err(FlowError::EmptyCloud);
    }
    check_labels(x, z)?;
    cfg.validate()?;

    let mut h = cfg.initial_guess;
    let mut trace = Vec::new();
    let mut grid: Option<(f64, VoxelGrid<N>)> = None;
    let mut last_value = 0.0;
    let mut last_norm = 0.0;

    for iteration in 1..=cfg.max_iterations {
        let ell = cfg.ell_at(iteration);
        let params = cfg.kernel.with_ell(ell);
        if grid.as_ref().is_none_or(|(e, _)| *e != ell) {
            grid = Some((ell, VoxelGrid::build(x.points(), params.cutoff_radius().unwrap_or(0.0))));
        }
        let (_, index) = grid.as_ref().expect("grid built above");
        let state = State::with_grid(index, x, z, &h, &params);
        let value = inner_product_with(&state.matrix, x, z, &params);
        if let Some(prev) = trace.last().filter(|r: &&IterationRecord<N>| r.ell == ell && value < r.value) {
            debug!("iteration {iteration}: F fell from {} to {value}, step model overshot", prev.value);
        }
        last_value = value;

        if state.matrix.is_empty() {
            return Ok(finish(h, iteration, 0.0, value, StopReason::EmptyOverlap, trace));
        }

        let xi = gradient_from_matrix(&state.matrix, x, z, &state.z_moved, &params, cfg.a_sq, cfg.b_sq);
        let norm = metric_norm(&xi, cfg);
        last_norm = norm;
        let mut record = IterationRecord {
            iteration,
            pose: h,
            ell,
            value,
            gradient_norm: norm,
            step: 0.0,
            rot_increment: 0.0,
            trans_increment: 0.0,
            nnz: state.matrix.nnz(),
        };
        if norm < cfg.gradient_eps * value.abs() {
            trace.push(record);
            return Ok(finish(h, iteration, norm, value, StopReason::GradientEps, trace));
        }

        let poly = taylor_from_matrix(&state.matrix, x, z, &state.z_moved, &xi, &params);
        let t = step_size(&poly, cfg.min_step);
        let next = integrate_step(&h, &xi, t)?;
        record.step = t;
        record.rot_increment = rot_distance(&next.rotation, &h.rotation);
        record.trans_increment = trans_distance(&next, &h);
        trace.push(record);

        let moved = iso_distance(&next, &h)?;
        h = next;
        if moved < cfg.transform_eps {
            return Ok(finish(h, iteration, norm, value, StopReason::TransformEps, trace));
        }
    }
    Ok(finish(h, cfg.max_iterations, last_norm, last_value, StopReason::MaxIterations, trace))
}

fn finish<const N: usize>(
    transform: Isometry<N>,
    iterations: usize,
    final_gradient_norm: f64,
    final_value: f64,
    reason: StopReason,
    trace: Vec<IterationRecord<N>>,
) -> RegistrationResult<N> {
    RegistrationResult {
        transform,
        iterations,
        final_gradient_norm,
        final_value,
        converged: reason.is_converged(),
        reason,
        trace,
    }
}

/// Samples `G(t) - G(0)` and its second- and fourth-order models at the
/// first solver state, for comparing the two truncations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorSample {
    pub t: f64,
    pub exact: f64,
    pub taylor2: f64,
    pub taylor4: f64,
}

pub const TAYLOR_HEADER: &str = "t,G,taylor2,taylor4";

/// Evaluates the exact gain and both Taylor truncations at `count` evenly
/// spaced `t` in `[0, t_max]` (default: twice the chosen step), at `h`, using
/// `cfg.ell_at(1)`.
pub fn sample_taylor<const N: usize>(
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    h: &Isometry<N>,
    cfg: &RegistrationConfig<N>,
    count: usize,
    t_max: Option<f64>,
) -> Result<Vec<TaylorSample>, FlowError>
where
    Dim<N>: SpecialEuclidean<N>,
{
    check_labels(x, z)?;
    let params = cfg.kernel.with_ell(cfg.ell_at(1));
    let state = State::new(x, z, h, &params);
    let xi = gradient_from_matrix(&state.matrix, x, z, &state.z_moved, &params, cfg.a_sq, cfg.b_sq);
    let poly = taylor_from_matrix(&state.matrix, x, z, &state.z_moved, &xi, &params);
    let t_max = t_max.unwrap_or_else(|| 2.0 * step_size(&poly, cfg.min_step));
    let peak = params.sigma * params.sigma;
    let base = inner_product_with(&state.matrix, x, z, &params);
    let count = count.max(2);
    (0..count)
        .map(|s| {
            let t = t_max * s as f64 / (count - 1) as f64;
            let moved = integrate_step(h, &xi, t)?;
            let value = crate::rkhs::inner_product(x, z, &moved, &params)?;
            Ok(TaylorSample {
                t,
                exact: value - base,
                taylor2: peak * poly.eval_quadratic(t),
                taylor4: peak * poly.eval(t),
            })
        })
        .collect()
}

pub fn write_taylor_samples<W: Write>(samples: &[TaylorSample], mut out: W) -> io::Result<()> {
    writeln!(out, "{TAYLOR_HEADER}")?;
    for s in samples {
        writeln!(out, "{},{},{},{}", s.t, s.exact, s.taylor2, s.taylor4)?;
    }
    Ok(())
}
