//! Labeled clouds as RKHS functions and their inner product
//! `F(h) = Σ c_ij k(x_i, h⁻¹ z_j)` over a sparsified kernel matrix.

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::liegroup::{Isometry, Vector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RkhsError {
    #[error("label dimension mismatch: {0} vs {1}")]
    LabelDimension(usize, usize),
    #[error("{points} points but {labels} labels")]
    LengthMismatch { points: usize, labels: usize },
    #[error("non-finite value in cloud at index {0}")]
    NonFinite(usize),
    #[error("invalid kernel parameters: {0}")]
    InvalidParams(&'static str),
}

/// Points in ℝⁿ, each carrying a label vector (color channels in `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud<const N: usize> {
    points: Vec<Vector<N>>,
    labels: Vec<f64>,
    label_dim: usize,
}

pub type LabeledCloud3 = LabeledCloud<3>;

impl<const N: usize> LabeledCloud<N> {
    /// `labels` holds one `label_dim`-vector per point.
    pub fn new(points: Vec<Vector<N>>, labels: Vec<Vec<f64>>) -> Result<Self, RkhsError> {
        if points.len() != labels.len() {
            return Err(RkhsError::LengthMismatch { points: points.len(), labels: labels.len() });
        }
        let label_dim = labels.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(labels.len() * label_dim);
        for (i, (p, l)) in points.iter().zip(&labels).enumerate() {
            if l.len() != label_dim {
                return Err(RkhsError::LabelDimension(label_dim, l.len()));
            }
            if !p.iter().chain(l.iter()).all(|v| v.is_finite()) {
                return Err(RkhsError::NonFinite(i));
            }
            flat.extend_from_slice(l);
        }
        Ok(Self { points, labels: flat, label_dim })
    }

    /// Every point gets the same label.
    pub fn with_uniform_label(points: Vec<Vector<N>>, label: &[f64]) -> Result<Self, RkhsError> {
        let labels = vec![label.to_vec(); points.len()];
        Self::new(points, labels)
    }

    pub fn empty(label_dim: usize) -> Self {
        Self { points: Vec::new(), labels: Vec::new(), label_dim }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector<N>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Vector<N> {
        &self.points[i]
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i * self.label_dim..(i + 1) * self.label_dim]
    }

    pub fn label_dim(&self) -> usize {
        self.label_dim
    }

    /// Copy with every point moved by `h`; labels are kept.
    pub fn transformed(&self, h: &Isometry<N>) -> Self {
        Self {
            points: self.points.iter().map(|p| h.act(p)).collect(),
            labels: self.labels.clone(),
            label_dim: self.label_dim,
        }
    }
}

/// Squared-exponential kernel parameters plus sparsification and label scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub sigma: f64,
    pub ell: f64,
    pub sparsify_threshold: f64,
    pub label_scale: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { sigma: 0.1, ell: 0.15, sparsify_threshold: 1e-3, label_scale: 1e-5 }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<(), RkhsError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(RkhsError::InvalidParams("sigma must be positive"));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(RkhsError::InvalidParams("length-scale must be positive"));
        }
        if !(self.sparsify_threshold >= 0.0) {
            return Err(RkhsError::InvalidParams("sparsification threshold must be non-negative"));
        }
        if !(self.label_scale > 0.0 && self.label_scale.is_finite()) {
            return Err(RkhsError::InvalidParams("label scale must be positive"));
        }
        Ok(())
    }

    pub fn with_ell(self, ell: f64) -> Self {
        Self { ell, ..self }
    }

    /// Distance beyond which the kernel falls below the sparsification
    /// threshold: `ℓ √(2 ln(σ² / threshold))`. Infinite when nothing is
    /// dropped, `None` when every pair is dropped.
    pub fn cutoff_radius(&self) -> Option<f64> {
        let peak = self.sigma * self.sigma;
        if self.sparsify_threshold <= 0.0 {
            Some(f64::INFINITY)
        } else if self.sparsify_threshold > peak {
            None
        } else {
            Some(self.ell * (2.0 * (peak / self.sparsify_threshold).ln()).sqrt())
        }
    }
}

/// `σ² exp(-‖x - y‖² / 2ℓ²)`
pub fn kernel_eval<const N: usize>(x: &Vector<N>, y: &Vector<N>, p: &KernelParams) -> f64 {
    kernel_from_sq_dist((x - y).norm_squared(), p)
}

#[inline]
fn kernel_from_sq_dist(d2: f64, p: &KernelParams) -> f64 {
    p.sigma * p.sigma * (-d2 / (2.0 * p.ell * p.ell)).exp()
}

/// Scaled Euclidean inner product on the label space.
pub fn label_inner(a: &[f64], b: &[f64], p: &KernelParams) -> Result<f64, RkhsError> {
    if a.len() != b.len() {
        return Err(RkhsError::LabelDimension(a.len(), b.len()));
    }
    Ok(p.label_scale * dot(a, b))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Uniform hash grid over a fixed point set, with cell size equal to the
/// query radius so a radius query only visits the 3ⁿ surrounding cells.
#[derive(Debug, Clone)]
pub struct VoxelGrid<const N: usize> {
    cell: f64,
    cells: HashMap<[i64; N], Vec<u32>>,
    len: usize,
}

impl<const N: usize> VoxelGrid<N> {
    /// An infinite radius yields a single cell holding every point.
    pub fn build(points: &[Vector<N>], radius: f64) -> Self {
        let mut cells: HashMap<[i64; N], Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, radius)).or_default().push(i as u32);
        }
        Self { cell: radius, cells, len: points.len() }
    }

    fn key(p: &Vector<N>, cell: f64) -> [i64; N] {
        let mut key = [0i64; N];
        if cell.is_finite() && cell > 0.0 {
            for (k, v) in key.iter_mut().zip(p.iter()) {
                *k = (v / cell).floor() as i64;
            }
        }
        key
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Indices of all points in the cells neighbouring `q`; a superset of the
    /// points within `cell_size` of `q`. Sorted ascending.
    pub fn candidates(&self, q: &Vector<N>, out: &mut Vec<u32>) {
        out.clear();
        let center = Self::key(q, self.cell);
        if !(self.cell.is_finite() && self.cell > 0.0) {
            if let Some(all) = self.cells.get(&center) {
                out.extend_from_slice(all);
            }
            return;
        }
        let mut offset = [-1i64; N];
        loop {
            let mut key = center;
            for (k, o) in key.iter_mut().zip(offset.iter()) {
                *k += o;
            }
            if let Some(ids) = self.cells.get(&key) {
                out.extend_from_slice(ids);
            }
            // odometer over {-1, 0, 1}ⁿ
            let mut axis = 0;
            while axis < N {
                offset[axis] += 1;
                if offset[axis] <= 1 {
                    break;
                }
                offset[axis] = -1;
                axis += 1;
            }
            if axis == N {
                break;
            }
        }
        out.sort_unstable();
    }
}

/// Kernel values `k(x_i, z̃_j)` at or above the sparsification threshold,
/// stored column-wise (one column per `Z` point, rows ascending in `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseKernelMatrix {
    rows: usize,
    cols: usize,
    col_offsets: Vec<usize>,
    row_indices: Vec<u32>,
    values: Vec<f64>,
}

/// One stored kernel entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl SparseKernelMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(i, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_offsets[j]..self.col_offsets[j + 1];
        self.row_indices[range.clone()].iter().map(|&i| i as usize).zip(self.values[range].iter().copied())
    }

    pub fn entries(&self) -> impl Iterator<Item = KernelEntry> + '_ {
        (0..self.cols).flat_map(move |j| self.column(j).map(move |(i, value)| KernelEntry { i, j, value }))
    }

    /// Writes `i j value` per line.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in self.entries() {
            writeln!(out, "{} {} {}", e.i, e.j, e.value)?;
        }
        Ok(())
    }

    /// Deterministic parallel reduction `Σ_j Σ_i f(i, j, k_ij)`: each column
    /// is summed in row order, then the column sums are added in column order.
    pub fn reduce<T, F>(&self, zero: T, f: F) -> T
    where
        T: Copy + Send + Sync + std::ops::Add<Output = T>,
        F: Fn(usize, usize, f64) -> T + Sync,
    {
        let partial: Vec<T> = (0..self.cols)
            .into_par_iter()
            .map(|j| self.column(j).fold(zero, |acc, (i, k)| acc + f(i, j, k)))
            .collect();
        partial.into_iter().fold(zero, |acc, v| acc + v)
    }
}

/// Builds the sparsified matrix for `X` against already-transformed `Z`
/// points. Use [`build_kernel_matrix_indexed`] to reuse a grid across calls.
pub fn build_kernel_matrix<const N: usize>(
    x: &LabeledCloud<N>,
    z_transformed: &[Vector<N>],
    p: &KernelParams,
) -> SparseKernelMatrix {
    match p.cutoff_radius() {
        Some(r) => {
            let grid = VoxelGrid::build(x.points(), r);
            build_kernel_matrix_indexed(&grid, x, z_transformed, p)
        }
        None => empty_matrix(x.len(), z_transformed.len()),
    }
}

fn empty_matrix(rows: usize, cols: usize) -> SparseKernelMatrix {
    SparseKernelMatrix {
        rows,
        cols,
        col_offsets: vec![0; cols + 1],
        row_indices: Vec::new(),
        values: Vec::new(),
    }
}

/// As [`build_kernel_matrix`], with a grid built over `x` at the cutoff
/// radius of `p` (or larger).
pub fn build_kernel_matrix_indexed<const N: usize>(
    grid: &VoxelGrid<N>,
    x: &LabeledCloud<N>,
    z_transformed: &[Vector<N>],
    p: &KernelParams,
) -> SparseKernelMatrix {
    let Some(radius) = p.cutoff_radius() else {
        return empty_matrix(x.len(), z_transformed.len());
    };
    debug_assert!(grid.cell_size() >= radius || !grid.cell_size().is_finite());
    let threshold = p.sparsify_threshold;
    let columns: Vec<Vec<(u32, f64)>> = z_transformed
        .par_iter()
        .map_init(Vec::new, |scratch, z| {
            grid.candidates(z, scratch);
            scratch
                .iter()
                .filter_map(|&i| {
                    let k = kernel_eval(x.point(i as usize), z, p);
                    (k >= threshold && k > 0.0).then_some((i, k))
                })
                .collect()
        })
        .collect();

    let nnz = columns.iter().map(Vec::len).sum();
    let mut col_offsets = Vec::with_capacity(columns.len() + 1);
    let mut row_indices = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    col_offsets.push(0);
    for col in columns {
        for (i, k) in col {
            row_indices.push(i);
            values.push(k);
        }
        col_offsets.push(row_indices.len());
    }
    SparseKernelMatrix { rows: x.len(), cols: z_transformed.len(), col_offsets, row_indices, values }
}

/// `c_ij` for a stored entry. Label dimensions must already agree.
#[inline]
pub(crate) fn pair_weight<const N: usize>(x: &LabeledCloud<N>, z: &LabeledCloud<N>, i: usize, j: usize, p: &KernelParams) -> f64 {
    p.label_scale * dot(x.label(i), z.label(j))
}

pub(crate) fn check_labels<const N: usize>(x: &LabeledCloud<N>, z: &LabeledCloud<N>) -> Result<(), RkhsError> {
    if x.is_empty() || z.is_empty() || x.label_dim() == z.label_dim() {
        Ok(())
    } else {
        Err(RkhsError::LabelDimension(x.label_dim(), z.label_dim()))
    }
}

/// `Σ c_ij k_ij` over the stored entries of `matrix`.
pub fn inner_product_with<const N: usize>(
    matrix: &SparseKernelMatrix,
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    p: &KernelParams,
) -> f64 {
    matrix.reduce(0.0, |i, j, k| pair_weight(x, z, i, j, p) * k)
}

/// `F(h) = ⟨f_X, h.f_Z⟩ = Σ c_ij k(x_i, h⁻¹ z_j)` with sparsification.
pub fn inner_product<const N: usize>(
    x: &LabeledCloud<N>,
    z: &LabeledCloud<N>,
    h: &Isometry<N>,
    p: &KernelParams,
) -> Result<f64, RkhsError> {
    check_labels(x, z)?;
    let z_moved: Vec<Vector<N>> = z.points().iter().map(|q| h.inverse_act(q)).collect();
    let matrix = build_kernel_matrix(x, &z_moved, p);
    Ok(inner_product_with(&matrix, x, z, p))
}

/// `‖f_X‖` in the RKHS (no sparsification).
pub fn function_norm<const N: usize>(x: &LabeledCloud<N>, p: &KernelParams) -> f64 {
    let dense = KernelParams { sparsify_threshold: 0.0, ..*p };
    inner_product(x, x, &Isometry::identity(), &dense).unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::{exp_twist, Twist3};
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> KernelParams {
        KernelParams { sigma: 0.1, ell: 0.15, sparsify_threshold: 1e-3, label_scale: 1.0 }
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> LabeledCloud3 {
        let points = (0..n).map(|_| Vector3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let labels = (0..n).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        LabeledCloud::new(points, labels).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let p = params();
        let x = Vector3::new(0.3, -0.2, 1.0);
        assert_relative_eq!(kernel_eval(&x, &x, &p), 0.01, epsilon = 1e-17);
        let y = x + Vector3::new(0.0, p.ell, 0.0);
        // 0.01 · e^{-1/2}
        assert_relative_eq!(kernel_eval(&x, &y, &p), 0.006065306597126334, epsilon = 1e-15);
        assert_eq!(kernel_eval(&x, &y, &p), kernel_eval(&y, &x, &p));
        let far = x + Vector3::new(1.0, 0.0, 0.0);
        assert!(kernel_eval(&x, &far, &p) < p.sparsify_threshold);
    }

    #[test]
    fn label_inner_examples() {
        let p = params();
        assert_eq!(label_inner(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &p).unwrap(), 1.0);
        assert_eq!(label_inner(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &p).unwrap(), 0.0);
        let scaled = KernelParams { label_scale: 1e-5, ..p };
        assert_relative_eq!(label_inner(&[1.0; 3], &[1.0; 3], &scaled).unwrap(), 3e-5, epsilon = 1e-20);
        assert_eq!(label_inner(&[1.0], &[1.0, 2.0], &p), Err(RkhsError::LabelDimension(1, 2)));
    }

    #[test]
    fn cloud_validation() {
        let pts = vec![Vector3::zeros(); 2];
        assert!(matches!(LabeledCloud::new(pts.clone(), vec![vec![1.0]]), Err(RkhsError::LengthMismatch { .. })));
        assert!(matches!(
            LabeledCloud::new(pts.clone(), vec![vec![1.0], vec![1.0, 2.0]]),
            Err(RkhsError::LabelDimension(1, 2))
        ));
        assert!(LabeledCloud::new(vec![Vector3::new(f64::NAN, 0.0, 0.0)], vec![vec![1.0]]).is_err());
        assert!(LabeledCloud3::new(Vec::new(), Vec::new()).unwrap().is_empty());
    }

    #[test]
    fn cutoff_radius_edges() {
        let p = params();
        let r = p.cutoff_radius().unwrap();
        let at_cut = Vector3::new(r, 0.0, 0.0);
        assert_relative_eq!(kernel_eval(&Vector3::zeros(), &at_cut, &p), p.sparsify_threshold, epsilon = 1e-15);
        assert_eq!(KernelParams { sparsify_threshold: 0.0, ..p }.cutoff_radius(), Some(f64::INFINITY));
        assert_eq!(KernelParams { sparsify_threshold: 0.5, ..p }.cutoff_radius(), None);
    }

    #[test]
    fn matrix_single_coincident_pair() {
        let p = params();
        let cloud = LabeledCloud::with_uniform_label(vec![Vector3::new(1.0, 2.0, 3.0)], &[1.0, 0.0, 0.0]).unwrap();
        let m = build_kernel_matrix(&cloud, cloud.points(), &p);
        let entries: Vec<_> = m.entries().collect();
        assert_eq!(entries, vec![KernelEntry { i: 0, j: 0, value: p.sigma * p.sigma }]);
    }

    #[test]
    fn matrix_far_points_empty() {
        let p = params();
        let a = LabeledCloud::with_uniform_label(vec![Vector3::zeros()], &[1.0]).unwrap();
        let r = p.cutoff_radius().unwrap();
        let m = build_kernel_matrix(&a, &[Vector3::new(r * 1.01, 0.0, 0.0)], &p);
        assert!(m.is_empty());
        assert_eq!((m.rows(), m.cols()), (1, 1));
    }

    #[test]
    fn matrix_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let p = params();
        let cloud = random_cloud(&mut rng, 100);
        let other = random_cloud(&mut rng, 80);
        for z in [cloud.points(), other.points()] {
            let m = build_kernel_matrix(&cloud, z, &p);
            let mut brute = Vec::new();
            for (j, zj) in z.iter().enumerate() {
                for (i, xi) in cloud.points().iter().enumerate() {
                    let k = kernel_eval(xi, zj, &p);
                    if k >= p.sparsify_threshold {
                        brute.push(KernelEntry { i, j, value: k });
                    }
                }
            }
            let got: Vec<_> = m.entries().collect();
            assert_eq!(got, brute);
            assert!(got.iter().all(|e| e.value <= p.sigma * p.sigma && e.value >= p.sparsify_threshold));
        }
    }

    #[test]
    fn inner_product_examples() {
        let p = params();
        let single = LabeledCloud::with_uniform_label(vec![Vector3::new(0.5, 0.5, 0.5)], &[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(inner_product(&single, &single, &Isometry::identity(), &p).unwrap(), 0.01);
        let empty = LabeledCloud3::empty(3);
        assert_eq!(inner_product(&single, &empty, &Isometry::identity(), &p).unwrap(), 0.0);
        let two = LabeledCloud::with_uniform_label(vec![Vector3::zeros()], &[1.0, 0.0]).unwrap();
        assert!(inner_product(&single, &two, &Isometry::identity(), &p).is_err());
    }

    #[test]
    fn identity_maximizes_self_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = KernelParams { sparsify_threshold: 0.0, ..params() };
        let cloud = random_cloud(&mut rng, 50);
        let at_identity = inner_product(&cloud, &cloud, &Isometry::identity(), &p).unwrap();
        for _ in 0..200 {
            let xi = Twist3::new(
                Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Vector3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
            );
            let h = exp_twist(&xi, 1.0).unwrap();
            // dense oracle
            let dense: f64 = cloud
                .points()
                .iter()
                .enumerate()
                .flat_map(|(i, xi)| {
                    let cloud = &cloud;
                    cloud.points().iter().enumerate().map(move |(j, zj)| {
                        dot(cloud.label(i), cloud.label(j)) * kernel_eval(xi, &h.inverse_act(zj), &p)
                    })
                })
                .sum();
            let value = inner_product(&cloud, &cloud, &h, &p).unwrap();
            assert_relative_eq!(value, dense, max_relative = 1e-12);
            assert!(value <= at_identity);
        }
    }

    #[test]
    fn inner_product_symmetric_at_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = params();
        let a = random_cloud(&mut rng, 40);
        let b = random_cloud(&mut rng, 25);
        let e = Isometry::identity();
        assert_relative_eq!(
            inner_product(&a, &b, &e, &p).unwrap(),
            inner_product(&b, &a, &e, &p).unwrap(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn kernel_invariant_under_rigid_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = params();
        for _ in 0..100 {
            let h = exp_twist(
                &Twist3::new(Vector3::new(rng.gen(), rng.gen(), rng.gen()), Vector3::new(rng.gen(), rng.gen(), rng.gen())),
                1.0,
            )
            .unwrap();
            let x = Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 0.3;
            let y = Vector3::new(rng.gen(), rng.gen(), rng.gen()) * 0.3;
            assert_relative_eq!(kernel_eval(&h.act(&x), &h.act(&y), &p), kernel_eval(&x, &y, &p), max_relative = 1e-12);
        }
    }

    #[test]
    fn sparse_dense_gap_bounded_by_dropped_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let p = params();
        let dense_p = KernelParams { sparsify_threshold: 0.0, ..p };
        let a = random_cloud(&mut rng, 120);
        let b = random_cloud(&mut rng, 90);
        let e = Isometry::identity();
        let sparse = build_kernel_matrix(&a, b.points(), &p);
        let dense = build_kernel_matrix(&a, b.points(), &dense_p);
        let dropped = dense.nnz() - sparse.nnz();
        let max_c = (0..a.len())
            .flat_map(|i| (0..b.len()).map(move |j| (i, j)))
            .map(|(i, j)| pair_weight(&a, &b, i, j, &p).abs())
            .fold(0.0, f64::max);
        let gap = (inner_product(&a, &b, &e, &p).unwrap() - inner_product(&a, &b, &e, &dense_p).unwrap()).abs();
        assert!(gap <= dropped as f64 * max_c * p.sparsify_threshold);
    }

    #[test]
    fn triplet_export() {
        let p = params();
        let cloud = LabeledCloud::with_uniform_label(vec![Vector3::zeros(), Vector3::new(5.0, 0.0, 0.0)], &[1.0]).unwrap();
        let m = build_kernel_matrix(&cloud, cloud.points(), &p);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 0 0.010000000000000002\n1 1 0.010000000000000002\n");
    }

    #[test]
    fn grid_planar() {
        let pts: Vec<Vector<2>> = (0..50).map(|i| Vector::<2>::new(i as f64 * 0.1, 0.0)).collect();
        let grid = VoxelGrid::build(&pts, 0.25);
        let mut out = Vec::new();
        grid.candidates(&Vector::<2>::new(2.0, 0.0), &mut out);
        for i in 18..=22u32 {
            assert!(out.contains(&i));
        }
        assert!(!out.contains(&0));
    }
}
