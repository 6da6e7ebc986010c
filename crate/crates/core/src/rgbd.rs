//! TUM RGB-D ingestion: index files, color/depth association, pinhole
//! back-projection and semi-dense edge point selection.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use thiserror::Error;

use crate::rkhs::{LabeledCloud3, RkhsError};

pub const DEFAULT_MAX_OFFSET: f64 = 0.02;
pub const DEFAULT_TARGET_POINTS: usize = 3000;
/// Frames yielding fewer points than this are rejected as degenerate.
pub const MIN_POINTS: usize = 100;

#[derive(Debug, Error)]
pub enum RgbdError {
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: depth image must be 16-bit single channel")]
    DepthFormat { path: PathBuf },
    #[error("color is {color:?} but depth is {depth:?}")]
    SizeMismatch { color: (u32, u32), depth: (u32, u32) },
    #[error("expected {expected} pixels, got {color} color and {depth} depth")]
    BufferSize { expected: usize, color: usize, depth: usize },
    #[error("no color/depth pairs within {max_offset} s")]
    NoPairs { max_offset: f64 },
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds { u: u32, v: u32, width: u32, height: u32 },
    #[error("degenerate frame: only {found} usable edge points (need {MIN_POINTS})")]
    Degenerate { found: usize },
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error(transparent)]
    Cloud(#[from] RkhsError),
}

impl RgbdError {
    fn io(path: &Path) -> impl FnOnce(io::Error) -> RgbdError + '_ {
        move |err| RgbdError::Io { path: path.to_path_buf(), err }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// Raw depth units per meter.
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    /// Published calibration of the TUM freiburg1 sequences.
    pub const FR1: Self = Self { fx: 517.3, fy: 516.5, cx: 318.6, cy: 255.3, depth_scale: 5000.0 };

    pub fn validate(&self) -> Result<(), RgbdError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.fx) || !ok(self.fy) || !ok(self.depth_scale) {
            return Err(RgbdError::InvalidIntrinsics(format!(
                "fx {}, fy {}, depth_scale {} must be positive",
                self.fx, self.fy, self.depth_scale
            )));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(RgbdError::InvalidIntrinsics("principal point must be finite".into()));
        }
        Ok(())
    }

    /// Pixel coordinates of a camera-frame point.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self::FR1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub timestamp: f64,
    pub path: PathBuf,
}

/// Reads a TUM `rgb.txt`/`depth.txt` style index. Relative file names are
/// resolved against the index's directory.
pub fn read_index(path: &Path) -> Result<Vec<IndexEntry>, RgbdError> {
    let file = fs::File::open(path).map_err(RgbdError::io(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(RgbdError::io(path))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: &str| RgbdError::Parse { path: path.to_path_buf(), line: n + 1, msg: msg.to_string() };
        let mut fields = line.split_whitespace();
        let timestamp: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| parse_err("bad timestamp"))?;
        let name = fields.next().ok_or_else(|| parse_err("missing file name"))?;
        if let Some(prev) = out.last().map(|e: &IndexEntry| e.timestamp) {
            if timestamp <= prev {
                return Err(parse_err("timestamps must be strictly increasing"));
            }
        }
        out.push(IndexEntry { timestamp, path: base.join(name) });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub color_time: f64,
    pub color_path: PathBuf,
    pub depth_time: f64,
    pub depth_path: PathBuf,
}

pub type FrameAssociation = Vec<FramePair>;

/// Greedy nearest-timestamp matching: candidate pairs within `max_offset`
/// are taken in order of increasing |Δt|, each entry used at most once.
pub fn associate(color: &[IndexEntry], depth: &[IndexEntry], max_offset: f64) -> Result<FrameAssociation, RgbdError> {
    let mut candidates = Vec::new();
    for (ci, c) in color.iter().enumerate() {
        let lo = depth.partition_point(|d| d.timestamp < c.timestamp - max_offset);
        for (di, d) in depth.iter().enumerate().skip(lo) {
            let dt = (d.timestamp - c.timestamp).abs();
            if d.timestamp > c.timestamp + max_offset {
                break;
            }
            if dt <= max_offset {
                candidates.push((dt, ci, di));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut color_used = vec![false; color.len()];
    let mut depth_used = vec![false; depth.len()];
    let mut matched = Vec::new();
    for (_, ci, di) in candidates {
        if !color_used[ci] && !depth_used[di] {
            color_used[ci] = true;
            depth_used[di] = true;
            matched.push((ci, di));
        }
    }
    if matched.is_empty() {
        return Err(RgbdError::NoPairs { max_offset });
    }
    matched.sort_unstable();
    Ok(matched
        .into_iter()
        .map(|(ci, di)| FramePair {
            color_time: color[ci].timestamp,
            color_path: color[ci].path.clone(),
            depth_time: depth[di].timestamp,
            depth_path: depth[di].path.clone(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    pub timestamp: f64,
    width: u32,
    height: u32,
    color: Vec<[u8; 3]>,
    depth: Vec<u16>,
}

impl RgbdFrame {
    /// Row-major buffers of `width * height` pixels.
    pub fn from_raw(timestamp: f64, width: u32, height: u32, color: Vec<[u8; 3]>, depth: Vec<u16>) -> Result<Self, RgbdError> {
        let n = width as usize * height as usize;
        if color.len() != n || depth.len() != n {
            return Err(RgbdError::BufferSize { expected: n, color: color.len(), depth: depth.len() });
        }
        Ok(Self { timestamp, width, height, color, depth })
    }

    pub fn load(pair: &FramePair) -> Result<Self, RgbdError> {
        let open = |path: &Path| image::open(path).map_err(|source| RgbdError::Image { path: path.to_path_buf(), source });
        let color = open(&pair.color_path)?.to_rgb8();
        let depth = match open(&pair.depth_path)? {
            image::DynamicImage::ImageLuma16(d) => d,
            _ => return Err(RgbdError::DepthFormat { path: pair.depth_path.clone() }),
        };
        if color.dimensions() != depth.dimensions() {
            return Err(RgbdError::SizeMismatch { color: color.dimensions(), depth: depth.dimensions() });
        }
        let (width, height) = color.dimensions();
        Ok(Self {
            timestamp: pair.color_time,
            width,
            height,
            color: color.pixels().map(|p| p.0).collect(),
            depth: depth.pixels().map(|p| p.0[0]).collect(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, u: u32, v: u32) -> Result<usize, RgbdError> {
        if u >= self.width || v >= self.height {
            return Err(RgbdError::OutOfBounds { u, v, width: self.width, height: self.height });
        }
        Ok(v as usize * self.width as usize + u as usize)
    }

    pub fn color(&self, u: u32, v: u32) -> Result<[u8; 3], RgbdError> {
        Ok(self.color[self.index(u, v)?])
    }

    pub fn raw_depth(&self, u: u32, v: u32) -> Result<u16, RgbdError> {
        Ok(self.depth[self.index(u, v)?])
    }

    fn gray(&self) -> Vec<f64> {
        self.color
            .iter()
            .map(|&[r, g, b]| 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
            .collect()
    }
}

/// Pinhole back-projection; `None` for missing depth (raw value 0).
pub fn backproject(frame: &RgbdFrame, u: u32, v: u32, k: &CameraIntrinsics) -> Result<Option<Vector3<f64>>, RgbdError> {
    let raw = frame.raw_depth(u, v)?;
    if raw == 0 {
        return Ok(None);
    }
    let d = raw as f64 / k.depth_scale;
    Ok(Some(Vector3::new((u as f64 - k.cx) * d / k.fx, (v as f64 - k.cy) * d / k.fy, d)))
}

/// Central-difference gradient magnitude of the grayscale image. Border
/// pixels have no full stencil and get 0.
pub fn gradient_magnitude(frame: &RgbdFrame) -> Vec<f64> {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let gray = frame.gray();
    let mut out = vec![0.0; w * h];
    if w < 3 || h < 3 {
        return out;
    }
    for v in 1..h - 1 {
        for u in 1..w - 1 {
            let i = v * w + u;
            let gx = 0.5 * (gray[i + 1] - gray[i - 1]);
            let gy = 0.5 * (gray[i + w] - gray[i - w]);
            out[i] = gx.hypot(gy);
        }
    }
    out
}

/// Edge pixels with valid depth, thresholded globally so the count is as
/// close to `target` as ties allow. Labels are colors scaled to [0, 1].
pub fn select_points(frame: &RgbdFrame, k: &CameraIntrinsics, target: usize) -> Result<LabeledCloud3, RgbdError> {
    k.validate()?;
    let mag = gradient_magnitude(frame);
    let mut ranked: Vec<(f64, usize)> = mag
        .iter()
        .enumerate()
        .filter(|&(i, &m)| m > 0.0 && frame.depth[i] != 0)
        .map(|(i, &m)| (m, i))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let take = if target == 0 {
        0
    } else if ranked.len() <= target {
        ranked.len()
    } else {
        let threshold = ranked[target - 1].0;
        let above = ranked.partition_point(|r| r.0 > threshold);
        let at_or_above = ranked.partition_point(|r| r.0 >= threshold);
        if at_or_above - target <= target - above {
            at_or_above
        } else {
            above
        }
    };
    if take < MIN_POINTS {
        return Err(RgbdError::Degenerate { found: take });
    }

    let mut selected: Vec<usize> = ranked[..take].iter().map(|r| r.1).collect();
    selected.sort_unstable();
    let w = frame.width as usize;
    let mut points = Vec::with_capacity(take);
    let mut labels = Vec::with_capacity(take);
    for i in selected {
        let (u, v) = ((i % w) as u32, (i / w) as u32);
        if let Some(p) = backproject(frame, u, v, k)? {
            points.push(p);
            labels.push(frame.color[i].iter().map(|&c| c as f64 / 255.0).collect());
        }
    }
    Ok(LabeledCloud3::new(points, labels)?)
}

pub const CLOUD_HEADER: &str = "x,y,z,r,g,b";

pub fn write_cloud<W: Write>(cloud: &LabeledCloud3, mut out: W) -> io::Result<()> {
    writeln!(out, "{CLOUD_HEADER}")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{},{},{}", p.x, p.y, p.z)?;
        for c in cloud.label(i) {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_cloud(cloud: &LabeledCloud3, path: &Path) -> Result<(), RgbdError> {
    let file = fs::File::create(path).map_err(RgbdError::io(path))?;
    let mut out = io::BufWriter::new(file);
    write_cloud(cloud, &mut out).and_then(|_| out.flush()).map_err(RgbdError::io(path))
}

/// Reads `x y z [labels...]` rows separated by commas or whitespace. A
/// header line and `#` comments are skipped. Rows without labels get the
/// scalar label 1.
pub fn load_cloud(path: &Path) -> Result<LabeledCloud3, RgbdError> {
    let text = fs::read_to_string(path).map_err(RgbdError::io(path))?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (n == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let values: Result<Vec<f64>, _> =
            line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        let values = values.map_err(|e| RgbdError::Parse { path: path.to_path_buf(), line: n + 1, msg: e.to_string() })?;
        if values.len() < 3 {
            return Err(RgbdError::Parse { path: path.to_path_buf(), line: n + 1, msg: "expected at least x y z".into() });
        }
        points.push(Vector3::new(values[0], values[1], values[2]));
        labels.push(if values.len() == 3 { vec![1.0] } else { values[3..].to_vec() });
    }
    Ok(LabeledCloud3::new(points, labels)?)
}

/// An associated TUM sequence directory.
#[derive(Debug, Clone)]
pub struct TumSequence {
    pub root: PathBuf,
    pub frames: FrameAssociation,
}

impl TumSequence {
    pub fn open(root: &Path, max_offset: f64) -> Result<Self, RgbdError> {
        let color = read_index(&root.join("rgb.txt"))?;
        let depth = read_index(&root.join("depth.txt"))?;
        Ok(Self { root: root.to_path_buf(), frames: associate(&color, &depth, max_offset)? })
    }

    pub fn groundtruth_path(&self) -> PathBuf {
        self.root.join("groundtruth.txt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn entries(times: &[f64]) -> Vec<IndexEntry> {
        times.iter().map(|&t| IndexEntry { timestamp: t, path: PathBuf::from(format!("{t}.png")) }).collect()
    }

    fn frame_with(width: u32, height: u32, color: impl Fn(u32, u32) -> [u8; 3], depth: u16) -> RgbdFrame {
        let mut c = Vec::new();
        for v in 0..height {
            for u in 0..width {
                c.push(color(u, v));
            }
        }
        RgbdFrame::from_raw(0.0, width, height, c, vec![depth; (width * height) as usize]).unwrap()
    }

    #[test]
    fn associate_identical_times() {
        let t = entries(&[1.0, 1.1, 1.2]);
        let pairs = associate(&t, &t, DEFAULT_MAX_OFFSET).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.color_time == p.depth_time));
    }

    #[test]
    fn associate_within_offset() {
        let pairs = associate(&entries(&[1.0, 2.0]), &entries(&[1.015, 2.015]), DEFAULT_MAX_OFFSET).unwrap();
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn associate_too_far_is_error() {
        let err = associate(&entries(&[0.0]), &entries(&[0.05]), DEFAULT_MAX_OFFSET).unwrap_err();
        assert!(matches!(err, RgbdError::NoPairs { .. }));
    }

    #[test]
    fn associate_prefers_nearest() {
        // depth 1.01 is closer to color 1.015 than to 1.0
        let pairs = associate(&entries(&[1.0, 1.015]), &entries(&[1.01]), DEFAULT_MAX_OFFSET).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].color_time, 1.015);
    }

    #[test]
    fn backproject_principal_point() {
        let k = CameraIntrinsics { cx: 2.0, cy: 1.0, ..CameraIntrinsics::FR1 };
        let f = frame_with(4, 3, |_, _| [0, 0, 0], 5000);
        let p = backproject(&f, 2, 1, &k).unwrap().unwrap();
        assert_eq!(p, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn backproject_missing_depth_and_bounds() {
        let f = frame_with(4, 3, |_, _| [0, 0, 0], 0);
        assert_eq!(backproject(&f, 1, 1, &CameraIntrinsics::FR1).unwrap(), None);
        assert!(matches!(backproject(&f, 4, 0, &CameraIntrinsics::FR1), Err(RgbdError::OutOfBounds { .. })));
    }

    #[test]
    fn project_inverts_backproject() {
        let k = CameraIntrinsics::FR1;
        let mut depth = Vec::new();
        for i in 0..64 * 48 {
            depth.push(1 + (i * 37 % 60000) as u16);
        }
        let f = RgbdFrame::from_raw(0.0, 64, 48, vec![[0; 3]; 64 * 48], depth).unwrap();
        for v in 0..48 {
            for u in 0..64 {
                let p = backproject(&f, u, v, &k).unwrap().unwrap();
                let (pu, pv) = k.project(&p);
                assert!((pu - u as f64).abs() < 1e-9 && (pv - v as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_frame_is_degenerate() {
        let f = frame_with(64, 48, |_, _| [120, 50, 200], 5000);
        assert!(matches!(select_points(&f, &CameraIntrinsics::FR1, 3000), Err(RgbdError::Degenerate { found: 0 })));
    }

    #[test]
    fn white_square_selects_boundary() {
        let inside = |u: i64, v: i64| (20..60).contains(&u) && (20..60).contains(&v);
        let f = frame_with(80, 80, |u, v| if inside(u as i64, v as i64) { [255; 3] } else { [0; 3] }, 5000);
        let k = CameraIntrinsics::FR1;
        let cloud = select_points(&f, &k, 3000).unwrap();
        assert!(cloud.len() >= MIN_POINTS);
        for p in cloud.points() {
            let (u, v) = k.project(p);
            let (u, v) = (u.round() as i64, v.round() as i64);
            let near_edge = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(du, dv)| inside(u, v) != inside(u + du, v + dv));
            assert!(near_edge, "pixel ({u}, {v}) is not on the boundary");
        }
    }

    #[test]
    fn labels_are_normalized_colors() {
        let f = frame_with(100, 100, |u, _| if u < 50 { [255, 0, 51] } else { [0, 0, 0] }, 5000);
        let cloud = select_points(&f, &CameraIntrinsics::FR1, 3000).unwrap();
        for i in 0..cloud.len() {
            let l = cloud.label(i);
            let expected = if l[0] > 0.5 { [1.0, 0.0, 0.2] } else { [0.0; 3] };
            for (a, b) in l.iter().zip(expected) {
                assert_relative_eq!(*a, b, epsilon = 1e-15);
            }
            assert!(cloud.point(i).z > 0.0);
        }
    }

    #[test]
    fn count_tracks_target() {
        // a smooth ramp has distinct magnitudes so the count is exact
        let f = frame_with(100, 100, |u, v| [((u * u + 3 * v) % 256) as u8, (v * 2) as u8, u as u8], 5000);
        let cloud = select_points(&f, &CameraIntrinsics::FR1, 500).unwrap();
        assert!((cloud.len() as i64 - 500).abs() <= 200, "{}", cloud.len());
    }

    #[test]
    fn cloud_csv_round_trip() {
        let cloud = LabeledCloud3::new(
            vec![Vector3::new(0.1, -2.5, 3.0), Vector3::new(1.0 / 3.0, 0.0, 1e-7)],
            vec![vec![0.5, 0.25, 1.0], vec![0.0, 1.0 / 255.0, 0.3]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        save_cloud(&cloud, &path).unwrap();
        assert_eq!(load_cloud(&path).unwrap(), cloud);
    }

    #[test]
    fn index_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.txt");
        fs::write(&path, "# color images\n# timestamp filename\n1305031102.175304 rgb/a.png\n1305031102.211214 rgb/b.png\n")
            .unwrap();
        let idx = read_index(&path).unwrap();
        assert_eq!(idx.len(), 2);
        assert_relative_eq!(idx[1].timestamp, 1305031102.211214);
        assert_eq!(idx[0].path, dir.path().join("rgb/a.png"));
        fs::write(&path, "1.0 a.png\nnot-a-number b.png\n").unwrap();
        assert!(matches!(read_index(&path), Err(RgbdError::Parse { line: 2, .. })));
    }
}
