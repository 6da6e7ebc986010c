use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use rkhs_core::config::{self, format_schedule, parse_schedule, RunConfig};
use rkhs_core::flow::{register, sample_taylor, write_taylor_samples, RegistrationResult};
use rkhs_core::odometry::{relative_pose_errors, track_tum, write_cdf, Trajectory};
use rkhs_core::rgbd::{load_cloud, save_cloud, select_points, RgbdFrame, TumSequence};
use rkhs_core::rkhs::{build_kernel_matrix, LabeledCloud3};
use rkhs_core::synth::{generate, SynthSpec};

/// Rigid registration of labeled point clouds and RGB-D odometry.
#[derive(Parser)]
#[command(name = "rkhs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align two clouds (or two frames of a TUM sequence).
    Register(RegisterArgs),
    /// Track a TUM sequence frame to frame and score it against ground truth.
    Track(TrackArgs),
    /// Write a synthetic cloud pair with its ground-truth transform.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Key-value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Length-scale schedule, e.g. `0.15,3:0.10,10:0.06,20:0.03`.
    #[arg(long)]
    ell_schedule: Option<String>,
    #[arg(long)]
    a_sq: Option<f64>,
    #[arg(long)]
    b_sq: Option<f64>,
    #[arg(long)]
    min_step: Option<f64>,
    #[arg(long)]
    transform_eps: Option<f64>,
    #[arg(long)]
    gradient_eps: Option<f64>,
    #[arg(long)]
    sparsify_threshold: Option<f64>,
    #[arg(long)]
    label_scale: Option<f64>,
    #[arg(long)]
    target_points: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write per-iteration traces and Taylor samples.
    #[arg(long)]
    trace: bool,
    /// Output directory.
    #[arg(long, default_value = "rkhs-out")]
    out: PathBuf,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct RegisterArgs {
    /// Fixed cloud X (`x,y,z[,labels...]` rows).
    fixed: Option<PathBuf>,
    /// Moving cloud Z; the result h satisfies h⁻¹ Z ≈ X.
    moving: Option<PathBuf>,
    /// TUM sequence directory to take frames from instead of cloud files.
    #[arg(long, conflicts_with_all = ["fixed", "moving"], requires = "frames")]
    dataset: Option<PathBuf>,
    /// 1-based frame indices `A,B`; the result is the camera motion A → B.
    #[arg(long, value_delimiter = ',')]
    frames: Vec<usize>,
    /// Dump the final kernel matrix as `i j value` triplets.
    #[arg(long)]
    dump_kernel: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TrackArgs {
    /// TUM sequence directory.
    dataset: PathBuf,
    /// Only track the first N frames.
    #[arg(long)]
    max_frames: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    points: usize,
    #[arg(long, default_value_t = 5.0)]
    rotation_deg: f64,
    #[arg(long, default_value_t = 0.05)]
    translation: f64,
    /// Edge length of the sampling cube (m).
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let floats = [
            (config::SIGMA, self.sigma),
            (config::A_SQ, self.a_sq),
            (config::B_SQ, self.b_sq),
            (config::MIN_STEP, self.min_step),
            (config::TRANSFORM_EPS, self.transform_eps),
            (config::GRADIENT_EPS, self.gradient_eps),
            (config::SPARSIFY, self.sparsify_threshold),
            (config::LABEL_SCALE, self.label_scale),
        ];
        for (key, value) in floats {
            if let Some(v) = value {
                cfg.set(key, &v.to_string())?;
            }
        }
        for (key, value) in [(config::TARGET_POINTS, self.target_points), (config::MAX_ITERS, self.max_iters)] {
            if let Some(v) = value {
                cfg.set(key, &v.to_string())?;
            }
        }
        if let Some(s) = &self.ell_schedule {
            cfg.registration.ell_schedule = parse_schedule(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn prepare(&self) -> Result<RunConfig> {
        let level = match self.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        };
        let _ = env_logger::Builder::new().filter_level(level).try_init();
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build_global()
            .context("configuring worker threads")?;
        let cfg = self.run_config()?;
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let mut echo = cfg.to_text();
        echo.insert_str(0, &format!("# length-scale schedule: {}\n", format_schedule(&cfg.registration.ell_schedule)));
        write_file(&self.out.join("config.txt"), |w| w.write_all(echo.as_bytes()))?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    f(&mut out).and_then(|_| out.flush()).with_context(|| format!("writing {}", path.display()))
}

fn load_frame_cloud(seq: &TumSequence, index: usize, cfg: &RunConfig) -> Result<LabeledCloud3> {
    let pair = index
        .checked_sub(1)
        .and_then(|i| seq.frames.get(i))
        .with_context(|| format!("frame {index} out of range 1..={}", seq.frames.len()))?;
    let frame = RgbdFrame::load(pair)?;
    Ok(select_points(&frame, &cfg.intrinsics, cfg.target_points).with_context(|| format!("frame {index}"))?)
}

fn write_result(out: &Path, result: &RegistrationResult) -> Result<()> {
    write_file(&out.join("pose.txt"), |w| writeln!(w, "{}", result.transform))?;
    write_file(&out.join("result.txt"), |w| {
        writeln!(w, "converged {}", result.converged)?;
        writeln!(w, "reason {}", result.reason.as_str())?;
        writeln!(w, "iterations {}", result.iterations)?;
        writeln!(w, "value {}", result.final_value)?;
        writeln!(w, "gradient_norm {}", result.final_gradient_norm)
    })
}

fn cmd_register(args: &RegisterArgs) -> Result<bool> {
    let c = &args.common;
    let cfg = c.prepare()?;
    let (x, z) = match (&args.dataset, &args.fixed, &args.moving) {
        (Some(dir), _, _) => {
            if args.frames.len() != 2 {
                bail!("--frames takes exactly two indices, e.g. --frames 1,2");
            }
            let seq = TumSequence::open(dir, cfg.max_offset)?;
            let (a, b) = (args.frames[0], args.frames[1]);
            let z = load_frame_cloud(&seq, a, &cfg)?;
            let x = load_frame_cloud(&seq, b, &cfg)?;
            save_cloud(&z, &c.out.join(format!("cloud_{a}.csv")))?;
            save_cloud(&x, &c.out.join(format!("cloud_{b}.csv")))?;
            (x, z)
        }
        (None, Some(fixed), Some(moving)) => (load_cloud(fixed)?, load_cloud(moving)?),
        _ => bail!("give two cloud files or --dataset with --frames"),
    };
    info!("registering {} against {} points", z.len(), x.len());
    let r = &cfg.registration;
    let result = register(&x, &z, r)?;
    write_result(&c.out, &result)?;
    if c.trace {
        write_file(&c.out.join("trace.csv"), |w| result.write_trace(w))?;
        let samples = sample_taylor(&x, &z, &r.initial_guess, r, 101, None)?;
        write_file(&c.out.join("taylor.csv"), |w| write_taylor_samples(&samples, w))?;
    }
    if args.dump_kernel {
        let ell = result.trace.last().map_or(r.ell_at(1), |t| t.ell);
        let moved: Vec<_> = z.points().iter().map(|p| result.transform.inverse_act(p)).collect();
        let matrix = build_kernel_matrix(&x, &moved, &r.kernel.with_ell(ell));
        write_file(&c.out.join("kernel.txt"), |w| matrix.write_triplets(w))?;
    }
    if !result.converged {
        warn!("not converged: {}", result.reason.as_str());
    }
    println!("{}", result.transform);
    Ok(result.converged)
}

fn cmd_track(args: &TrackArgs) -> Result<bool> {
    let c = &args.common;
    let cfg = c.prepare()?;
    let seq = TumSequence::open(&args.dataset, cfg.max_offset)?;
    let result = track_tum(&seq, &cfg.intrinsics, cfg.target_points, args.max_frames, &cfg.registration)?;
    result.trajectory.save(&c.out.join("trajectory.txt"))?;
    write_file(&c.out.join("steps.csv"), |w| result.write_steps(w))?;

    let gt_path = seq.groundtruth_path();
    if gt_path.exists() {
        let truth = Trajectory::load(&gt_path)?;
        let report = relative_pose_errors(&result.trajectory, &truth)?;
        write_file(&c.out.join("rpe.csv"), |w| report.write_csv(w))?;
        write_file(&c.out.join("cdf_rot.csv"), |w| write_cdf(&report.rot_errors(), w))?;
        write_file(&c.out.join("cdf_trans.csv"), |w| write_cdf(&report.trans_errors(), w))?;
        write_file(&c.out.join("summary.txt"), |w| {
            writeln!(w, "all_converged {}", result.all_converged())?;
            report.write_summary(w)
        })?;
    } else {
        warn!("{} not found; skipping evaluation", gt_path.display());
    }
    Ok(result.all_converged())
}

fn cmd_synth(args: &SynthArgs) -> Result<bool> {
    let c = &args.common;
    c.prepare()?;
    let spec = SynthSpec {
        seed: c.seed,
        points: args.points,
        rotation_deg: args.rotation_deg,
        translation: args.translation,
        extent: args.extent,
    };
    let pair = generate(&spec);
    save_cloud(&pair.target, &c.out.join("fixed.csv"))?;
    save_cloud(&pair.source, &c.out.join("moving.csv"))?;
    write_file(&c.out.join("truth.txt"), |w| writeln!(w, "{}", pair.truth))?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Register(a) => cmd_register(a),
        Command::Track(a) => cmd_track(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
