//! `solid`: describe scans into a database, evaluate loop retrieval, measure
//! throughput and run the built-in property suite.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 property failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use solid::config::{PoseAxes, RunConfig};
use solid::descriptor::describe_with_counters;
use solid::error::EvalError;
use solid::evaluation::{
    bench_pipeline, build_gt, heading_errors, retrieve_all, score_queries, write_matches_csv,
    write_pr_csv, write_roc_csv, EvalReport, Located, Retrieval, SessionMode, Throughput,
};
use solid::ingest::{
    camera_to_lidar_axes, clip_fov, frame_id_from_path, load_kitti_poses, load_kitti_scan,
    sample_by_distance,
};
use solid::retrieval::{load_db, save_db};
use solid::synthetic::{self, LidarModel, World};
use solid::{
    describe, selftest, Backend, CandidatePool, Database64, Descriptor64, FovMask, PointCloud64,
    Pose64,
};

#[derive(Parser)]
#[command(
    name = "solid",
    version,
    about = "LiDAR place recognition with SOLiD descriptors"
)]
struct Cli {
    /// Flat key=value config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe a directory of KITTI .bin scans into a database.
    Describe(Common),
    /// Score loop retrieval of a database against ground-truth positions.
    Eval(Common),
    /// Time description and search for both backends.
    Bench(BenchArgs),
    /// Run the seeded property suite.
    Selftest(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Directory of KITTI velodyne .bin scans.
    #[arg(long)]
    scans: Option<String>,
    /// KITTI poses file (one 3×4 row-major line per frame).
    #[arg(long)]
    poses: Option<String>,
    /// Database file (default: OUT/database.soliddb).
    #[arg(long)]
    db: Option<String>,
    /// Target database for multi-session evaluation.
    #[arg(long)]
    target: Option<String>,
    /// Poses of the target session.
    #[arg(long)]
    target_poses: Option<String>,
    /// Axis convention of the poses files: camera or lidar.
    #[arg(long)]
    pose_axes: Option<String>,
    /// Kept azimuth intervals in degrees, e.g. "330-360,0-30".
    #[arg(long, allow_hyphen_values = true)]
    fov: Option<String>,
    #[arg(long)]
    voxel: Option<String>,
    #[arg(long)]
    nr: Option<String>,
    #[arg(long)]
    na: Option<String>,
    #[arg(long)]
    ne: Option<String>,
    #[arg(long)]
    lmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fup: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    fdown: Option<String>,
    #[arg(long)]
    exclude_recent: Option<String>,
    #[arg(long)]
    gt_dist: Option<String>,
    /// Keyframe spacing in meters (0 keeps every frame).
    #[arg(long)]
    sample_spacing: Option<String>,
    /// bf or kd.
    #[arg(long)]
    backend: Option<String>,
    /// standard or constant-iev.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl Common {
    fn pairs(&self) -> [(&'static str, &Option<String>); 22] {
        [
            ("scans", &self.scans),
            ("poses", &self.poses),
            ("db", &self.db),
            ("target", &self.target),
            ("target_poses", &self.target_poses),
            ("pose_axes", &self.pose_axes),
            ("fov", &self.fov),
            ("voxel", &self.voxel),
            ("nr", &self.nr),
            ("na", &self.na),
            ("ne", &self.ne),
            ("lmax", &self.lmax),
            ("fup", &self.fup),
            ("fdown", &self.fdown),
            ("exclude_recent", &self.exclude_recent),
            ("gt_dist", &self.gt_dist),
            ("sample_spacing", &self.sample_spacing),
            ("backend", &self.backend),
            ("variant", &self.variant),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("seed", &self.seed),
        ]
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Number of scans to time (synthetic when --scans is absent).
    #[arg(long, default_value_t = 50)]
    frames: usize,
    /// Size of the synthetic database when --db is absent.
    #[arg(long, default_value_t = 4541)]
    db_size: usize,
}

enum Failure {
    Usage(String),
    Data(String),
    Property(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Property(_) => 3,
        }
    }
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("usage error: {m}"),
                Failure::Data(m) => eprintln!("error: {m}"),
                Failure::Property(m) => eprintln!("property failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load_config(path: Option<&Path>, common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display())))?;
            RunConfig::from_text(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    for (key, value) in common.pairs() {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
    }
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Describe(c) => cmd_describe(&load_config(config, c)?),
        Command::Eval(c) => cmd_eval(&load_config(config, c)?),
        Command::Bench(b) => cmd_bench(&load_config(config, &b.common)?, b.frames, b.db_size),
        Command::Selftest(c) => cmd_selftest(&load_config(config, c)?),
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(data)
}

fn db_path(cfg: &RunConfig) -> PathBuf {
    cfg.db
        .clone()
        .unwrap_or_else(|| cfg.out.join("database.soliddb"))
}

fn load_poses(path: &Path, axes: PoseAxes) -> Result<Vec<Pose64>, Failure> {
    let poses = load_kitti_poses::<f64>(path).map_err(data)?;
    Ok(match axes {
        PoseAxes::Camera => poses.iter().map(camera_to_lidar_axes).collect(),
        PoseAxes::Lidar => poses,
    })
}

fn scan_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, Failure> {
    let entries =
        fs::read_dir(dir).map_err(|e| data(format!("cannot list {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(data)?.path();
        if path.extension().is_some_and(|e| e == "bin") {
            let id = frame_id_from_path(&path).ok_or_else(|| {
                data(format!(
                    "scan name is not a frame number: {}",
                    path.display()
                ))
            })?;
            files.push((id, path));
        }
    }
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(data(format!("two scans share frame id {}", w[0].0)));
    }
    Ok(files)
}

fn clip(cloud: PointCloud64, fov: &FovMask) -> PointCloud64 {
    if *fov == FovMask::full() {
        cloud
    } else {
        clip_fov(&cloud, fov)
    }
}

fn write_config_echo(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out).map_err(data)?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text()).map_err(data)
}

fn cmd_describe(cfg: &RunConfig) -> Result<(), Failure> {
    let scans_dir = cfg
        .scans
        .as_ref()
        .ok_or_else(|| Failure::Usage("describe needs --scans".into()))?;
    let mut files = scan_files(scans_dir)?;
    let poses = cfg
        .poses
        .as_ref()
        .map(|p| load_poses(p, cfg.pose_axes))
        .transpose()?;
    if cfg.sample_spacing > 0.0 {
        let poses = poses
            .as_ref()
            .ok_or_else(|| Failure::Usage("--sample-spacing needs --poses".into()))?;
        let keep = sample_by_distance(poses, cfg.sample_spacing);
        files.retain(|(id, _)| keep.binary_search(id).is_ok());
    }
    let position = |id: u64| -> Result<Option<[f64; 3]>, Failure> {
        match &poses {
            None => Ok(None),
            Some(p) => p
                .get(id as usize)
                .map(|pose| Some(pose.translation))
                .ok_or_else(|| data(format!("no pose for frame {id}"))),
        }
    };
    let binning = cfg.binning();
    let total = files.len();
    let described: Vec<(Descriptor64, usize)> = thread_pool(cfg.jobs)?.install(|| {
        files
            .par_iter()
            .map(|(id, path)| {
                let raw = load_kitti_scan::<f64>(path, *id).map_err(|e| data(format!("frame {id}: {e}")))?;
                let n_raw = raw.len();
                let cloud = clip(raw, &cfg.fov);
                let (desc, counters) = describe_with_counters(&cloud, &binning);
                eprintln!(
                    "frame {id:06} ({total} total): {n_raw} points, {} in fov, {} binned, {} discarded",
                    cloud.len(),
                    counters.binned(),
                    counters.discarded
                );
                Ok((desc, counters.discarded))
            })
            .collect::<Result<_, Failure>>()
    })?;

    let mut db = Database64::new(binning.grid);
    let mut discarded = 0;
    for (desc, d) in described {
        discarded += d;
        let pos = position(desc.frame_id)?;
        db.push(desc, pos).map_err(data)?;
    }
    write_config_echo(cfg)?;
    let path = db_path(cfg);
    save_db(&db, &path).map_err(data)?;
    println!(
        "described {} frames, {discarded} downsampled points discarded by the grid",
        db.len()
    );
    println!("database: {}", path.display());
    Ok(())
}

/// Positions for every record, from the database or else from poses.
fn positions(db: &Database64, poses: Option<&[Pose64]>) -> Result<Vec<Located<f64>>, Failure> {
    db.records()
        .iter()
        .map(|r| {
            let id = r.frame_id();
            r.position
                .or_else(|| {
                    poses
                        .and_then(|p| p.iter().find(|p| p.frame_id == id))
                        .map(|p| p.translation)
                })
                .map(|p| (id, p))
                .ok_or_else(|| {
                    data(format!(
                        "{} (frame {id}); describe with --poses or pass --poses",
                        EvalError::MissingPositions
                    ))
                })
        })
        .collect()
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), Failure> {
    let mut query_db: Database64 = load_db(db_path(cfg)).map_err(data)?;
    let poses = cfg
        .poses
        .as_ref()
        .map(|p| load_poses(p, cfg.pose_axes))
        .transpose()?;
    let query_pos = positions(&query_db, poses.as_deref())?;

    let (mut target_db, target_poses, pool) = match &cfg.target {
        Some(t) => {
            let db: Database64 = load_db(t).map_err(data)?;
            if db.grid() != query_db.grid() {
                return Err(data("query and target databases use different grids"));
            }
            let tp = cfg
                .target_poses
                .as_ref()
                .map(|p| load_poses(p, cfg.pose_axes))
                .transpose()?;
            (Some(db), tp, CandidatePool::All)
        }
        None => (
            None,
            None,
            CandidatePool::Preceding {
                exclude_recent: cfg.exclude_recent,
            },
        ),
    };
    if cfg.backend == Backend::KdTree {
        match target_db.as_mut() {
            Some(t) => t.build_index(),
            None => query_db.build_index(),
        }
    }
    let target = target_db.as_ref().unwrap_or(&query_db);
    let target_pos = match &target_db {
        Some(t) => Some(positions(t, target_poses.as_deref())?),
        None => None,
    };
    let mode = match &target_pos {
        Some(t) => SessionMode::Multi { targets: t },
        None => SessionMode::Single {
            exclude_recent: cfg.exclude_recent,
        },
    };
    let gt = build_gt(&query_pos, mode, cfg.gt_dist);

    let start = Instant::now();
    let Retrieval { results, unscored } = thread_pool(cfg.jobs)?
        .install(|| retrieve_all(&query_db, target, cfg.backend, pool))
        .map_err(data)?;
    let search_s = start.elapsed().as_secs_f64();

    let scores = score_queries(&results, &gt).map_err(|e| match e {
        EvalError::NoGtLoops => data("no query has a ground-truth loop, Recall@1 is undefined"),
        other => data(other),
    })?;
    let errors = match (&poses, &cfg.target, &target_poses) {
        (Some(q), None, _) => heading_errors(&results, &gt, q, q),
        (Some(q), Some(_), Some(t)) => heading_errors(&results, &gt, q, t),
        _ => Vec::new(),
    };
    let mut report = EvalReport::new(
        &scores,
        query_db.grid().payload_bytes() as u64,
        cfg.to_text(),
    )
    .with_heading_errors(&errors);
    report.search_hz = Some((results.len() + unscored) as f64 / search_s);
    report.db_file_bytes = fs::metadata(db_path(cfg)).ok().map(|m| m.len());

    write_config_echo(cfg)?;
    let out = &cfg.out;
    fs::write(out.join("report.json"), report.to_json()).map_err(data)?;
    write_pr_csv(&out.join("pr_curve.csv"), &scores).map_err(data)?;
    write_roc_csv(&out.join("roc_curve.csv"), &scores).map_err(data)?;
    write_matches_csv(&out.join("matches.csv"), &results, &gt).map_err(data)?;

    println!(
        "queries        {} scored, {unscored} with an empty candidate pool",
        scores.queries
    );
    println!("with GT loop   {}", scores.gt_loop_queries);
    println!("recall@1       {:.4}", scores.recall_at_1);
    match report.auc {
        Some(auc) => println!("auc            {auc:.4}"),
        None => println!("auc            undefined (single-class ROC)"),
    }
    println!(
        "f1_max         {:.4} at distance < {}",
        scores.f1_max, scores.f1_threshold
    );
    if let Some(re) = report.mean_re_deg {
        println!(
            "mean RE        {re:.3} deg over {} true positives",
            report.re_samples
        );
    }
    println!("report         {}", out.join("report.json").display());
    Ok(())
}

#[derive(Serialize)]
struct BenchReport {
    frames: usize,
    database_size: usize,
    points_per_scan: f64,
    runs: Vec<Throughput>,
    parallel_jobs: usize,
    parallel_desc_hz: Option<f64>,
    config: String,
}

fn cmd_bench(cfg: &RunConfig, frames: usize, db_size: usize) -> Result<(), Failure> {
    if frames < 2 {
        return Err(Failure::Usage("bench needs at least two frames".into()));
    }
    let binning = cfg.binning();
    let scans: Vec<PointCloud64> = match &cfg.scans {
        Some(dir) => scan_files(dir)?
            .into_iter()
            .take(frames)
            .map(|(id, p)| {
                load_kitti_scan::<f64>(&p, id).map_err(|e| data(format!("frame {id}: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let poses = synthetic::straight_line(frames, 2.0);
            let xy: Vec<[f64; 2]> = poses
                .iter()
                .map(|p| [p.translation[0], p.translation[1]])
                .collect();
            let world = World::generate(cfg.seed, &xy, 4.0);
            let lidar = LidarModel {
                azimuth_steps: 1800,
                ..LidarModel::hdl64()
            };
            world.scans_along(&poses, &lidar)
        }
    };
    let scans: Vec<PointCloud64> = scans.into_iter().map(|s| clip(s, &cfg.fov)).collect();
    if scans.len() < 2 {
        return Err(data("bench needs at least two scans"));
    }
    let mut db = match &cfg.db {
        Some(p) => load_db(p).map_err(data)?,
        None => {
            let anchors: Vec<Descriptor64> = scans.iter().map(|s| describe(s, &binning)).collect();
            synthetic::interpolated_database(&anchors, binning.grid, db_size, cfg.seed)
        }
    };
    if db.grid() != &binning.grid {
        return Err(data("database grid differs from the configured grid"));
    }
    db.build_index();

    let mut runs = Vec::new();
    for backend in [Backend::BruteForce, Backend::KdTree] {
        let t = bench_pipeline(&scans, &binning, &db, backend).map_err(data)?;
        println!(
            "{:<3} desc {:8.2} Hz  search {:9.2} Hz  combined {:8.2} Hz  ({} frames, db {})",
            t.backend, t.desc_hz, t.search_hz, t.combined_hz, t.frames, t.database_size
        );
        runs.push(t);
    }
    let parallel_desc_hz = if cfg.jobs > 1 {
        let pool = thread_pool(cfg.jobs)?;
        let start = Instant::now();
        pool.install(|| {
            scans
                .par_iter()
                .for_each(|s| drop(std::hint::black_box(describe(s, &binning))))
        });
        let hz = scans.len() as f64 / start.elapsed().as_secs_f64();
        println!("parallel describe with {} jobs: {hz:.2} Hz", cfg.jobs);
        Some(hz)
    } else {
        None
    };
    let report = BenchReport {
        frames: scans.len(),
        database_size: db.len(),
        points_per_scan: scans.iter().map(|s| s.len()).sum::<usize>() as f64 / scans.len() as f64,
        runs,
        parallel_jobs: cfg.jobs,
        parallel_desc_hz,
        config: cfg.to_text(),
    };
    write_config_echo(cfg)?;
    let json = serde_json::to_string_pretty(&report).map_err(data)?;
    fs::write(cfg.out.join("bench.json"), json).map_err(data)?;
    Ok(())
}

fn cmd_selftest(cfg: &RunConfig) -> Result<(), Failure> {
    let report = selftest::run(cfg.seed);
    print!("{}", report.summary());
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .results
            .iter()
            .filter(|r| r.outcome.is_err())
            .map(|r| r.name)
            .collect();
        Err(Failure::Property(failed.join(", ")))
    }
}
