use std::time::Instant;

use serde::Serialize;

use crate::descriptor::{describe, BinningConfig, SolidDescriptor};
use crate::error::RetrievalError;
use crate::ingest::PointCloud;
use crate::retrieval::{Backend, CandidatePool, DescriptorDatabase};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Throughput {
    pub backend: &'static str,
    pub frames: usize,
    pub database_size: usize,
    pub mean_describe_s: f64,
    pub mean_search_s: f64,
    pub desc_hz: f64,
    pub search_hz: f64,
    /// `1 / (mean describe time + mean search time)`.
    pub combined_hz: f64,
}

/// Times description of every scan, then a search of each resulting
/// descriptor against `db` (whole database admissible). Single-threaded.
pub fn bench_pipeline<T: Scalar>(
    scans: &[PointCloud<T>],
    cfg: &BinningConfig<T>,
    db: &DescriptorDatabase<T>,
    backend: Backend,
) -> Result<Throughput, RetrievalError> {
    assert!(!scans.is_empty(), "benchmark needs at least one scan");
    let start = Instant::now();
    let descriptors: Vec<SolidDescriptor<T>> = scans.iter().map(|s| describe(s, cfg)).collect();
    let describe_s = start.elapsed().as_secs_f64();

    let start = Instant::now();
    for d in &descriptors {
        std::hint::black_box(db.search(backend, d, CandidatePool::All)?);
    }
    let search_s = start.elapsed().as_secs_f64();

    let n = scans.len() as f64;
    let (mean_describe_s, mean_search_s) = (describe_s / n, search_s / n);
    Ok(Throughput {
        backend: match backend {
            Backend::BruteForce => "bf",
            Backend::KdTree => "kd",
        },
        frames: scans.len(),
        database_size: db.len(),
        mean_describe_s,
        mean_search_s,
        desc_hz: 1.0 / mean_describe_s,
        search_hz: 1.0 / mean_search_s,
        combined_hz: 1.0 / (mean_describe_s + mean_search_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn combined_rate_is_below_both_stage_rates() {
        let cfg = BinningConfig::default();
        let scans: Vec<PointCloud<f64>> =
            (0..10).map(|i| synthetic::scene_scan(i, 180, 3)).collect();
        let mut db = DescriptorDatabase::new(cfg.grid);
        for s in &scans {
            db.push(describe(s, &cfg), None).unwrap();
        }
        db.build_index();
        for backend in [Backend::BruteForce, Backend::KdTree] {
            let t = bench_pipeline(&scans, &cfg, &db, backend).unwrap();
            assert!(t.combined_hz <= t.desc_hz.min(t.search_hz));
            assert_eq!(t.frames, 10);
        }
    }
}
