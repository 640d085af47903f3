//! Seeded property suite run by `solid selftest`.
//!
//! Each property draws its own data from the seed, so the summary text is a
//! pure function of the seed.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::descriptor::{
    build_counters, build_solid, BinningConfig, CounterSet, GridSpec, SolidDescriptor, Variant,
};
use crate::evaluation::{
    build_gt, rotation_error, score_queries, yaw_rotation, GtLoopTable, Located, QueryResult,
    SessionMode,
};
use crate::ingest::voxel_downsample;
use crate::retrieval::{
    estimate_heading, read_db, shift, write_db, Backend, CandidatePool, DescriptorDatabase, Match,
};
use crate::synthetic::{self, rng};
use crate::Rational;

type Property = fn(u64) -> Result<String, String>;

/// Names and checks, in report order.
pub const PROPERTIES: &[(&str, Property)] = &[
    ("yaw_invariance", yaw_invariance),
    ("shift_law", shift_law),
    ("kd_equals_bf", kd_equals_bf),
    ("auc_rank_statistic", auc_rank_statistic),
    ("f1_enumeration", f1_enumeration),
    ("recall_monotone_invariance", recall_monotone_invariance),
    ("gt_oracle", gt_oracle),
    ("counter_mass", counter_mass),
    ("rotation_error", rotation_error_yaw),
    ("db_round_trip", db_round_trip),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    /// Detail text on success, failure reason otherwise.
    pub outcome: Result<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub seed: u64,
    pub results: Vec<PropertyResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.outcome.is_ok()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.results.len()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("selftest seed={}\n", self.seed);
        for r in &self.results {
            let (tag, text) = match &r.outcome {
                Ok(d) => ("PASS", d),
                Err(e) => ("FAIL", e),
            };
            s += &format!("{tag} {:<28} {text}\n", r.name);
        }
        s += &format!(
            "{}/{} properties passed\n",
            self.passed(),
            self.results.len()
        );
        s
    }
}

pub fn run(seed: u64) -> SelftestReport {
    let results = PROPERTIES
        .iter()
        .enumerate()
        .map(|(i, &(name, check))| PropertyResult {
            name,
            outcome: check(seed.wrapping_add(i as u64)),
        })
        .collect();
    SelftestReport { seed, results }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solid_of(cloud: &crate::PointCloud<f64>, cfg: &BinningConfig<f64>) -> SolidDescriptor<f64> {
    build_solid(&build_counters(cloud, cfg), cloud.frame_id)
}

fn yaw_invariance(seed: u64) -> Result<String, String> {
    let cfg = BinningConfig::<f64>::default();
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for c in 0..8 {
        let down = voxel_downsample(&synthetic::random_cloud(c, 5000, r.gen()), cfg.voxel);
        let base = solid_of(&down, &cfg).r_solid;
        for _ in 0..3 {
            let yaw = r.gen_range(-180.0..180.0);
            let turned = solid_of(&down.rotated_yaw(yaw), &cfg).r_solid;
            for (a, b) in base.iter().zip(&turned) {
                worst = worst.max((a - b).abs() / a.abs().max(1e-300));
            }
        }
    }
    ensure(worst < 1e-9, || format!("max relative deviation {worst:e}"))?;
    Ok(format!("24 rotations, max relative deviation {worst:e}"))
}

fn shift_law(seed: u64) -> Result<String, String> {
    let cfg = BinningConfig::<f64>::default();
    let n_a = cfg.grid.n_a;
    let step = cfg.grid.azimuth_step_deg();
    for c in 0..3u64 {
        let cloud = synthetic::bin_center_cloud(c, 3000, &cfg.grid, seed.wrapping_add(c));
        let base = solid_of(&cloud, &cfg);
        for m in 1..n_a {
            let turned = solid_of(&cloud.rotated_yaw(m as f64 * step), &cfg);
            ensure(turned.a_solid == shift(&base.a_solid, n_a - m), || {
                format!("cloud {c}: azimuth descriptor is not the shift by {m}")
            })?;
            ensure(turned.r_solid == base.r_solid, || {
                format!("cloud {c}: range descriptor moved at m={m}")
            })?;
            let (n, _) =
                estimate_heading(&base.a_solid, &turned.a_solid).map_err(|e| e.to_string())?;
            ensure(n == m, || {
                format!("cloud {c}: heading shift {n}, expected {m}")
            })?;
        }
    }
    Ok(format!("3 clouds x {} shifts exact", n_a - 1))
}

fn random_descriptor(r: &mut impl Rng, id: u64, n_r: usize, n_a: usize) -> SolidDescriptor<f64> {
    SolidDescriptor {
        frame_id: id,
        r_solid: (0..n_r).map(|_| r.gen_range(0.0..50.0)).collect(),
        a_solid: (0..n_a).map(|_| r.gen_range(0.0..50.0)).collect(),
    }
}

fn kd_equals_bf(seed: u64) -> Result<String, String> {
    let grid = GridSpec::<f64>::hdl64();
    let mut r = rng(seed);
    let mut db = DescriptorDatabase::new(grid);
    for id in 0..400 {
        db.push(random_descriptor(&mut r, id, grid.n_r, grid.n_a), None)
            .map_err(|e| e.to_string())?;
    }
    db.build_index();
    let mut checked = 0;
    for q in 0..60 {
        let query = random_descriptor(&mut r, 200 + q * 3, grid.n_r, grid.n_a);
        for pool in [
            CandidatePool::All,
            CandidatePool::Preceding { exclude_recent: 50 },
        ] {
            let bf = db
                .search(Backend::BruteForce, &query, pool)
                .map_err(|e| e.to_string())?;
            let kd = db
                .search(Backend::KdTree, &query, pool)
                .map_err(|e| e.to_string())?;
            ensure(bf == kd, || {
                format!("query {}: bf {bf:?} vs kd {kd:?}", query.frame_id)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked}/{checked} searches agree"))
}

fn found(q: u64, c: u64, d: f64) -> QueryResult<f64> {
    QueryResult {
        query_id: q,
        matched: Some(Match {
            query_id: q,
            candidate_id: c,
            distance: d,
            zero_norm: false,
            heading_shift: 0,
            heading_deg: 0.0,
        }),
    }
}

/// Queries whose top-1 is correct exactly when they have a loop, with
/// distinct random distances.
fn labeled_queries(
    r: &mut impl Rng,
    n: usize,
) -> (Vec<QueryResult<f64>>, GtLoopTable, Vec<(f64, bool)>) {
    let mut results = Vec::new();
    let mut entries = Vec::new();
    let mut labels = Vec::new();
    for q in 0..n as u64 {
        let positive = r.gen_bool(0.4);
        let d = r.gen_range(0.0..1.0) + if positive { 0.0 } else { 0.3 };
        results.push(found(q + 1000, if positive { q } else { q + 5000 }, d));
        entries.push((q + 1000, if positive { vec![q] } else { vec![] }));
        labels.push((d, positive));
    }
    (results, GtLoopTable::from_entries(entries), labels)
}

fn auc_rank_statistic(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (results, gt, labels) = labeled_queries(&mut r, 200);
        let s = score_queries(&results, &gt).map_err(|e| e.to_string())?;
        let pos: Vec<f64> = labels.iter().filter(|l| l.1).map(|l| l.0).collect();
        let neg: Vec<f64> = labels.iter().filter(|l| !l.1).map(|l| l.0).collect();
        let wins: f64 = pos
            .iter()
            .flat_map(|p| {
                neg.iter().map(move |n| {
                    if p < n {
                        1.0
                    } else if p == n {
                        0.5
                    } else {
                        0.0
                    }
                })
            })
            .sum();
        let oracle = wins / (pos.len() * neg.len()) as f64;
        worst = worst.max((s.auc - oracle).abs());
    }
    ensure(worst <= 1e-9, || {
        format!("trapezoid vs rank statistic differs by {worst:e}")
    })?;
    Ok(format!("20 trials, max gap {worst:e}"))
}

fn f1_enumeration(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    for trial in 0..20 {
        let n = 150;
        let mut results = Vec::new();
        let mut entries = Vec::new();
        for q in 0..n as u64 {
            let has_loop = r.gen_bool(0.5);
            entries.push((q, if has_loop { vec![q + 10_000] } else { vec![] }));
            results.push(match r.gen_range(0..10) {
                0 => QueryResult {
                    query_id: q,
                    matched: None,
                },
                k => {
                    let correct = has_loop && k > 3;
                    // coarse distances so ties occur
                    found(
                        q,
                        if correct { q + 10_000 } else { q + 20_000 },
                        f64::from(r.gen_range(0..40u8)) / 40.0,
                    )
                }
            });
        }
        let gt = GtLoopTable::from_entries(entries.clone());
        let s = score_queries(&results, &gt).map_err(|e| e.to_string())?;
        let mut taus: Vec<f64> = (0..=81).map(|i| f64::from(i) / 80.0).collect();
        taus.push(f64::INFINITY);
        let mut best = 0.0f64;
        for tau in taus {
            let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
            for (res, (_, ids)) in results.iter().zip(&entries) {
                match &res.matched {
                    Some(m) if m.distance < tau => {
                        if ids.contains(&m.candidate_id) {
                            tp += 1.0
                        } else {
                            fp += 1.0
                        }
                    }
                    _ if !ids.is_empty() => fn_ += 1.0,
                    _ => {}
                }
            }
            let p: f64 = if tp + fp == 0.0 { 1.0 } else { tp / (tp + fp) };
            let rc = if tp + fn_ == 0.0 {
                0.0
            } else {
                tp / (tp + fn_)
            };
            let f1 = if p + rc == 0.0 {
                0.0
            } else {
                2.0 * p * rc / (p + rc)
            };
            best = best.max(f1);
        }
        ensure(s.f1_max == best, || {
            format!("trial {trial}: f1_max {} vs enumeration {best}", s.f1_max)
        })?;
    }
    Ok("20 trials exact".into())
}

fn recall_monotone_invariance(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let (mut results, gt, _) = labeled_queries(&mut r, 300);
    for q in results.iter_mut().step_by(3) {
        if let Some(m) = q.matched.as_mut() {
            m.candidate_id += 100_000;
        }
    }
    let warped: Vec<QueryResult<f64>> = results
        .iter()
        .map(|q| {
            let mut q = *q;
            if let Some(m) = q.matched.as_mut() {
                m.distance = (3.0 * m.distance).exp() - 0.5;
            }
            q
        })
        .collect();
    let a = score_queries(&results, &gt).map_err(|e| e.to_string())?;
    let b = score_queries(&warped, &gt).map_err(|e| e.to_string())?;
    ensure(a.recall_at_1 == b.recall_at_1, || {
        format!("{} vs {}", a.recall_at_1, b.recall_at_1)
    })?;
    ensure(a.f1_max == b.f1_max, || {
        format!("f1 {} vs {}", a.f1_max, b.f1_max)
    })?;
    Ok(format!("recall@1 {:.4} unchanged", a.recall_at_1))
}

fn gt_oracle(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut pos = [0.0f64; 3];
    let queries: Vec<Located<f64>> = (0..400u64)
        .map(|id| {
            for c in &mut pos[..2] {
                *c = (*c + r.gen_range(-3.0..3.0)).clamp(-25.0, 25.0);
            }
            (id, pos)
        })
        .collect();
    let targets: Vec<Located<f64>> = (0..150u64)
        .map(|id| {
            (
                id * 7,
                [r.gen_range(-25.0..25.0), r.gen_range(-25.0..25.0), 0.0],
            )
        })
        .collect();
    let (d_gt, exclude) = (5.0, 30u64);
    let within = |a: &[f64; 3], b: &[f64; 3]| {
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2) <= d_gt * d_gt
    };
    let single = build_gt(
        &queries,
        SessionMode::Single {
            exclude_recent: exclude,
        },
        d_gt,
    );
    let multi = build_gt(&queries, SessionMode::Multi { targets: &targets }, d_gt);
    for (qid, qp) in &queries {
        let expect: Vec<u64> = queries
            .iter()
            .filter(|(c, cp)| c + exclude <= *qid && within(qp, cp))
            .map(|c| c.0)
            .collect();
        ensure(single.loop_ids(*qid) == Some(&expect[..]), || {
            format!("single-session query {qid}")
        })?;
        let expect: Vec<u64> = targets
            .iter()
            .filter(|(_, cp)| within(qp, cp))
            .map(|c| c.0)
            .collect();
        ensure(multi.loop_ids(*qid) == Some(&expect[..]), || {
            format!("multi-session query {qid}")
        })?;
    }
    Ok(format!(
        "{} single-session loops, {} multi-session loops",
        single.loop_count(),
        multi.loop_count()
    ))
}

fn random_counters(r: &mut impl Rng, variant: Variant) -> (CounterSet<Rational>, Vec<u32>) {
    let (n_r, n_a, n_e) = (r.gen_range(1..12), r.gen_range(1..12), r.gen_range(1..8));
    let mut rec = vec![0u32; n_r * n_e];
    let mut aec = vec![0u32; n_a * n_e];
    for _ in 0..r.gen_range(0..300) {
        let (i, j, k) = (
            r.gen_range(0..n_r),
            r.gen_range(0..n_a),
            r.gen_range(0..n_e),
        );
        rec[i * n_e + k] += 1;
        aec[j * n_e + k] += 1;
    }
    let rows = rec.chunks(n_e).map(|row| row.iter().sum()).collect();
    (
        CounterSet::from_counts(n_r, n_a, n_e, rec, aec, variant),
        rows,
    )
}

fn counter_mass(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    for t in 0..300 {
        let (c, _) = random_counters(&mut r, Variant::Standard);
        let d = build_solid(&c, 0);
        let weighted: Rational = c
            .ec()
            .iter()
            .zip(c.iev())
            .map(|(&e, &w)| Rational::from_integer(e as i64) * w)
            .sum();
        let (rs, as_): (Rational, Rational) = (d.r_solid.iter().sum(), d.a_solid.iter().sum());
        ensure(rs == weighted && as_ == weighted, || {
            format!("set {t}: descriptor mass {rs} / {as_} vs {weighted}")
        })?;

        let (c, rows) = random_counters(&mut r, Variant::ConstantIev);
        let d = build_solid(&c, 0);
        let expect: Vec<Rational> = rows
            .iter()
            .map(|&n| Rational::from_integer(i64::from(n)))
            .collect();
        ensure(d.r_solid == expect, || {
            format!("set {t}: constant-weight rows are not plain sums")
        })?;
        let total: Rational = d.a_solid.iter().sum();
        ensure(total == Rational::from_integer(c.binned() as i64), || {
            format!("set {t}: azimuth mass {total}")
        })?;
    }
    Ok("300 + 300 counter sets exact".into())
}

fn rotation_error_yaw(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let mut cases: Vec<(f64, f64)> = [0.0, 1.0, 90.0, 180.0]
        .iter()
        .map(|&d| (r.gen_range(-90.0..90.0), d))
        .collect();
    cases.extend((0..200).map(|_| (r.gen_range(-180.0..180.0), r.gen_range(0.0..180.0))));
    let mut worst = 0.0f64;
    for (base, delta) in cases {
        let (a, b) = (yaw_rotation(base), yaw_rotation(base + delta));
        for e in [rotation_error(&a, &b), rotation_error(&b, &a)] {
            worst = worst.max((e.map_err(|e| e.to_string())? - delta).abs());
        }
    }
    ensure(worst < 1e-9, || format!("max error {worst:e} deg"))?;
    Ok(format!("204 pairs, max error {worst:e} deg"))
}

fn db_round_trip(seed: u64) -> Result<String, String> {
    let mut r = rng(seed);
    let grid = GridSpec {
        n_r: 20,
        n_a: 30,
        n_e: 16,
        l_max: 60.0,
        f_up: 15.0,
        f_down: -15.0,
    };
    let mut db = DescriptorDatabase::new(grid);
    let mut ids: Vec<u64> = (0..500).collect();
    ids.shuffle(&mut r);
    ids.truncate(80);
    ids.sort_unstable();
    for id in ids {
        let p = [
            r.gen_range(-1e3..1e3),
            r.gen_range(-1e3..1e3),
            r.gen_range(-10.0..10.0),
        ];
        db.push(random_descriptor(&mut r, id, grid.n_r, grid.n_a), Some(p))
            .map_err(|e| e.to_string())?;
    }
    let bytes = write_db(&db);
    let back = read_db::<f64>(&bytes).map_err(|e| e.to_string())?;
    ensure(back == db, || "reloaded database differs".into())?;
    ensure(write_db(&back) == bytes, || {
        "rewrite is not byte-identical".into()
    })?;
    let mut bad = bytes.clone();
    bad[0] = b'X';
    ensure(read_db::<f64>(&bad).is_err(), || {
        "bad magic accepted".into()
    })?;
    ensure(read_db::<f64>(&bytes[..bytes.len() - 3]).is_err(), || {
        "truncated file accepted".into()
    })?;
    Ok(format!("{} records, {} bytes", db.len(), bytes.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_and_is_deterministic() {
        let a = run(7);
        assert!(a.all_passed(), "{}", a.summary());
        assert!(a.results.len() >= 8);
        assert_eq!(a.summary(), run(7).summary());
    }
}
