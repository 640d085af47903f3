use super::{bin_indices, to_spherical, BinningConfig, SolidDescriptor, Variant};
use crate::ingest::PointCloud;
use crate::scalar::{Field, Scalar};

/// Range-elevation and azimuth-elevation point counts plus the elevation
/// totals and the weights derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterSet<F> {
    n_r: usize,
    n_a: usize,
    n_e: usize,
    /// Row-major `n_r × n_e`.
    rec: Vec<u32>,
    /// Row-major `n_a × n_e`.
    aec: Vec<u32>,
    ec: Vec<u64>,
    iev: Vec<F>,
    /// Points dropped for range or vertical field of view.
    pub discarded: usize,
}

impl<F: Field> CounterSet<F> {
    /// Wraps raw counter matrices (row-major) and derives the elevation
    /// totals and weights.
    pub fn from_counts(
        n_r: usize,
        n_a: usize,
        n_e: usize,
        rec: Vec<u32>,
        aec: Vec<u32>,
        variant: Variant,
    ) -> Self {
        assert_eq!(rec.len(), n_r * n_e, "rec must be n_r × n_e");
        assert_eq!(aec.len(), n_a * n_e, "aec must be n_a × n_e");
        let mut ec = vec![0u64; n_e];
        for row in rec.chunks_exact(n_e) {
            for (total, &count) in ec.iter_mut().zip(row) {
                *total += u64::from(count);
            }
        }
        let iev = match variant {
            Variant::Standard => min_max_weights(&ec),
            Variant::ConstantIev => vec![F::one(); n_e],
        };
        Self {
            n_r,
            n_a,
            n_e,
            rec,
            aec,
            ec,
            iev,
            discarded: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_r, self.n_a, self.n_e)
    }

    /// Zero-based access.
    pub fn rec(&self, i: usize, k: usize) -> u32 {
        self.rec[i * self.n_e + k]
    }

    pub fn aec(&self, j: usize, k: usize) -> u32 {
        self.aec[j * self.n_e + k]
    }

    pub fn rec_rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rec.chunks_exact(self.n_e)
    }

    pub fn aec_rows(&self) -> impl Iterator<Item = &[u32]> {
        self.aec.chunks_exact(self.n_e)
    }

    pub fn ec(&self) -> &[u64] {
        &self.ec
    }

    pub fn iev(&self) -> &[F] {
        &self.iev
    }

    /// Number of points that landed in a bin.
    pub fn binned(&self) -> u64 {
        self.ec.iter().sum()
    }
}

/// Min-max normalization of the elevation totals. A constant input (including
/// all zeros) maps to all ones.
pub fn min_max_weights<F: Field>(ec: &[u64]) -> Vec<F> {
    let (Some(&lo), Some(&hi)) = (ec.iter().min(), ec.iter().max()) else {
        return Vec::new();
    };
    if lo == hi {
        return vec![F::one(); ec.len()];
    }
    let span = F::from_u64(hi - lo).expect("span representable");
    ec.iter()
        .map(|&e| F::from_u64(e - lo).expect("count representable") / span)
        .collect()
}

/// Counts the points of an already downsampled cloud into the spherical grid.
pub fn build_counters<T: Scalar>(cloud: &PointCloud<T>, cfg: &BinningConfig<T>) -> CounterSet<T> {
    let g = &cfg.grid;
    let mut rec = vec![0u32; g.n_r * g.n_e];
    let mut aec = vec![0u32; g.n_a * g.n_e];
    let mut discarded = 0;
    for &p in &cloud.points {
        match bin_indices(&to_spherical(p), g) {
            Some(b) => {
                rec[(b.i - 1) * g.n_e + (b.k - 1)] += 1;
                aec[(b.j - 1) * g.n_e + (b.k - 1)] += 1;
            }
            None => discarded += 1,
        }
    }
    let mut counters = CounterSet::from_counts(g.n_r, g.n_a, g.n_e, rec, aec, cfg.variant);
    counters.discarded = discarded;
    counters
}

/// Reweights each counter row by the elevation weights.
pub fn build_solid<F: Field>(counters: &CounterSet<F>, frame_id: u64) -> SolidDescriptor<F> {
    let weigh = |row: &[u32]| {
        row.iter()
            .zip(&counters.iev)
            .fold(F::zero(), |acc, (&count, &w)| {
                acc + F::from_count(count) * w
            })
    };
    SolidDescriptor {
        frame_id,
        r_solid: counters.rec_rows().map(weigh).collect(),
        a_solid: counters.aec_rows().map(weigh).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::GridSpec;
    use crate::Rational;
    use proptest::prelude::*;

    fn tiny_cfg() -> BinningConfig<f64> {
        BinningConfig {
            grid: GridSpec {
                n_r: 40,
                n_a: 60,
                n_e: 64,
                l_max: 80.0,
                f_up: 2.0,
                f_down: -24.8,
            },
            voxel: 0.5,
            variant: Variant::Standard,
        }
    }

    #[test]
    fn hand_worked_two_by_two() {
        let c: CounterSet<f64> =
            CounterSet::from_counts(2, 1, 2, vec![1, 2, 3, 4], vec![4, 6], Variant::Standard);
        assert_eq!(c.ec(), &[4, 6]);
        assert_eq!(c.iev(), &[0.0, 1.0]);
        let d = build_solid(&c, 9);
        assert_eq!(d.r_solid, vec![2.0, 4.0]);
        assert_eq!(d.a_solid, vec![6.0]);
    }

    #[test]
    fn constant_ec_and_empty_give_unit_weights() {
        let c: CounterSet<f64> = CounterSet::from_counts(
            2,
            2,
            3,
            vec![1, 2, 0, 1, 0, 2],
            vec![2, 2, 2, 0, 0, 0],
            Variant::Standard,
        );
        assert_eq!(c.ec(), &[2, 2, 2]);
        assert_eq!(c.iev(), &[1.0, 1.0, 1.0]);
        let empty = build_counters(&PointCloud::empty(0), &tiny_cfg());
        assert!(empty.iev().iter().all(|&w| w == 1.0));
        assert_eq!(empty.binned(), 0);
        assert!(build_solid(&empty, 0).is_zero());
    }

    #[test]
    fn constant_iev_variant_ignores_counts() {
        let c: CounterSet<f64> =
            CounterSet::from_counts(2, 1, 2, vec![1, 2, 3, 4], vec![4, 6], Variant::ConstantIev);
        assert_eq!(c.iev(), &[1.0, 1.0]);
        assert_eq!(build_solid(&c, 0).r_solid, vec![3.0, 7.0]);
    }

    #[test]
    fn single_points_land_in_expected_cells() {
        let cfg = tiny_cfg();
        // r = 40 -> i = 21; theta = 90 -> j = 16; phi = 0 -> k = round(64*24.8/26.8 + 1) = 60
        let cloud = PointCloud::new(
            0,
            vec![[0.0, 40.0, 0.0], [0.0, 0.0, 200.0], [100.0, 0.0, 0.0]],
        );
        let c = build_counters(&cloud, &cfg);
        assert_eq!(c.discarded, 2);
        assert_eq!(c.binned(), 1);
        let expected_k = (64.0f64 * 24.8 / 26.8 + 1.0).round() as usize;
        assert_eq!(expected_k, 60);
        for i in 0..40 {
            for k in 0..64 {
                let want = u32::from(i == 20 && k == expected_k - 1);
                assert_eq!(c.rec(i, k), want);
            }
        }
        for j in 0..60 {
            for k in 0..64 {
                let want = u32::from(j == 15 && k == expected_k - 1);
                assert_eq!(c.aec(j, k), want);
            }
        }
    }

    #[test]
    fn product_matches_naive_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let (n_r, n_a, n_e) = (40, 60, 16);
        let rec: Vec<u32> = (0..n_r * n_e).map(|_| rng.gen_range(0..50)).collect();
        let aec: Vec<u32> = (0..n_a * n_e).map(|_| rng.gen_range(0..50)).collect();
        let c: CounterSet<f64> =
            CounterSet::from_counts(n_r, n_a, n_e, rec.clone(), aec, Variant::Standard);
        let d = build_solid(&c, 0);
        let mut oracle = vec![0.0f64; n_r];
        for (i, slot) in oracle.iter_mut().enumerate() {
            for k in 0..n_e {
                *slot += rec[i * n_e + k] as f64 * c.iev()[k];
            }
        }
        for (a, b) in d.r_solid.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    fn counts(n: usize) -> impl Strategy<Value = Vec<u32>> {
        prop::collection::vec(0u32..30, n)
    }

    proptest! {
        #[test]
        fn weights_bounded_and_extremes_hit(ec in prop::collection::vec(0u64..1000, 1..20)) {
            let w: Vec<f64> = min_max_weights(&ec);
            prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let lo = *ec.iter().min().unwrap();
            let hi = *ec.iter().max().unwrap();
            if lo != hi {
                prop_assert_eq!(w.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
                prop_assert_eq!(w.iter().cloned().fold(0.0, f64::max), 1.0);
                let arg_ec = ec.iter().position(|&e| e == hi).unwrap();
                prop_assert_eq!(w[arg_ec], 1.0);
            }
        }

        #[test]
        fn mass_is_conserved_exactly_over_rationals(
            (rec, aec_perm) in counts(6 * 4).prop_map(|rec| {
                // an azimuth matrix holding the same per-elevation totals
                let mut aec = vec![0u32; 5 * 4];
                for (idx, &c) in rec.iter().enumerate() {
                    let (i, k) = (idx / 4, idx % 4);
                    aec[(i % 5) * 4 + k] += c;
                }
                (rec, aec)
            }),
        ) {
            let c: CounterSet<Rational> = CounterSet::from_counts(6, 5, 4, rec, aec_perm, Variant::Standard);
            let d = build_solid(&c, 0);
            let total_r: Rational = d.r_solid.iter().copied().sum();
            let total_a: Rational = d.a_solid.iter().copied().sum();
            let total_ec: Rational = c.ec().iter().zip(c.iev()).map(|(&e, &w)| Rational::from_integer(e as i64) * w).sum();
            prop_assert_eq!(total_r, total_a);
            prop_assert_eq!(total_r, total_ec);
        }
    }
}
