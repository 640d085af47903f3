use crate::error::RetrievalError;
use crate::scalar::Scalar;

/// Circular shift: `shift(v, n)[j] = v[(j + n) mod len]`.
pub fn shift<T: Copy>(v: &[T], n: usize) -> Vec<T> {
    let len = v.len();
    (0..len).map(|j| v[(j + n) % len]).collect()
}

/// Azimuth shift `n*` minimizing `‖query − shift(candidate, n)‖`, smallest `n`
/// on ties, and the matching heading in degrees.
///
/// If the query scan is the candidate scan seen from a frame yawed by ψ
/// (candidate points equal the query points rotated by +ψ about z), the
/// heading is ψ rounded to the azimuth bin size.
pub fn estimate_heading<T: Scalar>(
    query_a: &[T],
    cand_a: &[T],
) -> Result<(usize, T), RetrievalError> {
    let n_a = query_a.len();
    if n_a != cand_a.len() {
        return Err(RetrievalError::LengthMismatch {
            left: n_a,
            right: cand_a.len(),
        });
    }
    if n_a == 0 {
        return Ok((0, T::zero()));
    }
    let mut best = (0usize, T::infinity());
    for n in 0..n_a {
        let mut sq = T::zero();
        for (j, &q) in query_a.iter().enumerate() {
            let diff = q - cand_a[(j + n) % n_a];
            sq += diff * diff;
        }
        if sq < best.1 {
            best = (n, sq);
        }
    }
    let step = T::lit(360.0) / T::from_usize(n_a).unwrap();
    Ok((best.0, T::from_usize(best.0).unwrap() * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % 31) as f64).collect()
    }

    #[test]
    fn identical_vectors_need_no_shift() {
        let q = ramp(60);
        assert_eq!(estimate_heading(&q, &q).unwrap(), (0, 0.0));
    }

    #[test]
    fn recovers_planted_shift() {
        let cand = ramp(60);
        for m in 0..60 {
            // query[j] = cand[(j + m) mod n_a]
            let query = shift(&cand, m);
            let (n, deg) = estimate_heading(&query, &cand).unwrap();
            assert_eq!(n, m);
            assert!((deg - 6.0 * m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_pick_smallest_shift() {
        let flat = vec![1.0f64; 12];
        assert_eq!(estimate_heading(&flat, &flat).unwrap().0, 0);
        let periodic: Vec<f64> = (0..12).map(|i| (i % 3) as f64).collect();
        let q = shift(&periodic, 4);
        assert_eq!(estimate_heading(&q, &periodic).unwrap().0, 1);
    }

    #[test]
    fn length_mismatch() {
        assert!(estimate_heading(&[1.0f64, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn winner_residual_is_minimal_over_all_shifts(
            (q, c) in (1usize..40).prop_flat_map(|n| (
                prop::collection::vec(0.0f64..10.0, n),
                prop::collection::vec(0.0f64..10.0, n),
            ))
        ) {
            let (best, _) = estimate_heading(&q, &c).unwrap();
            prop_assert!(best < q.len());
            let resid = |n: usize| -> f64 {
                q.iter().zip(shift(&c, n)).map(|(a, b)| (a - b) * (a - b)).sum()
            };
            let r_best = resid(best);
            for n in 0..q.len() {
                prop_assert!(r_best <= resid(n) + 1e-9);
            }
        }
    }
}
