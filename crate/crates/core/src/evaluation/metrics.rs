//! Threshold sweep over descriptor distances.
//!
//! At threshold τ a query is predicted positive iff it has a candidate with
//! distance `< τ`. Each query lands in exactly one confusion cell:
//!
//! | predicted | candidate is a GT loop | query has a GT loop | cell |
//! |-----------|------------------------|---------------------|------|
//! | positive  | yes                    | yes                 | TP   |
//! | positive  | no                     | any                 | FP   |
//! | negative  | -                      | yes                 | FN   |
//! | negative  | -                      | no                  | TN   |
//!
//! Precision with no predicted positives is 1; recall and rates with a zero
//! denominator are 0.

use serde::Serialize;

use super::GtLoopTable;
use crate::error::EvalError;
use crate::retrieval::Match;
use crate::scalar::Scalar;

/// The top-1 retrieval for one query, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult<T> {
    pub query_id: u64,
    pub matched: Option<Match<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio_or(self.tp, self.tp + self.fp, 1.0)
    }

    pub fn recall(&self) -> f64 {
        ratio_or(self.tp, self.tp + self.fn_, 0.0)
    }

    pub fn fpr(&self) -> f64 {
        ratio_or(self.fp, self.fp + self.tn, 0.0)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio_or(num: usize, den: usize, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub queries: usize,
    pub gt_loop_queries: usize,
    pub recall_at_1: f64,
    /// Trapezoidal area under (FPR, TPR); NaN when the ROC is degenerate.
    pub auc: f64,
    pub auc_degenerate: bool,
    pub f1_max: f64,
    pub f1_threshold: f64,
    pub f1_confusion: Confusion,
    #[serde(skip)]
    pub sweep: Vec<SweepPoint>,
}

impl Scores {
    /// `(threshold, precision, recall)` in ascending threshold order.
    pub fn pr_curve(&self) -> Vec<(f64, f64, f64)> {
        self.sweep
            .iter()
            .map(|s| (s.threshold, s.confusion.precision(), s.confusion.recall()))
            .collect()
    }

    /// `(threshold, fpr, tpr)` in ascending threshold order.
    pub fn roc_curve(&self) -> Vec<(f64, f64, f64)> {
        self.sweep
            .iter()
            .map(|s| (s.threshold, s.confusion.fpr(), s.confusion.recall()))
            .collect()
    }
}

struct Labeled {
    distance: Option<f64>,
    correct: bool,
    has_loop: bool,
}

/// Recall@1, the PR/ROC sweep, AUC and the best F1.
pub fn score_queries<T: Scalar>(
    results: &[QueryResult<T>],
    gt: &GtLoopTable,
) -> Result<Scores, EvalError> {
    let mut labeled = Vec::with_capacity(results.len());
    for r in results {
        let has_loop = gt
            .has_loop(r.query_id)
            .ok_or(EvalError::UnknownQuery(r.query_id))?;
        let (distance, correct) = match &r.matched {
            Some(m) => (
                Some(m.distance.to_f64().expect("finite distance")),
                gt.is_loop(r.query_id, m.candidate_id)?,
            ),
            None => (None, false),
        };
        labeled.push(Labeled {
            distance,
            correct,
            has_loop,
        });
    }

    let gt_loop_queries = labeled.iter().filter(|l| l.has_loop).count();
    if gt_loop_queries == 0 {
        return Err(EvalError::NoGtLoops);
    }
    let top1_hits = labeled.iter().filter(|l| l.has_loop && l.correct).count();
    let recall_at_1 = top1_hits as f64 / gt_loop_queries as f64;

    let sweep = sweep(&labeled);
    let last = sweep.last().expect("sweep has sentinels").confusion;
    let auc_degenerate = last.fp + last.tn == 0 || last.tp + last.fn_ == 0;
    let auc = if auc_degenerate {
        f64::NAN
    } else {
        sweep
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].confusion, w[1].confusion);
                (b.fpr() - a.fpr()) * (a.recall() + b.recall()) / 2.0
            })
            .sum()
    };
    let best = sweep
        .iter()
        .fold(None::<&SweepPoint>, |best, s| match best {
            Some(b) if b.confusion.f1() >= s.confusion.f1() => Some(b),
            _ => Some(s),
        })
        .unwrap();
    Ok(Scores {
        queries: labeled.len(),
        gt_loop_queries,
        recall_at_1,
        auc,
        auc_degenerate,
        f1_max: best.confusion.f1(),
        f1_threshold: best.threshold,
        f1_confusion: best.confusion,
        sweep,
    })
}

/// Thresholds: 0, every distinct observed distance, and +∞.
fn sweep(labeled: &[Labeled]) -> Vec<SweepPoint> {
    let mut scored: Vec<&Labeled> = labeled.iter().filter(|l| l.distance.is_some()).collect();
    scored.sort_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap());

    let mut thresholds = vec![0.0];
    thresholds.extend(scored.iter().map(|l| l.distance.unwrap()));
    thresholds.push(f64::INFINITY);
    thresholds.dedup();

    let loops_total = labeled.iter().filter(|l| l.has_loop).count();
    let total = labeled.len();
    let mut points = Vec::with_capacity(thresholds.len());
    let (mut inside, mut tp, mut positives_with_loop) = (0usize, 0usize, 0usize);
    for tau in thresholds {
        while inside < scored.len() && scored[inside].distance.unwrap() < tau {
            let l = scored[inside];
            tp += usize::from(l.correct);
            positives_with_loop += usize::from(l.has_loop);
            inside += 1;
        }
        let fp = inside - tp;
        let fn_ = loops_total - positives_with_loop;
        let tn = total - inside - fn_;
        points.push(SweepPoint {
            threshold: tau,
            confusion: Confusion { tp, fp, tn, fn_ },
        });
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(q: u64, c: u64, d: f64) -> QueryResult<f64> {
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

    fn table(entries: &[(u64, &[u64])]) -> GtLoopTable {
        GtLoopTable::from_entries(entries.iter().map(|(q, ids)| (*q, ids.to_vec())).collect())
    }

    #[test]
    fn all_correct_is_perfect_but_roc_degenerate() {
        let gt = table(&[(10, &[1]), (11, &[2]), (12, &[3])]);
        let res = [m(10, 1, 0.1), m(11, 2, 0.1), m(12, 3, 0.1)];
        let s = score_queries(&res, &gt).unwrap();
        assert_eq!(s.recall_at_1, 1.0);
        assert_eq!(s.f1_max, 1.0);
        assert!(s.auc_degenerate && s.auc.is_nan());
    }

    #[test]
    fn all_wrong_gives_zero_recall_at_1() {
        let gt = table(&[(10, &[1]), (11, &[2])]);
        let res = [m(10, 5, 0.1), m(11, 6, 0.2)];
        let s = score_queries(&res, &gt).unwrap();
        assert_eq!(s.recall_at_1, 0.0);
        assert_eq!(s.f1_max, 0.0);
    }

    #[test]
    fn no_gt_loops_is_an_error() {
        let gt = table(&[(10, &[]), (11, &[])]);
        assert!(matches!(
            score_queries(&[m(10, 1, 0.1)], &gt),
            Err(EvalError::NoGtLoops)
        ));
    }

    #[test]
    fn unknown_query_is_an_error() {
        let gt = table(&[(10, &[1])]);
        assert!(matches!(
            score_queries(&[m(99, 1, 0.1)], &gt),
            Err(EvalError::UnknownQuery(99))
        ));
    }

    #[test]
    fn hand_worked_sweep() {
        // q1 correct @0.1, q2 wrong-with-loop @0.2, q3 loopless @0.3, q4 no candidate with loop
        let gt = table(&[(1, &[0]), (2, &[0]), (3, &[]), (4, &[0])]);
        let res = [
            m(1, 0, 0.1),
            m(2, 9, 0.2),
            m(3, 0, 0.3),
            QueryResult {
                query_id: 4,
                matched: None,
            },
        ];
        let s = score_queries(&res, &gt).unwrap();
        let cells: Vec<(f64, Confusion)> =
            s.sweep.iter().map(|p| (p.threshold, p.confusion)).collect();
        let c = |tp, fp, tn, fn_| Confusion { tp, fp, tn, fn_ };
        assert_eq!(
            cells,
            vec![
                (0.0, c(0, 0, 1, 3)),
                (0.1, c(0, 0, 1, 3)),
                (0.2, c(1, 0, 1, 2)),
                (0.3, c(1, 1, 1, 1)),
                (f64::INFINITY, c(1, 2, 0, 1)),
            ]
        );
        assert!((s.recall_at_1 - 1.0 / 3.0).abs() < 1e-15);
        // F1 = 1/2 at tau = 0.2 (P = 1, R = 1/3) and at tau = 0.3 (P = R = 1/2)
        assert!((s.f1_max - 0.5).abs() < 1e-15);
        assert!([0.2, 0.3].contains(&s.f1_threshold));
        // ROC points: (0,0) (0,0) (0,1/3) (1/2,1/2) (1,1/2)
        let expected_auc = 0.5 * (1.0 / 3.0 + 0.5) / 2.0 + 0.5 * 0.5;
        assert!((s.auc - expected_auc).abs() < 1e-15);
        for p in &s.sweep {
            assert_eq!(p.confusion.total(), 4);
        }
    }

    #[test]
    fn zero_threshold_has_no_positives() {
        let gt = table(&[(1, &[0]), (2, &[])]);
        let s = score_queries(&[m(1, 0, 0.0), m(2, 0, 0.0)], &gt).unwrap();
        let first = s.sweep[0];
        assert_eq!(first.threshold, 0.0);
        assert_eq!(first.confusion.tp + first.confusion.fp, 0);
        assert_eq!(first.confusion.precision(), 1.0);
        assert_eq!(first.confusion.recall(), 0.0);
        let last = s.sweep.last().unwrap();
        assert_eq!(last.confusion.tp + last.confusion.fp, 2);
    }
}
