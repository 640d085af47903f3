use std::io;
use std::path::Path;

use serde::Serialize;

use super::{GtLoopTable, QueryResult, Scores};
use crate::scalar::Scalar;

/// Scalar results of one evaluation run, as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub queries: usize,
    pub gt_loop_queries: usize,
    pub recall_at_1: f64,
    /// `None` (JSON null) when the ROC is degenerate.
    pub auc: Option<f64>,
    pub auc_degenerate: bool,
    pub f1_max: f64,
    pub f1_threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub mean_re_deg: Option<f64>,
    pub re_samples: usize,
    pub desc_hz: Option<f64>,
    pub search_hz: Option<f64>,
    pub payload_bytes: u64,
    /// Size of the query database file, headers included.
    pub db_file_bytes: Option<u64>,
    pub precision_at_no_positives: f64,
    pub config: String,
    pub provenance: String,
}

impl EvalReport {
    pub fn new(scores: &Scores, payload_bytes: u64, config: String) -> Self {
        let c = scores.f1_confusion;
        Self {
            queries: scores.queries,
            gt_loop_queries: scores.gt_loop_queries,
            recall_at_1: scores.recall_at_1,
            auc: (!scores.auc_degenerate).then_some(scores.auc),
            auc_degenerate: scores.auc_degenerate,
            f1_max: scores.f1_max,
            f1_threshold: scores.f1_threshold,
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            mean_re_deg: None,
            re_samples: 0,
            desc_hz: None,
            search_hz: None,
            payload_bytes,
            db_file_bytes: None,
            precision_at_no_positives: 1.0,
            provenance: provenance(&config),
            config,
        }
    }

    pub fn with_heading_errors(mut self, errors: &[f64]) -> Self {
        self.re_samples = errors.len();
        self.mean_re_deg =
            (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `solid <version> (rev <git rev>, config <fnv-1a of config text>)`.
pub fn provenance(config: &str) -> String {
    let hash = config.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    let rev = option_env!("SOLID_GIT_REV").unwrap_or("unknown");
    format!(
        "solid {} (rev {rev}, config {hash:016x})",
        env!("CARGO_PKG_VERSION")
    )
}

pub fn write_pr_csv(path: &Path, scores: &Scores) -> io::Result<()> {
    write_curve(
        path,
        ["threshold", "precision", "recall"],
        &scores.pr_curve(),
    )
}

pub fn write_roc_csv(path: &Path, scores: &Scores) -> io::Result<()> {
    write_curve(path, ["threshold", "fpr", "tpr"], &scores.roc_curve())
}

fn write_curve(path: &Path, header: [&str; 3], rows: &[(f64, f64, f64)]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (t, a, b) in rows {
        w.write_record([t.to_string(), a.to_string(), b.to_string()])?;
    }
    w.flush()
}

/// One row per query that produced a candidate.
pub fn write_matches_csv<T: Scalar>(
    path: &Path,
    results: &[QueryResult<T>],
    gt: &GtLoopTable,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "query_id",
        "candidate_id",
        "distance",
        "heading_deg",
        "is_tp",
    ])?;
    for m in results.iter().filter_map(|r| r.matched.as_ref()) {
        let is_tp = gt.is_loop(m.query_id, m.candidate_id).unwrap_or(false);
        w.write_record([
            m.query_id.to_string(),
            m.candidate_id.to_string(),
            m.distance.to_string(),
            m.heading_deg.to_string(),
            u8::from(is_tp).to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::score_queries;
    use crate::retrieval::Match;

    fn fixture() -> (Vec<QueryResult<f64>>, GtLoopTable) {
        let m = |q, c, d| QueryResult {
            query_id: q,
            matched: Some(Match {
                query_id: q,
                candidate_id: c,
                distance: d,
                zero_norm: false,
                heading_shift: 1,
                heading_deg: 6.0,
            }),
        };
        let gt = GtLoopTable::from_entries(vec![(1, vec![0]), (2, vec![]), (3, vec![0])]);
        (
            vec![
                m(1, 0, 0.25),
                m(2, 0, 0.5),
                QueryResult {
                    query_id: 3,
                    matched: None,
                },
            ],
            gt,
        )
    }

    #[test]
    fn csv_files_have_header_and_one_row_per_item() {
        let dir = tempfile::tempdir().unwrap();
        let (res, gt) = fixture();
        let scores = score_queries(&res, &gt).unwrap();
        write_pr_csv(&dir.path().join("pr.csv"), &scores).unwrap();
        write_roc_csv(&dir.path().join("roc.csv"), &scores).unwrap();
        write_matches_csv(&dir.path().join("m.csv"), &res, &gt).unwrap();

        let pr = std::fs::read_to_string(dir.path().join("pr.csv")).unwrap();
        let lines: Vec<&str> = pr.lines().collect();
        assert_eq!(lines[0], "threshold,precision,recall");
        assert_eq!(lines.len(), 1 + scores.sweep.len());
        assert_eq!(lines.last().unwrap(), &"inf,0.5,0.5");

        let roc = std::fs::read_to_string(dir.path().join("roc.csv")).unwrap();
        assert!(roc.starts_with("threshold,fpr,tpr\n0,0,0\n"));

        let m = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
        assert_eq!(
            m,
            "query_id,candidate_id,distance,heading_deg,is_tp\n1,0,0.25,6,1\n2,0,0.5,6,0\n"
        );
    }

    #[test]
    fn report_json_carries_confusion_and_config() {
        let (res, gt) = fixture();
        let scores = score_queries(&res, &gt).unwrap();
        let report =
            EvalReport::new(&scores, 448, "nr=40\n".into()).with_heading_errors(&[1.0, 2.0]);
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["payload_bytes"], 448);
        assert_eq!(v["mean_re_deg"], 1.5);
        assert_eq!(v["config"], "nr=40\n");
        assert!(v["fn"].is_u64());
        assert!(v["provenance"].as_str().unwrap().starts_with("solid "));
        assert_eq!(provenance("a"), provenance("a"));
        assert_ne!(provenance("a"), provenance("b"));
    }
}
