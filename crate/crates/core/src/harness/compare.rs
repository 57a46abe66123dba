use crate::data::{smote_supersample, ResidualOracle};
use crate::error::Result;
use crate::estimate::{estimate_set, Exclusion};
use crate::neighbors::NeighborIndex;
use crate::pipeline::{estimate_against, supersample, MessParams, Supersampled};
use crate::points::PointSet;

use super::{HtmlReport, IdReport, Series};

/// Mean distance to the ideal manifold per sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub original: f64,
    pub raw: f64,
    pub corrected: f64,
    pub smote: f64,
}

/// The three arms on one data set: estimates on the data alone, with MESS
/// supersampling, and with SMOTE supersampling at the same `k1`, `ext` and
/// `k3`.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub params: MessParams,
    pub baseline: IdReport,
    pub mess: IdReport,
    pub smote: IdReport,
    pub samples: Supersampled,
    pub smote_samples: PointSet,
    pub residuals: Option<ResidualSummary>,
}

pub fn compare(
    points: &PointSet,
    params: &MessParams,
    oracle: Option<&ResidualOracle>,
) -> Result<Comparison> {
    let index = NeighborIndex::build(points)?;
    let estimator = params.estimator;
    let baseline = {
        let est = estimate_set(points, &index, params.k1.max(2), estimator, Exclusion::SameIndex)?;
        IdReport::new(est, &index, params.k1)?
    };
    let samples = supersample(points, params)?;
    let mess = estimate_against(points, &index, &samples, params, estimator)?;

    let smote_samples = smote_supersample(points, params.ext, params.k1, params.seed)?;
    let smote = {
        let reference = NeighborIndex::build(&smote_samples)?;
        let est = estimate_set(points, &reference, params.k3(), estimator, Exclusion::None)?;
        IdReport::new(est, &index, params.k1)?
    };
    let residuals = oracle.map(|o| ResidualSummary {
        original: o.mean_distance(points),
        raw: o.mean_distance(&samples.raw),
        corrected: o.mean_distance(&samples.corrected),
        smote: o.mean_distance(&smote_samples),
    });
    Ok(Comparison {
        params: params.clone(),
        baseline,
        mess,
        smote,
        samples,
        smote_samples,
        residuals,
    })
}

impl Comparison {
    fn arms(&self) -> [(&'static str, &IdReport); 3] {
        [
            ("baseline", &self.baseline),
            ("mess", &self.mess),
            ("smote", &self.smote),
        ]
    }

    /// One row per arm: `arm,estimator,median,q1,q3,mean,std,degenerate,mean_local_deviation`.
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("arm,estimator,median,q1,q3,mean,std,degenerate,mean_local_deviation\n");
        for (name, r) in self.arms() {
            let s = &r.summary;
            out.push_str(&format!(
                "{name},{},{},{},{},{},{},{},{}\n",
                self.params.estimator, s.median, s.q1, s.q3, s.mean, s.std, s.degenerate, r.deviation.mean
            ));
        }
        out
    }

    pub fn to_html(&self, title: &str, points: &PointSet) -> HtmlReport {
        let p = &self.params;
        let mut html = HtmlReport::new(title);
        html.paragraph(&format!(
            "n = {}, d = {}, k1 = {}, k2 = {}, k3 = {}, ext = {}, estimator = {}, seed = {}",
            points.len(),
            points.dim(),
            p.k1,
            p.k2(),
            p.k3(),
            p.ext,
            p.estimator,
            p.seed
        ));
        let rows: Vec<Vec<String>> = self
            .arms()
            .iter()
            .map(|(name, r)| {
                let s = &r.summary;
                vec![
                    name.to_string(),
                    format!("{:.3}", s.median),
                    format!("{:.3}", s.q1),
                    format!("{:.3}", s.q3),
                    s.degenerate.to_string(),
                    format!("{:.4}", r.deviation.mean),
                ]
            })
            .collect();
        html.table(&["arm", "median", "q1", "q3", "degenerate", "mean local deviation"], &rows);
        if let Some(r) = &self.residuals {
            html.table(
                &["set", "mean residual"],
                &[
                    vec!["original".into(), format!("{:.4}", r.original)],
                    vec!["raw samples".into(), format!("{:.4}", r.raw)],
                    vec!["corrected samples".into(), format!("{:.4}", r.corrected)],
                    vec!["SMOTE samples".into(), format!("{:.4}", r.smote)],
                ],
            );
        }
        let (b, m, s) = (self.baseline.values(), self.mess.values(), self.smote.values());
        html.histogram(
            "ID estimates",
            &[
                Series { label: "without", color: "#1f77b4", values: &b },
                Series { label: "MESS", color: "#2ca02c", values: &m },
                Series { label: "SMOTE", color: "#e377c2", values: &s },
            ],
            40,
        );
        if points.dim() >= 2 {
            let axes = if points.dim() >= 3 { (0, 2) } else { (0, 1) };
            html.scatter("original, colored by MESS estimate", points, axes, Some(&m), 4000);
            html.scatter("corrected samples", &self.samples.corrected, axes, None, 4000);
            html.scatter("SMOTE samples", &self.smote_samples, axes, None, 4000);
        }
        html
    }
}
