//! Forecast metrics, seasonal breakdowns and comparison tables.

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DailyFeatureRow;

fn check_pair(pred: &[f64], obs: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    if pred.len() != obs.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} predictions but {} observations",
            pred.len(),
            obs.len()
        )));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_pair(pred, obs)?;
    let s: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_pair(pred, obs)?;
    let s: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Least-squares line of predicted on observed, plus Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterFit {
    pub slope: f64,
    pub intercept: f64,
    pub pearson_r: f64,
}

/// `None` with fewer than two points or constant observations.
pub fn scatter_fit(pred: &[f64], obs: &[f64]) -> Option<ScatterFit> {
    if pred.len() != obs.len() || pred.len() < 2 {
        return None;
    }
    let n = pred.len() as f64;
    let mo = obs.iter().sum::<f64>() / n;
    let mp = pred.iter().sum::<f64>() / n;
    let (mut soo, mut spp, mut sop) = (0.0, 0.0, 0.0);
    for (p, o) in pred.iter().zip(obs) {
        soo += (o - mo) * (o - mo);
        spp += (p - mp) * (p - mp);
        sop += (o - mo) * (p - mp);
    }
    if soo == 0.0 {
        return None;
    }
    let slope = sop / soo;
    let pearson_r = if spp == 0.0 { 0.0 } else { sop / (soo * spp).sqrt() };
    Some(ScatterFit {
        slope,
        intercept: mp - slope * mo,
        pearson_r,
    })
}

/// One forecast: `date` is the day being forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub date: NaiveDate,
    pub observed: f64,
    pub predicted: f64,
}

/// 0 = Jan–Mar, 1 = Apr–Jun, 2 = Jul–Sep, 3 = Oct–Dec.
pub fn trimester_of(date: NaiveDate) -> usize {
    (date.month0() / 3) as usize
}

/// Indices of `dates` grouped by calendar trimester.
pub fn trimester_split(dates: &[NaiveDate]) -> [Vec<usize>; 4] {
    let mut groups: [Vec<usize>; 4] = Default::default();
    for (i, &d) in dates.iter().enumerate() {
        groups[trimester_of(d)].push(i);
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub n: usize,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub scatter: Option<ScatterFit>,
}

impl GroupMetrics {
    fn of(pred: &[f64], obs: &[f64]) -> Self {
        Self {
            n: pred.len(),
            rmse: rmse(pred, obs).ok(),
            mae: mae(pred, obs).ok(),
            scatter: scatter_fit(pred, obs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
    pub per_trimester: [GroupMetrics; 4],
    pub scatter: Option<ScatterFit>,
}

pub fn evaluate(preds: &[Prediction]) -> Result<EvalMetrics> {
    let pred: Vec<f64> = preds.iter().map(|p| p.predicted).collect();
    let obs: Vec<f64> = preds.iter().map(|p| p.observed).collect();
    let dates: Vec<NaiveDate> = preds.iter().map(|p| p.date).collect();
    let rmse_all = rmse(&pred, &obs)?;
    let mae_all = mae(&pred, &obs)?;
    let groups = trimester_split(&dates);
    let per_trimester = groups.map(|idx| {
        let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
        let o: Vec<f64> = idx.iter().map(|&i| obs[i]).collect();
        GroupMetrics::of(&p, &o)
    });
    Ok(EvalMetrics {
        rmse: rmse_all,
        mae: mae_all,
        n: preds.len(),
        per_trimester,
        scatter: scatter_fit(&pred, &obs),
    })
}

/// Today's statistic as tomorrow's forecast.
pub fn persistence_predictions(rows: &[DailyFeatureRow]) -> Vec<Prediction> {
    rows.iter()
        .map(|r| Prediction {
            date: r.target_date(),
            observed: r.target_raw,
            predicted: r.current_anchor,
        })
        .collect()
}

pub fn persistence_baseline(rows: &[DailyFeatureRow]) -> Result<EvalMetrics> {
    evaluate(&persistence_predictions(rows))
}

/// Comma-separated summary with overall and per-trimester rows.
pub fn metrics_table(m: &EvalMetrics) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| x.to_string());
    let mut s = String::from("group,n,rmse,mae,slope,intercept,pearson_r\n");
    let scat = |sc: &Option<ScatterFit>| match sc {
        Some(f) => format!("{},{},{}", f.slope, f.intercept, f.pearson_r),
        None => "n/a,n/a,n/a".into(),
    };
    s.push_str(&format!("all,{},{},{},{}\n", m.n, m.rmse, m.mae, scat(&m.scatter)));
    for (t, g) in m.per_trimester.iter().enumerate() {
        s.push_str(&format!(
            "T{},{},{},{},{}\n",
            t + 1,
            g.n,
            opt(g.rmse),
            opt(g.mae),
            scat(&g.scatter)
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub index: usize,
    pub name: String,
    pub weight: f64,
}

/// Nonzero weights by decreasing magnitude, ties by index; at most `k`.
pub fn top_weights(beta: &[f64], names: &[String], k: usize) -> Vec<WeightEntry> {
    let mut idx: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    idx.sort_by(|&a, &b| {
        beta[b]
            .abs()
            .partial_cmp(&beta[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.into_iter()
        .take(k)
        .map(|j| WeightEntry {
            index: j,
            name: names.get(j).cloned().unwrap_or_else(|| format!("x{j}")),
            weight: beta[j],
        })
        .collect()
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEntry {
    pub label: String,
    /// `None` when the method could not be fitted.
    pub predictions: Option<Vec<Prediction>>,
    /// `(active, candidates)`; `None` for model-free baselines.
    pub features: Option<(usize, usize)>,
    pub note: Option<String>,
}

pub fn format_features(features: Option<(usize, usize)>) -> String {
    match features {
        Some((a, c)) => format!("{a}/ {c}"),
        None => "n/a".into(),
    }
}

/// Comma-separated table `method,rmse,mae,features`. All fitted methods
/// must be scored on the same days and observations.
pub fn comparison_report(entries: &[MethodEntry]) -> Result<String> {
    let mut reference: Option<&[Prediction]> = None;
    for e in entries {
        if let Some(p) = e.predictions.as_deref() {
            match reference {
                None => reference = Some(p),
                Some(r) => {
                    let same = r.len() == p.len()
                        && r.iter()
                            .zip(p)
                            .all(|(a, b)| a.date == b.date && a.observed.to_bits() == b.observed.to_bits());
                    if !same {
                        return Err(Error::SchemaMismatch(format!(
                            "method {:?} was scored on a different test set",
                            e.label
                        )));
                    }
                }
            }
        }
    }
    let mut s = String::from("method,rmse,mae,features\n");
    let mut notes = Vec::new();
    for e in entries {
        match e.predictions.as_deref() {
            Some(p) => {
                let m = evaluate(p)?;
                s.push_str(&format!(
                    "{},{:.4},{:.4},{}\n",
                    e.label,
                    m.rmse,
                    m.mae,
                    format_features(e.features)
                ));
            }
            None => s.push_str(&format!("{},n/a,n/a,{}\n", e.label, format_features(e.features))),
        }
        if let Some(n) = &e.note {
            notes.push(format!("# {}: {}", e.label, n));
        }
    }
    for n in notes {
        s.push_str(&n);
        s.push('\n');
    }
    s.push_str("# ARMA and SVM baselines are not produced by this tool.\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let v = [1.0, 2.0, 5.0];
        assert_eq!(rmse(&v, &v).unwrap(), 0.0);
        assert_eq!(mae(&v, &v).unwrap(), 0.0);
        let s = scatter_fit(&v, &v).unwrap();
        assert_eq!((s.slope, s.intercept), (1.0, 0.0));
        assert!((s.pearson_r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_arithmetic() {
        assert!((rmse(&[1.0, 3.0], &[0.0, 0.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(mae(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), 2.0);
        assert!(rmse(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn affine_scatter() {
        let obs = [1.0, 4.0, 2.0, 7.0];
        let pred: Vec<f64> = obs.iter().map(|o| 2.0 * o + 3.0).collect();
        let s = scatter_fit(&pred, &obs).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-14);
        assert!((s.intercept - 3.0).abs() < 1e-14);
        assert!((s.pearson_r - 1.0).abs() < 1e-14);
        assert!(scatter_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn trimester_blocks() {
        assert_eq!(trimester_of(d("2017-01-01")), 0);
        assert_eq!(trimester_of(d("2017-03-31")), 0);
        assert_eq!(trimester_of(d("2017-04-01")), 1);
        assert_eq!(trimester_of(d("2017-09-30")), 2);
        assert_eq!(trimester_of(d("2017-12-31")), 3);
        let g = trimester_split(&[d("2017-05-01"), d("2017-02-01"), d("2017-05-09")]);
        assert_eq!(g[1], vec![0, 2]);
        assert_eq!(g[0], vec![1]);
    }

    #[test]
    fn persistence_symmetric_errors() {
        let rows = [(10.0, 12.0), (20.0, 18.0)]
            .iter()
            .enumerate()
            .map(|(i, &(a, t))| DailyFeatureRow {
                date: d("2017-06-01") + chrono::Days::new(i as u64),
                x: vec![],
                target_raw: t,
                current_anchor: a,
            })
            .collect::<Vec<_>>();
        let m = persistence_baseline(&rows).unwrap();
        assert_eq!(m.mae, 2.0);
        assert_eq!(m.rmse, 2.0);
        assert_eq!(m.per_trimester[1].n, 2);
        assert!(m.per_trimester[0].rmse.is_none());
    }

    #[test]
    fn top_weight_cases() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let w = top_weights(&[0.2, -0.5, 0.0], &names, 2);
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].weight, w[0].name.as_str()), (-0.5, "b"));
        assert_eq!((w[1].weight, w[1].name.as_str()), (0.2, "a"));
        assert!(top_weights(&[0.0, 0.0], &names, 5).is_empty());
        assert_eq!(top_weights(&[0.2, -0.5, 0.0], &names, 10).len(), 2);
        let tie = top_weights(&[0.3, -0.3], &names, 2);
        assert_eq!(tie[0].index, 0);
    }

    fn preds(obs: &[f64], pred: &[f64]) -> Vec<Prediction> {
        obs.iter()
            .zip(pred)
            .enumerate()
            .map(|(i, (&o, &p))| Prediction {
                date: d("2017-01-01") + chrono::Days::new(i as u64 * 40),
                observed: o,
                predicted: p,
            })
            .collect()
    }

    #[test]
    fn comparison_layout() {
        let obs = [30.0, 40.0, 50.0];
        let entries = vec![
            MethodEntry {
                label: "lasso-linear".into(),
                predictions: Some(preds(&obs, &[31.0, 39.0, 52.0])),
                features: Some((105, 918)),
                note: None,
            },
            MethodEntry {
                label: "ridge".into(),
                predictions: Some(preds(&obs, &[33.0, 39.0, 48.0])),
                features: Some((918, 918)),
                note: None,
            },
            MethodEntry {
                label: "persistence".into(),
                predictions: Some(preds(&obs, &[28.0, 30.0, 40.0])),
                features: None,
                note: None,
            },
        ];
        let t = comparison_report(&entries).unwrap();
        assert!(t.contains("105/ 918"));
        assert!(t.contains("918/ 918"));
        assert!(t.lines().any(|l| l.starts_with("persistence,") && l.ends_with(",n/a")));
        assert!(t.contains("ARMA and SVM"));

        let mut bad = entries.clone();
        bad[1].predictions = Some(preds(&[30.0, 41.0, 50.0], &[1.0, 2.0, 3.0]));
        assert!(comparison_report(&bad).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..60)) {
            let (p, o): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let r = rmse(&p, &o).unwrap();
            let m = mae(&p, &o).unwrap();
            prop_assert!(r >= m * (1.0 - 1e-12));
            prop_assert!(m >= 0.0);
        }

        #[test]
        fn metrics_ignore_order(v in prop::collection::vec((-1e2f64..1e2, -1e2f64..1e2), 2..40), rot in 0usize..40) {
            let (p, o): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let k = rot % p.len();
            let mut p2 = p.clone();
            let mut o2 = o.clone();
            p2.rotate_left(k);
            o2.rotate_left(k);
            prop_assert!((rmse(&p, &o).unwrap() - rmse(&p2, &o2).unwrap()).abs() < 1e-9);
            prop_assert!((mae(&p, &o).unwrap() - mae(&p2, &o2).unwrap()).abs() < 1e-9);
        }
    }
}
