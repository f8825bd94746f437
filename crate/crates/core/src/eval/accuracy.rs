use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ndcg::{ndcg, rel_grade, NdcgParams};
use super::EvalError;
use crate::catalog::VocabularyCatalog;
use crate::pose::quantize_resolution;
use crate::pose::synth::LabeledSequence;
use crate::ranking::{rank, RankedResult};
use crate::recognizer::TrainedModel;

/// One test sample's ranking next to its true class.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub truth: usize,
    pub ranking: Vec<RankedResult>,
}

impl Scored {
    /// A hit when any of the first `k` results has the true gloss, so a
    /// different rendition of the same sign still counts.
    pub fn hit(&self, catalog: &VocabularyCatalog, k: usize) -> bool {
        let gloss = &catalog.entries()[self.truth].gloss;
        self.ranking.iter().take(k).any(|r| &r.gloss == gloss)
    }
}

pub fn predict_all(
    model: &TrainedModel,
    catalog: &VocabularyCatalog,
    testset: &[LabeledSequence],
) -> Result<Vec<Scored>, EvalError> {
    testset
        .iter()
        .map(|s| {
            let dist = model.predict(catalog, &s.sequence)?;
            Ok(Scored { truth: s.class, ranking: rank(&dist, catalog)? })
        })
        .collect()
}

fn check(scored: &[Scored], k: usize) -> Result<(), EvalError> {
    if k == 0 {
        return Err(EvalError::K(k));
    }
    if scored.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn topk_accuracy(scored: &[Scored], catalog: &VocabularyCatalog, k: usize) -> Result<f64, EvalError> {
    check(scored, k)?;
    let hits = scored.iter().filter(|s| s.hit(catalog, k)).count();
    Ok(hits as f64 / scored.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassSummary {
    /// Top-1 accuracy per class index; `None` for classes with no samples.
    pub per_class: Vec<Option<f64>>,
    pub mean: f64,
    /// Population standard deviation over classes with samples.
    pub std_dev: f64,
}

pub fn per_class_accuracy(scored: &[Scored], catalog: &VocabularyCatalog) -> Result<PerClassSummary, EvalError> {
    check(scored, 1)?;
    let mut tally = vec![(0usize, 0usize); catalog.len()];
    for s in scored {
        let t = &mut tally[s.truth];
        t.1 += 1;
        if s.hit(catalog, 1) {
            t.0 += 1;
        }
    }
    let per_class: Vec<Option<f64>> =
        tally.iter().map(|&(h, n)| (n > 0).then(|| h as f64 / n as f64)).collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    let var = present.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / present.len() as f64;
    Ok(PerClassSummary { per_class, mean, std_dev: var.sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAccuracy {
    /// `movement`, `hands` or `location`.
    pub feature: String,
    pub value: String,
    pub count: usize,
    pub top1: f64,
    pub top7: f64,
}

/// Accuracy of samples grouped by the true sign's movement, hands and
/// location. Groups without samples are omitted.
pub fn feature_group_accuracy(scored: &[Scored], catalog: &VocabularyCatalog) -> Result<Vec<GroupAccuracy>, EvalError> {
    check(scored, 1)?;
    let mut groups: BTreeMap<(&str, &str), (usize, usize, usize)> = BTreeMap::new();
    for s in scored {
        let m = &catalog.entries()[s.truth].metadata;
        let (h1, h7) = (s.hit(catalog, 1) as usize, s.hit(catalog, 7) as usize);
        for key in [("movement", m.movement.as_str()), ("hands", m.hands.as_str()), ("location", m.location.as_str())] {
            let g = groups.entry(key).or_default();
            *g = (g.0 + 1, g.1 + h1, g.2 + h7);
        }
    }
    Ok(groups
        .into_iter()
        .map(|((feature, value), (n, h1, h7))| GroupAccuracy {
            feature: feature.to_string(),
            value: value.to_string(),
            count: n,
            top1: h1 as f64 / n as f64,
            top7: h7 as f64 / n as f64,
        })
        .collect())
}

/// Mean graded nDCG at depth `p` (clamped to the catalog size).
pub fn mean_ndcg(scored: &[Scored], catalog: &VocabularyCatalog, params: NdcgParams) -> Result<f64, EvalError> {
    check(scored, 1)?;
    let params = NdcgParams::new(params.p().min(catalog.len()))?;
    let mut total = 0.0;
    for s in scored {
        let truth = &catalog.entries()[s.truth];
        let g: Vec<_> = s
            .ranking
            .iter()
            .map(|r| rel_grade(&catalog.entries()[r.class_index], truth))
            .collect();
        total += ndcg(&g, params)?;
    }
    Ok(total / scored.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub samples: usize,
    pub k: usize,
    pub top1: f64,
    pub topk: f64,
    pub per_class: PerClassSummary,
    pub ndcg_mean: f64,
    pub groups: Vec<GroupAccuracy>,
}

pub fn evaluate(
    model: &TrainedModel,
    catalog: &VocabularyCatalog,
    testset: &[LabeledSequence],
    k: usize,
) -> Result<AccuracyReport, EvalError> {
    if k == 0 {
        return Err(EvalError::K(k));
    }
    let scored = predict_all(model, catalog, testset)?;
    Ok(AccuracyReport {
        samples: scored.len(),
        k,
        top1: topk_accuracy(&scored, catalog, 1)?,
        topk: topk_accuracy(&scored, catalog, k)?,
        per_class: per_class_accuracy(&scored, catalog)?,
        ndcg_mean: mean_ndcg(&scored, catalog, NdcgParams::default())?,
        groups: feature_group_accuracy(&scored, catalog)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub top1: f64,
    pub top7: f64,
}

/// Accuracy with every test sequence quantized to `ratio` of the standard
/// resolution. Ratio 1.0 is always included as the baseline; the output is
/// sorted by ratio, descending.
pub fn resolution_sweep(
    model: &TrainedModel,
    catalog: &VocabularyCatalog,
    testset: &[LabeledSequence],
    ratios: &[f64],
) -> Result<Vec<SweepPoint>, EvalError> {
    if let Some(&r) = ratios.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        return Err(EvalError::Ratio(r));
    }
    let mut rs = ratios.to_vec();
    rs.push(1.0);
    rs.sort_by(|a, b| b.total_cmp(a));
    rs.dedup();
    rs.into_iter()
        .map(|ratio| {
            let reduced = testset
                .iter()
                .map(|s| Ok(LabeledSequence { class: s.class, sequence: quantize_resolution(&s.sequence, ratio)? }))
                .collect::<Result<Vec<_>, EvalError>>()?;
            let scored = predict_all(model, catalog, &reduced)?;
            Ok(SweepPoint {
                ratio,
                top1: topk_accuracy(&scored, catalog, 1)?,
                top7: topk_accuracy(&scored, catalog, 7)?,
            })
        })
        .collect()
}
