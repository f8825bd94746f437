//! Ranked result lists, confidence labels and the two result views.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, Hands, Location, Movement, SignMetadata, VocabularyCatalog};
use crate::recognizer::Distribution;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("distribution has {dist} classes, catalog has {catalog}")]
    SizeMismatch { dist: usize, catalog: usize },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("no results to show")]
    Empty,
    #[error(transparent)]
    Filter(#[from] CatalogError),
}

/// Ordered `Unlikely < Possibly < Probably`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Unlikely,
    Possibly,
    Probably,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Unlikely => "unlikely",
            Confidence::Possibly => "possibly",
            Confidence::Probably => "probably",
        }
    }
}

/// `[0, 1/3)` unlikely, `[1/3, 2/3)` possibly, `[2/3, 1]` probably.
pub fn confidence_label(p: f64) -> Result<Confidence, RankingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RankingError::Probability(p));
    }
    // 3p avoids comparing against the inexact constants 1/3 and 2/3
    let t = 3.0 * p;
    Ok(if t >= 2.0 {
        Confidence::Probably
    } else if t >= 1.0 {
        Confidence::Possibly
    } else {
        Confidence::Unlikely
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    /// 1-based position in this list.
    pub rank: usize,
    /// Position in the unfiltered ranking.
    pub original_rank: usize,
    pub class_index: usize,
    pub rendition_id: String,
    pub gloss: String,
    pub probability: f64,
    pub confidence: Confidence,
    pub metadata: SignMetadata,
    pub example_media: String,
}

/// All classes by descending probability; equal probabilities keep catalog
/// order.
pub fn rank(dist: &Distribution, catalog: &VocabularyCatalog) -> Result<Vec<RankedResult>, RankingError> {
    if dist.len() != catalog.len() {
        return Err(RankingError::SizeMismatch {
            dist: dist.len(),
            catalog: catalog.len(),
        });
    }
    let probs = dist.probabilities();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, class)| {
            let e = &catalog.entries()[class];
            let p = probs[class].clamp(0.0, 1.0);
            Ok(RankedResult {
                rank: i + 1,
                original_rank: i + 1,
                class_index: class,
                rendition_id: e.rendition_id.clone(),
                gloss: e.gloss.clone(),
                probability: p,
                confidence: confidence_label(p)?,
                metadata: e.metadata.clone(),
                example_media: e.example_media.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Compact,
    Detailed,
}

pub const COMPACT_SIZE: usize = 7;
pub const DETAILED_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultView {
    pub kind: ViewKind,
    /// Enlarged top result; compact view only.
    pub primary: Option<RankedResult>,
    pub grid: Vec<RankedResult>,
}

pub fn compose_view(results: &[RankedResult], kind: ViewKind) -> Result<ResultView, RankingError> {
    if results.is_empty() {
        return Err(RankingError::Empty);
    }
    Ok(match kind {
        ViewKind::Compact => ResultView {
            kind,
            primary: Some(results[0].clone()),
            grid: results[1..results.len().min(COMPACT_SIZE)].to_vec(),
        },
        ViewKind::Detailed => ResultView {
            kind,
            primary: None,
            grid: results[..results.len().min(DETAILED_SIZE)].to_vec(),
        },
    })
}

/// Conjunctive metadata filter; `None` fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    pub movement: Option<Movement>,
    pub hands: Option<Hands>,
    pub location: Option<Location>,
    /// Exact handshape label.
    pub handshape: Option<String>,
}

impl FilterCriteria {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Builds criteria from query-style pairs; empty values are ignored and
    /// unknown enum tokens are errors.
    pub fn from_pairs(pairs: &HashMap<String, String>) -> Result<Self, CatalogError> {
        let get = |k: &str| pairs.get(k).map(|v| v.trim()).filter(|v| !v.is_empty());
        Ok(Self {
            movement: get("movement").map(str::parse).transpose()?,
            hands: get("hands").map(str::parse).transpose()?,
            location: get("location").map(str::parse).transpose()?,
            handshape: get("handshape").map(str::to_string),
        })
    }

    pub fn matches(&self, m: &SignMetadata) -> bool {
        self.movement.is_none_or(|v| v == m.movement)
            && self.hands.is_none_or(|v| v == m.hands)
            && self.location.is_none_or(|v| v == m.location)
            && self.handshape.as_ref().is_none_or(|h| m.handshape.as_ref() == Some(h))
    }
}

/// Keeps matching results in order and renumbers `rank` from 1; the
/// unfiltered position stays in `original_rank`.
pub fn filter_results(results: &[RankedResult], criteria: &FilterCriteria) -> Vec<RankedResult> {
    results
        .iter()
        .filter(|r| criteria.matches(&r.metadata))
        .enumerate()
        .map(|(i, r)| RankedResult { rank: i + 1, ..r.clone() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::synth::synthetic_catalog;

    fn dist(p: Vec<f64>) -> Distribution {
        Distribution::new(p).unwrap()
    }

    #[test]
    fn labels() {
        let table = [
            (0.0, Confidence::Unlikely),
            (1.0 / 3.0, Confidence::Possibly),
            (0.5, Confidence::Possibly),
            (2.0 / 3.0, Confidence::Probably),
            (0.8, Confidence::Probably),
            (1.0, Confidence::Probably),
            (0.3333, Confidence::Unlikely),
            (0.6666, Confidence::Possibly),
        ];
        for (p, want) in table {
            assert_eq!(confidence_label(p).unwrap(), want, "p = {p}");
        }
        assert!(confidence_label(-0.01).is_err());
        assert!(confidence_label(1.01).is_err());
        assert!(confidence_label(f64::NAN).is_err());
    }

    #[test]
    fn ordering_and_ties() {
        let cat = synthetic_catalog(3);
        let r = rank(&dist(vec![0.2, 0.7, 0.1]), &cat).unwrap();
        assert_eq!(r.iter().map(|x| x.class_index).collect::<Vec<_>>(), [1, 0, 2]);
        let cat5 = synthetic_catalog(5);
        let r = rank(&dist(vec![0.2; 5]), &cat5).unwrap();
        assert_eq!(r.iter().map(|x| x.class_index).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
        assert_eq!(
            rank(&dist(vec![0.5, 0.5]), &cat),
            Err(RankingError::SizeMismatch { dist: 2, catalog: 3 })
        );
    }

    #[test]
    fn views() {
        let cat = synthetic_catalog(10);
        let r = rank(&Distribution::from_logits(&[0.0; 10]), &cat).unwrap();
        let c = compose_view(&r, ViewKind::Compact).unwrap();
        assert_eq!((c.primary.unwrap().rank, c.grid.len()), (1, 6));
        assert_eq!(c.grid.iter().map(|x| x.rank).collect::<Vec<_>>(), [2, 3, 4, 5, 6, 7]);
        assert_eq!(compose_view(&r[..4], ViewKind::Detailed).unwrap().grid.len(), 4);
        let one = compose_view(&r[..1], ViewKind::Compact).unwrap();
        assert!(one.primary.is_some() && one.grid.is_empty());
        assert_eq!(compose_view(&[], ViewKind::Compact), Err(RankingError::Empty));
    }

    #[test]
    fn filters() {
        let cat = synthetic_catalog(10);
        let r = rank(&Distribution::from_logits(&(0..10).map(|i| i as f64).collect::<Vec<_>>()), &cat).unwrap();
        assert_eq!(filter_results(&r, &FilterCriteria::default()), r);
        let one = FilterCriteria { hands: Some(Hands::One), ..Default::default() };
        let f = filter_results(&r, &one);
        assert!(f.iter().all(|x| x.metadata.hands == Hands::One));
        assert_eq!(f.iter().map(|x| x.rank).collect::<Vec<_>>(), (1..=f.len()).collect::<Vec<_>>());
        assert!(f.windows(2).all(|w| w[0].original_rank < w[1].original_rank));
        assert_eq!(filter_results(&f, &one), f);

        let mut pairs = HashMap::new();
        pairs.insert("hands".to_string(), "three".to_string());
        assert!(FilterCriteria::from_pairs(&pairs).is_err());
        pairs.insert("hands".to_string(), "two".to_string());
        pairs.insert("location".to_string(), "".to_string());
        let c = FilterCriteria::from_pairs(&pairs).unwrap();
        assert_eq!(c, FilterCriteria { hands: Some(Hands::Two), ..Default::default() });
    }
}
