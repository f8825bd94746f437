//! Graded-relevance DCG and nDCG for a single prediction.
//!
//! The ideal ordering is taken over the returned list itself: IDCG is the DCG
//! of the same grades sorted descending. [`dcg_oracle`] checks that choice by
//! maximizing over every permutation.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::catalog::{shares_attribute, GlossEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelevanceGrade {
    Zero,
    Half,
    One,
}

impl RelevanceGrade {
    pub fn value(self) -> f64 {
        match self {
            RelevanceGrade::Zero => 0.0,
            RelevanceGrade::Half => 0.5,
            RelevanceGrade::One => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self, EvalError> {
        match v {
            x if x == 0.0 => Ok(RelevanceGrade::Zero),
            x if x == 0.5 => Ok(RelevanceGrade::Half),
            x if x == 1.0 => Ok(RelevanceGrade::One),
            other => Err(EvalError::Grade(other)),
        }
    }

    /// `2^rel - 1`
    fn gain(self) -> f64 {
        match self {
            RelevanceGrade::Zero => 0.0,
            RelevanceGrade::Half => std::f64::consts::SQRT_2 - 1.0,
            RelevanceGrade::One => 1.0,
        }
    }
}

/// Parses a slice of 0 / 0.5 / 1 values.
pub fn grades(values: &[f64]) -> Result<Vec<RelevanceGrade>, EvalError> {
    values.iter().map(|&v| RelevanceGrade::from_value(v)).collect()
}

/// Same gloss (any rendition) is 1, a different gloss sharing hands,
/// movement or handshape is 0.5, anything else 0.
pub fn rel_grade(predicted: &GlossEntry, truth: &GlossEntry) -> RelevanceGrade {
    if predicted.gloss == truth.gloss {
        RelevanceGrade::One
    } else if shares_attribute(&predicted.metadata, &truth.metadata) {
        RelevanceGrade::Half
    } else {
        RelevanceGrade::Zero
    }
}

/// `sum_i (2^rel_i - 1) / log2(i + 1)` over the whole slice.
pub fn dcg(grades: &[RelevanceGrade]) -> f64 {
    grades
        .iter()
        .enumerate()
        .map(|(i, g)| g.gain() / ((i + 2) as f64).log2())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NdcgParams {
    p: usize,
}

impl NdcgParams {
    pub fn new(p: usize) -> Result<Self, EvalError> {
        if p == 0 {
            return Err(EvalError::Cutoff { p, len: 0 });
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

impl Default for NdcgParams {
    /// Depth of the compact result view.
    fn default() -> Self {
        Self { p: 7 }
    }
}

/// 1.0 when the ideal DCG is zero.
pub fn ndcg(grades: &[RelevanceGrade], params: NdcgParams) -> Result<f64, EvalError> {
    let p = params.p;
    if p > grades.len() {
        return Err(EvalError::Cutoff { p, len: grades.len() });
    }
    let mut ideal = grades.to_vec();
    ideal.sort_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal[..p]);
    if idcg == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(&grades[..p]) / idcg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub dcg: f64,
    pub idcg: f64,
    pub ndcg: f64,
}

pub const ORACLE_MAX_LEN: usize = 8;

/// Brute force: IDCG is the largest depth-`p` DCG over all permutations.
pub fn dcg_oracle(grades: &[RelevanceGrade], p: usize) -> Result<OracleResult, EvalError> {
    if grades.len() > ORACLE_MAX_LEN {
        return Err(EvalError::TooLong(grades.len()));
    }
    if p == 0 || p > grades.len() {
        return Err(EvalError::Cutoff { p, len: grades.len() });
    }
    let mut perm = grades.to_vec();
    let mut idcg = dcg(&perm[..p]);
    // Heap's algorithm
    let n = perm.len();
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            idcg = idcg.max(dcg(&perm[..p]));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let d = dcg(&grades[..p]);
    Ok(OracleResult {
        dcg: d,
        idcg,
        ndcg: if idcg == 0.0 { 1.0 } else { d / idcg },
    })
}
