use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{LandmarkSubset, ModelConfig};
use super::nn::{Alloc, Block, BlockCache, Linear, Slot};
use super::normalize::{normalize, NormalizedSequence};
use super::train::EpochStats;
use super::RecognizerError;
use crate::catalog::VocabularyCatalog;
use crate::pose::PoseSequence;

/// Class probabilities in catalog order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Rejects negative or non-finite entries and sums off by more than 1e-6.
    pub fn new(probabilities: Vec<f64>) -> Result<Self, String> {
        if probabilities.is_empty() {
            return Err("empty distribution".into());
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err("probabilities must be finite and non-negative".into());
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!("probabilities sum to {sum}"));
        }
        Ok(Self(probabilities))
    }

    pub fn from_logits(logits: &[f64]) -> Self {
        Self(softmax(logits))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let z: f64 = e.iter().sum();
    for v in e.iter_mut() {
        *v /= z;
    }
    e
}

/// Cross-entropy of `label` and its gradient w.r.t. the logits.
pub(crate) fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let mut p = softmax(logits);
    let loss = -p[label].max(f64::MIN_POSITIVE).ln();
    p[label] -= 1.0;
    (loss, p)
}

/// Parameter layout and forward/backward passes. Holds no weights.
#[derive(Debug, Clone)]
pub(crate) struct Network {
    pub input_dim: usize,
    pub hidden: usize,
    pub max_frames: usize,
    proj: Option<Linear>,
    pos: Slot,
    encoder: Vec<Block>,
    query: Slot,
    decoder: Block,
    head: Linear,
    pub num_params: usize,
}

pub(crate) struct NetCache {
    input: Vec<f64>,
    frames: usize,
    encoder: Vec<BlockCache>,
    decoder: BlockCache,
    decoded: Vec<f64>,
}

impl Network {
    pub fn new(cfg: &ModelConfig, input_dim: usize, num_classes: usize) -> Self {
        let d = cfg.hidden_dim;
        let mut a = Alloc::default();
        let proj = (input_dim != d).then(|| Linear::new(&mut a, input_dim, d));
        let pos = a.take(cfg.max_frames * d);
        let encoder = (0..cfg.encoder_layers)
            .map(|_| Block::new(&mut a, d, cfg.attention_heads, cfg.feedforward_dim))
            .collect();
        let query = a.take(d);
        let decoder = Block::new(&mut a, d, cfg.attention_heads, cfg.feedforward_dim);
        let head = Linear::new(&mut a, d, num_classes);
        Self {
            input_dim,
            hidden: d,
            max_frames: cfg.max_frames,
            proj,
            pos,
            encoder,
            query,
            decoder,
            head,
            num_params: a.len(),
        }
    }

    /// Xavier-uniform linear weights; positional rows and the class query
    /// start uniform in [0, 1).
    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params];
        if let Some(l) = &self.proj {
            l.init(&mut p, rng);
        }
        for v in self.pos.get_mut(&mut p) {
            *v = rng.gen::<f64>();
        }
        for b in &self.encoder {
            b.init(&mut p, rng);
        }
        for v in self.query.get_mut(&mut p) {
            *v = rng.gen::<f64>();
        }
        self.decoder.init(&mut p, rng);
        self.head.init(&mut p, rng);
        p
    }

    /// `x` must already be subsampled to at most `max_frames`.
    pub fn forward(&self, p: &[f64], x: &NormalizedSequence) -> (Vec<f64>, NetCache) {
        debug_assert_eq!(x.dim(), self.input_dim);
        let t = x.frames;
        debug_assert!(t <= self.max_frames);
        let mut h = match &self.proj {
            Some(l) => l.forward(p, &x.features, t),
            None => x.features.clone(),
        };
        for (hv, pv) in h.iter_mut().zip(&self.pos.get(p)[..t * self.hidden]) {
            *hv += pv;
        }
        let mut encoder = Vec::with_capacity(self.encoder.len());
        for b in &self.encoder {
            let (next, c) = b.forward(p, &h, t, None);
            encoder.push(c);
            h = next;
        }
        let (decoded, decoder) = self.decoder.forward(p, self.query.get(p), 1, Some((&h, t)));
        let logits = self.head.forward(p, &decoded, 1);
        let cache = NetCache {
            input: x.features.clone(),
            frames: t,
            encoder,
            decoder,
            decoded,
        };
        (logits, cache)
    }

    /// Accumulates `dL/dparams` into `g`.
    pub fn backward(&self, p: &[f64], g: &mut [f64], c: &NetCache, dlogits: &[f64]) {
        let t = c.frames;
        let ddec = self.head.backward(p, g, &c.decoded, dlogits, 1);
        let (dq, dmem) = self.decoder.backward(p, g, &c.decoder, &ddec, true);
        for (gv, d) in self.query.get_mut(g).iter_mut().zip(&dq) {
            *gv += d;
        }
        let mut dh = dmem.expect("cross-attention returns memory gradient");
        for (b, bc) in self.encoder.iter().zip(&c.encoder).rev() {
            dh = b.backward(p, g, bc, &dh, false).0;
        }
        for (gv, d) in self.pos.get_mut(g)[..t * self.hidden].iter_mut().zip(&dh) {
            *gv += d;
        }
        if let Some(l) = &self.proj {
            l.backward(p, g, &c.input, &dh, t);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ModelHeader {
    pub model_config: ModelConfig,
    pub landmark_subset: LandmarkSubset,
    pub num_classes: usize,
    pub catalog_fingerprint: String,
    pub history: Vec<EpochStats>,
}

/// Weights plus everything needed to use them: architecture, landmark
/// subset, the catalog they were trained against and the training history.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub(crate) header: ModelHeader,
    pub(crate) params: Vec<f64>,
    pub(crate) net: Network,
}

impl TrainedModel {
    pub(crate) fn from_parts(header: ModelHeader, params: Vec<f64>) -> Result<Self, RecognizerError> {
        header.model_config.validate()?;
        if header.num_classes == 0 {
            return Err(RecognizerError::Corrupt("model has zero classes".into()));
        }
        let net = Network::new(&header.model_config, 2 * header.landmark_subset.len(), header.num_classes);
        if net.num_params != params.len() {
            return Err(RecognizerError::Corrupt(format!(
                "expected {} parameters for this architecture, found {}",
                net.num_params,
                params.len()
            )));
        }
        Ok(Self { header, params, net })
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.header.model_config
    }

    pub fn landmark_subset(&self) -> &LandmarkSubset {
        &self.header.landmark_subset
    }

    pub fn num_classes(&self) -> usize {
        self.header.num_classes
    }

    pub fn catalog_fingerprint(&self) -> &str {
        &self.header.catalog_fingerprint
    }

    pub fn history(&self) -> &[EpochStats] {
        &self.header.history
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    /// Class distribution for `seq`, after checking that `catalog` is the
    /// one the model was trained against.
    pub fn predict(&self, catalog: &VocabularyCatalog, seq: &PoseSequence) -> Result<Distribution, RecognizerError> {
        let fp = catalog.fingerprint();
        if fp != self.header.catalog_fingerprint || catalog.len() != self.header.num_classes {
            return Err(RecognizerError::FingerprintMismatch {
                model: self.header.catalog_fingerprint.clone(),
                catalog: fp,
            });
        }
        self.probabilities(seq)
    }

    /// Like [`predict`](Self::predict) without the catalog check.
    pub fn probabilities(&self, seq: &PoseSequence) -> Result<Distribution, RecognizerError> {
        let x = normalize(seq, &self.header.landmark_subset)?.subsampled(self.net.max_frames);
        let (logits, _) = self.net.forward(&self.params, &x);
        Ok(Distribution::from_logits(&logits))
    }
}

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Largest per-parameter `|a - n| / max(|a|, |n|)` among parameters whose
    /// gradient magnitude is at least 1e-6.
    pub max_relative_error: f64,
    /// `||a - n|| / max(||a||, ||n||)` over all parameters.
    pub norm_relative_error: f64,
    pub parameters: usize,
}

/// Gradient check on a micro-model: 4 landmarks, 2 classes, hidden 8, one
/// encoder layer, 4 frames.
pub fn gradient_check(seed: u64) -> GradientCheck {
    let cfg = ModelConfig {
        hidden_dim: 8,
        encoder_layers: 1,
        attention_heads: 2,
        max_frames: 4,
        feedforward_dim: 8,
    };
    let net = Network::new(&cfg, 8, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = net.init(&mut rng);
    let features: Vec<f64> = (0..4 * 8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = NormalizedSequence {
        frames: 4,
        landmarks: 4,
        features,
        mask: vec![true; 16],
    };
    let label = 1;
    let loss = |p: &[f64]| cross_entropy(&net.forward(p, &x).0, label).0;

    let (logits, cache) = net.forward(&p, &x);
    let (_, dlogits) = cross_entropy(&logits, label);
    let mut analytic = vec![0.0; p.len()];
    net.backward(&p, &mut analytic, &cache, &dlogits);

    let h = 1e-5;
    let mut probe = p.clone();
    let (mut max_rel, mut diff_sq, mut a_sq, mut n_sq) = (0.0f64, 0.0, 0.0, 0.0);
    for i in 0..p.len() {
        probe[i] = p[i] + h;
        let up = loss(&probe);
        probe[i] = p[i] - h;
        let down = loss(&probe);
        probe[i] = p[i];
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i];
        let scale = a.abs().max(numeric.abs());
        if scale >= 1e-6 {
            max_rel = max_rel.max((a - numeric).abs() / scale);
        }
        diff_sq += (a - numeric) * (a - numeric);
        a_sq += a * a;
        n_sq += numeric * numeric;
    }
    GradientCheck {
        max_relative_error: max_rel,
        norm_relative_error: diff_sq.sqrt() / a_sq.sqrt().max(n_sq.sqrt()).max(f64::MIN_POSITIVE),
        parameters: p.len(),
    }
}
