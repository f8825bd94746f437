//! Dense layers with hand-written backward passes.
//!
//! All parameters of a network live in one flat `Vec<f64>`; a layer only
//! holds [`Slot`]s into it. Gradients use a buffer with the same layout, so
//! the optimizer, serialization and determinism checks all work on flat
//! slices. Activations are row-major `rows x dim` matrices.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct Slot {
    off: usize,
    len: usize,
}

impl Slot {
    pub fn get<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.off..self.off + self.len]
    }

    pub fn get_mut<'a>(&self, p: &'a mut [f64]) -> &'a mut [f64] {
        &mut p[self.off..self.off + self.len]
    }
}

#[derive(Debug, Default)]
pub(crate) struct Alloc {
    len: usize,
}

impl Alloc {
    pub fn take(&mut self, n: usize) -> Slot {
        let s = Slot { off: self.len, len: n };
        self.len += n;
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }
}

/// `c (+)= a[m x k] * b[k x n]`
pub(crate) fn matmul(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize, acc: bool) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if !acc {
        c[..m * n].fill(0.0);
    }
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for (kk, &aik) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
}

/// `c (+)= a[m x k] * b[n x k]^T`
pub(crate) fn matmul_nt(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize, acc: bool) {
    debug_assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let dot: f64 = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
            if acc {
                c[i * n + j] += dot;
            } else {
                c[i * n + j] = dot;
            }
        }
    }
}

/// `c (+)= a[k x m]^T * b[k x n]`
pub(crate) fn matmul_tn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize, acc: bool) {
    debug_assert!(a.len() >= k * m && b.len() >= k * n && c.len() >= m * n);
    if !acc {
        c[..m * n].fill(0.0);
    }
    for kk in 0..k {
        let brow = &b[kk * n..(kk + 1) * n];
        for (i, &aki) in a[kk * m..(kk + 1) * m].iter().enumerate() {
            if aki == 0.0 {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aki * bv;
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct Linear {
    pub w: Slot,
    pub b: Slot,
    pub din: usize,
    pub dout: usize,
}

impl Linear {
    pub fn new(alloc: &mut Alloc, din: usize, dout: usize) -> Self {
        Self {
            w: alloc.take(din * dout),
            b: alloc.take(dout),
            din,
            dout,
        }
    }

    pub fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        let bound = (6.0 / (self.din + self.dout) as f64).sqrt();
        for w in self.w.get_mut(p) {
            *w = rng.gen_range(-bound..bound);
        }
        self.b.get_mut(p).fill(0.0);
    }

    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; rows * self.dout];
        matmul(x, self.w.get(p), &mut y, rows, self.din, self.dout, false);
        let b = self.b.get(p);
        for row in y.chunks_exact_mut(self.dout) {
            add_into(row, b);
        }
        y
    }

    /// Accumulates parameter gradients into `g` and returns `dL/dx`.
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], rows: usize) -> Vec<f64> {
        matmul_tn(x, dy, self.w.get_mut(g), self.din, rows, self.dout, true);
        let gb = self.b.get_mut(g);
        for row in dy.chunks_exact(self.dout) {
            add_into(gb, row);
        }
        let mut dx = vec![0.0; rows * self.din];
        matmul_nt(dy, self.w.get(p), &mut dx, rows, self.dout, self.din, false);
        dx
    }
}

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct LayerNorm {
    pub gamma: Slot,
    pub beta: Slot,
    pub dim: usize,
}

pub(crate) struct LayerNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(alloc: &mut Alloc, dim: usize) -> Self {
        Self {
            gamma: alloc.take(dim),
            beta: alloc.take(dim),
            dim,
        }
    }

    pub fn init(&self, p: &mut [f64]) {
        self.gamma.get_mut(p).fill(1.0);
        self.beta.get_mut(p).fill(0.0);
    }

    pub fn forward(&self, p: &[f64], x: &[f64]) -> (Vec<f64>, LayerNormCache) {
        let d = self.dim;
        let (gamma, beta) = (self.gamma.get(p), self.beta.get(p));
        let rows = x.len() / d;
        let mut y = vec![0.0; x.len()];
        let mut xhat = vec![0.0; x.len()];
        let mut inv_std = Vec::with_capacity(rows);
        for r in 0..rows {
            let xr = &x[r * d..(r + 1) * d];
            let mean = xr.iter().sum::<f64>() / d as f64;
            let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std.push(is);
            for j in 0..d {
                let h = (xr[j] - mean) * is;
                xhat[r * d + j] = h;
                y[r * d + j] = gamma[j] * h + beta[j];
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], cache: &LayerNormCache, dy: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let gamma = self.gamma.get(p);
        let mut dx = vec![0.0; dy.len()];
        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        let mut dxhat = vec![0.0; d];
        for (r, &is) in cache.inv_std.iter().enumerate() {
            let xh = &cache.xhat[r * d..(r + 1) * d];
            let dyr = &dy[r * d..(r + 1) * d];
            for j in 0..d {
                dgamma[j] += dyr[j] * xh[j];
                dbeta[j] += dyr[j];
                dxhat[j] = dyr[j] * gamma[j];
            }
            let sum: f64 = dxhat.iter().sum();
            let dot: f64 = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum();
            for j in 0..d {
                dx[r * d + j] = is / d as f64 * (d as f64 * dxhat[j] - sum - xh[j] * dot);
            }
        }
        add_into(self.gamma.get_mut(g), &dgamma);
        add_into(self.beta.get_mut(g), &dbeta);
        dx
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct Attention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
    pub dim: usize,
}

pub(crate) struct AttentionCache {
    xq: Vec<f64>,
    xkv: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `heads x tq x tk` softmax weights
    attn: Vec<f64>,
    concat: Vec<f64>,
    tq: usize,
    tk: usize,
}

fn head_cols(m: &[f64], rows: usize, dim: usize, h: usize, dh: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * dh);
    for r in 0..rows {
        out.extend_from_slice(&m[r * dim + h * dh..r * dim + (h + 1) * dh]);
    }
    out
}

fn scatter_head(dst: &mut [f64], src: &[f64], rows: usize, dim: usize, h: usize, dh: usize) {
    for r in 0..rows {
        dst[r * dim + h * dh..r * dim + (h + 1) * dh].copy_from_slice(&src[r * dh..(r + 1) * dh]);
    }
}

impl Attention {
    pub fn new(alloc: &mut Alloc, dim: usize, heads: usize) -> Self {
        Self {
            q: Linear::new(alloc, dim, dim),
            k: Linear::new(alloc, dim, dim),
            v: Linear::new(alloc, dim, dim),
            o: Linear::new(alloc, dim, dim),
            heads,
            dim,
        }
    }

    pub fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        for l in [&self.q, &self.k, &self.v, &self.o] {
            l.init(p, rng);
        }
    }

    pub fn forward(&self, p: &[f64], xq: &[f64], tq: usize, xkv: &[f64], tk: usize) -> (Vec<f64>, AttentionCache) {
        let (d, nh) = (self.dim, self.heads);
        let dh = d / nh;
        let scale = 1.0 / (dh as f64).sqrt();
        let q = self.q.forward(p, xq, tq);
        let k = self.k.forward(p, xkv, tk);
        let v = self.v.forward(p, xkv, tk);
        let mut attn = vec![0.0; nh * tq * tk];
        let mut concat = vec![0.0; tq * d];
        let mut oh = vec![0.0; tq * dh];
        for h in 0..nh {
            let qh = head_cols(&q, tq, d, h, dh);
            let kh = head_cols(&k, tk, d, h, dh);
            let vh = head_cols(&v, tk, d, h, dh);
            let a = &mut attn[h * tq * tk..(h + 1) * tq * tk];
            matmul_nt(&qh, &kh, a, tq, dh, tk, false);
            for row in a.chunks_exact_mut(tk) {
                let mut mx = f64::NEG_INFINITY;
                for s in row.iter_mut() {
                    *s *= scale;
                    mx = mx.max(*s);
                }
                let mut z = 0.0;
                for s in row.iter_mut() {
                    *s = (*s - mx).exp();
                    z += *s;
                }
                for s in row.iter_mut() {
                    *s /= z;
                }
            }
            matmul(a, &vh, &mut oh, tq, tk, dh, false);
            scatter_head(&mut concat, &oh, tq, d, h, dh);
        }
        let out = self.o.forward(p, &concat, tq);
        let cache = AttentionCache {
            xq: xq.to_vec(),
            xkv: xkv.to_vec(),
            q,
            k,
            v,
            attn,
            concat,
            tq,
            tk,
        };
        (out, cache)
    }

    /// Returns `(dL/dxq, dL/dxkv)`.
    pub fn backward(&self, p: &[f64], g: &mut [f64], c: &AttentionCache, dout: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (d, nh, tq, tk) = (self.dim, self.heads, c.tq, c.tk);
        let dh = d / nh;
        let scale = 1.0 / (dh as f64).sqrt();
        let dconcat = self.o.backward(p, g, &c.concat, dout, tq);
        let mut dq = vec![0.0; tq * d];
        let mut dk = vec![0.0; tk * d];
        let mut dv = vec![0.0; tk * d];
        let mut da = vec![0.0; tq * tk];
        let mut dvh = vec![0.0; tk * dh];
        let mut dqh = vec![0.0; tq * dh];
        let mut dkh = vec![0.0; tk * dh];
        for h in 0..nh {
            let a = &c.attn[h * tq * tk..(h + 1) * tq * tk];
            let doh = head_cols(&dconcat, tq, d, h, dh);
            let qh = head_cols(&c.q, tq, d, h, dh);
            let kh = head_cols(&c.k, tk, d, h, dh);
            let vh = head_cols(&c.v, tk, d, h, dh);
            matmul_nt(&doh, &vh, &mut da, tq, dh, tk, false);
            matmul_tn(a, &doh, &mut dvh, tk, tq, dh, false);
            for (arow, drow) in a.chunks_exact(tk).zip(da.chunks_exact_mut(tk)) {
                let dot: f64 = arow.iter().zip(drow.iter()).map(|(x, y)| x * y).sum();
                for (dv_, &av) in drow.iter_mut().zip(arow) {
                    *dv_ = av * (*dv_ - dot) * scale;
                }
            }
            matmul(&da, &kh, &mut dqh, tq, tk, dh, false);
            matmul_tn(&da, &qh, &mut dkh, tk, tq, dh, false);
            scatter_head(&mut dq, &dqh, tq, d, h, dh);
            scatter_head(&mut dk, &dkh, tk, d, h, dh);
            scatter_head(&mut dv, &dvh, tk, d, h, dh);
        }
        let dxq = self.q.backward(p, g, &c.xq, &dq, tq);
        let mut dxkv = self.k.backward(p, g, &c.xkv, &dk, tk);
        add_into(&mut dxkv, &self.v.backward(p, g, &c.xkv, &dv, tk));
        (dxq, dxkv)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct FeedForward {
    pub l1: Linear,
    pub l2: Linear,
}

pub(crate) struct FeedForwardCache {
    x: Vec<f64>,
    hidden: Vec<f64>,
    rows: usize,
}

impl FeedForward {
    pub fn new(alloc: &mut Alloc, dim: usize, hidden: usize) -> Self {
        Self {
            l1: Linear::new(alloc, dim, hidden),
            l2: Linear::new(alloc, hidden, dim),
        }
    }

    pub fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        self.l1.init(p, rng);
        self.l2.init(p, rng);
    }

    pub fn forward(&self, p: &[f64], x: &[f64], rows: usize) -> (Vec<f64>, FeedForwardCache) {
        let mut hidden = self.l1.forward(p, x, rows);
        for v in hidden.iter_mut() {
            *v = v.max(0.0);
        }
        let y = self.l2.forward(p, &hidden, rows);
        (y, FeedForwardCache { x: x.to_vec(), hidden, rows })
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], c: &FeedForwardCache, dy: &[f64]) -> Vec<f64> {
        let mut dh = self.l2.backward(p, g, &c.hidden, dy, c.rows);
        for (d, &h) in dh.iter_mut().zip(&c.hidden) {
            if h <= 0.0 {
                *d = 0.0;
            }
        }
        self.l1.backward(p, g, &c.x, &dh, c.rows)
    }
}

/// Post-norm transformer block. With `cross = true` the queries attend to a
/// separate memory instead of themselves.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub(crate) struct Block {
    pub attn: Attention,
    pub ln1: LayerNorm,
    pub ff: FeedForward,
    pub ln2: LayerNorm,
}

pub(crate) struct BlockCache {
    attn: AttentionCache,
    ln1: LayerNormCache,
    ff: FeedForwardCache,
    ln2: LayerNormCache,
}

impl Block {
    pub fn new(alloc: &mut Alloc, dim: usize, heads: usize, ff_dim: usize) -> Self {
        Self {
            attn: Attention::new(alloc, dim, heads),
            ln1: LayerNorm::new(alloc, dim),
            ff: FeedForward::new(alloc, dim, ff_dim),
            ln2: LayerNorm::new(alloc, dim),
        }
    }

    pub fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        self.attn.init(p, rng);
        self.ln1.init(p);
        self.ff.init(p, rng);
        self.ln2.init(p);
    }

    /// `x` has `tq` rows; `memory` (if any) has `tk` rows.
    pub fn forward(&self, p: &[f64], x: &[f64], tq: usize, memory: Option<(&[f64], usize)>) -> (Vec<f64>, BlockCache) {
        let (kv, tk) = memory.unwrap_or((x, tq));
        let (mut a, attn) = self.attn.forward(p, x, tq, kv, tk);
        add_into(&mut a, x);
        let (x1, ln1) = self.ln1.forward(p, &a);
        let (mut f, ff) = self.ff.forward(p, &x1, tq);
        add_into(&mut f, &x1);
        let (x2, ln2) = self.ln2.forward(p, &f);
        (x2, BlockCache { attn, ln1, ff, ln2 })
    }

    /// Returns `(dL/dx, dL/dmemory)`; the second is `None` for self-attention,
    /// where it is already folded into the first.
    pub fn backward(&self, p: &[f64], g: &mut [f64], c: &BlockCache, dy: &[f64], cross: bool) -> (Vec<f64>, Option<Vec<f64>>) {
        let dr2 = self.ln2.backward(p, g, &c.ln2, dy);
        let mut dx1 = self.ff.backward(p, g, &c.ff, &dr2);
        add_into(&mut dx1, &dr2);
        let dr1 = self.ln1.backward(p, g, &c.ln1, &dx1);
        let (mut dxq, dkv) = self.attn.backward(p, g, &c.attn, &dr1);
        add_into(&mut dxq, &dr1);
        if cross {
            (dxq, Some(dkv))
        } else {
            add_into(&mut dxq, &dkv);
            (dxq, None)
        }
    }
}
