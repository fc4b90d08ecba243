//! The grounding network: a small feature pyramid over the map raster, ROI
//! pooling at the query cell, a relation encoder and a sigmoid head.
//!
//! All weights live in one flat vector; [`Layout`] names the slices.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{bce_from_logit, silu_backward, silu_into, upsample_add, upsample_backward, Conv, Dense};
use super::LgnError;
use crate::math::{sigmoid, sqrt};
use crate::relation::Relation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgnConfig {
    pub in_channels: usize,
    /// Pyramid width F.
    pub features: usize,
    pub levels: usize,
    pub map_embed: usize,
    pub rel_embed: usize,
    pub hidden: usize,
    /// ROI window side k (odd).
    pub roi: usize,
    /// Use only the coarsest level instead of the pyramid.
    pub single_level: bool,
    /// Raster resolution in meters per cell.
    pub resolution: f64,
}

impl Default for LgnConfig {
    fn default() -> Self {
        Self {
            in_channels: crate::map::CHANNELS,
            features: 16,
            levels: 4,
            map_embed: 32,
            rel_embed: 16,
            hidden: 32,
            roi: 5,
            single_level: false,
            resolution: 1.0,
        }
    }
}

impl LgnConfig {
    /// Pyramid levels that feed the pooled feature vector.
    pub fn used_levels(&self) -> Vec<usize> {
        if self.single_level {
            vec![self.levels - 1]
        } else {
            (0..self.levels).collect()
        }
    }

    /// Grid sides must be divisible by this.
    pub fn alignment(&self) -> usize {
        1 << (self.levels - 1)
    }

    pub fn pooled_len(&self) -> usize {
        self.features * self.used_levels().len()
    }

    pub fn validate(&self) -> Result<(), LgnError> {
        let ok = self.in_channels > 0
            && self.features > 0
            && (1..=8).contains(&self.levels)
            && self.map_embed > 0
            && self.rel_embed > 0
            && self.hidden > 0
            && self.roi % 2 == 1
            && self.resolution > 0.0
            && self.resolution.is_finite();
        if ok {
            Ok(())
        } else {
            Err(LgnError::Config(format!("{self:?}")))
        }
    }

    fn stem(&self) -> Conv {
        Conv::new(self.in_channels, self.features, 3, 1)
    }

    fn down(&self) -> Conv {
        Conv::new(self.features, self.features, 3, 2)
    }

    fn lateral(&self) -> Conv {
        Conv::new(self.features, self.features, 1, 1)
    }

    fn smooth(&self) -> Conv {
        Conv::new(self.features, self.features, 3, 1)
    }

    fn map_dense(&self) -> Dense {
        Dense::new(self.pooled_len(), self.map_embed)
    }

    fn rel_dense(&self) -> Dense {
        Dense::new(Relation::COUNT, self.rel_embed)
    }

    fn head1(&self) -> Dense {
        Dense::new(self.map_embed + self.rel_embed, self.hidden)
    }

    fn head2(&self) -> Dense {
        Dense::new(self.hidden, 1)
    }
}

/// A contiguous range of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub off: usize,
    pub len: usize,
}

impl Slot {
    pub fn of<'a>(&self, v: &'a [f64]) -> &'a [f64] {
        &v[self.off..self.off + self.len]
    }

    pub fn of_mut<'a>(&self, v: &'a mut [f64]) -> &'a mut [f64] {
        &mut v[self.off..self.off + self.len]
    }
}

/// Weight and bias slots of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSlots {
    pub w: Slot,
    pub b: Slot,
    /// Fan-in used for initialization.
    pub fan_in: usize,
}

impl LayerSlots {
    /// Weight and bias gradient views; the bias slot follows the weights.
    pub fn grads<'a>(&self, g: &'a mut [f64]) -> (&'a mut [f64], &'a mut [f64]) {
        debug_assert_eq!(self.b.off, self.w.off + self.w.len);
        let (w, b) = g[self.w.off..self.b.off + self.b.len].split_at_mut(self.w.len);
        (w, b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub stem: LayerSlots,
    pub down: Vec<LayerSlots>,
    /// Indexed like [`LgnConfig::used_levels`].
    pub lateral: Vec<LayerSlots>,
    pub smooth: Vec<LayerSlots>,
    pub map: LayerSlots,
    pub rel: LayerSlots,
    pub head1: LayerSlots,
    pub head2: LayerSlots,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &LgnConfig) -> Self {
        let mut off = 0;
        let mut take = |w: usize, b: usize, fan_in: usize| {
            let s = LayerSlots { w: Slot { off, len: w }, b: Slot { off: off + w, len: b }, fan_in };
            off += w + b;
            s
        };
        let conv = |c: Conv| (c.weight_len(), c.cout, c.k * c.k * c.cin);
        let dense = |d: Dense| (d.weight_len(), d.outputs, d.inputs);
        let (w, b, fi) = conv(cfg.stem());
        let stem = take(w, b, fi);
        let down = (1..cfg.levels).map(|_| conv(cfg.down())).map(|(w, b, fi)| take(w, b, fi)).collect();
        let n = cfg.used_levels().len();
        let lateral = (0..n).map(|_| conv(cfg.lateral())).map(|(w, b, fi)| take(w, b, fi)).collect();
        let smooth = (0..n).map(|_| conv(cfg.smooth())).map(|(w, b, fi)| take(w, b, fi)).collect();
        let (w, b, fi) = dense(cfg.map_dense());
        let map = take(w, b, fi);
        let (w, b, _) = dense(cfg.rel_dense());
        // one-hot input: a single active unit per example
        let rel = take(w, b, 1);
        let (w, b, fi) = dense(cfg.head1());
        let head1 = take(w, b, fi);
        let (w, b, fi) = dense(cfg.head2());
        let head2 = take(w, b, fi);
        Layout { stem, down, lateral, smooth, map, rel, head1, head2, total: off }
    }

    /// Every layer with a readable name, in parameter order.
    pub fn named(&self) -> Vec<(String, LayerSlots)> {
        let mut out = vec![(String::from("stem"), self.stem)];
        out.extend(self.down.iter().enumerate().map(|(i, s)| (format!("down{}", i + 1), *s)));
        out.extend(self.lateral.iter().enumerate().map(|(i, s)| (format!("lateral{i}"), *s)));
        out.extend(self.smooth.iter().enumerate().map(|(i, s)| (format!("smooth{i}"), *s)));
        out.push(("map".into(), self.map));
        out.push(("relation".into(), self.rel));
        out.push(("head1".into(), self.head1));
        out.push(("head2".into(), self.head2));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LgnModel {
    pub config: LgnConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
}

/// Intermediate grids of one pyramid pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct PyramidCache {
    pub h: usize,
    pub w: usize,
    input: Vec<f64>,
    /// Bottom-up pre-activations and activations, one per level.
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    /// Top-down sums, indexed like `used_levels`.
    tops: Vec<Vec<f64>>,
    /// Smoothed output grids, indexed like `used_levels`.
    pub features: Vec<Vec<f64>>,
    used: Vec<usize>,
}

impl PyramidCache {
    pub fn level_dims(&self, level: usize) -> (usize, usize) {
        (self.h >> level, self.w >> level)
    }

    /// `(level, rows, cols)` of each output grid.
    pub fn shapes(&self) -> Vec<(usize, usize, usize)> {
        self.used.iter().map(|&l| (l, self.h >> l, self.w >> l)).collect()
    }
}

/// Activations of one query, kept for the backward pass.
#[derive(Debug, Clone)]
struct HeadCache {
    pooled: Vec<f64>,
    am: Vec<f64>,
    cat: Vec<f64>,
    a1: Vec<f64>,
    h1: Vec<f64>,
    z: f64,
}

/// One training target at a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellTarget {
    pub row: usize,
    pub col: usize,
    pub relation: Relation,
    /// Fraction of positive labels.
    pub target: f64,
    /// Number of labels aggregated into `target`.
    pub weight: f64,
}

impl LgnModel {
    pub fn zeros(config: LgnConfig) -> Result<Self, LgnError> {
        config.validate()?;
        let layout = Layout::new(&config);
        Ok(Self { params: vec![0.0; layout.total], layout, config })
    }

    /// Uniform initialization with variance `1 / fan_in`; zero biases.
    pub fn init<R: Rng + ?Sized>(config: LgnConfig, rng: &mut R) -> Result<Self, LgnError> {
        let mut m = Self::zeros(config)?;
        for (_, s) in m.layout.named() {
            let a = sqrt(3.0 / s.fan_in as f64);
            for v in s.w.of_mut(&mut m.params) {
                *v = rng.gen_range(-a..a);
            }
        }
        Ok(m)
    }

    pub fn from_params(config: LgnConfig, params: Vec<f64>) -> Result<Self, LgnError> {
        let mut m = Self::zeros(config)?;
        if params.len() != m.layout.total {
            return Err(LgnError::Architecture(format!("expected {} weights, got {}", m.layout.total, params.len())));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(LgnError::NonFinite("checkpoint weights".into()));
        }
        m.params = params;
        Ok(m)
    }

    fn p(&self, s: Slot) -> &[f64] {
        s.of(&self.params)
    }

    /// Bottom-up then top-down pass over an `h × w × in_channels` raster.
    pub fn build_pyramid(&self, input: &[f64], h: usize, w: usize) -> Result<PyramidCache, LgnError> {
        let cfg = &self.config;
        let a = cfg.alignment();
        if h == 0 || w == 0 || h % a != 0 || w % a != 0 || input.len() != h * w * cfg.in_channels {
            return Err(LgnError::Shape(format!(
                "raster {h}x{w}x{} with {} values; sides must be multiples of {a}",
                cfg.in_channels,
                input.len()
            )));
        }
        let f = cfg.features;
        let l = &self.layout;
        let mut pre = Vec::with_capacity(cfg.levels);
        let mut post = Vec::with_capacity(cfg.levels);
        let mut a0 = vec![0.0; h * w * f];
        cfg.stem().forward(input, h, w, self.p(l.stem.w), self.p(l.stem.b), &mut a0);
        let mut c0 = vec![0.0; a0.len()];
        silu_into(&a0, &mut c0);
        pre.push(a0);
        post.push(c0);
        for lvl in 1..cfg.levels {
            let (ph, pw) = (h >> (lvl - 1), w >> (lvl - 1));
            let s = &l.down[lvl - 1];
            let mut a = vec![0.0; (ph / 2) * (pw / 2) * f];
            cfg.down().forward(&post[lvl - 1], ph, pw, self.p(s.w), self.p(s.b), &mut a);
            let mut c = vec![0.0; a.len()];
            silu_into(&a, &mut c);
            pre.push(a);
            post.push(c);
        }

        let used = cfg.used_levels();
        let n = used.len();
        let mut tops: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut features: Vec<Vec<f64>> = vec![Vec::new(); n];
        for k in (0..n).rev() {
            let lvl = used[k];
            let (lh, lw) = (h >> lvl, w >> lvl);
            let mut t = vec![0.0; lh * lw * f];
            let s = &l.lateral[k];
            cfg.lateral().forward(&post[lvl], lh, lw, self.p(s.w), self.p(s.b), &mut t);
            if k + 1 < n {
                upsample_add(&tops[k + 1], lh / 2, lw / 2, f, &mut t);
            }
            let s = &l.smooth[k];
            let mut p = vec![0.0; t.len()];
            cfg.smooth().forward(&t, lh, lw, self.p(s.w), self.p(s.b), &mut p);
            tops[k] = t;
            features[k] = p;
        }
        Ok(PyramidCache { h, w, input: input.to_vec(), pre, post, tops, features, used })
    }

    /// Averages the zero-padded `k × k` window around `(row, col)` on each
    /// output level and concatenates the results.
    pub fn roi_pool(&self, cache: &PyramidCache, row: usize, col: usize) -> Result<Vec<f64>, LgnError> {
        if row >= cache.h || col >= cache.w {
            return Err(LgnError::OutsideGrid { row, col });
        }
        let f = self.config.features;
        let k = self.config.roi as isize;
        let norm = 1.0 / (k * k) as f64;
        let mut out = vec![0.0; f * cache.used.len()];
        for (i, &lvl) in cache.used.iter().enumerate() {
            let (lh, lw) = cache.level_dims(lvl);
            let (cr, cc) = ((row >> lvl) as isize, (col >> lvl) as isize);
            let dst = &mut out[i * f..(i + 1) * f];
            for r in cr - k / 2..=cr + k / 2 {
                for c in cc - k / 2..=cc + k / 2 {
                    if r < 0 || c < 0 || r >= lh as isize || c >= lw as isize {
                        continue;
                    }
                    let src = &cache.features[i][(r as usize * lw + c as usize) * f..][..f];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
            for d in dst.iter_mut() {
                *d *= norm;
            }
        }
        Ok(out)
    }

    /// Relation embedding; depends only on the relation and the weights.
    pub fn encode_relation(&self, r: Relation) -> Vec<f64> {
        let (pre, _) = self.relation_pre(r);
        let mut h = vec![0.0; pre.len()];
        silu_into(&pre, &mut h);
        h
    }

    fn relation_pre(&self, r: Relation) -> (Vec<f64>, [f64; Relation::COUNT]) {
        let d = self.config.rel_dense();
        let onehot = r.one_hot();
        let mut a = vec![0.0; d.outputs];
        d.forward(&onehot, self.p(self.layout.rel.w), self.p(self.layout.rel.b), &mut a);
        (a, onehot)
    }

    fn head_forward(&self, pooled: Vec<f64>, hr: &[f64]) -> HeadCache {
        let cfg = &self.config;
        let l = &self.layout;
        let mut am = vec![0.0; cfg.map_embed];
        cfg.map_dense().forward(&pooled, self.p(l.map.w), self.p(l.map.b), &mut am);
        let mut hm = vec![0.0; am.len()];
        silu_into(&am, &mut hm);
        let mut cat = hm;
        cat.extend_from_slice(hr);
        let mut a1 = vec![0.0; cfg.hidden];
        cfg.head1().forward(&cat, self.p(l.head1.w), self.p(l.head1.b), &mut a1);
        let mut h1 = vec![0.0; a1.len()];
        silu_into(&a1, &mut h1);
        let mut z = [0.0];
        cfg.head2().forward(&h1, self.p(l.head2.w), self.p(l.head2.b), &mut z);
        HeadCache { pooled, am, cat, a1, h1, z: z[0] }
    }

    /// Logit of p̂ at `(row, col)` for relation `r`.
    pub fn logit(&self, cache: &PyramidCache, row: usize, col: usize, r: Relation) -> Result<f64, LgnError> {
        let pooled = self.roi_pool(cache, row, col)?;
        Ok(self.head_forward(pooled, &self.encode_relation(r)).z)
    }

    pub fn predict_cell(&self, cache: &PyramidCache, row: usize, col: usize, r: Relation) -> Result<f64, LgnError> {
        Ok(sigmoid(self.logit(cache, row, col, r)?))
    }

    /// Adds the gradient of `Σ weight · NLL` over `targets` to `grad` and
    /// returns `(Σ weight · NLL, Σ weight)`.
    pub fn accumulate_gradient(
        &self,
        cache: &PyramidCache,
        targets: &[CellTarget],
        grad: &mut [f64],
    ) -> Result<(f64, f64), LgnError> {
        let cfg = &self.config;
        let l = &self.layout;
        let f = cfg.features;
        let k = cfg.roi as isize;
        let norm = 1.0 / (k * k) as f64;
        let rel_pre: Vec<Vec<f64>> = Relation::ALL.iter().map(|&r| self.relation_pre(r).0).collect();
        let rel_h: Vec<Vec<f64>> = rel_pre
            .iter()
            .map(|a| {
                let mut h = vec![0.0; a.len()];
                silu_into(a, &mut h);
                h
            })
            .collect();
        let mut d_rel = vec![vec![0.0; cfg.rel_embed]; Relation::COUNT];
        let mut d_feat: Vec<Vec<f64>> = cache.features.iter().map(|v| vec![0.0; v.len()]).collect();
        let mut loss = 0.0;
        let mut weight = 0.0;

        for t in targets {
            let pooled = self.roi_pool(cache, t.row, t.col)?;
            let hc = self.head_forward(pooled, &rel_h[t.relation.index()]);
            loss += t.weight * bce_from_logit(hc.z, t.target);
            weight += t.weight;
            let dz = t.weight * (sigmoid(hc.z) - t.target);

            let mut dh1 = vec![0.0; cfg.hidden];
            let (gw, gb) = l.head2.grads(grad);
            cfg.head2().backward(&hc.h1, self.p(l.head2.w), &[dz], Some(&mut dh1), gw, gb);
            silu_backward(&hc.a1, &mut dh1);
            let mut dcat = vec![0.0; hc.cat.len()];
            let (gw, gb) = l.head1.grads(grad);
            cfg.head1().backward(&hc.cat, self.p(l.head1.w), &dh1, Some(&mut dcat), gw, gb);
            let (dhm, dhr) = dcat.split_at_mut(cfg.map_embed);
            silu_backward(&hc.am, dhm);
            silu_backward(&rel_pre[t.relation.index()], dhr);
            for (a, b) in d_rel[t.relation.index()].iter_mut().zip(dhr.iter()) {
                *a += b;
            }
            let mut dpooled = vec![0.0; hc.pooled.len()];
            let (gw, gb) = l.map.grads(grad);
            cfg.map_dense().backward(&hc.pooled, self.p(l.map.w), dhm, Some(&mut dpooled), gw, gb);

            for (i, &lvl) in cache.used.iter().enumerate() {
                let (lh, lw) = cache.level_dims(lvl);
                let (cr, cc) = ((t.row >> lvl) as isize, (t.col >> lvl) as isize);
                let src = &dpooled[i * f..(i + 1) * f];
                for r in cr - k / 2..=cr + k / 2 {
                    for c in cc - k / 2..=cc + k / 2 {
                        if r < 0 || c < 0 || r >= lh as isize || c >= lw as isize {
                            continue;
                        }
                        let dst = &mut d_feat[i][(r as usize * lw + c as usize) * f..][..f];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += s * norm;
                        }
                    }
                }
            }
        }

        for r in Relation::ALL {
            let d = &d_rel[r.index()];
            if d.iter().all(|v| *v == 0.0) {
                continue;
            }
            let (gw, gb) = l.rel.grads(grad);
            cfg.rel_dense().backward(&r.one_hot(), self.p(l.rel.w), d, None, gw, gb);
        }

        // top-down pathway, finest level first so each level's gradient is
        // complete before it flows into the coarser one
        let n = cache.used.len();
        let mut d_post: Vec<Vec<f64>> = cache.post.iter().map(|v| vec![0.0; v.len()]).collect();
        let mut d_top_carry: Option<Vec<f64>> = None;
        for i in 0..n {
            let lvl = cache.used[i];
            let (lh, lw) = cache.level_dims(lvl);
            let mut dt = vec![0.0; cache.tops[i].len()];
            let s = &l.smooth[i];
            let (gw, gb) = s.grads(grad);
            cfg.smooth().backward(&cache.tops[i], lh, lw, self.p(s.w), &d_feat[i], Some(&mut dt), gw, gb);
            if let Some(carry) = d_top_carry.take() {
                upsample_backward(&carry, lh, lw, f, &mut dt);
            }
            let s = &l.lateral[i];
            let (gw, gb) = s.grads(grad);
            cfg.lateral().backward(&cache.post[lvl], lh, lw, self.p(s.w), &dt, Some(&mut d_post[lvl]), gw, gb);
            d_top_carry = Some(dt);
        }

        // bottom-up pathway, coarsest first
        for lvl in (0..cfg.levels).rev() {
            let mut da = core::mem::take(&mut d_post[lvl]);
            silu_backward(&cache.pre[lvl], &mut da);
            if lvl == 0 {
                let s = &l.stem;
                let (gw, gb) = s.grads(grad);
                cfg.stem().backward(&cache.input, cache.h, cache.w, self.p(s.w), &da, None, gw, gb);
            } else {
                let (ph, pw) = cache.level_dims(lvl - 1);
                let s = &l.down[lvl - 1];
                let mut below = core::mem::take(&mut d_post[lvl - 1]);
                let (gw, gb) = s.grads(grad);
                cfg.down().backward(&cache.post[lvl - 1], ph, pw, self.p(s.w), &da, Some(&mut below), gw, gb);
                d_post[lvl - 1] = below;
            }
        }

        if !loss.is_finite() {
            return Err(LgnError::NonFinite(format!("loss {loss}")));
        }
        Ok((loss, weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn tiny() -> LgnConfig {
        LgnConfig { features: 2, map_embed: 3, rel_embed: 2, hidden: 3, ..LgnConfig::default() }
    }

    #[test]
    fn pyramid_level_sizes() {
        let m = LgnModel::init(LgnConfig::default(), &mut seeded(1, 0)).unwrap();
        let input = vec![0.1; 64 * 64 * 5];
        let c = m.build_pyramid(&input, 64, 64).unwrap();
        let shapes: Vec<_> = c.shapes().iter().map(|s| (s.1, s.2)).collect();
        assert_eq!(shapes, vec![(64, 64), (32, 32), (16, 16), (8, 8)]);
        let single = LgnModel::init(LgnConfig { single_level: true, ..LgnConfig::default() }, &mut seeded(1, 0)).unwrap();
        let c = single.build_pyramid(&input, 64, 64).unwrap();
        assert_eq!(c.shapes(), vec![(3, 8, 8)]);
        assert!(matches!(m.build_pyramid(&input[..100], 10, 10), Err(LgnError::Shape(_))));
    }

    #[test]
    fn zero_input_and_zero_bias_give_zero_pyramid() {
        let mut m = LgnModel::init(tiny(), &mut seeded(2, 0)).unwrap();
        for (_, s) in m.layout.named() {
            s.b.of_mut(&mut m.params).fill(0.0);
        }
        let c = m.build_pyramid(&vec![0.0; 16 * 16 * 5], 16, 16).unwrap();
        assert!(c.features.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_model_predicts_one_half() {
        let m = LgnModel::zeros(LgnConfig::default()).unwrap();
        let c = m.build_pyramid(&vec![0.3; 32 * 32 * 5], 32, 32).unwrap();
        assert_eq!(m.predict_cell(&c, 5, 7, Relation::Near).unwrap(), 0.5);
        assert!(m.encode_relation(Relation::Near).iter().all(|v| *v == 0.0));
        assert!(matches!(m.predict_cell(&c, 32, 0, Relation::Near), Err(LgnError::OutsideGrid { .. })));
    }

    /// Zero-padded pooling against an explicitly padded copy of each level.
    #[test]
    fn corner_pooling_matches_padded_oracle() {
        let m = LgnModel::init(tiny(), &mut seeded(3, 0)).unwrap();
        let input: Vec<f64> = (0..16 * 16 * 5).map(|i| libm::sin(i as f64)).collect();
        let c = m.build_pyramid(&input, 16, 16).unwrap();
        let k = 5usize;
        let pad = k / 2;
        for (row, col) in [(0, 0), (15, 15), (0, 15), (7, 3)] {
            let pooled = m.roi_pool(&c, row, col).unwrap();
            for (i, &(lvl, lh, lw)) in c.shapes().iter().enumerate() {
                let (ph, pw) = (lh + 2 * pad, lw + 2 * pad);
                let mut padded = vec![0.0; ph * pw * 2];
                for r in 0..lh {
                    for cc in 0..lw {
                        for ch in 0..2 {
                            padded[((r + pad) * pw + cc + pad) * 2 + ch] = c.features[i][(r * lw + cc) * 2 + ch];
                        }
                    }
                }
                let (pr, pc) = ((row >> lvl) + pad, (col >> lvl) + pad);
                for ch in 0..2 {
                    let mut s = 0.0;
                    for r in pr - pad..=pr + pad {
                        for cc in pc - pad..=pc + pad {
                            s += padded[(r * pw + cc) * 2 + ch];
                        }
                    }
                    assert!((pooled[i * 2 + ch] - s / 25.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constant_pyramid_pools_to_the_constant() {
        let m = LgnModel::zeros(tiny()).unwrap();
        let mut c = m.build_pyramid(&vec![0.0; 16 * 16 * 5], 16, 16).unwrap();
        for lvl in c.features.iter_mut() {
            lvl.fill(0.25);
        }
        // the window around the center cell at level 0 lies inside the grid
        let p = m.roi_pool(&c, 8, 8).unwrap();
        assert!(p[..2].iter().all(|v| (*v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn far_apart_queries_see_disjoint_coarse_windows() {
        let m = LgnModel::zeros(LgnConfig { features: 1, ..tiny() }).unwrap();
        let mut c = m.build_pyramid(&vec![0.0; 128 * 128 * 5], 128, 128).unwrap();
        for lvl in c.features.iter_mut() {
            lvl.fill(0.0);
        }
        let top = c.features.len() - 1;
        // one hot cell at the coarsest level, (1, 1) in 16x16
        c.features[top][16 + 1] = 1.0;
        let a = m.roi_pool(&c, 8, 8).unwrap()[top];
        let b = m.roi_pool(&c, 8 + 5 * 8, 8 + 5 * 8).unwrap()[top];
        assert!(a != 0.0);
        assert_eq!(b, 0.0);
    }
}
