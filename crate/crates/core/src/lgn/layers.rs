//! Forward and backward kernels on height-width-channel buffers.

use crate::math::{exp, sigmoid};

/// A 2-D convolution with square kernel, zero padding `k / 2` and weights
/// laid out `[ky][kx][cin][cout]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
}

impl Conv {
    pub const fn new(cin: usize, cout: usize, k: usize, stride: usize) -> Self {
        Self { cin, cout, k, stride }
    }

    pub fn weight_len(&self) -> usize {
        self.k * self.k * self.cin * self.cout
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (h / self.stride, w / self.stride)
    }

    /// Input pixel feeding output `(oy, ox)` through kernel tap `(ky, kx)`.
    #[inline]
    fn tap(&self, oy: usize, ox: usize, ky: usize, kx: usize, h: usize, w: usize) -> Option<(usize, usize)> {
        let pad = self.k / 2;
        let iy = (oy * self.stride + ky).checked_sub(pad)?;
        let ix = (ox * self.stride + kx).checked_sub(pad)?;
        (iy < h && ix < w).then_some((iy, ix))
    }

    pub fn forward(&self, x: &[f64], h: usize, w: usize, wt: &[f64], b: &[f64], out: &mut [f64]) {
        let (oh, ow) = self.out_dims(h, w);
        let (cin, cout) = (self.cin, self.cout);
        debug_assert_eq!(x.len(), h * w * cin);
        debug_assert_eq!(out.len(), oh * ow * cout);
        for oy in 0..oh {
            for ox in 0..ow {
                let o = &mut out[(oy * ow + ox) * cout..][..cout];
                o.copy_from_slice(b);
                for ky in 0..self.k {
                    for kx in 0..self.k {
                        let Some((iy, ix)) = self.tap(oy, ox, ky, kx, h, w) else { continue };
                        let xin = &x[(iy * w + ix) * cin..][..cin];
                        let wk = &wt[(ky * self.k + kx) * cin * cout..][..cin * cout];
                        for (ci, &xv) in xin.iter().enumerate() {
                            if xv == 0.0 {
                                continue;
                            }
                            let wrow = &wk[ci * cout..][..cout];
                            for (ov, wv) in o.iter_mut().zip(wrow) {
                                *ov += xv * wv;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accumulates weight and bias gradients, and the input gradient when
    /// `dx` is given.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        x: &[f64],
        h: usize,
        w: usize,
        wt: &[f64],
        dout: &[f64],
        mut dx: Option<&mut [f64]>,
        dw: &mut [f64],
        db: &mut [f64],
    ) {
        let (oh, ow) = self.out_dims(h, w);
        let (cin, cout) = (self.cin, self.cout);
        for oy in 0..oh {
            for ox in 0..ow {
                let g = &dout[(oy * ow + ox) * cout..][..cout];
                if g.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for (d, v) in db.iter_mut().zip(g) {
                    *d += v;
                }
                for ky in 0..self.k {
                    for kx in 0..self.k {
                        let Some((iy, ix)) = self.tap(oy, ox, ky, kx, h, w) else { continue };
                        let base = (ky * self.k + kx) * cin * cout;
                        let xin = &x[(iy * w + ix) * cin..][..cin];
                        for (ci, &xv) in xin.iter().enumerate() {
                            let off = base + ci * cout;
                            if xv != 0.0 {
                                for (d, gv) in dw[off..off + cout].iter_mut().zip(g) {
                                    *d += xv * gv;
                                }
                            }
                            if let Some(dx) = dx.as_deref_mut() {
                                let s: f64 = wt[off..off + cout].iter().zip(g).map(|(a, b)| a * b).sum();
                                dx[(iy * w + ix) * cin + ci] += s;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Fully connected layer, weights `[out][in]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub const fn new(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs }
    }

    pub fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn forward(&self, x: &[f64], wt: &[f64], b: &[f64], out: &mut [f64]) {
        for o in 0..self.outputs {
            let row = &wt[o * self.inputs..][..self.inputs];
            out[o] = b[o] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn backward(&self, x: &[f64], wt: &[f64], dy: &[f64], dx: Option<&mut [f64]>, dw: &mut [f64], db: &mut [f64]) {
        for o in 0..self.outputs {
            db[o] += dy[o];
            let row = &mut dw[o * self.inputs..][..self.inputs];
            for (d, xv) in row.iter_mut().zip(x) {
                *d += dy[o] * xv;
            }
        }
        if let Some(dx) = dx {
            for o in 0..self.outputs {
                let row = &wt[o * self.inputs..][..self.inputs];
                for (d, wv) in dx.iter_mut().zip(row) {
                    *d += dy[o] * wv;
                }
            }
        }
    }
}

#[inline]
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

pub fn silu_into(a: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(a) {
        *o = silu(v);
    }
}

/// `dy ← dy · silu'(a)` elementwise.
pub fn silu_backward(a: &[f64], dy: &mut [f64]) {
    for (d, &v) in dy.iter_mut().zip(a) {
        *d *= silu_grad(v);
    }
}

/// Nearest-neighbour 2× upsampling of `src` (h × w × c) added into `dst`
/// (2h × 2w × c).
pub fn upsample_add(src: &[f64], h: usize, w: usize, c: usize, dst: &mut [f64]) {
    let w2 = 2 * w;
    for y in 0..2 * h {
        for x in 0..w2 {
            let s = &src[((y / 2) * w + x / 2) * c..][..c];
            let d = &mut dst[(y * w2 + x) * c..][..c];
            for (dv, sv) in d.iter_mut().zip(s) {
                *dv += sv;
            }
        }
    }
}

/// Adjoint of [`upsample_add`]: sums each 2×2 block of `d` (2h × 2w × c)
/// into `out` (h × w × c).
pub fn upsample_backward(d: &[f64], h: usize, w: usize, c: usize, out: &mut [f64]) {
    let w2 = 2 * w;
    for y in 0..2 * h {
        for x in 0..w2 {
            let s = &d[(y * w2 + x) * c..][..c];
            let o = &mut out[((y / 2) * w + x / 2) * c..][..c];
            for (ov, sv) in o.iter_mut().zip(s) {
                *ov += sv;
            }
        }
    }
}

/// `−[y ln p + (1 − y) ln(1 − p)]` from the logit, stable for large |z|.
pub fn bce_from_logit(z: f64, y: f64) -> f64 {
    // ln(1 + e^z) − y z
    let softplus = if z > 0.0 { z + libm::log1p(exp(-z)) } else { libm::log1p(exp(z)) };
    softplus - y * z
}
