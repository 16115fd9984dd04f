//! Differentiable tensor operations.
//!
//! Each operation computes its value eagerly, then — if any input is
//! tracked — attaches a node whose closure turns the output gradient into
//! parent gradients. Masks (for softmax, dropout and anchor selection) are
//! always treated as data: gradients flow to the masked operand only.

use std::rc::Rc;

use super::{pick_tape, Tensor};
use crate::error::{Error, Result};
use crate::num::Real;

fn shape_mismatch<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Error {
    Error::ShapeMismatch {
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

/// `C = A · B` for `[m, k] · [k, n]`.
pub fn matmul<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.cols() != b.rows() {
        return Err(shape_mismatch(a, b));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let out = Tensor::new([m, n], matmul_raw(a.data(), b.data(), m, k, n));
    let Some(tape) = pick_tape(&[a, b]) else {
        return Ok(out);
    };
    let (av, bv) = (a.data_rc(), b.data_rc());
    let (pa, pb) = (a.node_id(), b.node_id());
    let parents: Vec<usize> = [pa, pb].into_iter().flatten().collect();
    let back = move |g: &[T]| {
        let mut outs = Vec::new();
        if pa.is_some() {
            outs.push(matmul_nt(g, &bv, m, n, k)); // dA = G · Bᵀ
        }
        if pb.is_some() {
            outs.push(matmul_tn(&av, g, m, k, n)); // dB = Aᵀ · G
        }
        outs
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// `A[m,k] · B[k,n]`, row-major.
fn matmul_raw<T: Real>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for (kk, &aik) in a[i * k..(i + 1) * k].iter().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += aik * bv;
            }
        }
    }
    c
}

/// `A[m,n] · (B[k,n])ᵀ` — rows of `a` dotted with rows of `b`.
fn matmul_nt<T: Real>(a: &[T], b: &[T], m: usize, n: usize, k: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * k];
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for j in 0..k {
            let brow = &b[j * n..(j + 1) * n];
            let mut acc = T::zero();
            for (&x, &y) in arow.iter().zip(brow) {
                acc += x * y;
            }
            c[i * k + j] = acc;
        }
    }
    c
}

/// `(A[m,k])ᵀ · G[m,n]`.
fn matmul_tn<T: Real>(a: &[T], g: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); k * n];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for (j, &aij) in a[i * k..(i + 1) * k].iter().enumerate() {
            let crow = &mut c[j * n..(j + 1) * n];
            for (cv, &gv) in crow.iter_mut().zip(grow) {
                *cv += aij * gv;
            }
        }
    }
    c
}

/// Elementwise sum; `b` may also be a `[1, n]` row broadcast over `a`'s rows.
pub fn add<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let [m, n] = a.shape();
    let broadcast = b.shape() == [1, n] && m != 1;
    if !broadcast && a.shape() != b.shape() {
        return Err(shape_mismatch(a, b));
    }
    let mut data = a.data().to_vec();
    if broadcast {
        for i in 0..m {
            for (v, &bv) in data[i * n..(i + 1) * n].iter_mut().zip(b.data()) {
                *v += bv;
            }
        }
    } else {
        for (v, &bv) in data.iter_mut().zip(b.data()) {
            *v += bv;
        }
    }
    let out = Tensor::new([m, n], data);
    let Some(tape) = pick_tape(&[a, b]) else {
        return Ok(out);
    };
    let (pa, pb) = (a.node_id(), b.node_id());
    let parents: Vec<usize> = [pa, pb].into_iter().flatten().collect();
    let back = move |g: &[T]| {
        let mut outs = Vec::new();
        if pa.is_some() {
            outs.push(g.to_vec());
        }
        if pb.is_some() {
            if broadcast {
                let mut db = vec![T::zero(); n];
                for row in g.chunks_exact(n) {
                    for (d, &gv) in db.iter_mut().zip(row) {
                        *d += gv;
                    }
                }
                outs.push(db);
            } else {
                outs.push(g.to_vec());
            }
        }
        outs
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// `a - b` (same broadcasting as [`add`]).
pub fn sub<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    add(a, &scale(b, -T::one()))
}

/// Multiplies every element by the constant `c`.
pub fn scale<T: Real>(a: &Tensor<T>, c: T) -> Tensor<T> {
    let data = a.data().iter().map(|&v| v * c).collect();
    let out = Tensor::new(a.shape(), data);
    let Some(tape) = pick_tape(&[a]) else {
        return out;
    };
    let parents = vec![a.node_id().unwrap()];
    let back = move |g: &[T]| vec![g.iter().map(|&v| v * c).collect()];
    tape.attach(out, parents, Box::new(back))
}

pub fn transpose<T: Real>(a: &Tensor<T>) -> Tensor<T> {
    let [m, n] = a.shape();
    let out = Tensor::new([n, m], transpose_raw(a.data(), m, n));
    let Some(tape) = pick_tape(&[a]) else {
        return out;
    };
    let parents = vec![a.node_id().unwrap()];
    let back = move |g: &[T]| vec![transpose_raw(g, n, m)];
    tape.attach(out, parents, Box::new(back))
}

fn transpose_raw<T: Real>(a: &[T], m: usize, n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}

/// Concatenates along `axis` (0 = stack rows, 1 = widen columns).
pub fn concat<T: Real>(axis: usize, parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
    if parts.is_empty() {
        return Err(Error::param("parts", "concat of zero tensors"));
    }
    if axis > 1 {
        return Err(Error::param("axis", format!("must be 0 or 1, got {axis}")));
    }
    let other = 1 - axis;
    let common = parts[0].shape()[other];
    for p in parts {
        if p.shape()[other] != common {
            return Err(shape_mismatch(parts[0], p));
        }
    }
    let total: usize = parts.iter().map(|p| p.shape()[axis]).sum();
    let mut shape = [0usize; 2];
    shape[axis] = total;
    shape[other] = common;
    let data = if axis == 0 {
        let mut data = Vec::with_capacity(total * common);
        for p in parts {
            data.extend_from_slice(p.data());
        }
        data
    } else {
        let rows = common;
        let mut data = Vec::with_capacity(total * common);
        for r in 0..rows {
            for p in parts {
                let w = p.cols();
                data.extend_from_slice(&p.data()[r * w..(r + 1) * w]);
            }
        }
        data
    };
    let out = Tensor::new(shape, data);
    let Some(tape) = pick_tape(parts) else {
        return Ok(out);
    };
    // Remember each part's extent and whether it wants a gradient.
    let extents: Vec<usize> = parts.iter().map(|p| p.shape()[axis]).collect();
    let tracked: Vec<bool> = parts.iter().map(|p| p.is_tracked()).collect();
    let parents: Vec<usize> = parts.iter().filter_map(|p| p.node_id()).collect();
    let back = move |g: &[T]| {
        let mut outs = Vec::new();
        let mut offset = 0usize;
        for (extent, is_tracked) in extents.iter().zip(&tracked) {
            if *is_tracked {
                let mut dp = Vec::with_capacity(extent * common);
                if axis == 0 {
                    dp.extend_from_slice(&g[offset * common..(offset + extent) * common]);
                } else {
                    for r in 0..common {
                        let start = r * total + offset;
                        dp.extend_from_slice(&g[start..start + extent]);
                    }
                }
                outs.push(dp);
            }
            offset += extent;
        }
        outs
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// Contiguous sub-range `start .. start + len` along `axis`.
pub fn slice<T: Real>(a: &Tensor<T>, axis: usize, start: usize, len: usize) -> Result<Tensor<T>> {
    if axis > 1 {
        return Err(Error::param("axis", format!("must be 0 or 1, got {axis}")));
    }
    let [m, n] = a.shape();
    let extent = a.shape()[axis];
    if start + len > extent || len == 0 {
        return Err(Error::param(
            "range",
            format!("{start}..{} outside extent {extent}", start + len),
        ));
    }
    let (shape, data) = if axis == 0 {
        ([len, n], a.data()[start * n..(start + len) * n].to_vec())
    } else {
        let mut data = Vec::with_capacity(m * len);
        for r in 0..m {
            data.extend_from_slice(&a.data()[r * n + start..r * n + start + len]);
        }
        ([m, len], data)
    };
    let out = Tensor::new(shape, data);
    let Some(tape) = pick_tape(&[a]) else {
        return Ok(out);
    };
    let parents = vec![a.node_id().unwrap()];
    let back = move |g: &[T]| {
        let mut da = vec![T::zero(); m * n];
        if axis == 0 {
            da[start * n..(start + len) * n].copy_from_slice(g);
        } else {
            for r in 0..m {
                da[r * n + start..r * n + start + len].copy_from_slice(&g[r * len..(r + 1) * len]);
            }
        }
        vec![da]
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// Row-wise softmax of `logits + mask`.
///
/// The mask is additive (large negative entries exclude positions) and is
/// treated as data: no gradient flows to it.
pub fn masked_softmax<T: Real>(logits: &Tensor<T>, mask: &Tensor<T>) -> Result<Tensor<T>> {
    if logits.shape() != mask.shape() {
        return Err(shape_mismatch(logits, mask));
    }
    let [m, n] = logits.shape();
    let mut data = vec![T::zero(); m * n];
    for r in 0..m {
        let row = &logits.data()[r * n..(r + 1) * n];
        let mrow = &mask.data()[r * n..(r + 1) * n];
        let out = &mut data[r * n..(r + 1) * n];
        let mut mx = T::neg_infinity();
        for (l, mk) in row.iter().zip(mrow) {
            mx = mx.max(*l + *mk);
        }
        let mut sum = T::zero();
        for ((o, &l), &mk) in out.iter_mut().zip(row).zip(mrow) {
            *o = (l + mk - mx).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
    }
    let out = Tensor::new([m, n], data);
    let Some(tape) = pick_tape(&[logits]) else {
        return Ok(out);
    };
    let probs = out.data_rc();
    let parents = vec![logits.node_id().unwrap()];
    let back = move |g: &[T]| {
        let mut dl = vec![T::zero(); m * n];
        for r in 0..m {
            let p = &probs[r * n..(r + 1) * n];
            let gr = &g[r * n..(r + 1) * n];
            let mut dot = T::zero();
            for (&pv, &gv) in p.iter().zip(gr) {
                dot += pv * gv;
            }
            for ((d, &pv), &gv) in dl[r * n..(r + 1) * n].iter_mut().zip(p).zip(gr) {
                *d = pv * (gv - dot);
            }
        }
        vec![dl]
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// Row-wise layer normalization with learned gain and bias.
///
/// Each row is centered and divided by its population standard deviation
/// (stabilized by `eps`), then scaled by `gain` and shifted by `bias`
/// (both `[1, n]`).
pub fn layer_norm<T: Real>(
    x: &Tensor<T>,
    gain: &Tensor<T>,
    bias: &Tensor<T>,
    eps: T,
) -> Result<Tensor<T>> {
    let [m, n] = x.shape();
    if gain.shape() != [1, n] {
        return Err(shape_mismatch(x, gain));
    }
    if bias.shape() != [1, n] {
        return Err(shape_mismatch(x, bias));
    }
    let nf = T::from(n).unwrap();
    let mut data = vec![T::zero(); m * n];
    let mut inv_std = vec![T::zero(); m];
    let mut x_hat = vec![T::zero(); m * n];
    for r in 0..m {
        let row = &x.data()[r * n..(r + 1) * n];
        let mut mu = T::zero();
        for &v in row {
            mu += v;
        }
        mu /= nf;
        let mut var = T::zero();
        for &v in row {
            var += (v - mu) * (v - mu);
        }
        var /= nf;
        let s = T::one() / (var + eps).sqrt();
        inv_std[r] = s;
        for (j, &v) in row.iter().enumerate() {
            let xh = (v - mu) * s;
            x_hat[r * n + j] = xh;
            data[r * n + j] = xh * gain.data()[j] + bias.data()[j];
        }
    }
    let out = Tensor::new([m, n], data);
    let Some(tape) = pick_tape(&[x, gain, bias]) else {
        return Ok(out);
    };
    let (px, pg, pb) = (x.node_id(), gain.node_id(), bias.node_id());
    let parents: Vec<usize> = [px, pg, pb].into_iter().flatten().collect();
    let gv = gain.data_rc();
    let x_hat = Rc::new(x_hat);
    let inv_std = Rc::new(inv_std);
    let back = move |g: &[T]| {
        let mut outs = Vec::new();
        if px.is_some() {
            let mut dx = vec![T::zero(); m * n];
            for r in 0..m {
                let gr = &g[r * n..(r + 1) * n];
                let xh = &x_hat[r * n..(r + 1) * n];
                // dxh = g ⊙ gain; then subtract the row means that keep the
                // output centered and unit-variance.
                let mut mean_dxh = T::zero();
                let mut mean_dxh_xh = T::zero();
                for (j, &gvj) in gr.iter().enumerate() {
                    let d = gvj * gv[j];
                    mean_dxh += d;
                    mean_dxh_xh += d * xh[j];
                }
                mean_dxh /= nf;
                mean_dxh_xh /= nf;
                for (j, dxv) in dx[r * n..(r + 1) * n].iter_mut().enumerate() {
                    let d = gr[j] * gv[j];
                    *dxv = inv_std[r] * (d - mean_dxh - xh[j] * mean_dxh_xh);
                }
            }
            outs.push(dx);
        }
        if pg.is_some() {
            let mut dg = vec![T::zero(); n];
            for r in 0..m {
                for (j, d) in dg.iter_mut().enumerate() {
                    *d += g[r * n + j] * x_hat[r * n + j];
                }
            }
            outs.push(dg);
        }
        if pb.is_some() {
            let mut db = vec![T::zero(); n];
            for row in g.chunks_exact(n) {
                for (d, &gv) in db.iter_mut().zip(row) {
                    *d += gv;
                }
            }
            outs.push(db);
        }
        outs
    };
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// Gaussian error linear unit (tanh approximation).
pub fn gelu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let c = T::from(0.7978845608028654f64).unwrap(); // √(2/π)
    let k = T::from(0.044715f64).unwrap();
    let half = T::from(0.5f64).unwrap();
    let data: Vec<T> = x
        .data()
        .iter()
        .map(|&v| {
            let u = c * (v + k * v * v * v);
            half * v * (T::one() + u.tanh())
        })
        .collect();
    let out = Tensor::new(x.shape(), data);
    let Some(tape) = pick_tape(&[x]) else {
        return out;
    };
    let xv = x.data_rc();
    let parents = vec![x.node_id().unwrap()];
    let back = move |g: &[T]| {
        let three = T::from(3.0f64).unwrap();
        let dx = g
            .iter()
            .zip(xv.iter())
            .map(|(&gv, &v)| {
                let u = c * (v + k * v * v * v);
                let t = u.tanh();
                let du = c * (T::one() + three * k * v * v);
                gv * (half * (T::one() + t) + half * v * (T::one() - t * t) * du)
            })
            .collect();
        vec![dx]
    };
    tape.attach(out, parents, Box::new(back))
}

/// Scales each row to unit Euclidean norm (rows below `1e-12` pass through
/// that floor instead of dividing by zero).
pub fn l2_normalize<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let [m, n] = x.shape();
    let floor = T::from(1e-12f64).unwrap();
    let mut norms = vec![T::zero(); m];
    let mut data = vec![T::zero(); m * n];
    for r in 0..m {
        let row = &x.data()[r * n..(r + 1) * n];
        let mut s = T::zero();
        for &v in row {
            s += v * v;
        }
        let norm = s.sqrt().max(floor);
        norms[r] = norm;
        for (o, &v) in data[r * n..(r + 1) * n].iter_mut().zip(row) {
            *o = v / norm;
        }
    }
    let out = Tensor::new([m, n], data);
    let Some(tape) = pick_tape(&[x]) else {
        return out;
    };
    let y = out.data_rc();
    let norms = Rc::new(norms);
    let parents = vec![x.node_id().unwrap()];
    let back = move |g: &[T]| {
        let mut dx = vec![T::zero(); m * n];
        for r in 0..m {
            let yr = &y[r * n..(r + 1) * n];
            let gr = &g[r * n..(r + 1) * n];
            let mut dot = T::zero();
            for (&yv, &gv) in yr.iter().zip(gr) {
                dot += yv * gv;
            }
            for ((d, &yv), &gv) in dx[r * n..(r + 1) * n].iter_mut().zip(yr).zip(gr) {
                *d = (gv - yv * dot) / norms[r];
            }
        }
        vec![dx]
    };
    tape.attach(out, parents, Box::new(back))
}

/// Elementwise product with a constant mask.
///
/// The mask may match `x`'s shape, be a column `[m, 1]` broadcast across
/// columns (row gating), or a row `[1, n]` broadcast down rows. No
/// gradient flows to the mask.
pub fn dropout_mask_apply<T: Real>(x: &Tensor<T>, mask: &Tensor<T>) -> Result<Tensor<T>> {
    let [m, n] = x.shape();
    #[derive(Clone, Copy)]
    enum Kind {
        Full,
        Col,
        Row,
    }
    let kind = if mask.shape() == [m, n] {
        Kind::Full
    } else if mask.shape() == [m, 1] {
        Kind::Col
    } else if mask.shape() == [1, n] {
        Kind::Row
    } else {
        return Err(shape_mismatch(x, mask));
    };
    let apply = move |src: &[T], mk: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); m * n];
        match kind {
            Kind::Full => {
                for ((o, &v), &w) in out.iter_mut().zip(src).zip(mk) {
                    *o = v * w;
                }
            }
            Kind::Col => {
                for r in 0..m {
                    let w = mk[r];
                    for (o, &v) in out[r * n..(r + 1) * n].iter_mut().zip(&src[r * n..(r + 1) * n]) {
                        *o = v * w;
                    }
                }
            }
            Kind::Row => {
                for r in 0..m {
                    for ((o, &v), &w) in out[r * n..(r + 1) * n]
                        .iter_mut()
                        .zip(&src[r * n..(r + 1) * n])
                        .zip(mk)
                    {
                        *o = v * w;
                    }
                }
            }
        }
        out
    };
    let out = Tensor::new([m, n], apply(x.data(), mask.data()));
    let Some(tape) = pick_tape(&[x]) else {
        return Ok(out);
    };
    let mk = mask.data_rc();
    let parents = vec![x.node_id().unwrap()];
    let back = move |g: &[T]| vec![apply(g, &mk)];
    Ok(tape.attach(out, parents, Box::new(back)))
}

/// Row-wise log-sum-exp, `[m, n] → [m, 1]`, computed with the max trick.
pub fn log_sum_exp<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let [m, n] = x.shape();
    let mut data = vec![T::zero(); m];
    for r in 0..m {
        let row = &x.data()[r * n..(r + 1) * n];
        let mut mx = T::neg_infinity();
        for &v in row {
            mx = mx.max(v);
        }
        let mut sum = T::zero();
        for &v in row {
            sum += (v - mx).exp();
        }
        data[r] = mx + sum.ln();
    }
    let out = Tensor::new([m, 1], data);
    let Some(tape) = pick_tape(&[x]) else {
        return out;
    };
    let xv = x.data_rc();
    let lse = out.data_rc();
    let parents = vec![x.node_id().unwrap()];
    let back = move |g: &[T]| {
        let mut dx = vec![T::zero(); m * n];
        for r in 0..m {
            for (d, &v) in dx[r * n..(r + 1) * n].iter_mut().zip(&xv[r * n..(r + 1) * n]) {
                *d = g[r] * (v - lse[r]).exp();
            }
        }
        vec![dx]
    };
    tape.attach(out, parents, Box::new(back))
}

/// Sum of all elements, `[m, n] → [1, 1]`.
pub fn sum_all<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let mut acc = T::zero();
    for &v in x.data() {
        acc += v;
    }
    let out = Tensor::scalar(acc);
    let Some(tape) = pick_tape(&[x]) else {
        return out;
    };
    let count = x.data().len();
    let parents = vec![x.node_id().unwrap()];
    let back = move |g: &[T]| vec![vec![g[0]; count]];
    tape.attach(out, parents, Box::new(back))
}
