//! Dense kernels and their hand-derived backward passes.

use super::Tensor2D;
use crate::error::{Error, Result};

/// Default layer-norm epsilon.
pub const LAYER_NORM_EPS: f64 = 1e-5;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044715;

/// `a × b`.
pub fn matmul(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.cols() != b.rows() {
        return Err(Error::Dimension {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor2D::zeros(n, m);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for i in 0..n {
        let orow = &mut od[i * m..(i + 1) * m];
        for p in 0..k {
            let aip = ad[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &bd[p * m..(p + 1) * m];
            for (o, b) in orow.iter_mut().zip(brow) {
                *o += aip * b;
            }
        }
    }
    Ok(out)
}

/// `a × bᵀ`.
pub fn matmul_nt(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.cols() != b.cols() {
        return Err(Error::Dimension {
            op: "matmul_nt",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (n, m) = (a.rows(), b.rows());
    let mut out = Tensor2D::zeros(n, m);
    for i in 0..n {
        let ar = a.row(i);
        for j in 0..m {
            let dot: f64 = ar.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
            out.set(i, j, dot);
        }
    }
    Ok(out)
}

/// `aᵀ × b`.
pub fn matmul_tn(a: &Tensor2D, b: &Tensor2D) -> Result<Tensor2D> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension {
            op: "matmul_tn",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (k, n, m) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor2D::zeros(n, m);
    let od = out.data_mut();
    for p in 0..k {
        let ar = a.row(p);
        let br = b.row(p);
        for (i, &aval) in ar.iter().enumerate() {
            if aval == 0.0 {
                continue;
            }
            let orow = &mut od[i * m..(i + 1) * m];
            for (o, bv) in orow.iter_mut().zip(br) {
                *o += aval * bv;
            }
        }
    }
    Ok(out)
}

/// Numerically stable softmax of one vector.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric("NaN in softmax input".into()));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o /= sum;
    }
    Ok(out)
}

/// Row-wise softmax with row-max subtraction.
pub fn softmax_rows(m: &Tensor2D) -> Result<Tensor2D> {
    let mut out = m.clone();
    for r in 0..m.rows() {
        let row = out.row_mut(r);
        if row.iter().any(|x| x.is_nan()) {
            return Err(Error::Numeric(format!("NaN in softmax row {r}")));
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    Ok(out)
}

/// Backward of [`softmax_rows`] given its output `p` and upstream `dp`.
pub fn softmax_rows_backward(p: &Tensor2D, dp: &Tensor2D) -> Tensor2D {
    let mut ds = Tensor2D::zeros(p.rows(), p.cols());
    for r in 0..p.rows() {
        let (pr, dr) = (p.row(r), dp.row(r));
        let dot: f64 = pr.iter().zip(dr).map(|(a, b)| a * b).sum();
        for (o, (pv, dv)) in ds.row_mut(r).iter_mut().zip(pr.iter().zip(dr)) {
            *o = pv * (dv - dot);
        }
    }
    ds
}

/// GELU, tanh approximation.
#[inline]
pub fn gelu(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    0.5 * x * (1.0 + inner.tanh())
}

/// Analytic derivative of [`gelu`].
#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    let t = inner.tanh();
    let dinner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}

/// Layer normalization of a single vector.
pub fn layer_norm(x: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> Result<Vec<f64>> {
    if x.len() != gamma.len() || x.len() != beta.len() {
        return Err(Error::Dimension {
            op: "layer_norm",
            left: (1, x.len()),
            right: (gamma.len(), beta.len()),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    Ok(x.iter()
        .zip(gamma.iter().zip(beta))
        .map(|(v, (g, b))| (v - mean) * inv * g + b)
        .collect())
}

/// Per-row statistics kept for the layer-norm backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub xhat: Tensor2D,
    pub inv_std: Vec<f64>,
}

/// Row-wise layer norm. Returns the output and a cache for [`layer_norm_rows_backward`].
pub fn layer_norm_rows(
    x: &Tensor2D,
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
) -> Result<(Tensor2D, LayerNormCache)> {
    let d = x.cols();
    if gamma.len() != d || beta.len() != d {
        return Err(Error::Dimension {
            op: "layer_norm_rows",
            left: x.shape(),
            right: (gamma.len(), beta.len()),
        });
    }
    let mut xhat = Tensor2D::zeros(x.rows(), d);
    let mut out = Tensor2D::zeros(x.rows(), d);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + eps).sqrt();
        inv_std.push(inv);
        let xr = xhat.row_mut(r);
        for (h, v) in xr.iter_mut().zip(row) {
            *h = (v - mean) * inv;
        }
        let xr = xhat.row(r).to_vec();
        for (o, ((h, g), b)) in out.row_mut(r).iter_mut().zip(xr.iter().zip(gamma).zip(beta)) {
            *o = h * g + b;
        }
    }
    Ok((out, LayerNormCache { xhat, inv_std }))
}

/// Returns `dx`; accumulates into `dgamma` / `dbeta`.
pub fn layer_norm_rows_backward(
    dy: &Tensor2D,
    gamma: &[f64],
    cache: &LayerNormCache,
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Tensor2D {
    let d = dy.cols();
    let mut dx = Tensor2D::zeros(dy.rows(), d);
    let mut dxhat = vec![0.0; d];
    for r in 0..dy.rows() {
        let (dyr, xh) = (dy.row(r), cache.xhat.row(r));
        for j in 0..d {
            dgamma[j] += dyr[j] * xh[j];
            dbeta[j] += dyr[j];
            dxhat[j] = dyr[j] * gamma[j];
        }
        let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
        let mean_dxhat_xhat = dxhat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d as f64;
        let inv = cache.inv_std[r];
        for (j, o) in dx.row_mut(r).iter_mut().enumerate() {
            *o = inv * (dxhat[j] - mean_dxhat - xh[j] * mean_dxhat_xhat);
        }
    }
    dx
}

/// `−log softmax(logits)[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Index {
            what: "class label",
            index: label,
            len: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[label])
}

/// Loss and `d loss / d logits` in one pass.
pub fn cross_entropy_with_grad(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    let loss = cross_entropy(logits, label)?;
    let mut grad = softmax(logits)?;
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[&[f64]]) -> Tensor2D {
        Tensor2D::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let m = t(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Tensor2D::identity(2), &m).unwrap(), m);
        let p = matmul(&m, &t(&[&[5.0, 6.0], &[7.0, 8.0]])).unwrap();
        assert_eq!(p, t(&[&[19.0, 22.0], &[43.0, 50.0]]));
        let err = matmul(&Tensor2D::zeros(2, 3), &Tensor2D::zeros(2, 2)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)") && msg.contains("(2, 2)"), "{msg}");
    }

    #[test]
    fn transposed_products_agree_with_plain_matmul() {
        let a = t(&[&[1.0, -2.0, 0.5], &[3.0, 4.0, -1.0]]);
        let b = t(&[&[0.3, 2.0, 1.0], &[-1.0, 0.0, 2.5]]);
        let nt = matmul_nt(&a, &b).unwrap();
        assert!(nt.max_abs_diff(&matmul(&a, &b.transpose()).unwrap()) < 1e-15);
        let tn = matmul_tn(&a, &b).unwrap();
        assert!(tn.max_abs_diff(&matmul(&a.transpose(), &b).unwrap()) < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_rows(&t(&[&[0.0, 0.0]])).unwrap();
        assert_eq!(p.row(0), &[0.5, 0.5]);
        let p = softmax_rows(&t(&[&[0.0, 3f64.ln()]])).unwrap();
        assert!((p.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((p.get(0, 1) - 0.75).abs() < 1e-15);
        let p = softmax_rows(&t(&[&[5.0, 5.0 - 10000.0]])).unwrap();
        assert!((p.get(0, 0) - 1.0).abs() < 1e-15);
        assert!(p.get(0, 1) < 1e-100);
        assert!(softmax_rows(&t(&[&[f64::NAN, 0.0]])).is_err());
    }

    #[test]
    fn gelu_examples() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(10.0) - 10.0).abs() < 1e-6);
        assert!(gelu(-10.0).abs() < 1e-6);
    }

    #[test]
    fn layer_norm_examples() {
        let b = [0.3, -0.7, 1.1];
        let out = layer_norm(&[2.0, 2.0, 2.0], &[1.0; 3], &b, LAYER_NORM_EPS).unwrap();
        for (o, e) in out.iter().zip(&b) {
            assert!((o - e).abs() < 1e-12);
        }
        let out = layer_norm(&[-1.0, 1.0], &[1.0; 2], &[0.0; 2], 1e-12).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-9 && (out[1] - 1.0).abs() < 1e-9);
        let out = layer_norm(&[5.0, -3.0, 0.1], &[0.0; 3], &b, LAYER_NORM_EPS).unwrap();
        assert_eq!(out, b.to_vec());
    }

    #[test]
    fn layer_norm_rows_matches_vector_form() {
        let x = t(&[&[1.0, 2.0, 4.0], &[-3.0, 0.5, 0.25]]);
        let g = [1.5, 0.5, -1.0];
        let b = [0.1, 0.2, 0.3];
        let (out, _) = layer_norm_rows(&x, &g, &b, LAYER_NORM_EPS).unwrap();
        for r in 0..2 {
            let v = layer_norm(x.row(r), &g, &b, LAYER_NORM_EPS).unwrap();
            for (a, e) in out.row(r).iter().zip(&v) {
                assert!((a - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.3; 4], 2).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(cross_entropy(&[100.0, 0.0], 0).unwrap() < 1e-40);
        assert!((cross_entropy(&[0.0, 100.0], 0).unwrap() - 100.0).abs() < 1e-12);
        assert!(matches!(
            cross_entropy(&[0.0, 1.0], 2),
            Err(Error::Index { index: 2, .. })
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }
}
