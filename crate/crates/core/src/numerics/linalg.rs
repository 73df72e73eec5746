use super::Tensor2D;
use crate::error::{Error, Result};

/// Solves `a · x = b` for square `a` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Tensor2D, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::Dimension {
            op: "solve",
            left: a.shape(),
            right: (b.len(), 1),
        });
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m.get(i, col).abs().total_cmp(&m.get(j, col).abs()))
            .unwrap();
        let pv = m.get(pivot, col);
        if pv.abs() < 1e-300 || !pv.is_finite() {
            return Err(Error::Numeric(format!("singular system at column {col}")));
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m.get(col, c);
                m.set(col, c, m.get(pivot, c));
                m.set(pivot, c, tmp);
            }
            rhs.swap(col, pivot);
        }
        for r in col + 1..n {
            let f = m.get(r, col) / pv;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m.set(r, c, m.get(r, c) - f * m.get(col, c));
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m.get(r, c) * x[c]).sum();
        x[r] = (rhs[r] - s) / m.get(r, r);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matmul;

    #[test]
    fn solves_small_system() {
        let a = Tensor2D::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]])
            .unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = matmul(&a, &Tensor2D::from_vec(3, 1, x_true.to_vec()).unwrap()).unwrap();
        let x = solve(&a, b.data()).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_is_an_error() {
        let a = Tensor2D::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve(&a, &[1.0, 2.0]).is_err());
    }
}
