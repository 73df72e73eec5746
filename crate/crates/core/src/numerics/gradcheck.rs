use serde::Serialize;

use super::ParamStore;
use crate::error::{Error, Result};

/// Below this magnitude (for both values) the absolute error is reported instead.
pub const TINY_GRAD: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub entries_checked: usize,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn failing(&self, tol: f64) -> Vec<&ParamCheck> {
        self.params.iter().filter(|p| p.max_rel_error >= tol).collect()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    let scale = analytic.abs().max(numeric.abs());
    if scale < TINY_GRAD {
        diff
    } else {
        diff / scale
    }
}

/// Compares the gradients currently stored in `store` against central
/// differences of `loss`.
///
/// The caller must have run the analytic backward pass for exactly this loss
/// beforehand. Every entry of every parameter is perturbed in place and
/// restored afterwards.
pub fn grad_check<F>(store: &mut ParamStore, eps: f64, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<f64>,
{
    if !(1e-6..=1e-4).contains(&eps) {
        return Err(Error::Validation(format!(
            "finite-difference step {eps} outside [1e-6, 1e-4]"
        )));
    }
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        entries_checked: 0,
        params: Vec::with_capacity(store.len()),
    };
    for id in store.ids() {
        let n = store.get(id).value.data().len();
        let mut check = ParamCheck {
            name: store.get(id).name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
        };
        for k in 0..n {
            let orig = store.get(id).value.data()[k];
            store.get_mut(id).value.data_mut()[k] = orig + eps;
            let plus = loss(store)?;
            store.get_mut(id).value.data_mut()[k] = orig - eps;
            let minus = loss(store)?;
            store.get_mut(id).value.data_mut()[k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss while perturbing {}[{k}]",
                    check.name
                )));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(store.get(id).grad.data()[k], numeric);
            if err > check.max_rel_error {
                check.max_rel_error = err;
                check.worst_index = k;
            }
            report.entries_checked += 1;
        }
        report.max_rel_error = report.max_rel_error.max(check.max_rel_error);
        report.params.push(check);
    }
    Ok(report)
}
