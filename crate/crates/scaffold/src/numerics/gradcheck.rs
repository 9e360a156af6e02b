//! Finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::numerics::params::ParamSet;
use crate::numerics::Tensor;

#[derive(Debug, Clone)]
pub struct GradReport {
    pub tolerance: f64,
    pub pass: bool,
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_coord: usize,
    pub coords_checked: usize,
    /// Max relative error per parameter, in registration order.
    pub per_param: Vec<(String, f64)>,
}

/// Compare analytic gradients against central finite differences.
///
/// `loss_fn(params, accumulate)` runs the model forward and returns the
/// scalar loss; when `accumulate` is true it must also run backward so
/// gradients land in `params`. The closure must be deterministic and must not
/// change parameter values; a drifting baseline invalidates the check.
///
/// Relative error uses `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps
/// true-zero gradients from being judged by finite-difference round-off.
pub fn grad_check<F>(params: &mut ParamSet, mut loss_fn: F, h: f64, tolerance: f64) -> Result<GradReport>
where
    F: FnMut(&mut ParamSet, bool) -> Result<f64>,
{
    params.zero_grads();
    let base = loss_fn(params, true)?;
    let analytic: Vec<Tensor> = params.iter().map(|(_, p)| p.grad.clone()).collect();
    params.zero_grads();

    let base2 = loss_fn(params, false)?;
    if (base - base2).abs() > 1e-12 * base.abs().max(1.0) {
        return Err(Error::CheckInvalid(format!(
            "loss closure is not deterministic: {base} vs {base2}"
        )));
    }

    let mut report = GradReport {
        tolerance,
        pass: true,
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_coord: 0,
        coords_checked: 0,
        per_param: Vec::new(),
    };

    let count = params.len();
    for pi in 0..count {
        let id = params.iter().nth(pi).map(|(id, _)| id).expect("in range");
        let name = params.get(id).name.clone();
        let len = params.value(id).len();
        let mut param_worst = 0.0f64;
        for i in 0..len {
            let orig = params.value(id).data()[i];
            params.get_mut(id).value.data_mut()[i] = orig + h;
            let plus = loss_fn(params, false)?;
            params.get_mut(id).value.data_mut()[i] = orig - h;
            let minus = loss_fn(params, false)?;
            params.get_mut(id).value.data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[pi].data()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            param_worst = param_worst.max(rel);
            report.coords_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = name.clone();
                report.worst_coord = i;
            }
        }
        report.per_param.push((name, param_worst));
    }
    report.pass = report.max_rel_err < tolerance;
    Ok(report)
}
