use crate::data::{FusedSpec, RegularizerSpec};

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// lambda * sum(alpha) and its gradient (lambda everywhere). On [0, 1]^M the
/// sum equals the L1 norm, and equals the expected subset size.
pub fn l1_penalty(alpha: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; alpha.len()];
    let v = add_l1(alpha, lambda, &mut grad);
    (v, grad)
}

pub(crate) fn add_l1(alpha: &[f64], lambda: f64, grad: &mut [f64]) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    grad.iter_mut().for_each(|g| *g += lambda);
    lambda * alpha.iter().sum::<f64>()
}

/// Total variation of alpha laid out on an H x W grid (row-major), with a
/// sign(0) = 0 subgradient.
pub fn fused_penalty(alpha: &[f64], spec: &FusedSpec) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; alpha.len()];
    let v = add_fused(alpha, spec, &mut grad);
    (v, grad)
}

pub(crate) fn add_fused(alpha: &[f64], spec: &FusedSpec, grad: &mut [f64]) -> f64 {
    let (h, w, lambda) = (spec.height, spec.width, spec.lambda);
    if lambda == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut pair = |a: usize, b: usize, grad: &mut [f64]| {
        let d = alpha[a] - alpha[b];
        total += d.abs();
        let s = lambda * sign(d);
        grad[a] += s;
        grad[b] -= s;
    };
    for r in 0..h {
        for c in 0..w {
            let at = r * w + c;
            if r > 0 {
                pair(at, at - w, grad);
            }
            if c > 0 {
                pair(at, at - 1, grad);
            }
        }
    }
    lambda * total
}

/// Adds every configured single-output penalty's subgradient to `grad` and
/// returns the summed penalty value.
pub(crate) fn apply(reg: &RegularizerSpec, alpha: &[f64], grad: &mut [f64]) -> f64 {
    let mut v = add_l1(alpha, reg.lambda_l1, grad);
    if let Some(f) = &reg.fused {
        v += add_fused(alpha, f, grad);
    }
    v
}
