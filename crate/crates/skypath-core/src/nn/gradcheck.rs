//! Central finite-difference gradients. Only forward evaluations are used,
//! so the result is independent of any hand-written backward pass.

use super::ParamVector;

/// Numerically differentiate `loss` with respect to every parameter using
/// central differences with the given step.
pub fn finite_difference_gradients(
    params: &ParamVector,
    step: f64,
    mut loss: impl FnMut(&ParamVector) -> f64,
) -> ParamVector {
    let mut work = params.clone();
    let mut grads = params.zeros_like();
    for idx in 0..params.len() {
        for k in 0..params.tensor(idx).data.len() {
            let original = work.tensor(idx).data[k];
            work.tensor_mut(idx).data[k] = original + step;
            let plus = loss(&work);
            work.tensor_mut(idx).data[k] = original - step;
            let minus = loss(&work);
            work.tensor_mut(idx).data[k] = original;
            grads.tensor_mut(idx).data[k] = (plus - minus) / (2.0 * step);
        }
    }
    grads
}

/// Worst relative disagreement between two gradient vectors. The denominator
/// is floored so that pairs agreeing to ~1e-10 absolute (the finite-difference
/// noise floor for near-zero gradients) do not register.
pub fn max_relative_error(analytic: &ParamVector, numeric: &ParamVector) -> f64 {
    assert!(analytic.same_layout(numeric), "gradient layout mismatch");
    let mut worst = 0.0_f64;
    for (a, n) in analytic.values().zip(numeric.values()) {
        let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-4);
        if rel > worst {
            worst = rel;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    #[test]
    fn quadratic_gradient_recovered() {
        let mut p = ParamVector::new();
        p.push(
            "w",
            Tensor {
                rows: 2,
                cols: 1,
                data: vec![1.25, -0.5],
            },
        );
        // loss = w0^2 + 3 w1 has gradient (2 w0, 3).
        let g = finite_difference_gradients(&p, 1e-5, |q| {
            let w = q.tensor(0);
            w.data[0] * w.data[0] + 3.0 * w.data[1]
        });
        assert!((g.tensor(0).data[0] - 2.5).abs() < 1e-8);
        assert!((g.tensor(0).data[1] - 3.0).abs() < 1e-8);
    }
}
