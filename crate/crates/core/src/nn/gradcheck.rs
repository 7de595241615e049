//! Central-difference verification of [`Network::backward`].
//!
//! The numeric side is the fourth-order five-point stencil.

use crate::nn::{GradientSet, Network, NnError, Tensor};

pub const GRADCHECK_STEP: f64 = 1e-3;
pub const GRADCHECK_THRESHOLD: f64 = 1e-4;
/// Floor on the relative-error denominator so vanishing gradients compare absolutely.
pub const GRADCHECK_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (tensor, element) of the worst entry.
    pub worst: (usize, usize),
    pub checked: usize,
    pub passed: bool,
}

/// A scalar loss over the network output, returning the loss and its output gradient.
pub trait ScalarLoss: Fn(&Tensor) -> (f64, Tensor) {}
impl<F: Fn(&Tensor) -> (f64, Tensor)> ScalarLoss for F {}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRADCHECK_FLOOR)
}

/// Analytic gradients from a forward/backward pair.
pub fn analytic_gradients(net: &Network, input: &Tensor, loss: &dyn Fn(&Tensor) -> (f64, Tensor)) -> Result<GradientSet, NnError> {
    let (out, cache) = net.forward(input)?;
    let (_, g) = loss(&out);
    Ok(net.backward(&cache, &g)?.params)
}

/// Checks every parameter (or an evenly spaced subset of at most `per_tensor` entries per tensor).
pub fn gradient_check(
    net: &Network,
    input: &Tensor,
    loss: &dyn Fn(&Tensor) -> (f64, Tensor),
    per_tensor: Option<usize>,
) -> Result<GradCheckReport, NnError> {
    let analytic = analytic_gradients(net, input, loss)?;
    gradient_check_with(net, input, loss, &analytic, per_tensor)
}

/// Compares supplied `analytic` gradients against central differences.
pub fn gradient_check_with(
    net: &Network,
    input: &Tensor,
    loss: &dyn Fn(&Tensor) -> (f64, Tensor),
    analytic: &GradientSet,
    per_tensor: Option<usize>,
) -> Result<GradCheckReport, NnError> {
    let mut probe = net.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: (0, 0), checked: 0, passed: true };
    for t in 0..analytic.tensors.len() {
        let len = analytic.tensors[t].len();
        let stride = per_tensor.map_or(1, |n| len.div_ceil(n.max(1)).max(1));
        for e in (0..len).step_by(stride) {
            let original = probe.params().tensors[t].data()[e];
            let mut at = |k: f64| -> Result<f64, NnError> {
                probe.params_mut().tensors[t].data_mut()[e] = original + k * GRADCHECK_STEP;
                Ok(loss(&probe.predict(input)?).0)
            };
            let (p2, p1, m1, m2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            probe.params_mut().tensors[t].data_mut()[e] = original;
            let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * GRADCHECK_STEP);
            let err = relative_error(analytic.tensors[t].data()[e], numeric);
            if !(err <= report.max_rel_error) {
                report.max_rel_error = err;
                report.worst = (t, e);
            }
            report.checked += 1;
        }
    }
    report.passed = report.max_rel_error < GRADCHECK_THRESHOLD;
    Ok(report)
}
