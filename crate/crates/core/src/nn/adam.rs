use super::{NnError, Result};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
    pub step_count: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    /// Zeroed state for tensors of the given lengths.
    pub fn new(sizes: &[usize]) -> Self {
        AdamState {
            first_moment: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step_count: 0,
            beta1: T::of(ADAM_BETA1),
            beta2: T::of(ADAM_BETA2),
            epsilon: T::of(ADAM_EPSILON),
        }
    }
}

/// One Adam update with coupled L2: the effective gradient is `grad + l2_weight * param`.
///
/// All gradients are checked for finiteness before any parameter is touched.
pub fn adam_step<T: Scalar>(
    params: &mut [(String, &mut [T])],
    grads: &[&[T]],
    state: &mut AdamState<T>,
    lr: T,
    l2_weight: T,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(NnError::InvalidShape(format!(
            "{} parameter tensors, {} gradients, {} optimizer slots",
            params.len(),
            grads.len(),
            state.first_moment.len()
        )));
    }
    for (k, ((name, p), g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.first_moment[k].len() {
            return Err(NnError::InvalidShape(format!("shape mismatch in parameter {name}")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite { param: name.clone() });
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let one = T::one();
    let bc1 = one - b1.powi(t);
    let bc2 = one - b2.powi(t);
    for (k, (_, p)) in params.iter_mut().enumerate() {
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for (j, pj) in p.iter_mut().enumerate() {
            let g = grads[k][j] + l2_weight * *pj;
            m[j] = b1 * m[j] + (one - b1) * g;
            v[j] = b2 * v[j] + (one - b2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            *pj -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
