use crate::scalar::{dot, norm, Scalar};

/// Norms are floored at this value so a zero vector has cosine 0 with anything.
pub const COSINE_EPS: f64 = 1e-12;

/// `u.v / (max(|u|, eps) * max(|v|, eps))`
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> T {
    debug_assert_eq!(u.len(), v.len());
    let eps = T::of(COSINE_EPS);
    dot(u, v) / (norm(u).max(eps) * norm(v).max(eps))
}

/// Gradients of `grad_out * cosine(u, v)` with respect to `u` and `v`.
///
/// Where a norm sits at the floor it is treated as the constant `eps`.
pub fn cosine_backward<T: Scalar>(u: &[T], v: &[T], grad_out: T) -> (Vec<T>, Vec<T>) {
    debug_assert_eq!(u.len(), v.len());
    let eps = T::of(COSINE_EPS);
    let (nu, nv) = (norm(u), norm(v));
    let (du, dv) = (nu.max(eps), nv.max(eps));
    let c = dot(u, v) / (du * dv);
    let side = |a: &[T], b: &[T], na: T, da: T, db: T| -> Vec<T> {
        let free = na > eps;
        a.iter()
            .zip(b)
            .map(|(&ai, &bi)| {
                let mut g = bi / (da * db);
                if free {
                    g -= c * ai / (na * na);
                }
                grad_out * g
            })
            .collect()
    };
    (side(u, v, nu, du, dv), side(v, u, nv, dv, du))
}
