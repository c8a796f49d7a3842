//! Finite-difference derivatives used for the transfer matrices and for
//! delta-method error propagation.

/// Default step: `max(1e-6, 1e-6·|x|)`.
#[inline]
pub fn default_step(x: f64) -> f64 {
    (1e-6 * x.abs()).max(1e-6)
}

/// Central difference of `f` at `x` with step `h`.
pub fn central<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Derivative that stays inside `[lower, ∞)`: central when `x - h >= lower`,
/// otherwise the second-order forward stencil.
pub fn bounded<F: Fn(f64) -> f64>(f: F, x: f64, h: f64, lower: f64) -> f64 {
    if x - h >= lower {
        central(f, x, h)
    } else {
        (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_is_second_order() {
        let d = central(f64::sin, 0.3, 1e-4);
        assert!((d - 0.3f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn bounded_switches_to_forward() {
        // sqrt is undefined left of zero; the forward stencil must not touch it.
        let d = bounded(|x| (x * x * x).sqrt(), 1e-7, 1e-6, 0.0);
        assert!(d.is_finite());
        let d = bounded(|x| x * x, 0.0, 1e-6, 0.0);
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn step_floor() {
        assert_eq!(default_step(0.0), 1e-6);
        assert!((default_step(10.0) - 1e-5).abs() < 1e-20);
    }
}
