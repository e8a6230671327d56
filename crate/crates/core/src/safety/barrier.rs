use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Radius and class-K slope of the pairwise distancing barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub d_social: f64,
    pub gamma: f64,
}

impl BarrierSpec {
    pub fn new(d_social: f64, gamma: f64) -> Result<Self> {
        if !d_social.is_finite() || d_social <= 0.0 {
            return Err(Error::invalid("d_social", format!("{d_social} must be finite and > 0")));
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::invalid("gamma", format!("{gamma} must be finite and > 0")));
        }
        Ok(Self { d_social, gamma })
    }
}

pub fn barrier_value(x_i: Vec2, x_j: Vec2, d_social: f64) -> f64 {
    (x_i - x_j).norm_squared() - d_social * d_social
}

/// Row `(a, b)` of the constraint `a . (u_i - u_j) >= b`.
pub fn constraint_row(x_i: Vec2, x_j: Vec2, spec: &BarrierSpec) -> Result<(Vec2, f64)> {
    let rel = x_i - x_j;
    if rel == Vec2::ZERO {
        return Err(Error::DegeneratePair { i: 0, j: 1 });
    }
    let h = barrier_value(x_i, x_j, spec.d_social);
    Ok((rel * 2.0, -spec.gamma * h))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn barrier_hand_values() {
        assert_eq!(barrier_value(Vec2::ZERO, Vec2::new(3.0, 4.0), 2.0), 21.0);
        assert!(barrier_value(Vec2::ZERO, Vec2::new(0.6, 0.8), 1.0).abs() < 1e-15);
        assert_eq!(barrier_value(Vec2::new(2.0, 2.0), Vec2::new(2.0, 2.0), 1.0), -1.0);
    }

    #[test]
    fn rows_hand_values() {
        let spec = BarrierSpec::new(1.0, 1.0).unwrap();
        let (a, b) = constraint_row(Vec2::ZERO, Vec2::new(1.0, 0.0), &spec).unwrap();
        assert_eq!(a, Vec2::new(-2.0, 0.0));
        assert_abs_diff_eq!(b, 0.0);

        let spec = BarrierSpec::new(1.0, 2.0).unwrap();
        let (a, b) = constraint_row(Vec2::ZERO, Vec2::new(0.5, 0.0), &spec).unwrap();
        assert_eq!(a, Vec2::new(-1.0, 0.0));
        assert_abs_diff_eq!(b, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn stationary_safe_pair_is_feasible() {
        let spec = BarrierSpec::new(0.5, 1.0).unwrap();
        let (a, b) = constraint_row(Vec2::new(1.0, 1.0), Vec2::new(2.0, 3.0), &spec).unwrap();
        assert!(a.dot(Vec2::ZERO) >= b);
    }

    #[test]
    fn coincident_is_degenerate() {
        let spec = BarrierSpec::new(0.5, 1.0).unwrap();
        assert!(matches!(
            constraint_row(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), &spec),
            Err(Error::DegeneratePair { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(BarrierSpec::new(0.0, 1.0).is_err());
        assert!(BarrierSpec::new(0.5, 0.0).is_err());
        assert!(BarrierSpec::new(f64::NAN, 1.0).is_err());
    }
}
