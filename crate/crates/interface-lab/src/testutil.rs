//! Closed-form two-phase fields shared by tests across modules.
//!
//! Everything here goes through [`TwoPhaseVelocity::manufactured`], so the
//! builders sample analytic closures instead of solving layer-potential or
//! volume problems: they stay cheap at any resolution and their traces are
//! exact to rounding.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use crate::curve::ClosedCurve;
use crate::potential::Side;
use crate::tangent::TangentField;
use crate::velocity::{FieldClosure, TwoPhaseVelocity};

/// Velocity and Jacobian from a conjugate velocity `W = vx − i·vy` and its
/// derivative (analytic, hence automatically divergence-free and
/// irrotational).
pub(crate) fn conjugate_to_field(w: Complex64, wp: Complex64) -> (Vector2<f64>, Matrix2<f64>) {
    (
        Vector2::new(w.re, -w.im),
        Matrix2::new(wp.re, -wp.im, -wp.im, -wp.re),
    )
}

/// Sheet mode on a circle of the given center and radius whose interior
/// normal trace is exactly `amplitude·cos(mθ)`, through its closed-form
/// potentials `W₊ = R^{1−m}(z−c)^{m−1}` and `W₋ = R^{m+1}(z−c)^{−m−1}`.
pub(crate) fn manufactured_mode(
    curve: &ClosedCurve,
    center: Vector2<f64>,
    radius: f64,
    m: u32,
    amplitude: f64,
) -> TangentField {
    let mi = m as i32;
    let closure = |side: Side| -> FieldClosure {
        let c = Complex64::new(center.x, center.y);
        Arc::new(move |x, y| {
            let z = Complex64::new(x, y) - c;
            let (w, wp) = match side {
                Side::Interior => (
                    radius.powi(1 - mi) * z.powi(mi - 1),
                    f64::from(mi - 1) * radius.powi(1 - mi) * z.powi(mi - 2),
                ),
                Side::Exterior => (
                    radius.powi(mi + 1) * z.powi(-mi - 1),
                    -f64::from(mi + 1) * radius.powi(mi + 1) * z.powi(-mi - 2),
                ),
            };
            conjugate_to_field(amplitude * w, amplitude * wp)
        })
    };
    TangentField::new(
        TwoPhaseVelocity::manufactured(curve, closure(Side::Interior), closure(Side::Exterior))
            .expect("closed-form mode"),
    )
    .expect("admissible closed-form mode")
}

/// Closed form of the uniform-strength sheet: interior at rest, exterior
/// point vortex `W₋ = −i c/(z − c₀)` with boundary speed `c/R`.
pub(crate) fn manufactured_uniform(
    curve: &ClosedCurve,
    center: Vector2<f64>,
    strength: f64,
) -> TangentField {
    let c0 = Complex64::new(center.x, center.y);
    let zero: FieldClosure = Arc::new(|_, _| (Vector2::zeros(), Matrix2::zeros()));
    let minus: FieldClosure = Arc::new(move |x, y| {
        let z = Complex64::new(x, y) - c0;
        let w = Complex64::new(0.0, -strength) / z;
        let wp = Complex64::new(0.0, strength) / (z * z);
        conjugate_to_field(w, wp)
    });
    TangentField::new(
        TwoPhaseVelocity::manufactured(curve, zero, minus).expect("closed-form vortex"),
    )
    .expect("admissible closed-form vortex")
}

/// Rigid rotation of the interior at the given rate about `center`, with the
/// exterior at rest. On a circle centered at `center` both normal traces
/// vanish, so the pair is admissible; the interior vorticity is the constant
/// `2·rate`.
pub(crate) fn rotating_drop(
    curve: &ClosedCurve,
    center: Vector2<f64>,
    rate: f64,
) -> TwoPhaseVelocity {
    let plus: FieldClosure = Arc::new(move |x, y| {
        (
            rate * Vector2::new(-(y - center.y), x - center.x),
            Matrix2::new(0.0, -rate, rate, 0.0),
        )
    });
    let zero: FieldClosure = Arc::new(|_, _| (Vector2::zeros(), Matrix2::zeros()));
    TwoPhaseVelocity::manufactured(curve, plus, zero).expect("rigid-rotation drop")
}
