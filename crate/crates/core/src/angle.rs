//! Angle helpers shared by every module.

use std::f64::consts::TAU;

/// Wraps an angle into `[0, 2π)`.
///
/// Wrapping is idempotent: `wrap_angle(wrap_angle(a)) == wrap_angle(a)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to TAU for tiny negative inputs
    if wrapped >= TAU || wrapped == 0.0 {
        0.0
    } else {
        wrapped
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `(sin, cos)` of an angle given in degrees.
///
/// The argument is reduced in degrees before conversion, so multiples of 90° give exact
/// `0`, `1` and `-1` values.
pub fn sin_cos_degrees(degrees: f64) -> (f64, f64) {
    let reduced = degrees.rem_euclid(360.0);
    let quarter = (reduced / 90.0).round();
    let (s, c) = (reduced - quarter * 90.0).to_radians().sin_cos();
    match quarter as i64 % 4 {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Converts a wrapped joint angle in radians to degrees in `[0, 360)`.
pub fn to_wrapped_degrees(radians: f64) -> f64 {
    let deg = wrap_angle(radians).to_degrees();
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}

/// The fixed three-decimal degree rendering used on every user-facing surface.
pub fn format_degrees(radians: f64) -> String {
    format!("{:.3}", to_wrapped_degrees(radians))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn wrap_handles_negative_and_full_turns() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert_eq!(wrap_angle(TAU), 0.0);
        assert!((wrap_angle(-FRAC_PI_2) - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(5.0 * PI) - PI).abs() < 1e-14);
        assert_eq!(wrap_angle(-1e-300), 0.0);
    }

    #[test]
    fn quarter_turns_are_exact_in_degrees() {
        assert_eq!(sin_cos_degrees(0.0), (0.0, 1.0));
        assert_eq!(sin_cos_degrees(90.0), (1.0, 0.0));
        assert_eq!(sin_cos_degrees(180.0), (0.0, -1.0));
        assert_eq!(sin_cos_degrees(-90.0), (-1.0, 0.0));
        assert_eq!(sin_cos_degrees(450.0), (1.0, 0.0));
    }

    #[test]
    fn distance_uses_the_short_way_round() {
        assert!((angular_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert_eq!(angular_distance(1.0, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent_and_in_range(a in -1e3f64..1e3) {
            let w = wrap_angle(a);
            prop_assert!((0.0..TAU).contains(&w));
            prop_assert_eq!(wrap_angle(w), w);
        }

        #[test]
        fn degree_trig_matches_radian_trig(d in -720.0f64..720.0) {
            let (s, c) = sin_cos_degrees(d);
            let (s2, c2) = d.to_radians().sin_cos();
            prop_assert!((s - s2).abs() < 1e-12 && (c - c2).abs() < 1e-12);
        }
    }
}
