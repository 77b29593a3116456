//! Trigonometry in degrees with exact results at multiples of 30° and 45°.
//!
//! `cos(π/2)` in binary floating point is 6.1e-17, not zero; grid rows at the
//! poles and at ±60° are common enough that exact values matter for weights
//! and for the pole collapse of the sphere embedding.

/// Returns `(sin, cos)` of an angle given in degrees.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let d = deg.rem_euclid(360.0);
    let quadrant = (d / 90.0).floor() as u32 % 4;
    let a = d - 90.0 * f64::from(quadrant);
    let (s, c) = first_quadrant(a);
    match quadrant {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub fn cos_deg(deg: f64) -> f64 {
    sin_cos_deg(deg).1
}

fn first_quadrant(a: f64) -> (f64, f64) {
    if a == 0.0 {
        (0.0, 1.0)
    } else if a == 30.0 {
        (0.5, (0.75f64).sqrt())
    } else if a == 45.0 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        (h, h)
    } else if a == 60.0 {
        ((0.75f64).sqrt(), 0.5)
    } else if a <= 45.0 {
        let r = a.to_radians();
        (r.sin(), r.cos())
    } else {
        let r = (90.0 - a).to_radians();
        (r.cos(), r.sin())
    }
}
