//! Points of the plane and the flat torus `R^2 / Z^2`.

/// A point of `R^2`. Torus points are represented by any lift.
pub type Point = [f64; 2];

pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Signed representative of `x mod 1` in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_centered(x: f64) -> f64 {
    let f = frac(x + 0.5) - 0.5;
    f
}

#[inline]
pub fn reduce(p: Point) -> Point {
    [frac(p[0]), frac(p[1])]
}

#[inline]
pub fn add(p: Point, v: Point) -> Point {
    [p[0] + v[0], p[1] + v[1]]
}

#[inline]
pub fn sub(p: Point, v: Point) -> Point {
    [p[0] - v[0], p[1] - v[1]]
}

#[inline]
pub fn scale(p: Point, s: f64) -> Point {
    [p[0] * s, p[1] * s]
}

#[inline]
pub fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

/// Sup-norm of a plane vector.
#[inline]
pub fn sup_norm(v: Point) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Euclidean distance in the plane.
#[inline]
pub fn plane_dist(p: Point, q: Point) -> f64 {
    norm(sub(p, q))
}

/// The induced flat metric on the torus.
#[inline]
pub fn torus_dist(p: Point, q: Point) -> f64 {
    wrap_centered(p[0] - q[0]).hypot(wrap_centered(p[1] - q[1]))
}

/// Unit vector along `(1, golden ratio)`.
pub fn irrational_direction() -> Point {
    let n = 1.0f64.hypot(GOLDEN);
    [1.0 / n, GOLDEN / n]
}

/// Regular `res x res` grid of cell corners `(i/res, j/res)` on `[0,1)^2`.
pub fn unit_grid(res: usize) -> impl Iterator<Item = Point> {
    let h = 1.0 / res as f64;
    (0..res).flat_map(move |i| (0..res).map(move |j| [i as f64 * h, j as f64 * h]))
}

/// Operator 2-norm of a 2x2 matrix given row-major.
pub fn op_norm(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    // largest singular value from the eigenvalues of M^T M
    let p = a * a + c * c;
    let r = b * b + d * d;
    let s = a * b + c * d;
    let tr = p + r;
    let disc = ((p - r) * (p - r) + 4.0 * s * s).sqrt();
    ((tr + disc) / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_is_half_open() {
        assert_eq!(frac(1.0), 0.0);
        assert_eq!(frac(-0.25), 0.75);
        assert!(frac(-1e-18) < 1.0);
    }

    #[test]
    fn torus_distance_wraps() {
        let d = torus_dist([0.001, 0.5], [0.999, 0.5]);
        assert!((d - 0.002).abs() < 1e-12);
        assert!((torus_dist([0.0, 0.0], [0.5, 0.5]) - 0.5f64.hypot(0.5)).abs() < 1e-15);
    }

    #[test]
    fn op_norm_of_shear() {
        // [[1, t], [0, 1]] has norm (t + sqrt(t^2 + 4)) / 2
        let t = 3.0;
        let expect = (t + (t * t + 4.0f64).sqrt()) / 2.0;
        assert!((op_norm([[1.0, t], [0.0, 1.0]]) - expect).abs() < 1e-12);
        assert!((op_norm([[1.0, 0.0], [0.0, 1.0]]) - 1.0).abs() < 1e-15);
    }
}
