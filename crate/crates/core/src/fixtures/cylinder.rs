//! Partial-wave solution for a homogeneous dielectric cylinder illuminated by
//! a unit line source `H0⁽²⁾(k |r - r_t|)`, time dependence `exp(+jωt)`.

use crate::special::{bessel_jn, bessel_yn};
use num_complex::Complex64;

fn jn(n: i32, x: f64) -> f64 {
    let v = bessel_jn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 { -v } else { v }
}

fn yn(n: i32, x: f64) -> f64 {
    let v = bessel_yn(n.unsigned_abs(), x);
    if n < 0 && n % 2 != 0 { -v } else { v }
}

fn hn(n: i32, x: f64) -> Complex64 {
    Complex64::new(jn(n, x), -yn(n, x))
}

fn jn_prime(n: i32, x: f64) -> f64 {
    0.5 * (jn(n - 1, x) - jn(n + 1, x))
}

fn hn_prime(n: i32, x: f64) -> Complex64 {
    0.5 * (hn(n - 1, x) - hn(n + 1, x))
}

/// Scattered field at `rx` for a cylinder of relative permittivity `eps_r`
/// and radius `a` centered at `center`, in a lossless background of
/// wavenumber `k`.
pub fn scattered(k: f64, eps_r: f64, a: f64, center: [f64; 2], tx: [f64; 2], rx: [f64; 2]) -> Complex64 {
    let k1 = k * eps_r.sqrt();
    let polar = |p: [f64; 2]| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        (dx.hypot(dy), dy.atan2(dx))
    };
    let (rt, pt) = polar(tx);
    let (r, p) = polar(rx);
    let n_max = (k1 * a).ceil() as i32 + 25;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=n_max {
        let num = k * jn(n, k1 * a) * jn_prime(n, k * a) - k1 * jn_prime(n, k1 * a) * jn(n, k * a);
        let den = k1 * jn_prime(n, k1 * a) * hn(n, k * a) - k * jn(n, k1 * a) * hn_prime(n, k * a);
        let term = hn(n, k * rt) * (num / den) * hn(n, k * r);
        let weight = if n == 0 { 1.0 } else { 2.0 * (n as f64 * (p - pt)).cos() };
        sum += term * weight;
    }
    sum
}
