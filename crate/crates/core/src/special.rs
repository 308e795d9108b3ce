//! Cylinder functions of integer order.
//!
//! The forward model only needs `J0`, `J1` and the Hankel functions of the
//! second kind `H0⁽²⁾`, `H1⁽²⁾`, possibly at complex arguments (lossy
//! backgrounds put the wavenumber in the fourth quadrant). Small arguments use
//! the ascending series, large ones the Hankel asymptotic expansion; the
//! crossover sits where both are accurate to roughly 1e-12.
//!
//! [`bessel_jn`] / [`bessel_yn`] provide real-argument integer orders for the
//! partial-wave cylinder solution used in the test oracles.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// |z| at or above which the asymptotic expansion is used.
const ASYMPTOTIC_CROSSOVER: f64 = 14.0;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// `J0(z)`, `J1(z)`, `Y0(z)`, `Y1(z)` for complex `z` with `Re z > 0`.
#[derive(Debug, Clone, Copy)]
pub struct CylinderFns {
    pub j0: Complex64,
    pub j1: Complex64,
    pub y0: Complex64,
    pub y1: Complex64,
}

impl CylinderFns {
    pub fn h0_2(&self) -> Complex64 {
        self.j0 - J * self.y0
    }

    pub fn h1_2(&self) -> Complex64 {
        self.j1 - J * self.y1
    }
}

/// Evaluates `J0`, `J1`, `Y0`, `Y1` at `z`.
///
/// Panics if `z` is zero or has a non-positive real part; callers in this
/// crate guarantee a positive real part through the background wavenumber.
pub fn cylinder_fns(z: Complex64) -> CylinderFns {
    assert!(z.re > 0.0, "cylinder functions need Re z > 0, got {z}");
    if z.norm() < ASYMPTOTIC_CROSSOVER {
        series(z)
    } else {
        let (h0_1, h0_2) = hankel_asymptotic(0, z);
        let (h1_1, h1_2) = hankel_asymptotic(1, z);
        CylinderFns {
            j0: 0.5 * (h0_1 + h0_2),
            j1: 0.5 * (h1_1 + h1_2),
            y0: (h0_1 - h0_2) / (2.0 * J),
            y1: (h1_1 - h1_2) / (2.0 * J),
        }
    }
}

/// `H0⁽²⁾(z)`, evaluated directly in the asymptotic region so that the
/// exponentially small value keeps its relative accuracy.
pub fn hankel0_2(z: Complex64) -> Complex64 {
    if z.norm() < ASYMPTOTIC_CROSSOVER {
        series(z).h0_2()
    } else {
        hankel_asymptotic(0, z).1
    }
}

/// `H1⁽²⁾(z)`.
pub fn hankel1_2(z: Complex64) -> Complex64 {
    if z.norm() < ASYMPTOTIC_CROSSOVER {
        series(z).h1_2()
    } else {
        hankel_asymptotic(1, z).1
    }
}

/// `J1(z)`.
pub fn bessel_j1(z: Complex64) -> Complex64 {
    cylinder_fns(z).j1
}

fn series(z: Complex64) -> CylinderFns {
    let q = 0.25 * z * z;
    let log_term = (0.5 * z).ln() + EULER_GAMMA;

    // J0 = Σ (-q)^k / (k!)²,   Y0 = (2/π)[log_term·J0 + Σ (-1)^{k+1} H_k q^k/(k!)²]
    let mut j0 = Complex64::new(1.0, 0.0);
    let mut y0_sum = Complex64::new(0.0, 0.0);
    // J1 = (z/2) Σ (-q)^k / (k!(k+1)!)
    // Y1 = -2/(πz) + (2/π) log(z/2) J1 − (1/π)(z/2) Σ (-q)^k [ψ(k+1)+ψ(k+2)] / (k!(k+1)!)
    let mut j1_sum = Complex64::new(1.0, 0.0);
    let mut y1_sum = Complex64::new(-2.0 * EULER_GAMMA + 1.0, 0.0);

    let mut term0 = Complex64::new(1.0, 0.0);
    let mut term1 = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term0 *= -q / (kf * kf);
        term1 *= -q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        j0 += term0;
        y0_sum -= term0 * harmonic;
        j1_sum += term1;
        // ψ(k+1) + ψ(k+2) = −2γ + 2H_k + 1/(k+1)
        y1_sum += term1 * (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0));
        if term0.norm() < 1e-18 * j0.norm().max(1e-300) && term1.norm() < 1e-18 {
            break;
        }
    }
    let half = 0.5 * z;
    let j1 = half * j1_sum;
    let y0 = (2.0 / PI) * (log_term * j0 + y0_sum);
    let y1 = -2.0 / (PI * z) + (2.0 / PI) * (0.5 * z).ln() * j1 - (half / PI) * y1_sum;
    CylinderFns { j0, j1, y0, y1 }
}

/// Hankel asymptotic expansion; returns `(H⁽¹⁾_n(z), H⁽²⁾_n(z))`.
fn hankel_asymptotic(order: u32, z: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0 * f64::from(order * order);
    let phase = z - (f64::from(order) * 0.5 * PI + FRAC_PI_4);
    let amp = (2.0 / (PI * z)).sqrt();

    // Σ (±i)^k a_k / z^k, a_k = Π_{m=1..k} (μ − (2m−1)²) / (k! 8^k)
    let mut sum_1 = Complex64::new(1.0, 0.0);
    let mut sum_2 = Complex64::new(1.0, 0.0);
    let mut a_over_zk = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a_over_zk *= (mu - odd * odd) / (kf * 8.0) / z;
        let mag = a_over_zk.norm();
        // Stop at the smallest term of the divergent series.
        if mag > last {
            break;
        }
        last = mag;
        let i_k = J.powi(k);
        sum_1 += i_k * a_over_zk;
        sum_2 += i_k.conj() * a_over_zk;
        if mag < 1e-17 {
            break;
        }
    }
    let h1 = amp * (J * phase).exp() * sum_1;
    let h2 = amp * (-J * phase).exp() * sum_2;
    (h1, h2)
}

/// `J_n(x)` for real `x ≥ 0`, by Miller's downward recurrence normalised with
/// `J0 + 2ΣJ_{2k} = 1`.
pub fn bessel_jn(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n = n as usize;
    let start = {
        let m = n.max(x as usize) + 30 + (x.sqrt() * 10.0) as usize;
        m + (m % 2)
    };
    let mut next = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (0..start).rev() {
        // J_k = (2(k+1)/x) J_{k+1} − J_{k+2}
        let prev = 2.0 * (k as f64 + 1.0) / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
        if k == n {
            result = cur;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * cur;
        }
    }
    norm += cur;
    result / norm
}

/// `Y_n(x)` for real `x > 0` by upward recurrence from `Y0`, `Y1`.
pub fn bessel_yn(n: u32, x: f64) -> f64 {
    let fns = cylinder_fns(Complex64::new(x, 0.0));
    let (mut y_prev, mut y) = (fns.y0.re, fns.y1.re);
    if n == 0 {
        return y_prev;
    }
    for k in 1..n {
        let next = 2.0 * k as f64 / x * y - y_prev;
        y_prev = y;
        y = next;
    }
    y
}
