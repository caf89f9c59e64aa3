//! Laguerre polynomials and Fock-basis displacement matrix elements.

use num_complex::Complex64;

use crate::scalar::Real;

/// Generalized Laguerre polynomial L_n^{(k)}(x), by upward recurrence in n.
pub fn laguerre<T: Real>(n: usize, k: usize, x: T) -> T {
    let kk = T::from_usize(k).unwrap();
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() + kk - x;
    for j in 1..n {
        let jj = T::from_usize(j).unwrap();
        let next = ((T::lit(2.0) * jj + T::one() + kk - x) * cur - (jj + kk) * prev) / (jj + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Matrix elements along the k-th lower diagonal of D(α):
/// out[n] = ⟨n+k|D(α)|n⟩ for n = 0..len.
///
/// Uses the closed form √(n!/(n+k)!) α^k e^{−|α|²/2} L_n^{(k)}(|α|²) with the
/// prefactor folded into the recurrence and an explicit exponent carried
/// separately so that neither the polynomial nor the prefactor overflows.
pub(crate) fn displacement_diagonal(alpha: Complex64, k: usize, len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if len == 0 {
        return out;
    }
    let x = alpha.norm_sqr();
    let r = alpha.norm();
    if r == 0.0 {
        if k == 0 {
            out.iter_mut().for_each(|v| *v = Complex64::new(1.0, 0.0));
        }
        return out;
    }
    let phase = Complex64::from_polar(1.0, alpha.arg() * k as f64);
    let kf = k as f64;

    // F_n = |α|^k e^{−x/2} √(n!/(n+k)!) L_n^{(k)}(x), stored as mantissa·e^{log_scale}
    let ln_f0 = kf * r.ln() - 0.5 * x - 0.5 * ln_factorial(k);
    let mut log_scale = ln_f0;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    const RESCALE: f64 = 1e100;
    for n in 0..len {
        if n > 0 {
            // F_{n} from F_{n-1}, F_{n-2}
            let m = (n - 1) as f64;
            let r_m = ((m + 1.0) / (m + kf + 1.0)).sqrt();
            let r_prev = if n >= 2 { (m / (m + kf)).sqrt() } else { 0.0 };
            let next = ((2.0 * m + 1.0 + kf - x) * r_m * cur - (m + kf) * r_m * r_prev * prev) / (m + 1.0);
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
            }
        }
        let magnitude = cur * log_scale.exp();
        out[n] = phase * magnitude;
    }
    out
}

/// ln(n!)
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}
