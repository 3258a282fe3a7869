#![allow(dead_code)]

//! Student's t two-sided p-values by direct numerical integration.

/// Two-sided p-value of Student's t by Simpson integration of the density.
pub fn simpson_p_value(t: f64, df: usize) -> f64 {
    // Gamma at integer and half-integer points: Gamma(1) = 1, Gamma(1/2) = sqrt(pi),
    // Gamma(x + 1) = x Gamma(x)
    fn gamma_half(twice: usize) -> f64 {
        let (mut x, mut g) = if twice % 2 == 0 { (1.0, 1.0) } else { (0.5, std::f64::consts::PI.sqrt()) };
        while (2.0 * x) as usize != twice {
            g *= x;
            x += 1.0;
        }
        g
    }
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    let density = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let t = t.abs();
    let n = 20_000;
    let h = t / n as f64;
    let mut s = density(0.0) + density(t);
    for i in 1..n {
        s += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let central = s * h / 3.0;
    1.0 - 2.0 * central
}
