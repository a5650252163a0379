//! Brute-force references shared by the test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

/// `min_M max_psi D` on grids: pure qubit states `cos(t/2)|0> + e^{ip} sin(t/2)|1>`
/// and incoherent two-outcome `M` with `<i|M_0|i> = m_i`.
pub fn qubit_grid_oracle(a: [[f64; 3]; 2], distance: impl Fn(&[f64; 2], &[f64; 2]) -> f64) -> f64 {
    // component 0 of the measurement as (a00, re a01, im a01); component 1 = I - it
    // 101 x 100 ~ 10^4 states; the polar grid contains the equator
    let (polar, azimuthal) = (101, 100);
    let mut probs = Vec::with_capacity(polar * azimuthal);
    for i in 0..polar {
        let t = PI * i as f64 / (polar - 1) as f64;
        for j in 0..azimuthal {
            let p = 2.0 * PI * j as f64 / azimuthal as f64;
            let (w0, w1) = ((t / 2.0).cos().powi(2), (t / 2.0).sin().powi(2));
            let cross = 2.0 * (t / 2.0).cos() * (t / 2.0).sin();
            let [a00, re, im] = a[0];
            let a11 = a[1][0];
            let pa = w0 * a00 + w1 * a11 + cross * (re * p.cos() - im * p.sin());
            probs.push((pa.clamp(0.0, 1.0), w0, w1));
        }
    }
    let grid = 50;
    let mut best = f64::INFINITY;
    for m0 in 0..=grid {
        for m1 in 0..=grid {
            let (m0, m1) = (m0 as f64 / grid as f64, m1 as f64 / grid as f64);
            let worst = probs
                .iter()
                .map(|&(pa, w0, w1)| {
                    let q = w0 * m0 + w1 * m1;
                    distance(&[pa, 1.0 - pa], &[q, 1.0 - q])
                })
                .fold(0.0, f64::max);
            best = best.min(worst);
        }
    }
    best
}

pub fn re_bits(p: &[f64; 2], q: &[f64; 2]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| if x <= 0.0 { 0.0 } else if y <= 0.0 { f64::INFINITY } else { x * (x / y).log2() })
        .sum()
}

pub fn tv(p: &[f64; 2], q: &[f64; 2]) -> f64 {
    0.5 * ((p[0] - q[0]).abs() + (p[1] - q[1]).abs())
}
