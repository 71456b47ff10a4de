//! Gamma function, the hypergeometric function needed for `H̄⁽⁸⁾`, quadrature and root finding.

use std::f64::consts::PI;

use crate::error::{Result, SbcError};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real `x`, with reflection below 1/2.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(SbcError::Domain(format!("gamma of non-finite {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(SbcError::Singular(format!("gamma pole at {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    if x == x.floor() && x <= 21.0 {
        return (1..x as u64).map(|k| k as f64).product();
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// `−24·3^{1/6}·√π·Γ(−5/6)/Γ(2/3)`, the limit of `H⁸(ν)/ν^{8/3}`.
pub fn gamma_limit_constant() -> f64 {
    -24.0 * 3f64.powf(1.0 / 6.0) * PI.sqrt() * gamma_unchecked(-5.0 / 6.0) / gamma_unchecked(2.0 / 3.0)
}

/// Gauss series `₂F₁(a, b; c; z)` for `|z| < 1`.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..10_000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `₂F₁(1/2, 2/3; 3/2; z)` for `z ≤ 0`.
pub fn hyp2f1_special(z: f64) -> Result<f64> {
    if !(z <= 0.0) {
        return Err(SbcError::Domain(format!("hyp2f1_special needs z <= 0, got {z}")));
    }
    let (a, b, c) = (0.5, 2.0 / 3.0, 1.5);
    if z >= -0.5 {
        return Ok(hyp2f1_series(a, b, c, z));
    }
    if z >= -2.0 {
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * hyp2f1_series(a, c - b, c, w));
    }
    // 1/z connection formula; the first branch collapses because a − c + 1 = 0.
    let g = gamma_unchecked;
    let t1 = g(c) * g(b - a) / (g(b) * g(c - a)) * (-z).powf(-a);
    let t2 = g(c) * g(a - b) / (g(a) * g(c - b)) * (-z).powf(-b) * hyp2f1_series(b, b - c + 1.0, b - a + 1.0, 1.0 / z);
    Ok(t1 + t2)
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature to a relative tolerance.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, _) = gk15(&f, a, b);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut total = 0.0;
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    while let Some((lo, hi, _, depth)) = stack.pop() {
        let (v, err) = gk15(&f, lo, hi);
        let width_share = ((hi - lo) / (b - a)).abs();
        if err <= rel_tol * scale * width_share.max(1e-3) || err <= 1e-300 || depth > 50 {
            total += v;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.0, depth + 1));
            stack.push((mid, hi, 0.0, depth + 1));
        }
    }
    total
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SbcError::Domain(format!("root not bracketed on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Err(SbcError::Invariant("brent did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_fn(5.5).unwrap() - 52.342_777_784_553_52).abs() < 1e-12);
        let g = gamma_fn(-5.0 / 6.0).unwrap();
        assert!((g - gamma_fn(1.0 / 6.0).unwrap() / (-5.0 / 6.0)).abs() < 1e-12 * g.abs());
        assert!(gamma_fn(-2.0).is_err());
    }

    #[test]
    fn limit_constant() {
        assert!((gamma_limit_constant() - 251.999_105_552_093_28).abs() < 1e-9);
    }

    #[test]
    fn hyp2f1_branches_agree() {
        for z in [-0.49f64, -0.51, -1.99, -2.01] {
            let direct = {
                let w = z / (z - 1.0);
                (1.0 - z).powf(-0.5) * hyp2f1_series(0.5, 1.5 - 2.0 / 3.0, 1.5, w)
            };
            let v = hyp2f1_special(z).unwrap();
            assert!((v - direct).abs() < 1e-13 * v.abs(), "z={z}");
        }
        let z: f64 = -2.5;
        let w = z / (z - 1.0);
        let pfaff = (1.0 - z).powf(-0.5) * hyp2f1_series(0.5, 1.5 - 2.0 / 3.0, 1.5, w);
        assert!((hyp2f1_special(z).unwrap() - pfaff).abs() < 1e-12);
        assert_eq!(hyp2f1_special(0.0).unwrap(), 1.0);
        assert!(hyp2f1_special(0.1).is_err());
    }

    #[test]
    fn quadrature_polynomial_and_smooth() {
        let v = integrate_adaptive(|x| x * x, 0.0, 3.0, 1e-14);
        assert!((v - 9.0).abs() < 1e-13);
        let v = integrate_adaptive(|x| (1.0 + 3.0 * x * x).powf(-11.0 / 3.0), -20.0, 20.0, 1e-13);
        let w = 2.0 * integrate_adaptive(|x| (1.0 + 3.0 * x * x).powf(-11.0 / 3.0), 0.0, 20.0, 1e-13);
        assert!((v - w).abs() < 1e-13);
    }

    #[test]
    fn brent_finds_root() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }
}
