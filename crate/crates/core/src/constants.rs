//! Mass parameters and every constant derived from them.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::coeff::{exact_cbrt, q_to_f64, qi, rationalize, Coeff, Q};
use crate::error::{Result, SbcError};
use crate::special::gamma_limit_constant;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassParams {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl MassParams {
    pub fn new(m1: f64, m2: f64, m3: f64, m4: f64) -> Result<Self> {
        let m = MassParams { m1, m2, m3, m4 };
        m.validate()?;
        Ok(m)
    }

    pub fn equal() -> Self {
        MassParams { m1: 1.0, m2: 1.0, m3: 1.0, m4: 1.0 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.m1, self.m2, self.m3, self.m4]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.as_array().iter().enumerate() {
            if !m.is_finite() || *m <= 0.0 {
                return Err(SbcError::Domain(format!("mass m{} = {} must be positive and finite", i + 1, m)));
            }
        }
        Ok(())
    }
}

/// The constants of the reduced Hamiltonian and of the expanded coupling potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DerivedConstants {
    pub masses: MassParams,
    pub M1: f64,
    pub M2: f64,
    pub k1: f64,
    pub k2: f64,
    pub mu: f64,
    pub d: [f64; 4],
    pub c: [f64; 4],
    pub a1: f64,
    pub a2: f64,
    pub C: [f64; 4],
    pub b0: f64,
    pub b12: f64,
    pub b22: f64,
    pub b13: f64,
    pub b23: f64,
    pub b14: f64,
    pub b24: f64,
    pub bc: f64,
    pub btilde_c: f64,
}

impl DerivedConstants {
    /// `a_i^{-1/3}`, the factor in front of the energy equations.
    pub fn al(&self, i: usize) -> f64 {
        [self.a1, self.a2][i].cbrt().recip()
    }

    /// Resonant coefficient `b_c a_i^{-1/3}`.
    pub fn beta(&self, i: usize) -> f64 {
        self.bc * self.al(i)
    }

    /// Predicted block-map coefficient `b̃_c a_i^{-1/3}`.
    pub fn block_coefficient(&self, i: usize) -> f64 {
        self.btilde_c * self.al(i)
    }

    /// The four `(d_i, A_i, B_i)` triples of `K = Σ d_i / (x + A_i z1² + B_i z2²)`.
    pub fn potential_terms(&self) -> [(f64, f64, f64); 4] {
        let [c1, c2, c3, c4] = self.C;
        [(self.d[0], c2, -c4), (self.d[1], c2, c3), (self.d[2], -c1, -c4), (self.d[3], -c1, c3)]
    }
}

pub fn derive_constants(m: &MassParams) -> Result<DerivedConstants> {
    m.validate()?;
    let [m1, m2, m3, m4] = m.as_array();
    let big_m1 = m1 * m2 / (m1 + m2);
    let big_m2 = m3 * m4 / (m3 + m4);
    let k1 = m1 * m2;
    let k2 = m3 * m4;
    let mu = (m1 + m2 + m3 + m4) / ((m1 + m2) * (m3 + m4));
    let d = [m1 * m3, m1 * m4, m2 * m3, m2 * m4];
    let c = [big_m1 / m2, big_m1 / m1, big_m2 / m4, big_m2 / m3];
    let a1 = 16.0 * big_m1 * k1 * k1;
    let a2 = 16.0 * big_m2 * k2 * k2;
    let s1 = a1.cbrt() / (8.0 * k1 * big_m1);
    let s2 = a2.cbrt() / (8.0 * k2 * big_m2);
    let cc = [s1 * c[0], s1 * c[1], s2 * c[2], s2 * c[3]];
    let [cap1, cap2, cap3, cap4] = cc;
    let b0 = d.iter().sum();
    let b12 = cap1.powi(2) * (d[2] + d[3]) + cap2.powi(2) * (d[0] + d[1]);
    let b13 = cap1.powi(3) * (d[2] + d[3]) - cap2.powi(3) * (d[0] + d[1]);
    let b14 = cap1.powi(4) * (d[2] + d[3]) + cap2.powi(4) * (d[0] + d[1]);
    let b22 = cap4.powi(2) * (d[0] + d[2]) + cap3.powi(2) * (d[1] + d[3]);
    let b23 = cap4.powi(3) * (d[0] + d[2]) - cap3.powi(3) * (d[1] + d[3]);
    let b24 = cap4.powi(4) * (d[0] + d[2]) + cap3.powi(4) * (d[1] + d[3]);
    let bc = 6.0
        * (cap1.powi(2) * (cap4.powi(2) * d[2] + cap3.powi(2) * d[3])
            + cap2.powi(2) * (cap4.powi(2) * d[0] + cap3.powi(2) * d[1]));
    let btilde_c = bc * gamma_limit_constant();
    Ok(DerivedConstants {
        masses: *m,
        M1: big_m1,
        M2: big_m2,
        k1,
        k2,
        mu,
        d,
        c,
        a1,
        a2,
        C: cc,
        b0,
        b12,
        b22,
        b13,
        b23,
        b14,
        b24,
        bc,
        btilde_c,
    })
}

/// Constants entering the Taylor expansion of the regularised field.
///
/// `kcoef[(p, q)]` multiplies `z1^{2p} z2^{2q} x^{-(p+q+1)}` in the expansion of `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct NfConstants<C: Coeff> {
    pub al: [C; 2],
    pub mu: C,
    pub kcoef: BTreeMap<(u8, u8), C>,
    /// False when a cube root had to be rationalised.
    pub exact: bool,
}

impl<C: Coeff> NfConstants<C> {
    pub fn bc(&self) -> C {
        self.kcoef.get(&(2, 2)).cloned().unwrap_or_else(C::zero)
    }
}

/// Largest denominator used when a mass or cube root has to be rationalised.
pub const RATIONALIZE_DEN: u64 = 1_000_000_000_000;

struct RationalStructure {
    cbrt: [Q; 2],
    cbrt_f64: [f64; 2],
    exact: bool,
    mu: Q,
    /// `(d_i, Â_i, B̂_i)` with the cube roots factored out of `A_i`, `B_i`.
    terms: [(Q, Q, Q); 4],
}

fn rational_structure(m: &MassParams) -> Result<RationalStructure> {
    m.validate()?;
    let [m1, m2, m3, m4] = m.as_array().map(|x| rationalize(x, 1_000_000_000));
    let big_m1 = &m1 * &m2 / (&m1 + &m2);
    let big_m2 = &m3 * &m4 / (&m3 + &m4);
    let k1 = &m1 * &m2;
    let k2 = &m3 * &m4;
    let mu = (&m1 + &m2 + &m3 + &m4) / ((&m1 + &m2) * (&m3 + &m4));
    let d = [&m1 * &m3, &m1 * &m4, &m2 * &m3, &m2 * &m4];
    let c = [&big_m1 / &m2, &big_m1 / &m1, &big_m2 / &m4, &big_m2 / &m3];
    let a1 = qi(16) * &big_m1 * &k1 * &k1;
    let a2 = qi(16) * &big_m2 * &k2 * &k2;
    let mut exact = true;
    let mut root = |a: &Q| match exact_cbrt(a) {
        Some(r) => (q_to_f64(&r), r),
        None => {
            exact = false;
            let f = q_to_f64(a).cbrt();
            (f, rationalize(f, RATIONALIZE_DEN))
        }
    };
    let (f1, r1) = root(&a1);
    let (f2, r2) = root(&a2);
    let s1 = qi(1) / (qi(8) * &k1 * &big_m1);
    let s2 = qi(1) / (qi(8) * &k2 * &big_m2);
    let hat = [&s1 * &c[0], &s1 * &c[1], &s2 * &c[2], &s2 * &c[3]];
    let terms = [
        (d[0].clone(), hat[1].clone(), -hat[3].clone()),
        (d[1].clone(), hat[1].clone(), hat[2].clone()),
        (d[2].clone(), -hat[0].clone(), -hat[3].clone()),
        (d[3].clone(), -hat[0].clone(), hat[2].clone()),
    ];
    Ok(RationalStructure { cbrt: [r1, r2], cbrt_f64: [f1, f2], exact, mu, terms })
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

fn qpow(x: &Q, n: u32) -> Q {
    (0..n).fold(<Q as One>::one(), |acc, _| acc * x)
}

/// The rational part of the `(p, q)` expansion coefficient.
fn kcoef_rational(rs: &RationalStructure, p: u32, qq: u32) -> Q {
    let mut s = <Q as Zero>::zero();
    for (d, a, b) in &rs.terms {
        s += d * qpow(a, p) * qpow(b, qq);
    }
    let sign = if (p + qq) % 2 == 0 { 1 } else { -1 };
    s * qi(sign * binomial(p + qq, p))
}

/// Exact constants. Cube roots are exact when `a_i` is a rational cube, rationalised otherwise.
pub fn nf_constants_exact(m: &MassParams, max_degree: usize) -> Result<NfConstants<Q>> {
    let rs = rational_structure(m)?;
    let mut kcoef = BTreeMap::new();
    let max_pq = (max_degree / 2) as u32;
    for p in 0..=max_pq {
        for qq in 0..=(max_pq - p) {
            let r = kcoef_rational(&rs, p, qq);
            if !Zero::is_zero(&r) {
                kcoef.insert((p as u8, qq as u8), r * qpow(&rs.cbrt[0], p) * qpow(&rs.cbrt[1], qq));
            }
        }
    }
    Ok(NfConstants {
        al: [qi(1) / &rs.cbrt[0], qi(1) / &rs.cbrt[1]],
        mu: rs.mu.clone(),
        kcoef,
        exact: rs.exact,
    })
}

/// Floating-point constants with the exact sparsity pattern of the expansion.
pub fn nf_constants_f64(m: &MassParams, max_degree: usize) -> Result<NfConstants<f64>> {
    let rs = rational_structure(m)?;
    let mut kcoef = BTreeMap::new();
    let max_pq = (max_degree / 2) as u32;
    for p in 0..=max_pq {
        for qq in 0..=(max_pq - p) {
            let r = kcoef_rational(&rs, p, qq);
            if !Zero::is_zero(&r) {
                let v = q_to_f64(&r) * rs.cbrt_f64[0].powi(p as i32) * rs.cbrt_f64[1].powi(qq as i32);
                kcoef.insert((p as u8, qq as u8), v);
            }
        }
    }
    Ok(NfConstants {
        al: [1.0 / rs.cbrt_f64[0], 1.0 / rs.cbrt_f64[1]],
        mu: q_to_f64(&rs.mu),
        kcoef,
        exact: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::q;

    #[test]
    fn equal_masses() {
        let c = derive_constants(&MassParams::equal()).unwrap();
        assert_eq!((c.M1, c.M2, c.k1, c.k2, c.mu), (0.5, 0.5, 1.0, 1.0, 1.0));
        assert_eq!((c.a1, c.a2), (8.0, 8.0));
        for i in 0..4 {
            assert_eq!(c.c[i], 0.5);
            assert!((c.C[i] - 0.25).abs() < 1e-15);
        }
        assert_eq!(c.b0, 4.0);
        assert!((c.b12 - 0.25).abs() < 1e-15 && (c.b22 - 0.25).abs() < 1e-15);
        assert!(c.b13.abs() < 1e-16 && c.b23.abs() < 1e-16);
        assert!((c.b14 - 1.0 / 64.0).abs() < 1e-16);
        assert!((c.bc - 3.0 / 32.0).abs() < 1e-16);
        assert!((c.btilde_c - 23.624916145508745).abs() < 1e-10);
    }

    #[test]
    fn exact_table_equal_masses() {
        let k = nf_constants_exact(&MassParams::equal(), 9).unwrap();
        assert!(k.exact);
        assert_eq!(k.al, [q(1, 2), q(1, 2)]);
        assert_eq!(k.kcoef[&(0, 0)], qi(4));
        assert_eq!(k.kcoef[&(2, 0)], q(1, 4));
        assert_eq!(k.kcoef[&(2, 2)], q(3, 32));
        assert!(!k.kcoef.contains_key(&(1, 0)));
        assert!(!k.kcoef.contains_key(&(1, 1)));
        assert!(!k.kcoef.contains_key(&(3, 0)), "b13 vanishes for equal masses");
    }

    #[test]
    fn no_coupled_terms_below_degree_eight() {
        let m = MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let k = nf_constants_exact(&m, 11).unwrap();
        for (&(p, qq), _) in &k.kcoef {
            if p > 0 && qq > 0 {
                assert!(2 * (p + qq) >= 8, "coupled ({p},{qq})");
            }
            assert!(!(p + qq == 1), "linear terms vanish");
        }
        let c = derive_constants(&m).unwrap();
        let f = nf_constants_f64(&m, 11).unwrap();
        assert!((f.kcoef[&(2, 2)] - c.bc).abs() < 1e-12 * c.bc);
        assert!((f.kcoef[&(3, 0)] - c.b13).abs() < 1e-14);
    }

    #[test]
    fn invalid_masses() {
        assert!(MassParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(derive_constants(&MassParams { m1: f64::NAN, m2: 1.0, m3: 1.0, m4: 1.0 }).is_err());
    }
}
