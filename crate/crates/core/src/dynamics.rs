//! Coordinate charts, the coupling potential and the regularised vector fields.
//!
//! The hub chart is the generalised Levi-Civita chart `(z1, z2, x, h1, h2, y)`; every other
//! chart transforms through it. Only the branch `u_i = +√(1 + h_i z_i²)` and `x > 0` are covered.

use nalgebra::{Complex, Matrix6};
use serde::{Deserialize, Serialize};

use crate::ad::{jacobian_of, Dual, Real};
use crate::constants::{nf_constants_f64, DerivedConstants};
use crate::error::{Result, SbcError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartId {
    /// `(Q1, Q2, x, P1, P2, y)`
    Physical,
    /// `(z̃1, z̃2, x, u1, u2, y)`
    LeviCivita,
    /// `(z1, z2, x, h1, h2, y)`
    GeneralisedLC,
    /// `(w1, w2, x, h1, h2, y)` with `(w1, w2) = ½(z1 + z2, z1 − z2)`
    RotatedGLC,
    /// `(r, θ, x, h1, h2, y)`
    PolarBlowup,
    /// `(û, v̂, x, h1, h2, y)` with `(w1, w2) = (û, û v̂)`
    DirZ1,
    /// `(ū, v̄, x, h1, h2, y)` with `(w1, w2) = (ū v̄, v̄)`
    DirZ2,
    /// `(u, v, x, h1, h2, y)` normal-form coordinates near the hyperbolic manifold
    NormalForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartState {
    pub chart: ChartId,
    pub coords: [f64; 6],
}

impl ChartState {
    pub fn new(chart: ChartId, coords: [f64; 6]) -> Self {
        ChartState { chart, coords }
    }

    pub fn glc(coords: [f64; 6]) -> Self {
        Self::new(ChartId::GeneralisedLC, coords)
    }

    /// `dt/ds` relating physical time `t` to the time `s` of this chart's vector field.
    pub fn clock_factor(&self) -> f64 {
        let c = &self.coords;
        match self.chart {
            ChartId::Physical => 1.0,
            ChartId::LeviCivita | ChartId::GeneralisedLC => c[0] * c[0] * c[1] * c[1],
            ChartId::RotatedGLC => {
                let (z1, z2) = (c[0] + c[1], c[0] - c[1]);
                z1 * z1 * z2 * z2
            }
            ChartId::PolarBlowup => {
                let (s, co) = c[1].sin_cos();
                c[0].powi(3) * s * s * co * co
            }
            ChartId::DirZ1 | ChartId::NormalForm => c[0].powi(3) * (1.0 - c[1] * c[1]).powi(2),
            ChartId::DirZ2 => c[1].powi(3) * (c[0] * c[0] - 1.0).powi(2),
        }
    }
}

fn check_branch(z: f64, h: f64, which: usize) -> Result<()> {
    if 1.0 + h * z * z > 0.0 {
        Ok(())
    } else {
        Err(SbcError::Domain(format!("branch condition 1 + h{which} z{which}^2 > 0 violated")))
    }
}

fn check_glc(s: &[f64; 6]) -> Result<()> {
    if s.iter().any(|v| !v.is_finite()) {
        return Err(SbcError::Domain("non-finite state".into()));
    }
    check_branch(s[0], s[3], 1)?;
    check_branch(s[1], s[4], 2)
}

/// `K`, `∂K/∂z1`, `∂K/∂z2`, `∂K/∂x` from the exact four-term sum.
pub fn potential_parts<T: Real>(z1: T, z2: T, x: T, c: &DerivedConstants) -> (T, T, T, T) {
    let z1s = z1 * z1;
    let z2s = z2 * z2;
    let two = T::cst(2.0);
    let mut k = T::cst(0.0);
    let mut k1 = T::cst(0.0);
    let mut k2 = T::cst(0.0);
    let mut kx = T::cst(0.0);
    for (d, a, b) in c.potential_terms() {
        let den = x + T::cst(a) * z1s + T::cst(b) * z2s;
        let inv = T::cst(1.0) / den;
        let t = T::cst(d) * inv;
        let t2 = t * inv;
        k = k + t;
        k1 = k1 - two * T::cst(a) * z1 * t2;
        k2 = k2 - two * T::cst(b) * z2 * t2;
        kx = kx - t2;
    }
    (k, k1, k2, kx)
}

fn min_denominator(z1: f64, z2: f64, x: f64, c: &DerivedConstants) -> f64 {
    c.potential_terms().iter().map(|(_, a, b)| (x + a * z1 * z1 + b * z2 * z2).abs()).fold(f64::INFINITY, f64::min)
}

/// The coupling potential `K(z1, z2, x)` as the exact four-term sum.
pub fn potential_exact(z1: f64, z2: f64, x: f64, c: &DerivedConstants) -> Result<f64> {
    let m = min_denominator(z1, z2, x, c);
    if !(m > 1e-300) || !m.is_finite() {
        return Err(SbcError::Singular(format!("potential denominator vanishes at ({z1}, {z2}, {x})")));
    }
    Ok(potential_parts(z1, z2, x, c).0)
}

/// One term `coeff · z1^{pz1} z2^{pz2} x^{x_power}` of the truncated potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialTerm {
    pub pz1: u32,
    pub pz2: u32,
    pub x_power: i32,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSeries {
    pub degree: u32,
    pub terms: Vec<PotentialTerm>,
}

impl PotentialSeries {
    pub fn coefficient(&self, pz1: u32, pz2: u32, x_power: i32) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.pz1 == pz1 && t.pz2 == pz2 && t.x_power == x_power)
            .map(|t| t.coeff)
            .sum()
    }

    pub fn eval(&self, z1: f64, z2: f64, x: f64) -> f64 {
        self.terms.iter().map(|t| t.coeff * z1.powi(t.pz1 as i32) * z2.powi(t.pz2 as i32) * x.powi(t.x_power)).sum()
    }
}

/// Degree-`degree` truncation of `K`, with exactly vanishing coefficients omitted.
pub fn potential_series(c: &DerivedConstants, degree: u32) -> Result<PotentialSeries> {
    let table = nf_constants_f64(&c.masses, degree as usize)?;
    let terms = table
        .kcoef
        .iter()
        .filter(|((p, q), _)| 2 * (*p as u32 + *q as u32) <= degree)
        .map(|(&(p, q), &v)| PotentialTerm {
            pz1: 2 * p as u32,
            pz2: 2 * q as u32,
            x_power: -(p as i32 + q as i32 + 1),
            coeff: v,
        })
        .collect();
    Ok(PotentialSeries { degree, terms })
}

/// Right-hand side of the regularised system; `coupled = false` drops the potential.
pub fn glc_rhs<T: Real>(s: &[T; 6], c: &DerivedConstants, coupled: bool) -> [T; 6] {
    let [z1, z2, x, h1, h2, y] = *s;
    let one = T::cst(1.0);
    let u1 = (one + h1 * z1 * z1).sqrt();
    let u2 = (one + h2 * z2 * z2).sqrt();
    let z1s = z1 * z1;
    let z2s = z2 * z2;
    let zz = z1s * z2s;
    let xp = T::cst(c.mu) * zz * y;
    if !coupled {
        return [z2s * u1, z1s * u2, xp, T::cst(0.0), T::cst(0.0), T::cst(0.0)];
    }
    let (_, k1, k2, kx) = potential_parts(z1, z2, x, c);
    [
        z2s * u1,
        z1s * u2,
        xp,
        T::cst(2.0 * c.al(0)) * z2s * u1 * k1,
        T::cst(2.0 * c.al(1)) * z1s * u2 * k2,
        zz * kx,
    ]
}

pub fn vf_glc(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    expect_chart(s, ChartId::GeneralisedLC)?;
    check_glc(&s.coords)?;
    if min_denominator(s.coords[0], s.coords[1], s.coords[2], c) < 1e-300 {
        return Err(SbcError::Singular("potential denominator vanishes".into()));
    }
    Ok(glc_rhs(&s.coords, c, true))
}

pub fn vf_uncoupled(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    expect_chart(s, ChartId::GeneralisedLC)?;
    check_glc(&s.coords)?;
    Ok(glc_rhs(&s.coords, c, false))
}

/// Polar blow-up with time rescaled by `r`.
pub fn polar_rhs<T: Real>(s: &[T; 6], c: &DerivedConstants) -> [T; 6] {
    let [r, th, x, h1, h2, y] = *s;
    let one = T::cst(1.0);
    let (sn, cs) = (th.sin(), th.cos());
    let z1 = r * cs;
    let z2 = r * sn;
    let u1 = (one + h1 * z1 * z1).sqrt();
    let u2 = (one + h2 * z2 * z2).sqrt();
    let (_, k1, k2, kx) = potential_parts(z1, z2, x, c);
    let s2c2 = sn * sn * cs * cs;
    [
        r * sn * cs * (cs * u2 + sn * u1),
        cs * cs * cs * u2 - sn * sn * sn * u1,
        T::cst(c.mu) * r * r * r * y * s2c2,
        T::cst(2.0 * c.al(0)) * r * sn * sn * u1 * k1,
        T::cst(2.0 * c.al(1)) * r * cs * cs * u2 * k2,
        r * r * r * s2c2 * kx,
    ]
}

pub fn vf_polar(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    expect_chart(s, ChartId::PolarBlowup)?;
    let [r, th, ..] = s.coords;
    if !(r >= 0.0) {
        return Err(SbcError::Domain(format!("polar radius must be non-negative, got {r}")));
    }
    check_branch(r * th.cos(), s.coords[3], 1)?;
    check_branch(r * th.sin(), s.coords[4], 2)?;
    Ok(polar_rhs(&s.coords, c))
}

/// Total energy `½a1^{1/3}h1 + ½a2^{1/3}h2 + ½μy² − K`.
pub fn hamiltonian(s: &[f64; 6], c: &DerivedConstants) -> Result<f64> {
    let k = potential_exact(s[0], s[1], s[2], c)?;
    Ok(0.5 * c.a1.cbrt() * s[3] + 0.5 * c.a2.cbrt() * s[4] + 0.5 * c.mu * s[5] * s[5] - k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Glc,
    Uncoupled,
    Polar,
}

/// Analytic Jacobian by forward-mode differentiation.
pub fn jacobian(kind: FieldKind, s: &ChartState, c: &DerivedConstants) -> Result<Matrix6<f64>> {
    let j = match kind {
        FieldKind::Glc => {
            vf_glc(s, c)?;
            jacobian_of(|x: &[Dual<6>; 6]| glc_rhs(x, c, true), &s.coords)
        }
        FieldKind::Uncoupled => {
            vf_uncoupled(s, c)?;
            jacobian_of(|x: &[Dual<6>; 6]| glc_rhs(x, c, false), &s.coords)
        }
        FieldKind::Polar => {
            vf_polar(s, c)?;
            jacobian_of(|x: &[Dual<6>; 6]| polar_rhs(x, c), &s.coords)
        }
    };
    Ok(Matrix6::from_fn(|i, k| j[i][k]))
}

/// Eigenvalues sorted by real part.
pub fn eigenvalues(m: &Matrix6<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    ev
}

fn expect_chart(s: &ChartState, id: ChartId) -> Result<()> {
    if s.chart == id {
        Ok(())
    } else {
        Err(SbcError::Precondition(format!("expected chart {:?}, got {:?}", id, s.chart)))
    }
}

fn to_glc(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    let v = s.coords;
    let [_, _, x, _, _, y] = v;
    let cb = [c.a1.cbrt(), c.a2.cbrt()];
    let out = match s.chart {
        ChartId::GeneralisedLC => v,
        ChartId::Physical => {
            let lc = physical_to_lc(&v, c)?;
            lc_to_glc(&lc, &cb)?
        }
        ChartId::LeviCivita => lc_to_glc(&v, &cb)?,
        ChartId::RotatedGLC => [v[0] + v[1], v[0] - v[1], x, v[3], v[4], y],
        ChartId::PolarBlowup => {
            if v[0] < 0.0 {
                return Err(SbcError::Domain("negative polar radius".into()));
            }
            [v[0] * v[1].cos(), v[0] * v[1].sin(), x, v[3], v[4], y]
        }
        ChartId::DirZ1 => {
            let (w1, w2) = (v[0], v[0] * v[1]);
            [w1 + w2, w1 - w2, x, v[3], v[4], y]
        }
        ChartId::DirZ2 => {
            let (w1, w2) = (v[0] * v[1], v[1]);
            [w1 + w2, w1 - w2, x, v[3], v[4], y]
        }
        ChartId::NormalForm => {
            return Err(SbcError::Precondition("normal-form coordinates need the normal-form chart map".into()))
        }
    };
    check_glc(&out)?;
    Ok(out)
}

fn physical_to_lc(v: &[f64; 6], c: &DerivedConstants) -> Result<[f64; 6]> {
    let km = [c.k1 * c.M1, c.k2 * c.M2];
    let mut out = *v;
    for i in 0..2 {
        let qt = 4.0 * km[i] * v[i];
        if qt < 0.0 {
            return Err(SbcError::Domain(format!("Q{} must be non-negative on the covered branch", i + 1)));
        }
        let zt = (2.0 * qt).sqrt();
        let pt = v[3 + i] / (4.0 * km[i]);
        out[i] = zt;
        out[3 + i] = zt * pt;
    }
    Ok(out)
}

fn lc_to_physical(v: &[f64; 6], c: &DerivedConstants) -> Result<[f64; 6]> {
    let km = [c.k1 * c.M1, c.k2 * c.M2];
    let mut out = *v;
    for i in 0..2 {
        let zt = v[i];
        if zt == 0.0 {
            return Err(SbcError::Domain(format!("momentum undefined at z̃{} = 0", i + 1)));
        }
        out[i] = 0.5 * zt * zt / (4.0 * km[i]);
        out[3 + i] = 4.0 * km[i] * v[3 + i] / zt;
    }
    Ok(out)
}

fn lc_to_glc(v: &[f64; 6], cb: &[f64; 2]) -> Result<[f64; 6]> {
    let mut out = *v;
    for i in 0..2 {
        let u = v[3 + i];
        if u <= 0.0 {
            return Err(SbcError::Domain(format!("u{} must be positive on the covered branch", i + 1)));
        }
        let z = v[i] / cb[i];
        let num = u * u - 1.0;
        out[i] = z;
        out[3 + i] = if num == 0.0 {
            0.0
        } else if z == 0.0 {
            return Err(SbcError::Domain(format!("intrinsic energy undefined at z{} = 0 with u{} != 1", i + 1, i + 1)));
        } else {
            num / (z * z)
        };
    }
    Ok(out)
}

fn glc_to_lc(v: &[f64; 6], cb: &[f64; 2]) -> [f64; 6] {
    let mut out = *v;
    for i in 0..2 {
        out[i] = cb[i] * v[i];
        out[3 + i] = (1.0 + v[3 + i] * v[i] * v[i]).sqrt();
    }
    out
}

fn from_glc(g: &[f64; 6], target: ChartId, c: &DerivedConstants) -> Result<[f64; 6]> {
    let [z1, z2, x, h1, h2, y] = *g;
    let cb = [c.a1.cbrt(), c.a2.cbrt()];
    let (w1, w2) = (0.5 * (z1 + z2), 0.5 * (z1 - z2));
    Ok(match target {
        ChartId::GeneralisedLC => *g,
        ChartId::LeviCivita => glc_to_lc(g, &cb),
        ChartId::Physical => lc_to_physical(&glc_to_lc(g, &cb), c)?,
        ChartId::RotatedGLC => [w1, w2, x, h1, h2, y],
        ChartId::PolarBlowup => [z1.hypot(z2), z2.atan2(z1), x, h1, h2, y],
        ChartId::DirZ1 => {
            if w1 == 0.0 {
                return Err(SbcError::Domain("z̃1-directional chart undefined at w1 = 0".into()));
            }
            [w1, w2 / w1, x, h1, h2, y]
        }
        ChartId::DirZ2 => {
            if w2 == 0.0 {
                return Err(SbcError::Domain("z̃2-directional chart undefined at w2 = 0".into()));
            }
            [w1 / w2, w2, x, h1, h2, y]
        }
        ChartId::NormalForm => {
            return Err(SbcError::Precondition("normal-form coordinates need the normal-form chart map".into()))
        }
    })
}

/// Change of chart through the generalised Levi-Civita hub.
pub fn chart_transform(s: &ChartState, target: ChartId, c: &DerivedConstants) -> Result<ChartState> {
    if s.chart == target {
        return Ok(*s);
    }
    let g = to_glc(s, c)?;
    Ok(ChartState::new(target, from_glc(&g, target, c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_constants, MassParams};

    fn eq() -> DerivedConstants {
        derive_constants(&MassParams::equal()).unwrap()
    }

    #[test]
    fn potential_at_origin() {
        assert!((potential_exact(0.0, 0.0, 1.0, &eq()).unwrap() - 4.0).abs() < 1e-15);
        let c = eq();
        let a = potential_exact(0.3, 0.2, 1.1, &c).unwrap();
        let b = potential_exact(-0.3, 0.2, 1.1, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equilibria_and_trivial_components() {
        let c = eq();
        let v = vf_glc(&ChartState::glc([0.0, 0.0, 1.0, 0.2, -0.1, 0.3]), &c).unwrap();
        assert_eq!(v, [0.0; 6]);
        let v = vf_glc(&ChartState::glc([0.4, 0.0, 1.0, 0.2, -0.1, 0.3]), &c).unwrap();
        assert_eq!((v[0], v[4]), (0.0, 0.0));
        assert!((v[1] - 0.16).abs() < 1e-16);
    }

    #[test]
    fn branch_violation() {
        let c = eq();
        assert!(vf_glc(&ChartState::glc([2.0, 0.1, 1.0, -1.0, 0.0, 0.0]), &c).is_err());
    }

    #[test]
    fn collision_flow() {
        let c = eq();
        let v = vf_polar(&ChartState::new(ChartId::PolarBlowup, [0.0, 0.0, 1.0, 0.1, 0.2, 0.3]), &c).unwrap();
        assert_eq!(v, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let v = vf_polar(
            &ChartState::new(ChartId::PolarBlowup, [0.0, std::f64::consts::FRAC_PI_4, 1.0, 0.1, 0.2, 0.3]),
            &c,
        )
        .unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn lc_glc_zero_energy() {
        let c = eq();
        let s = ChartState::new(ChartId::LeviCivita, [0.3, -0.7, 1.0, 1.0, 1.0, 0.0]);
        let g = chart_transform(&s, ChartId::GeneralisedLC, &c).unwrap();
        assert_eq!((g.coords[3], g.coords[4]), (0.0, 0.0));
        let origin = ChartState::glc([0.0, 0.0, 1.0, 0.1, 0.1, 0.0]);
        assert_eq!(chart_transform(&origin, ChartId::PolarBlowup, &c).unwrap().coords[0], 0.0);
    }
}
