//! Normal-form coordinates near the collision orbit, and their numeric realisation
//! for states of the regularised field.

use std::sync::OnceLock;

use nalgebra::{Matrix6, Vector6};

use crate::coeff::{Coeff, Q};
use crate::constants::{nf_constants_f64, DerivedConstants, MassParams};
use crate::dynamics::{ChartId, ChartState};
use crate::error::{Result, SbcError};
use crate::integrator::{integrate, IntegratorConfig};
use crate::normal_form::{assemble_x9, blowup_dir_z1, blowup_dir_z2, glc_taylor_field, normal_form, rotate_pi4, rotate_poly, universal_polys, DirectionalField, ResonantPolys};
use crate::poly::{CompiledPoly, Poly, NGRADED, Z1, Z2};

/// Coefficients of `p(1 + v, 1 − v)` as a polynomial in `v`.
fn diagonal_coeffs(p: &Poly<Q>) -> Vec<f64> {
    let mut out: Vec<Q> = Vec::new();
    for (m, c) in p.terms() {
        // (1 + v)^a (1 − v)^b
        let mut poly = vec![c.clone()];
        for (e, sgn) in [(m[Z1], 1i64), (m[Z2], -1i64)] {
            for _ in 0..e {
                let mut next = vec![<Q as Coeff>::zero(); poly.len() + 1];
                for (k, a) in poly.iter().enumerate() {
                    next[k] += a;
                    next[k + 1] += a * Q::from_integer(sgn.into());
                }
                poly = next;
            }
        }
        if out.len() < poly.len() {
            out.resize(poly.len(), <Q as Coeff>::zero());
        }
        for (k, a) in poly.into_iter().enumerate() {
            out[k] += a;
        }
    }
    out.iter().map(Coeff::to_f64).collect()
}

/// `p(1, v)` for a polynomial homogeneous in `(z1, z2)`, as coefficients in `v`.
fn dehomogenise(p: &Poly<Q>) -> Vec<f64> {
    let mut out = Vec::new();
    for (m, c) in p.terms() {
        let k = m[Z2] as usize;
        if out.len() <= k {
            out.resize(k + 1, 0.0);
        }
        out[k] += c.to_f64();
    }
    out
}

fn horner(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * v + a)
}

fn horner_d(c: &[f64], v: f64) -> f64 {
    c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, a)| acc * v + k as f64 * a)
}

/// Solution `P` of `v(3 + v²) P′ = 8(1 + v²) P − R(v)` regular at `v = 0`,
/// where `R(v) = R_h(1 + v, 1 − v)`. Along the normal form,
/// `h1 − β1 û⁸ P(v̂)` and `h2 + β2 û⁸ P(v̂)` are conserved through order `û⁸`.
#[derive(Clone, Debug)]
pub struct PFunction {
    r: Vec<f64>,
    series: Vec<f64>,
    radius: f64,
}

impl PFunction {
    const TERMS: usize = 80;

    pub fn new(rh: &Poly<Q>) -> Result<Self> {
        let r = diagonal_coeffs(rh);
        if r.first().is_some_and(|r0| r0.abs() > 1e-15) {
            return Err(SbcError::Precondition("R_h must vanish on the diagonal".into()));
        }
        let mut p = vec![0.0; Self::TERMS];
        for k in 1..Self::TERMS {
            let rk = r.get(k).copied().unwrap_or(0.0);
            let prev = if k >= 2 { p[k - 2] } else { 0.0 };
            p[k] = (rk - (10.0 - k as f64) * prev) / (8.0 - 3.0 * k as f64);
        }
        Ok(PFunction { r, series: p, radius: 0.8 })
    }

    pub fn universal() -> &'static PFunction {
        static CELL: OnceLock<PFunction> = OnceLock::new();
        CELL.get_or_init(|| PFunction::new(&universal_polys().resonant.rh).expect("universal R_h"))
    }

    pub fn series_coeff(&self, k: usize) -> f64 {
        self.series.get(k).copied().unwrap_or(0.0)
    }

    fn rhs(&self, v: f64, p: f64) -> f64 {
        (8.0 * (1.0 + v * v) * p - horner(&self.r, v)) / (v * (3.0 + v * v))
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(SbcError::Domain(format!("P evaluated at {v}")));
        }
        if v.abs() <= self.radius {
            return Ok(horner(&self.series, v));
        }
        let v0 = self.radius.copysign(v);
        let cfg = IntegratorConfig { abs_tol: 1e-300, rel_tol: 1e-14, max_step: 1.0, min_step: 1e-14, ..Default::default() };
        let tr = integrate(|t, y: &[f64; 1]| Ok([self.rhs(t, y[0])]), v0, [horner(&self.series, v0)], v, &cfg)?;
        Ok(tr.last().1[0])
    }
}

/// How the energy coordinates of the normal-form chart are corrected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HCorrection {
    /// `P(v̂) ≈ −(216/95) v̂`.
    Leading,
    /// Full `P`.
    Resummed,
}

/// Degree-7 integral data, dehomogenised in the rotated directional chart.
#[derive(Clone, Debug)]
struct KappaData {
    /// `κ₇`-coefficients of `h1²`, `h2²` in `(z1, z2)`.
    k1: Poly<f64>,
    k2: Poly<f64>,
    /// The same, rotated and evaluated at `(1, v̂)`.
    a: Vec<f64>,
    b: Vec<f64>,
}

fn kappa_data() -> &'static KappaData {
    static CELL: OnceLock<KappaData> = OnceLock::new();
    CELL.get_or_init(|| {
        let k = &universal_polys().kappa;
        KappaData { k1: k.k1.to_f64(), k2: k.k2.to_f64(), a: dehomogenise(&rotate_poly(&k.k1)), b: dehomogenise(&rotate_poly(&k.k2)) }
    })
}

fn z_eval(p: &Poly<f64>, z1: f64, z2: f64) -> f64 {
    p.terms().map(|(m, c)| c * z1.powi(m[Z1] as i32) * z2.powi(m[Z2] as i32)).sum()
}

/// `κ = (z1³ − z2³)/6 + h1² κ₁(z1, z2) + h2² κ₂(z1, z2)`.
pub fn kappa(z1: f64, z2: f64, h1: f64, h2: f64) -> f64 {
    let k = kappa_data();
    (z1.powi(3) - z2.powi(3)) / 6.0 + h1 * h1 * z_eval(&k.k1, z1, z2) + h2 * h2 * z_eval(&k.k2, z1, z2)
}

/// `κ̃(w1, w2) = κ(w1 + w2, w1 − w2)`.
pub fn kappa_tilde(w1: f64, w2: f64, h1: f64, h2: f64) -> f64 {
    kappa(w1 + w2, w1 - w2, h1, h2)
}

/// The map from the `z̃₁`-directional chart of the normal form to normal-form coordinates
/// `(u, v, x, h1, h2, y)` with `u = û`, `v = û⁻³ κ̃`.
#[derive(Clone, Debug)]
pub struct NfChartMap {
    pub beta: [f64; 2],
    pub mode: HCorrection,
}

impl NfChartMap {
    pub fn new(c: &DerivedConstants, mode: HCorrection) -> Self {
        NfChartMap { beta: [c.beta(0), c.beta(1)], mode }
    }

    fn p(&self, vh: f64) -> Result<f64> {
        match self.mode {
            HCorrection::Leading => Ok(PFunction::universal().series_coeff(1) * vh),
            HCorrection::Resummed => PFunction::universal().eval(vh),
        }
    }

    fn v_of(&self, u: f64, vh: f64, h1: f64, h2: f64) -> (f64, f64) {
        let k = kappa_data();
        let u4 = u.powi(4);
        let v = vh * (1.0 + vh * vh / 3.0) + u4 * (h1 * h1 * horner(&k.a, vh) + h2 * h2 * horner(&k.b, vh));
        let dv = 1.0 + vh * vh + u4 * (h1 * h1 * horner_d(&k.a, vh) + h2 * h2 * horner_d(&k.b, vh));
        (v, dv)
    }

    pub fn forward(&self, s: &ChartState) -> Result<ChartState> {
        if s.chart != ChartId::DirZ1 {
            return Err(SbcError::Precondition(format!("normal-form chart map expects DirZ1, got {:?}", s.chart)));
        }
        let [u, vh, x, h1, h2, y] = s.coords;
        let (v, _) = self.v_of(u, vh, h1, h2);
        let f = u.powi(8) * self.p(vh)?;
        Ok(ChartState::new(ChartId::NormalForm, [u, v, x, h1 - self.beta[0] * f, h2 + self.beta[1] * f, y]))
    }

    /// Newton inverse of [`forward`](Self::forward).
    pub fn inverse(&self, s: &ChartState) -> Result<ChartState> {
        if s.chart != ChartId::NormalForm {
            return Err(SbcError::Precondition(format!("inverse chart map expects NormalForm, got {:?}", s.chart)));
        }
        let [u, v, x, g1, g2, y] = s.coords;
        let mut vh = v;
        for _ in 0..100 {
            let f = u.powi(8) * self.p(vh)?;
            let (h1, h2) = (g1 + self.beta[0] * f, g2 - self.beta[1] * f);
            let (val, dv) = self.v_of(u, vh, h1, h2);
            if dv.abs() < 1e-3 {
                return Err(SbcError::Domain("normal-form chart is not invertible here".into()));
            }
            let step = (val - v) / dv;
            vh -= step;
            if step.abs() <= 4.0 * f64::EPSILON * (1.0 + vh.abs()) {
                let f = u.powi(8) * self.p(vh)?;
                return Ok(ChartState::new(ChartId::DirZ1, [u, vh, x, g1 + self.beta[0] * f, g2 - self.beta[1] * f, y]));
            }
        }
        Err(SbcError::Domain("normal-form chart inverse did not converge".into()))
    }
}

/// Forward normal-form chart map with the resummed correction.
pub fn nf_chart_map(s: &ChartState, c: &DerivedConstants) -> Result<ChartState> {
    NfChartMap::new(c, HCorrection::Resummed).forward(s)
}

struct DirFields {
    z1: DirectionalField,
    z2: DirectionalField,
}

/// Directional blow-ups of the rotated degree-9 normal form with `β = (1, 1)`.
fn dir_fields() -> &'static DirFields {
    static CELL: OnceLock<DirFields> = OnceLock::new();
    CELL.get_or_init(|| {
        let r = &universal_polys().resonant;
        let unit = ResonantPolys { beta: [Q::from_integer(1.into()), Q::from_integer(1.into())], ..r.clone() };
        let rot = rotate_pi4(&assemble_x9(&unit));
        DirFields { z1: blowup_dir_z1(&rot).expect("divisible"), z2: blowup_dir_z2(&rot).expect("divisible") }
    })
}

/// The truncated directional field exposed as a polynomial field with `β = (1, 1)`.
pub fn dir_field_unit(chart: ChartId) -> Result<&'static DirectionalField> {
    match chart {
        ChartId::DirZ1 => Ok(&dir_fields().z1),
        ChartId::DirZ2 => Ok(&dir_fields().z2),
        other => Err(SbcError::Precondition(format!("no directional field for {other:?}"))),
    }
}

fn eval_dir(chart: ChartId, s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    if s.chart != chart {
        return Err(SbcError::Precondition(format!("expected {chart:?}, got {:?}", s.chart)));
    }
    let f = dir_field_unit(chart)?;
    let mut r = f.eval(&s.coords, [0.0; 3]);
    r[3] *= c.beta(0);
    r[4] *= c.beta(1);
    Ok(r)
}

/// Degree-9 normal form in the `z̃₁`-directional chart `(û, v̂, x, h1, h2, y)`.
pub fn vf_dir_z1(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    eval_dir(ChartId::DirZ1, s, c)
}

/// Degree-9 normal form in the `z̃₂`-directional chart `(ū, v̄, x, h1, h2, y)`.
pub fn vf_dir_z2(s: &ChartState, c: &DerivedConstants) -> Result<[f64; 6]> {
    eval_dir(ChartId::DirZ2, s, c)
}

/// Normal-form coordinates of a point, read through the numeric transformation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NfPoint {
    /// `(z1, z2, x, h1, h2, y)` in normal-form variables.
    pub nf: [f64; 6],
    pub kappa: f64,
    pub u_hat: f64,
    pub v_hat: f64,
    /// Energies with the `û⁸ P(v̂)` correction removed.
    pub h_corrected: [f64; 2],
}

/// The near-identity transformation from normal-form to regularised coordinates,
/// evaluated in floating point with the expansion point fixed.
#[derive(Clone, Debug)]
pub struct NumericChart {
    pub base: [f64; 3],
    pub degree: usize,
    t: Vec<CompiledPoly>,
    beta: [f64; 2],
    pub mode: HCorrection,
}

impl NumericChart {
    pub fn new(m: &MassParams, base: [f64; 3], degree: usize) -> Result<Self> {
        if degree < 9 {
            return Err(SbcError::Precondition(format!("numeric chart needs degree >= 9, got {degree}")));
        }
        let k = nf_constants_f64(m, degree + 2)?;
        let beta = [k.bc() * k.al[0], k.bc() * k.al[1]];
        let x = glc_taylor_field(&k, degree);
        let res = normal_form(&x, degree)?;
        let t = res.transform.iter().map(|p| CompiledPoly::new(&p.fix_params(base))).collect();
        Ok(NumericChart { base, degree, t, beta, mode: HCorrection::Resummed })
    }

    fn offset(&self) -> [f64; 6] {
        [0.0, 0.0, 1.0, self.base[0], self.base[1], self.base[2]]
    }

    /// Regularised coordinates of a normal-form point.
    pub fn from_nf(&self, w: &[f64; 6]) -> [f64; 6] {
        let off = self.offset();
        let dev: [f64; NGRADED] = std::array::from_fn(|i| w[i] - off[i]);
        std::array::from_fn(|i| self.t[i].eval(&dev) + off[i])
    }

    /// Normal-form coordinates of a regularised state, by Newton iteration.
    pub fn to_nf(&self, s: &[f64; 6]) -> Result<[f64; 6]> {
        let off = self.offset();
        let target: [f64; 6] = std::array::from_fn(|i| s[i] - off[i]);
        let mut w = Vector6::from_column_slice(&target);
        for _ in 0..50 {
            let wa: [f64; 6] = w.into();
            let mut f = Vector6::zeros();
            let mut j = Matrix6::zeros();
            for i in 0..6 {
                let (v, g) = self.t[i].eval_grad(&wa);
                f[i] = v - target[i];
                for k in 0..6 {
                    j[(i, k)] = g[k];
                }
            }
            let dw = j.lu().solve(&f).ok_or_else(|| SbcError::Singular("normal-form transformation is singular".into()))?;
            w -= dw;
            if dw.amax() <= 1e-17 + 2.0 * f64::EPSILON * w.amax() {
                let wa: [f64; 6] = w.into();
                return Ok(std::array::from_fn(|i| wa[i] + off[i]));
            }
        }
        Err(SbcError::Domain("normal-form transformation inverse did not converge".into()))
    }

    /// Normal-form reading of a regularised state.
    pub fn measure(&self, s: &[f64; 6]) -> Result<NfPoint> {
        let nf = self.to_nf(s)?;
        let [z1, z2, _, h1, h2, _] = nf;
        let (w1, w2) = ((z1 + z2) / 2.0, (z1 - z2) / 2.0);
        if w1 == 0.0 {
            return Err(SbcError::Domain("state lies outside the z1-directional chart".into()));
        }
        let vh = w2 / w1;
        let p = match self.mode {
            HCorrection::Leading => PFunction::universal().series_coeff(1) * vh,
            HCorrection::Resummed => PFunction::universal().eval(vh)?,
        };
        let f = w1.powi(8) * p;
        Ok(NfPoint {
            nf,
            kappa: kappa_tilde(w1, w2, h1, h2),
            u_hat: w1,
            v_hat: vh,
            h_corrected: [h1 - self.beta[0] * f, h2 + self.beta[1] * f],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::derive_constants;

    #[test]
    fn p_series_leading() {
        let p = PFunction::universal();
        assert!((p.series_coeff(1) + 216.0 / 95.0).abs() < 1e-14);
        assert_eq!(p.series_coeff(0), 0.0);
    }

    #[test]
    fn p_satisfies_ode_and_is_continuous() {
        let p = PFunction::universal();
        for v in [0.3, -0.5, 0.79] {
            let h = 1e-5;
            let d = (p.eval(v + h).unwrap() - p.eval(v - h).unwrap()) / (2.0 * h);
            assert!((d - p.rhs(v, p.eval(v).unwrap())).abs() < 1e-7 * (1.0 + d.abs()));
        }
        let a = horner(&p.series, 0.8 + 1e-9);
        let b = p.eval(0.8 + 1e-9).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        let a = horner(&p.series, 1.2);
        let b = p.eval(1.2).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn kappa_leading_rotated() {
        let (w1, w2) = (0.3, -0.1);
        let k = kappa_tilde(w1, w2, 0.0, 0.0);
        assert!((k - w2 * (3.0 * w1 * w1 + w2 * w2) / 3.0).abs() < 1e-16);
    }

    #[test]
    fn chart_map_round_trip() {
        let c = derive_constants(&MassParams::equal()).unwrap();
        for mode in [HCorrection::Leading, HCorrection::Resummed] {
            let m = NfChartMap::new(&c, mode);
            for s in [[0.1, 0.2, 1.0, 0.1, -0.1, 0.0], [0.3, -1.5, 1.01, 0.05, 0.02, 0.01], [0.0, 0.0, 1.0, 0.1, 0.1, 0.0]] {
                let a = ChartState::new(ChartId::DirZ1, s);
                let b = m.forward(&a).unwrap();
                assert_eq!(b.coords[0], s[0]);
                let back = m.inverse(&b).unwrap();
                for i in 0..6 {
                    assert!((back.coords[i] - s[i]).abs() < 1e-13, "{mode:?} {i}");
                }
            }
        }
        let b = nf_chart_map(&ChartState::new(ChartId::DirZ1, [0.2, 0.0, 1.0, 0.1, -0.1, 0.0]), &c).unwrap();
        assert_eq!(b.coords[1], 0.0);
    }

    #[test]
    fn directional_fields() {
        let c = derive_constants(&MassParams::equal()).unwrap();
        let z = vf_dir_z1(&ChartState::new(ChartId::DirZ1, [0.0, 0.0, 1.2, 0.1, -0.3, 0.5]), &c).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let f = vf_dir_z2(&ChartState::new(ChartId::DirZ2, [0.7, 0.0, 1.0, 0.1, -0.1, 0.0]), &c).unwrap();
        assert!((f[0] - (1.0 + 3.0 * 0.49)).abs() < 1e-15);
        assert!(f[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn numeric_chart_round_trip() {
        let ch = NumericChart::new(&MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap(), [0.1, -0.1, 0.0], 11).unwrap();
        let s = [-0.08, -0.12, 1.0, 0.1, -0.1, 0.0];
        let w = ch.to_nf(&s).unwrap();
        let back = ch.from_nf(&w);
        for i in 0..6 {
            assert!((back[i] - s[i]).abs() < 1e-15);
        }
        let p = ch.measure(&s).unwrap();
        assert!(p.kappa.is_finite() && p.v_hat.is_finite());
    }
}
