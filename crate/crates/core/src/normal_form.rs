//! Inner-product normal forms of the regularised field around the simultaneous binary collision.
//!
//! The leading part is `X₀ = (z2², z1², 0, 0, 0, 0)`. The cohomological operator
//! `L U = [X₀, U]` maps fields of degree `d` to degree `d + 1`; with the Fischer product
//! `⟨x^α, x^β⟩ = α! δ_{αβ}` its adjoint is
//! `L* W = (X̃₀* w1 − 2∂_{z1} w2, X̃₀* w2 − 2∂_{z2} w1, X̃₀* w3, …)`, `X̃₀* = z2 ∂²_{z1} + z1 ∂²_{z2}`.
//! Each homogeneous piece is split as `Im L ⊕ ker L*`; the generators are the minimal-norm
//! preimages, which lie in `Im L*`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::coeff::{q, q_to_string, qi, Coeff, Q};
use crate::constants::{nf_constants_exact, MassParams, NfConstants};
use crate::error::{Result, SbcError};
use crate::linalg::{orthogonalize, weighted_dot, QMatrix};
use crate::poly::{
    degree, factorial_weight, mono, Poly, PolyField, E1, E2, H1, H2, NGRADED, NVARS, PSI, XI, YS, Z1, Z2,
};

fn binom_half(k: usize) -> Q {
    let mut c = Q::one();
    for j in 0..k {
        c = c * (q(1, 2) - qi(j as i64)) / qi(j as i64 + 1);
    }
    c
}

fn binom_neg(n: usize, k: usize) -> Q {
    let mut c = Q::one();
    for j in 0..k {
        c = c * qi(-(n as i64) - j as i64) / qi(j as i64 + 1);
    }
    c
}

fn zpow<C: Coeff>(a: u8, b: u8) -> Poly<C> {
    Poly::monomial(mono(&[(Z1, a), (Z2, b)]), C::one())
}

/// Taylor expansion of the regularised field about `(0, 0, 1, H1, H2, Y)` through degree `d`,
/// with `H1, H2, Y` kept as symbols.
pub fn glc_taylor_field<C: Coeff>(k: &NfConstants<C>, d: usize) -> PolyField<C> {
    let h = |hv: usize, ev: usize| Poly::<C>::var(hv).add(&Poly::var(ev));
    let sqrt_series = |zv: usize, hp: Poly<C>| {
        let arg = Poly::<C>::var(zv).pow_trunc(2, d).mul_trunc(&hp, d);
        let coeffs: Vec<C> = (0..=d / 2 + 1).map(|j| C::from_q(&binom_half(j))).collect();
        Poly::series(&coeffs, &arg, d)
    };
    let s1 = sqrt_series(Z1, h(H1, E1));
    let s2 = sqrt_series(Z2, h(H2, E2));
    let invx = |n: usize| {
        let coeffs: Vec<C> = (0..=d).map(|j| C::from_q(&binom_neg(n, j))).collect();
        Poly::series(&coeffs, &Poly::var(XI), d)
    };
    let mut dk1 = Poly::<C>::zero();
    let mut dk2 = Poly::<C>::zero();
    let mut dkx = Poly::<C>::zero();
    for (&(p, qq), kc) in &k.kcoef {
        let (pu, qu) = (p as usize, qq as usize);
        let order = pu + qu + 1;
        if p >= 1 && 2 * pu - 1 + 2 * qu + 2 <= d {
            let t = zpow::<C>(2 * p - 1, 2 * qq).scale(&kc.mul_ref(&C::from_i64(2 * p as i64)));
            dk1.add_assign(&t.mul_trunc(&invx(order), d));
        }
        if qq >= 1 && 2 * pu + 2 * qu - 1 + 2 <= d {
            let t = zpow::<C>(2 * p, 2 * qq - 1).scale(&kc.mul_ref(&C::from_i64(2 * qq as i64)));
            dk2.add_assign(&t.mul_trunc(&invx(order), d));
        }
        if 2 * pu + 2 * qu + 4 <= d {
            let t = zpow::<C>(2 * p, 2 * qq).scale(&kc.mul_ref(&C::from_i64(-(order as i64))));
            dkx.add_assign(&t.mul_trunc(&invx(order + 1), d));
        }
    }
    let z1s = zpow::<C>(2, 0);
    let z2s = zpow::<C>(0, 2);
    let zz = zpow::<C>(2, 2);
    let two = C::from_i64(2);
    let x1 = z2s.mul_trunc(&s1, d);
    let x2 = z1s.mul_trunc(&s2, d);
    let comps = [
        x1.clone(),
        x2.clone(),
        zz.mul_trunc(&Poly::var(YS).add(&Poly::var(PSI)), d).scale(&k.mu),
        x1.mul_trunc(&dk1, d).scale(&two.mul_ref(&k.al[0])),
        x2.mul_trunc(&dk2, d).scale(&two.mul_ref(&k.al[1])),
        zz.mul_trunc(&dkx, d),
    ];
    PolyField::new(comps, d)
}

/// Exact Taylor field for the given masses.
pub fn glc_taylor_field_exact(m: &MassParams, d: usize) -> Result<PolyField<Q>> {
    Ok(glc_taylor_field(&nf_constants_exact(m, d + 2)?, d))
}

fn is_homogeneous<C: Coeff>(p: &Poly<C>) -> Option<usize> {
    let (lo, hi) = (p.min_degree()?, p.max_degree()?);
    (lo == hi).then_some(lo)
}

/// Fischer inner product `Σ α! p_α q_α` of two homogeneous polynomials of equal degree.
pub fn fischer_inner<C: Coeff>(p: &Poly<C>, q: &Poly<C>) -> Result<C> {
    if let (Some(dp), Some(dq)) = (is_homogeneous(p), is_homogeneous(q)) {
        if dp != dq {
            return Err(SbcError::Precondition(format!("Fischer product of degrees {dp} and {dq}")));
        }
    } else if !(p.is_zero() || q.is_zero()) {
        return Err(SbcError::Precondition("Fischer product needs homogeneous polynomials".into()));
    }
    let mut s = C::zero();
    for (m, c) in p.terms() {
        let d = q.coeff(m);
        if !d.is_zero() {
            let w = C::from_q(&Q::from_integer(BigInt::from(factorial_weight(m))));
            s.add_assign_ref(&c.mul_ref(&d).mul_ref(&w));
        }
    }
    Ok(s)
}

/// Component-wise Fischer product of two vector fields.
pub fn fischer_inner_field<C: Coeff>(a: &PolyField<C>, b: &PolyField<C>) -> Result<C> {
    let mut s = C::zero();
    for i in 0..NGRADED {
        s.add_assign_ref(&fischer_inner(&a.comps[i], &b.comps[i])?);
    }
    Ok(s)
}

/// The scalar derivation `X̃₀ = z2² ∂_{z1} + z1² ∂_{z2}`.
pub fn x0_apply<C: Coeff>(p: &Poly<C>) -> Poly<C> {
    let mut r = zpow::<C>(0, 2).mul(&p.diff(Z1));
    r.add_assign(&zpow::<C>(2, 0).mul(&p.diff(Z2)));
    r
}

/// Its Fischer adjoint `X̃₀* = z2 ∂²_{z1} + z1 ∂²_{z2}`.
pub fn x0_adjoint<C: Coeff>(p: &Poly<C>) -> Poly<C> {
    let mut r = zpow::<C>(0, 1).mul(&p.diff(Z1).diff(Z1));
    r.add_assign(&zpow::<C>(1, 0).mul(&p.diff(Z2).diff(Z2)));
    r
}

/// `L U = [X₀, U]`.
pub fn cohomological_op<C: Coeff>(u: &PolyField<C>) -> PolyField<C> {
    let comps = std::array::from_fn(|i| {
        let mut c = x0_apply(&u.comps[i]);
        if i == Z1 {
            c = c.sub(&zpow::<C>(0, 1).mul(&u.comps[Z2]).scale(&C::from_i64(2)));
        } else if i == Z2 {
            c = c.sub(&zpow::<C>(1, 0).mul(&u.comps[Z1]).scale(&C::from_i64(2)));
        }
        c
    });
    PolyField { comps, truncation: u.truncation + 1 }
}

/// `L* W`, the Fischer adjoint of [`cohomological_op`].
pub fn adjoint_op<C: Coeff>(w: &PolyField<C>) -> PolyField<C> {
    let two = C::from_i64(2);
    let comps = std::array::from_fn(|i| {
        let mut c = x0_adjoint(&w.comps[i]);
        if i == Z1 {
            c = c.sub(&w.comps[Z2].diff(Z1).scale(&two));
        } else if i == Z2 {
            c = c.sub(&w.comps[Z1].diff(Z2).scale(&two));
        }
        c
    });
    PolyField { comps, truncation: w.truncation.saturating_sub(1) }
}

/// `[(n − j, j)]`, the `z`-monomials of degree `n`.
fn mono_list(n: usize) -> Vec<(u8, u8)> {
    (0..=n).map(|j| ((n - j) as u8, j as u8)).collect()
}

fn fw(a: u8, b: u8) -> Q {
    let f = |e: u8| (1..=e as u64).product::<u64>();
    qi((f(a) * f(b)) as i64)
}

/// Matrix of `X̃₀` from degree-`n` to degree-`n+1` scalars in the `z`-monomial bases.
pub fn scalar_operator(n: usize) -> QMatrix {
    let dom = mono_list(n);
    let rng = mono_list(n + 1);
    let idx: HashMap<(u8, u8), usize> = rng.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut a = QMatrix::zeros(rng.len(), dom.len());
    for (j, &(p, qq)) in dom.iter().enumerate() {
        if p > 0 {
            a[(idx[&(p - 1, qq + 2)], j)] += qi(p as i64);
        }
        if qq > 0 {
            a[(idx[&(p + 2, qq - 1)], j)] += qi(qq as i64);
        }
    }
    a
}

/// Matrix of `L` restricted to the `(z1, z2)` components.
pub fn pair_operator(n: usize) -> QMatrix {
    let dom = mono_list(n);
    let rng = mono_list(n + 1);
    let idx: HashMap<(u8, u8), usize> = rng.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let (nd, nr) = (dom.len(), rng.len());
    let s = scalar_operator(n);
    let mut a = QMatrix::zeros(2 * nr, 2 * nd);
    for i in 0..nr {
        for j in 0..nd {
            a[(i, j)] = s[(i, j)].clone();
            a[(nr + i, nd + j)] = s[(i, j)].clone();
        }
    }
    for (j, &(p, qq)) in dom.iter().enumerate() {
        a[(idx[&(p, qq + 1)], nd + j)] -= qi(2);
        a[(nr + idx[&(p + 1, qq)], j)] -= qi(2);
    }
    a
}

fn scalar_weights(n: usize) -> Vec<Q> {
    mono_list(n).iter().map(|&(a, b)| fw(a, b)).collect()
}

fn pair_weights(n: usize) -> Vec<Q> {
    let w = scalar_weights(n);
    w.iter().chain(w.iter()).cloned().collect()
}

/// Linear map `W ↦ U` with `A U` the Fischer projection of `W` on `Im A` and `U ⊥ ker A`.
fn minimal_preimage_map(a: &QMatrix, wd: &[Q], wr: &[Q]) -> QMatrix {
    let atg_w = a.transpose().scale_cols(wr);
    let m = atg_w.mul(a);
    let mut x = m.solve_particular(&atg_w).expect("normal equations are consistent");
    let basis = orthogonalize(&a.nullspace(), wd);
    for b in &basis {
        let bb = weighted_dot(b, b, wd);
        for col in 0..x.cols {
            let xc: Vec<Q> = (0..x.rows).map(|i| x[(i, col)].clone()).collect();
            let c = weighted_dot(&xc, b, wd) / &bb;
            for i in 0..x.rows {
                x[(i, col)] -= &c * &b[i];
            }
        }
    }
    x
}

struct SplitMap<C> {
    u: Vec<C>,
    a: Vec<C>,
    nd: usize,
    nr: usize,
}

impl<C: Coeff> SplitMap<C> {
    fn new(a: &QMatrix, u: &QMatrix) -> Self {
        SplitMap {
            u: u.data.iter().map(C::from_q).collect(),
            a: a.data.iter().map(C::from_q).collect(),
            nd: a.cols,
            nr: a.rows,
        }
    }

    fn apply(&self, w: &[C]) -> (Vec<C>, Vec<C>) {
        let mut u = vec![C::zero(); self.nd];
        for i in 0..self.nd {
            for j in 0..self.nr {
                let m = &self.u[i * self.nr + j];
                if !m.is_zero() && !w[j].is_zero() {
                    u[i].add_assign_ref(&m.mul_ref(&w[j]));
                }
            }
        }
        let mut n = w.to_vec();
        for i in 0..self.nr {
            for j in 0..self.nd {
                let m = &self.a[i * self.nd + j];
                if !m.is_zero() && !u[j].is_zero() {
                    n[i] = n[i].sub_ref(&m.mul_ref(&u[j]));
                }
            }
        }
        (u, n)
    }
}

/// Cached projection maps, keyed by (pair?, range `z`-degree).
pub struct SplitCache<C> {
    maps: HashMap<(bool, usize), SplitMap<C>>,
}

impl<C: Coeff> Default for SplitCache<C> {
    fn default() -> Self {
        SplitCache { maps: HashMap::new() }
    }
}

impl<C: Coeff> SplitCache<C> {
    fn get(&mut self, pair: bool, n: usize) -> &SplitMap<C> {
        self.maps.entry((pair, n)).or_insert_with(|| {
            let (a, wd, wr) = if pair {
                (pair_operator(n - 1), pair_weights(n - 1), pair_weights(n))
            } else {
                (scalar_operator(n - 1), scalar_weights(n - 1), scalar_weights(n))
            };
            let u = minimal_preimage_map(&a, &wd, &wr);
            SplitMap::new(&a, &u)
        })
    }
}

type OtherKey = [u8; NVARS - 2];

/// Split a homogeneous degree-`w+1` field as `L U + N` with `N ∈ ker L*`.
pub fn split_weight<C: Coeff>(
    w_field: &PolyField<C>,
    w: usize,
    cache: &mut SplitCache<C>,
) -> (PolyField<C>, PolyField<C>) {
    let tr = w_field.truncation;
    let mut u = PolyField::<C>::zero(tr);
    let mut nf = PolyField::<C>::zero(tr);
    let mut groups: BTreeMap<OtherKey, [BTreeMap<(u8, u8), C>; NGRADED]> = BTreeMap::new();
    for i in 0..NGRADED {
        for (m, c) in w_field.comps[i].terms() {
            let mut key = [0u8; NVARS - 2];
            key.copy_from_slice(&m[2..]);
            groups.entry(key).or_default()[i].insert((m[0], m[1]), c.clone());
        }
    }
    let full = |zm: (u8, u8), other: &OtherKey| {
        let mut m = [0u8; NVARS];
        m[0] = zm.0;
        m[1] = zm.1;
        m[2..].copy_from_slice(other);
        m
    };
    for (other, comps) in &groups {
        let other_deg: usize = other[..NGRADED - 2].iter().map(|&e| e as usize).sum();
        let n = (w + 1).saturating_sub(other_deg);
        if n < 1 {
            for i in 0..NGRADED {
                for (zm, c) in &comps[i] {
                    nf.comps[i].add_term(full(*zm, other), c.clone());
                }
            }
            continue;
        }
        let rng = mono_list(n);
        let dom = mono_list(n - 1);
        if !comps[0].is_empty() || !comps[1].is_empty() {
            let wv: Vec<C> = (0..2)
                .flat_map(|i| rng.iter().map(move |m| comps[i].get(m).cloned().unwrap_or_else(C::zero)))
                .collect();
            let (uv, nv) = cache.get(true, n).apply(&wv);
            for (j, m) in dom.iter().enumerate() {
                u.comps[0].add_term(full(*m, other), uv[j].clone());
                u.comps[1].add_term(full(*m, other), uv[dom.len() + j].clone());
            }
            for (j, m) in rng.iter().enumerate() {
                nf.comps[0].add_term(full(*m, other), nv[j].clone());
                nf.comps[1].add_term(full(*m, other), nv[rng.len() + j].clone());
            }
        }
        for i in 2..NGRADED {
            if comps[i].is_empty() {
                continue;
            }
            let wv: Vec<C> = rng.iter().map(|m| comps[i].get(m).cloned().unwrap_or_else(C::zero)).collect();
            let (uv, nv) = cache.get(false, n).apply(&wv);
            for (j, m) in dom.iter().enumerate() {
                u.comps[i].add_term(full(*m, other), uv[j].clone());
            }
            for (j, m) in rng.iter().enumerate() {
                nf.comps[i].add_term(full(*m, other), nv[j].clone());
            }
        }
    }
    (u, nf)
}

/// `exp(ad_U) Y = Y + [U, Y] + [U, [U, Y]]/2 + …`, truncated at `d`.
pub fn lie_exp<C: Coeff>(u: &PolyField<C>, y: &PolyField<C>, d: usize) -> PolyField<C> {
    let mut r = y.clone();
    let mut term = y.clone();
    for k in 1.. {
        term = crate::poly::lie_bracket(u, &term, d).scale(&C::from_q(&q(1, k)));
        if term.is_zero() {
            break;
        }
        r = r.add(&term);
    }
    r.truncate(d)
}

/// Time-one flow of `U` applied to the coordinate functions.
pub fn flow_map<C: Coeff>(u: &PolyField<C>, d: usize) -> [Poly<C>; NGRADED] {
    std::array::from_fn(|i| {
        let mut r = Poly::<C>::var(i);
        let mut term = r.clone();
        for k in 1.. {
            term = u.apply(&term, d).truncate(d).scale(&C::from_q(&q(1, k)));
            if term.is_zero() {
                break;
            }
            r.add_assign(&term);
        }
        r
    })
}

/// `P ∘ T`: substitute the graded variables by the components of `T`.
pub fn compose<C: Coeff>(p: &Poly<C>, t: &[Poly<C>; NGRADED], d: usize) -> Poly<C> {
    let subs: [Option<Poly<C>>; NVARS] = std::array::from_fn(|i| if i < NGRADED { Some(t[i].clone()) } else { None });
    p.substitute(&subs, d)
}

#[derive(Clone, Debug)]
pub struct NormalFormResult<C: Coeff> {
    pub normal_form: PolyField<C>,
    /// `U_2, U_3, …` in the order applied.
    pub generators: Vec<PolyField<C>>,
    /// Near-identity map from normal-form to original coordinates (deviation variables).
    pub transform: [Poly<C>; NGRADED],
    pub residual_degree: usize,
}

fn max_abs<C: Coeff>(f: &PolyField<C>) -> f64 {
    f.comps.iter().flat_map(|c| c.terms().map(|(_, v)| v.to_f64().abs())).fold(0.0, f64::max)
}

fn check_leading<C: Coeff>(x: &PolyField<C>) -> Result<()> {
    let low = x.truncate(2);
    let diff = low.sub(&PolyField::x0(x.truncation));
    let ok = if C::EXACT { diff.is_zero() } else { max_abs(&diff) <= 1e-12 };
    if ok {
        Ok(())
    } else {
        Err(SbcError::Precondition("leading part is not X0 = (z2^2, z1^2, 0, 0, 0, 0)".into()))
    }
}

/// Formal normal form through degree `max_degree`.
pub fn normal_form<C: Coeff>(x: &PolyField<C>, max_degree: usize) -> Result<NormalFormResult<C>> {
    normal_form_with(x, max_degree, true)
}

/// As [`normal_form`]; `with_transform = false` skips composing the transformation.
pub fn normal_form_with<C: Coeff>(x: &PolyField<C>, max_degree: usize, with_transform: bool) -> Result<NormalFormResult<C>> {
    check_leading(x)?;
    let d = max_degree;
    let mut y = x.truncate(d);
    let mut cache = SplitCache::<C>::default();
    let mut gens = Vec::new();
    let scale = max_abs(&y).max(1.0);
    for w in 2..d {
        let wpart = y.homogeneous_part(w + 1);
        let (u, n) = split_weight(&wpart, w, &mut cache);
        if !u.is_zero() {
            y = lie_exp(&u, &y, d);
            gens.push(u);
        }
        let defect = y.homogeneous_part(w + 1).sub(&n);
        let ok = if C::EXACT { defect.is_zero() } else { max_abs(&defect) <= 1e-9 * scale };
        if !ok {
            return Err(SbcError::Invariant(format!("kernel projection inconsistent at degree {}", w + 1)));
        }
    }
    let transform = if with_transform {
        let mut t: [Poly<C>; NGRADED] = std::array::from_fn(Poly::var);
        for u in &gens {
            let phi = flow_map(u, d);
            t = std::array::from_fn(|i| compose(&t[i], &phi, d));
        }
        t
    } else {
        std::array::from_fn(Poly::var)
    };
    Ok(NormalFormResult { normal_form: y, generators: gens, transform, residual_degree: d })
}

/// Lowest degree at which `X ∘ T = DT · N` fails, or `None` if it holds through the truncation.
pub fn conjugation_defect<C: Coeff>(x: &PolyField<C>, res: &NormalFormResult<C>) -> Option<usize> {
    let d = res.residual_degree;
    let mut lowest: Option<usize> = None;
    for i in 0..NGRADED {
        let lhs = compose(&x.comps[i], &res.transform, d);
        let rhs = res.normal_form.apply(&res.transform[i], d).truncate(d);
        let diff = lhs.sub(&rhs);
        let bad = diff
            .terms()
            .filter(|(_, c)| if C::EXACT { !c.is_zero() } else { c.to_f64().abs() > 1e-9 })
            .map(|(m, _)| degree(m))
            .min();
        if let Some(b) = bad {
            lowest = Some(lowest.map_or(b, |l| l.min(b)));
        }
    }
    lowest
}

fn z_only<C: Coeff>(p: &Poly<C>, extra: &[(usize, u8)]) -> Poly<C> {
    Poly::from_terms(p.terms().filter_map(|(m, c)| {
        let mut want = [0u8; NVARS];
        want[0] = m[0];
        want[1] = m[1];
        for &(i, e) in extra {
            want[i] = e;
        }
        (*m == want).then(|| (mono(&[(Z1, m[0]), (Z2, m[1])]), c.clone()))
    }))
}

/// Swap `z1 ↔ z2`.
pub fn swap_z<C: Coeff>(p: &Poly<C>) -> Poly<C> {
    let mut perm: [usize; NVARS] = std::array::from_fn(|i| i);
    perm[Z1] = Z2;
    perm[Z2] = Z1;
    p.permute(&perm)
}

/// Reference polynomials of the degree-9 normal form.
pub fn reference_r61() -> Poly<Q> {
    Poly::from_terms([(mono(&[(Z1, 4), (Z2, 2)]), q(-480, 7195)), (mono(&[(Z1, 1), (Z2, 5)]), q(312, 7195))])
}

pub fn reference_r62() -> Poly<Q> {
    Poly::from_terms([
        (mono(&[(Z1, 6)]), q(88, 7195)),
        (mono(&[(Z1, 3), (Z2, 3)]), q(80, 7195)),
        (mono(&[(Z2, 6)]), q(-80, 7195)),
    ])
}

/// `(4/19)(z1 − z2)(z1² + z1 z2 + z2²)(z1⁶ − 11 z1³ z2³ + z2⁶)`.
pub fn reference_rh() -> Poly<Q> {
    let a = zpow::<Q>(1, 0).sub(&zpow(0, 1));
    let b = zpow::<Q>(2, 0).add(&zpow(1, 1)).add(&zpow(0, 2));
    let c = zpow::<Q>(6, 0).add(&zpow::<Q>(3, 3).scale(&qi(-11))).add(&zpow(0, 6));
    a.mul(&b).mul(&c).scale(&q(4, 19))
}

/// `(1/50365) z1 (485 z1⁶ − 665 z1³ z2³ + 308 z2⁶)`.
pub fn reference_kappa7() -> Poly<Q> {
    Poly::from_terms([
        (mono(&[(Z1, 7)]), q(485, 50365)),
        (mono(&[(Z1, 4), (Z2, 3)]), q(-665, 50365)),
        (mono(&[(Z1, 1), (Z2, 6)]), q(308, 50365)),
    ])
}

/// Resonant data extracted from a computed normal form; all polynomials are in `z1, z2` only.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonantPolys {
    pub r61: Poly<Q>,
    pub r62: Poly<Q>,
    pub rh: Poly<Q>,
    pub beta: [Q; 2],
}

/// Read off `R_{6,1}`, `R_{6,2}` and `R_h` from a normal form of degree ≥ 9.
pub fn extract_resonant(nf: &PolyField<Q>, k: &NfConstants<Q>) -> Result<ResonantPolys> {
    let beta = [k.bc() * &k.al[0], k.bc() * &k.al[1]];
    if beta[0].is_zero() {
        return Err(SbcError::Precondition("resonant coefficient vanishes".into()));
    }
    let r61 = z_only(&nf.comps[Z1], &[(H1, 2)]).homogeneous_part(6);
    let r62 = z_only(&nf.comps[Z1], &[(H2, 2)]).homogeneous_part(6);
    let rh = z_only(&nf.comps[E1], &[]).homogeneous_part(9).scale(&(Q::one() / &beta[0]));
    Ok(ResonantPolys { r61, r62, rh, beta })
}

/// The degree-9 normal form rebuilt from its resonant polynomials.
pub fn assemble_x9(res: &ResonantPolys) -> PolyField<Q> {
    let h = |hv: usize, ev: usize| Poly::<Q>::var(hv).add(&Poly::var(ev));
    let h1s = h(H1, E1).mul(&h(H1, E1));
    let h2s = h(H2, E2).mul(&h(H2, E2));
    let mut f = PolyField::<Q>::x0(9);
    f.comps[Z1] = f.comps[Z1].add(&h1s.mul(&res.r61)).add(&h2s.mul(&res.r62));
    f.comps[Z2] = f.comps[Z2].add(&h1s.mul(&swap_z(&res.r62))).add(&h2s.mul(&swap_z(&res.r61)));
    f.comps[E1] = res.rh.scale(&res.beta[0]);
    f.comps[E2] = res.rh.scale(&(-res.beta[1].clone()));
    f
}

/// Solve `X̃₀ A = rhs` for a homogeneous scalar `rhs`; `None` if `rhs ∉ Im X̃₀`.
pub fn solve_x0(rhs: &Poly<Q>) -> Option<Poly<Q>> {
    let n = match is_homogeneous(rhs) {
        Some(n) if n >= 1 => n,
        _ => return if rhs.is_zero() { Some(Poly::zero()) } else { None },
    };
    let a = scalar_operator(n - 1);
    let rng = mono_list(n);
    let mut b = QMatrix::zeros(rng.len(), 1);
    for (i, m) in rng.iter().enumerate() {
        b[(i, 0)] = rhs.coeff(&mono(&[(Z1, m.0), (Z2, m.1)]));
    }
    let x = a.solve_particular(&b)?;
    Some(Poly::from_terms(mono_list(n - 1).iter().enumerate().map(|(j, m)| (mono(&[(Z1, m.0), (Z2, m.1)]), x[(j, 0)].clone()))))
}

/// The approximate integral `κ = (z1³ − z2³)/6 + h1² κ₁ + h2² κ₂` with `h_i = H_i + e_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaIntegral {
    /// Coefficient of `h1²`.
    pub k1: Poly<Q>,
    /// Coefficient of `h2²`.
    pub k2: Poly<Q>,
    pub poly: Poly<Q>,
}

pub fn kappa_integral(res: &ResonantPolys) -> Result<KappaIntegral> {
    let d1 = zpow::<Q>(2, 0).scale(&q(1, 2));
    let d2 = zpow::<Q>(0, 2).scale(&q(-1, 2));
    let rhs1 = res.r61.mul(&d1).add(&swap_z(&res.r62).mul(&d2)).neg();
    let rhs2 = res.r62.mul(&d1).add(&swap_z(&res.r61).mul(&d2)).neg();
    let k1 = solve_x0(&rhs1).ok_or_else(|| SbcError::Invariant("no degree-7 correction for h1".into()))?;
    let k2 = solve_x0(&rhs2).ok_or_else(|| SbcError::Invariant("no degree-7 correction for h2".into()))?;
    let h = |hv: usize, ev: usize| Poly::<Q>::var(hv).add(&Poly::var(ev));
    let k0 = zpow::<Q>(3, 0).sub(&zpow(0, 3)).scale(&q(1, 6));
    let poly = k0.add(&h(H1, E1).mul(&h(H1, E1)).mul(&k1)).add(&h(H2, E2).mul(&h(H2, E2)).mul(&k2));
    Ok(KappaIntegral { k1, k2, poly })
}

/// Lowest graded degree of `X(κ)`; `None` if it vanishes.
pub fn kappa_order(nf: &PolyField<Q>, kappa: &Poly<Q>) -> Option<usize> {
    nf.apply(kappa, 64).min_degree()
}

/// `(z1, z2) = (w1 + w2, w1 − w2)` in a scalar polynomial.
pub fn rotate_poly<C: Coeff>(p: &Poly<C>) -> Poly<C> {
    let mut subs: [Option<Poly<C>>; NVARS] = Default::default();
    subs[Z1] = Some(Poly::var(Z1).add(&Poly::var(Z2)));
    subs[Z2] = Some(Poly::var(Z1).sub(&Poly::var(Z2)));
    p.substitute(&subs, usize::MAX / 4)
}

/// The field in rotated coordinates `(w1, w2) = ½(z1 + z2, z1 − z2)`.
pub fn rotate_pi4<C: Coeff>(x: &PolyField<C>) -> PolyField<C> {
    let r: Vec<Poly<C>> = x.comps.iter().map(rotate_poly).collect();
    let half = C::from_q(&q(1, 2));
    let mut comps: [Poly<C>; NGRADED] = std::array::from_fn(|i| r[i].clone());
    comps[Z1] = r[Z1].add(&r[Z2]).scale(&half);
    comps[Z2] = r[Z1].sub(&r[Z2]).scale(&half);
    PolyField { comps, truncation: x.truncation }
}

fn divide_by_var<C: Coeff>(p: &Poly<C>, var: usize, k: u8) -> Result<Poly<C>> {
    let mut r = Poly::zero();
    for (m, c) in p.terms() {
        if m[var] < k {
            return Err(SbcError::Invariant(format!("term not divisible by {}^{k}", crate::poly::VAR_NAMES[var])));
        }
        let mut mm = *m;
        mm[var] -= k;
        r.add_term(mm, c.clone());
    }
    Ok(r)
}

/// A directional blow-up of the rotated normal form, exact up to the dropped remainder.
#[derive(Clone, Debug)]
pub struct DirectionalField {
    pub chart: crate::dynamics::ChartId,
    pub field: PolyField<Q>,
    /// Order of the dropped remainder in the radial variable.
    pub remainder_order: usize,
}

impl DirectionalField {
    /// Evaluate at `(r, v, x, h1, h2, y)` with the expansion point `(H1, H2, Y)`.
    pub fn eval(&self, s: &[f64; 6], base: [f64; 3]) -> [f64; 6] {
        let vars = [s[0], s[1], s[2] - 1.0, s[3] - base[0], s[4] - base[1], s[5] - base[2], base[0], base[1], base[2]];
        std::array::from_fn(|i| self.field.comps[i].eval_f64(&vars))
    }
}

const NO_TRUNC: usize = usize::MAX / 4;

/// `(w1, w2) = (û, û v̂)` with time rescaled by `û`.
pub fn blowup_dir_z1(rot: &PolyField<Q>) -> Result<DirectionalField> {
    let mut subs: [Option<Poly<Q>>; NVARS] = Default::default();
    subs[Z1] = Some(Poly::var(Z1));
    subs[Z2] = Some(Poly::var(Z1).mul(&Poly::var(Z2)));
    let s: Vec<Poly<Q>> = rot.comps.iter().map(|c| c.substitute(&subs, NO_TRUNC)).collect();
    let v = Poly::<Q>::var(Z2);
    let mut comps: [Poly<Q>; NGRADED] = Default::default();
    comps[Z1] = divide_by_var(&s[Z1], Z1, 1)?;
    comps[Z2] = divide_by_var(&s[Z2].sub(&v.mul(&s[Z1])), Z1, 2)?;
    for i in 2..NGRADED {
        comps[i] = divide_by_var(&s[i], Z1, 1)?;
    }
    Ok(DirectionalField {
        chart: crate::dynamics::ChartId::DirZ1,
        field: PolyField { comps, truncation: NO_TRUNC },
        remainder_order: rot.truncation,
    })
}

/// `(w1, w2) = (ū v̄, v̄)` with time rescaled by `v̄`.
pub fn blowup_dir_z2(rot: &PolyField<Q>) -> Result<DirectionalField> {
    let mut subs: [Option<Poly<Q>>; NVARS] = Default::default();
    subs[Z1] = Some(Poly::var(Z1).mul(&Poly::var(Z2)));
    subs[Z2] = Some(Poly::var(Z2));
    let s: Vec<Poly<Q>> = rot.comps.iter().map(|c| c.substitute(&subs, NO_TRUNC)).collect();
    let u = Poly::<Q>::var(Z1);
    let mut comps: [Poly<Q>; NGRADED] = Default::default();
    comps[Z1] = divide_by_var(&s[Z1].sub(&u.mul(&s[Z2])), Z2, 2)?;
    comps[Z2] = divide_by_var(&s[Z2], Z2, 1)?;
    for i in 2..NGRADED {
        comps[i] = divide_by_var(&s[i], Z2, 1)?;
    }
    Ok(DirectionalField {
        chart: crate::dynamics::ChartId::DirZ2,
        field: PolyField { comps, truncation: NO_TRUNC },
        remainder_order: rot.truncation,
    })
}

/// Certificates for the absence of analytic invariants separating the energies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoFoliationReport {
    /// `⟨R_h, R_h⟩`.
    pub rh_norm2: String,
    /// Squared norm of the projection of `R_h` on `Im X̃₀`.
    pub projection_norm2: String,
    pub residual_norm2: String,
    pub rh_outside_image: bool,
    /// `dim ker X̃₀` on degree-4 scalars.
    pub kernel_dim_degree4: usize,
    /// `dim ker X̃₀` on degree-3 scalars and whether it is spanned by `z1³ − z2³`.
    pub kernel_dim_degree3: usize,
    pub kernel_degree3_is_kappa_hat: bool,
    pub rank_degree8_to_9: usize,
}

fn poly_from_vec(n: usize, v: &[Q]) -> Poly<Q> {
    Poly::from_terms(mono_list(n).iter().zip(v).map(|(m, c)| (mono(&[(Z1, m.0), (Z2, m.1)]), c.clone())))
}

pub fn verify_no_foliation(rh: &Poly<Q>) -> Result<NoFoliationReport> {
    let a = scalar_operator(8);
    let u = minimal_preimage_map(&a, &scalar_weights(8), &scalar_weights(9));
    let rv: Vec<Q> = mono_list(9).iter().map(|m| rh.coeff(&mono(&[(Z1, m.0), (Z2, m.1)]))).collect();
    let pre = u.mul_vec(&rv);
    let proj = poly_from_vec(9, &a.mul_vec(&pre));
    let resid = rh.sub(&proj);
    let rh_norm2 = fischer_inner(rh, rh)?;
    let projection_norm2 = fischer_inner(&proj, &proj)?;
    let residual_norm2 = fischer_inner(&resid, &resid)?;
    let k4 = scalar_operator(4).nullspace();
    let k3 = scalar_operator(3).nullspace();
    let kappa_hat = zpow::<Q>(3, 0).sub(&zpow(0, 3));
    let is_kh = k3.len() == 1 && {
        let p = poly_from_vec(3, &k3[0]);
        let c = p.coeff(&mono(&[(Z1, 3)]));
        !c.is_zero() && p.scale(&(Q::one() / c)) == kappa_hat
    };
    Ok(NoFoliationReport {
        rh_norm2: q_to_string(&rh_norm2),
        projection_norm2: q_to_string(&projection_norm2),
        rh_outside_image: residual_norm2.is_positive(),
        residual_norm2: q_to_string(&residual_norm2),
        kernel_dim_degree4: k4.len(),
        kernel_dim_degree3: k3.len(),
        kernel_degree3_is_kappa_hat: is_kh,
        rank_degree8_to_9: a.rank(),
    })
}

/// Bases of `Im L` (from degree `d`) and `ker L*` (in degree `d + 1`) for fields in `z1, z2` only.
#[derive(Clone, Debug)]
pub struct GradedSplit {
    pub degree: usize,
    pub image: Vec<PolyField<Q>>,
    pub kernel: Vec<PolyField<Q>>,
    pub dim_total: usize,
}

fn field_from_vec(n: usize, v: &[Q], comps: &[usize]) -> PolyField<Q> {
    let len = n + 1;
    let mut f = PolyField::zero(n);
    for (k, &ci) in comps.iter().enumerate() {
        f.comps[ci] = poly_from_vec(n, &v[k * len..(k + 1) * len]);
    }
    f
}

fn image_and_cokernel(a: &QMatrix, wr: &[Q]) -> (Vec<Vec<Q>>, Vec<Vec<Q>>) {
    let mut at = a.transpose();
    at.rref();
    let image: Vec<Vec<Q>> = (0..at.rows)
        .map(|i| (0..at.cols).map(|j| at[(i, j)].clone()).collect::<Vec<Q>>())
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .collect();
    let ker = a.transpose().scale_cols(wr).nullspace();
    (image, ker)
}

pub fn graded_split(d: usize) -> GradedSplit {
    let n = d + 1;
    let (pi, pk) = image_and_cokernel(&pair_operator(d), &pair_weights(n));
    let (si, sk) = image_and_cokernel(&scalar_operator(d), &scalar_weights(n));
    let mut image: Vec<PolyField<Q>> = pi.iter().map(|v| field_from_vec(n, v, &[Z1, Z2])).collect();
    let mut kernel: Vec<PolyField<Q>> = pk.iter().map(|v| field_from_vec(n, v, &[Z1, Z2])).collect();
    for c in [XI, E1, E2, PSI] {
        image.extend(si.iter().map(|v| field_from_vec(n, v, &[c])));
        kernel.extend(sk.iter().map(|v| field_from_vec(n, v, &[c])));
    }
    GradedSplit { degree: n, image, kernel, dim_total: NGRADED * (n + 1) }
}

/// Kernel of `X̃₀*` on degree-`n` scalars in `z1, z2`.
pub fn scalar_adjoint_kernel(n: usize) -> Vec<Poly<Q>> {
    scalar_operator(n - 1).transpose().scale_cols(&scalar_weights(n)).nullspace().iter().map(|v| poly_from_vec(n, v)).collect()
}

/// Everything the numerics need from the exact degree-9 normal form; mass independent.
#[derive(Clone, Debug)]
pub struct UniversalPolys {
    pub resonant: ResonantPolys,
    pub kappa: KappaIntegral,
}

/// Computed once from the exact equal-mass normal form.
pub fn universal_polys() -> &'static UniversalPolys {
    static CELL: std::sync::OnceLock<UniversalPolys> = std::sync::OnceLock::new();
    CELL.get_or_init(|| {
        let m = MassParams::equal();
        let k = nf_constants_exact(&m, 11).expect("equal masses are valid");
        let x = glc_taylor_field(&k, 9);
        let res = normal_form_with(&x, 9, false).expect("normal form of the regularised field");
        let resonant = extract_resonant(&res.normal_form, &k).expect("resonant terms");
        let kappa = kappa_integral(&resonant).expect("degree-7 integral");
        UniversalPolys { resonant, kappa }
    })
}

/// Serializable summary of a computed normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormReport {
    pub masses: [f64; 4],
    pub max_degree: usize,
    /// Absent when the degree ceiling is below the resonant degree.
    pub r61: Option<String>,
    pub r62: Option<String>,
    pub rh: Option<String>,
    pub beta: [String; 2],
    pub kappa_h1: Option<String>,
    pub kappa_h2: Option<String>,
    /// Lowest graded degree of `X⁹(κ)`.
    pub kappa_order: Option<usize>,
    pub matches_reference: bool,
    /// Lowest degree where `X ∘ T ≠ DT · N`; `None` certifies the conjugation up to `max_degree`.
    pub certificate_defect_degree: Option<usize>,
    pub lowest_h_resonance_degree: Option<usize>,
}

impl NormalFormReport {
    pub fn certificate_ok(&self) -> bool {
        self.certificate_defect_degree.is_none()
    }

    pub fn render(&self) -> String {
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "-".into());
        let mut out = format!("normal form of degree {} for masses {:?}\n", self.max_degree, self.masses);
        out += &format!("  R61      = {}\n  R62      = {}\n  Rh       = {}\n", opt(&self.r61), opt(&self.r62), opt(&self.rh));
        out += &format!("  beta     = ({}, {})\n", self.beta[0], self.beta[1]);
        out += &format!("  kappa_h1 = {}\n  kappa_h2 = {}\n", opt(&self.kappa_h1), opt(&self.kappa_h2));
        match self.lowest_h_resonance_degree {
            Some(d) => out += &format!("  lowest resonant term in the energy components: degree {d}\n"),
            None => out += &format!("  no resonant terms in the energy components up to degree {}\n", self.max_degree),
        }
        if let Some(k) = self.kappa_order {
            out += &format!("  X(kappa) starts at degree {k}\n");
        }
        out += &format!("  matches reference: {}\n", self.matches_reference);
        match self.certificate_defect_degree {
            None => out += &format!("  conjugation certificate: ok through degree {}\n", self.max_degree),
            Some(d) => out += &format!("  conjugation certificate: FAILED at degree {d}\n"),
        }
        out
    }
}

/// Run the exact engine to `max_degree` and summarise the resonant structure.
pub fn normal_form_report(m: &MassParams, max_degree: usize) -> Result<NormalFormReport> {
    if !(2..=13).contains(&max_degree) {
        return Err(SbcError::Domain(format!("max degree {max_degree} must lie in [2, 13]")));
    }
    let k = nf_constants_exact(m, max_degree + 2)?;
    let x = glc_taylor_field(&k, max_degree);
    let res = normal_form(&x, max_degree)?;
    let defect = conjugation_defect(&x, &res);
    let beta = [k.bc() * &k.al[0], k.bc() * &k.al[1]];
    let mut rep = NormalFormReport {
        masses: m.as_array(),
        max_degree,
        r61: None,
        r62: None,
        rh: None,
        beta: [q_to_string(&beta[0]), q_to_string(&beta[1])],
        kappa_h1: None,
        kappa_h2: None,
        kappa_order: None,
        matches_reference: false,
        certificate_defect_degree: defect,
        lowest_h_resonance_degree: lowest_h_resonance(&res.normal_form),
    };
    if max_degree >= 9 {
        let r = extract_resonant(&res.normal_form, &k)?;
        let kap = kappa_integral(&r)?;
        rep.matches_reference = r.r61 == reference_r61()
            && r.r62 == reference_r62()
            && r.rh == reference_rh()
            && kap.k1 == reference_kappa7()
            && kap.k2 == swap_z(&reference_kappa7()).neg();
        rep.kappa_order = kappa_order(&assemble_x9(&r), &kap.poly);
        rep.r61 = Some(r.r61.render());
        rep.r62 = Some(r.r62.render());
        rep.rh = Some(r.rh.render());
        rep.kappa_h1 = Some(kap.k1.render());
        rep.kappa_h2 = Some(kap.k2.render());
    }
    Ok(rep)
}

/// Lowest degree of any `z`-only term in the energy components.
pub fn lowest_h_resonance(nf: &PolyField<Q>) -> Option<usize> {
    [E1, E2].iter().filter_map(|&i| z_only(&nf.comps[i], &[]).min_degree()).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::lie_bracket;

    #[test]
    fn fischer_convention() {
        let a = zpow::<Q>(2, 0);
        let b = zpow::<Q>(1, 1);
        assert_eq!(fischer_inner(&a, &b).unwrap(), qi(0));
        assert_eq!(fischer_inner(&a, &a).unwrap(), qi(2));
        assert!(fischer_inner(&a, &zpow(3, 0)).is_err());
    }

    #[test]
    fn operator_matches_bracket() {
        let mut u = PolyField::<Q>::zero(9);
        u.comps[Z1] = zpow::<Q>(2, 1).add(&zpow::<Q>(0, 3).scale(&qi(3)));
        u.comps[Z2] = zpow::<Q>(1, 2).scale(&q(-2, 5));
        u.comps[E1] = zpow::<Q>(3, 0);
        let a = cohomological_op(&u);
        let b = lie_bracket(&PolyField::x0(9), &u, 9);
        assert_eq!(a.comps, b.comps);
        assert!(cohomological_op(&PolyField::<Q>::x0(9)).is_zero());
    }

    #[test]
    fn euler_bracket() {
        let mut e = PolyField::<Q>::zero(9);
        e.comps[Z1] = zpow(1, 0);
        e.comps[Z2] = zpow(0, 1);
        let b = lie_bracket(&PolyField::x0(9), &e, 9);
        assert_eq!(b.comps, PolyField::<Q>::x0(9).scale(&qi(-1)).comps);
    }

    #[test]
    fn reference_rh_in_adjoint_kernel() {
        assert!(x0_adjoint(&reference_rh()).is_zero());
        let k = scalar_adjoint_kernel(9);
        assert_eq!(k.len(), 1);
        let lead = k[0].coeff(&mono(&[(Z1, 9)]));
        assert_eq!(k[0].scale(&(q(4, 19) / lead)), reference_rh());
    }

    #[test]
    fn taylor_field_leading_part() {
        let x = glc_taylor_field_exact(&MassParams::equal(), 5).unwrap();
        assert_eq!(x.truncate(2).comps, PolyField::<Q>::x0(5).comps);
        let z2s = zpow::<Q>(0, 2);
        let coeff = x.comps[Z1].coeff(&mono(&[(Z1, 2), (Z2, 2), (H1, 1)]));
        assert_eq!(coeff, q(1, 2));
        assert!(z2s.coeff(&mono(&[(Z2, 2)])) == qi(1));
    }

    #[test]
    fn equal_mass_degree9() {
        let u = universal_polys();
        assert_eq!(u.resonant.r61, reference_r61());
        assert_eq!(u.resonant.r62, reference_r62());
        assert_eq!(u.resonant.rh, reference_rh());
        assert_eq!(u.resonant.beta[0], q(3, 64));
        assert_eq!(u.kappa.k1, reference_kappa7());
        assert_eq!(u.kappa.k2, swap_z(&reference_kappa7()).neg());
    }

    #[test]
    fn certificate_and_kappa_order() {
        let m = MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap();
        let k = nf_constants_exact(&m, 11).unwrap();
        let x = glc_taylor_field(&k, 9);
        let res = normal_form(&x, 9).unwrap();
        assert_eq!(conjugation_defect(&x, &res), None);
        let r = extract_resonant(&res.normal_form, &k).unwrap();
        assert_eq!(r.rh, reference_rh());
        let kap = kappa_integral(&r).unwrap();
        assert!(kappa_order(&assemble_x9(&r), &kap.poly).unwrap() >= 10);
        assert_eq!(lowest_h_resonance(&res.normal_form), Some(9));
    }

    #[test]
    fn report_matches_reference() {
        let rep = normal_form_report(&MassParams::equal(), 9).unwrap();
        assert!(rep.matches_reference && rep.certificate_ok());
        assert_eq!(rep.beta, ["3/64".to_string(), "3/64".to_string()]);
        assert_eq!(rep.lowest_h_resonance_degree, Some(9));
        let low = normal_form_report(&MassParams::equal(), 5).unwrap();
        assert_eq!(low.lowest_h_resonance_degree, None);
        assert!(low.rh.is_none() && low.certificate_ok());
        assert!(normal_form_report(&MassParams::equal(), 1).is_err());
    }

    #[test]
    fn no_foliation_certificate() {
        let rep = verify_no_foliation(&reference_rh()).unwrap();
        assert!(rep.rh_outside_image);
        assert_eq!(rep.projection_norm2, "0");
        assert_eq!(rep.kernel_dim_degree4, 0);
        assert_eq!(rep.kernel_dim_degree3, 1);
        assert!(rep.kernel_degree3_is_kappa_hat);
    }

    #[test]
    fn graded_split_dimensions() {
        for d in 2..7 {
            let g = graded_split(d);
            assert_eq!(g.image.len() + g.kernel.len(), g.dim_total);
            for kf in &g.kernel {
                assert!(adjoint_op(kf).is_zero());
            }
        }
    }

    #[test]
    fn f64_engine_agrees() {
        let m = MassParams::equal();
        let kf = crate::constants::nf_constants_f64(&m, 11).unwrap();
        let x = glc_taylor_field(&kf, 9);
        let res = normal_form(&x, 9).unwrap();
        let c = res.normal_form.comps[E1].coeff(&mono(&[(Z1, 9)]));
        assert!((c - 3.0 / 304.0).abs() < 1e-14, "{c}");
        assert_eq!(conjugation_defect(&x, &res), None);
    }
}
