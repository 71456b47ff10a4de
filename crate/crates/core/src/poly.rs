//! Sparse multivariate polynomials and polynomial vector fields.
//!
//! Variables are `z1, z2, ξ = x − x*, e1 = h1 − h1*, e2 = h2 − h2*, ψ = y − y*`
//! (graded) followed by the parameters `H1 = h1*, H2 = h2*, Y = y*` (ungraded).
//! Degrees always mean the total degree in the six graded variables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeff::{q_from_str, q_to_string, Coeff, Q};

pub const NVARS: usize = 9;
pub const NGRADED: usize = 6;

pub const Z1: usize = 0;
pub const Z2: usize = 1;
pub const XI: usize = 2;
pub const E1: usize = 3;
pub const E2: usize = 4;
pub const PSI: usize = 5;
pub const H1: usize = 6;
pub const H2: usize = 7;
pub const YS: usize = 8;

pub const VAR_NAMES: [&str; NVARS] = ["z1", "z2", "xi", "e1", "e2", "psi", "H1", "H2", "Y"];

pub type MultiIndex = [u8; NVARS];

pub fn degree(m: &MultiIndex) -> usize {
    m[..NGRADED].iter().map(|&e| e as usize).sum()
}

pub fn unit(i: usize) -> MultiIndex {
    let mut m = [0u8; NVARS];
    m[i] = 1;
    m
}

pub fn mono(exps: &[(usize, u8)]) -> MultiIndex {
    let mut m = [0u8; NVARS];
    for &(i, e) in exps {
        m[i] += e;
    }
    m
}

/// α! over all nine exponents.
pub fn factorial_weight(m: &MultiIndex) -> u128 {
    m.iter().map(|&e| (1..=e as u128).product::<u128>()).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C: Coeff> {
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Default for Poly<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term([0; NVARS], c);
        p
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn var(i: usize) -> Self {
        Self::monomial(unit(i), C::one())
    }

    pub fn monomial(m: MultiIndex, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (MultiIndex, C)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &MultiIndex) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: MultiIndex, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                v.add_assign_ref(&c);
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(degree).min()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(degree).max()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(*m, c.clone());
        }
        r
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(*m, c.clone());
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(*m, c.neg_ref());
        }
        r
    }

    pub fn add_scaled(&mut self, o: &Self, s: &C) {
        for (m, c) in &o.terms {
            self.add_term(*m, c.mul_ref(s));
        }
    }

    pub fn scale(&self, s: &C) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, c.mul_ref(s))).collect() }
    }

    pub fn neg(&self) -> Self {
        Poly { terms: self.terms.iter().map(|(m, c)| (*m, c.neg_ref())).collect() }
    }

    /// Product with every term of graded degree above `max_deg` dropped.
    pub fn mul_trunc(&self, o: &Self, max_deg: usize) -> Self {
        let mut r = Self::zero();
        for (m1, c1) in &self.terms {
            let d1 = degree(m1);
            if d1 > max_deg {
                continue;
            }
            for (m2, c2) in &o.terms {
                if d1 + degree(m2) > max_deg {
                    continue;
                }
                let mut m = *m1;
                for k in 0..NVARS {
                    m[k] += m2[k];
                }
                r.add_term(m, c1.mul_ref(c2));
            }
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_trunc(o, usize::MAX / 2)
    }

    pub fn pow_trunc(&self, n: u32, max_deg: usize) -> Self {
        let mut r = Self::one();
        for _ in 0..n {
            r = r.mul_trunc(self, max_deg);
        }
        r
    }

    pub fn diff(&self, i: usize) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            if m[i] > 0 {
                let mut mm = *m;
                mm[i] -= 1;
                r.add_term(mm, c.mul_ref(&C::from_i64(m[i] as i64)));
            }
        }
        r
    }

    pub fn truncate(&self, max_deg: usize) -> Self {
        Poly {
            terms: self.terms.iter().filter(|(m, _)| degree(m) <= max_deg).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    pub fn homogeneous_part(&self, d: usize) -> Self {
        Poly {
            terms: self.terms.iter().filter(|(m, _)| degree(m) == d).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    /// Truncated power series `Σ c_k p^k`.
    pub fn series(coeffs: &[C], p: &Self, max_deg: usize) -> Self {
        let mut r = Self::zero();
        let mut pk = Self::one();
        for (k, c) in coeffs.iter().enumerate() {
            r.add_scaled(&pk, c);
            if k + 1 < coeffs.len() {
                pk = pk.mul_trunc(p, max_deg);
                if pk.is_zero() {
                    break;
                }
            }
        }
        r.truncate(max_deg)
    }

    /// Replace every variable `i` by the polynomial `subs[i]` (None keeps the variable).
    pub fn substitute(&self, subs: &[Option<Poly<C>>; NVARS], max_deg: usize) -> Self {
        let mut cache: BTreeMap<(usize, u8), Self> = BTreeMap::new();
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            let mut keep = [0u8; NVARS];
            for i in 0..NVARS {
                if m[i] == 0 {
                    continue;
                }
                match &subs[i] {
                    None => keep[i] = m[i],
                    Some(s) => {
                        let pw = cache.entry((i, m[i])).or_insert_with(|| s.pow_trunc(m[i] as u32, max_deg)).clone();
                        t = t.mul_trunc(&pw, max_deg);
                    }
                }
            }
            if keep.iter().any(|&e| e > 0) {
                t = t.mul_trunc(&Self::monomial(keep, C::one()), max_deg);
            }
            r.add_assign(&t);
        }
        r.truncate(max_deg)
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, f: F) -> Poly<D> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (*m, f(c))))
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn eval_f64(&self, x: &[f64; NVARS]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = c.to_f64();
                for i in 0..NVARS {
                    if m[i] > 0 {
                        t *= x[i].powi(m[i] as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Fix the parameter variables at numeric values, leaving a polynomial in the graded variables.
    pub fn fix_params(&self, params: [f64; 3]) -> Poly<f64> {
        let mut r = Poly::<f64>::zero();
        for (m, c) in &self.terms {
            let mut t = c.to_f64();
            for k in 0..3 {
                t *= params[k].powi(m[NGRADED + k] as i32);
            }
            let mut mm = *m;
            mm[NGRADED..].fill(0);
            r.add_term(mm, t);
        }
        r
    }

    /// Relabel variables: the exponent of variable `i` moves to `perm[i]`.
    pub fn permute(&self, perm: &[usize; NVARS]) -> Self {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            let mut mm = [0u8; NVARS];
            for i in 0..NVARS {
                mm[perm[i]] += m[i];
            }
            (mm, c.clone())
        }))
    }
}

impl Poly<Q> {
    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            terms: self.terms.iter().map(|(m, c)| TermJson { exp: m.to_vec(), coeff: q_to_string(c) }).collect(),
        }
    }

    pub fn from_json(j: &PolyJson) -> Option<Self> {
        let mut p = Self::zero();
        for t in &j.terms {
            if t.exp.len() != NVARS {
                return None;
            }
            let mut m = [0u8; NVARS];
            m.copy_from_slice(&t.exp);
            p.add_term(m, q_from_str(&t.coeff)?);
        }
        Some(p)
    }

    /// Human-readable rendering, e.g. `3/32*z1^4*z2^4 - z1`.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c < &Q::from_integer(0.into());
            let a = if neg { -c.clone() } else { c.clone() };
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mut parts = Vec::new();
            let unit_coeff = a == Q::from_integer(1.into());
            if !unit_coeff || m.iter().all(|&e| e == 0) {
                parts.push(q_to_string(&a));
            }
            for i in 0..NVARS {
                match m[i] {
                    0 => {}
                    1 => parts.push(VAR_NAMES[i].to_string()),
                    e => parts.push(format!("{}^{}", VAR_NAMES[i], e)),
                }
            }
            s.push_str(&parts.join("*"));
        }
        s
    }
}

/// Canonical JSON form: terms sorted by multi-index, coefficients as `"p/q"` strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u8>,
    pub coeff: String,
}

/// A vector field with one polynomial per graded variable.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField<C: Coeff> {
    pub comps: [Poly<C>; NGRADED],
    pub truncation: usize,
}

impl<C: Coeff> PolyField<C> {
    pub fn zero(truncation: usize) -> Self {
        PolyField { comps: Default::default(), truncation }
    }

    pub fn new(comps: [Poly<C>; NGRADED], truncation: usize) -> Self {
        PolyField { comps: comps.map(|c| c.truncate(truncation)), truncation }
    }

    /// The leading part `X₀ = (z2², z1², 0, 0, 0, 0)`.
    pub fn x0(truncation: usize) -> Self {
        let mut f = Self::zero(truncation);
        f.comps[Z1] = Poly::monomial(mono(&[(Z2, 2)]), C::one());
        f.comps[Z2] = Poly::monomial(mono(&[(Z1, 2)]), C::one());
        f
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    /// The derivation `A(f) = Σ A_i ∂_i f` over the graded variables.
    pub fn apply(&self, f: &Poly<C>, max_deg: usize) -> Poly<C> {
        let mut r = Poly::zero();
        for i in 0..NGRADED {
            if self.comps[i].is_zero() {
                continue;
            }
            let d = f.diff(i);
            if d.is_zero() {
                continue;
            }
            r.add_assign(&self.comps[i].mul_trunc(&d, max_deg));
        }
        r
    }

    pub fn add(&self, o: &Self) -> Self {
        let t = self.truncation.min(o.truncation);
        PolyField::new(std::array::from_fn(|i| self.comps[i].add(&o.comps[i])), t)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let t = self.truncation.min(o.truncation);
        PolyField::new(std::array::from_fn(|i| self.comps[i].sub(&o.comps[i])), t)
    }

    pub fn scale(&self, s: &C) -> Self {
        PolyField { comps: std::array::from_fn(|i| self.comps[i].scale(s)), truncation: self.truncation }
    }

    pub fn homogeneous_part(&self, d: usize) -> Self {
        PolyField { comps: std::array::from_fn(|i| self.comps[i].homogeneous_part(d)), truncation: self.truncation }
    }

    pub fn truncate(&self, d: usize) -> Self {
        PolyField { comps: std::array::from_fn(|i| self.comps[i].truncate(d)), truncation: d.min(self.truncation) }
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.comps.iter().filter_map(|c| c.min_degree()).min()
    }

    pub fn to_f64(&self) -> PolyField<f64> {
        PolyField { comps: std::array::from_fn(|i| self.comps[i].to_f64()), truncation: self.truncation }
    }

    pub fn fix_params(&self, params: [f64; 3]) -> PolyField<f64> {
        PolyField { comps: std::array::from_fn(|i| self.comps[i].fix_params(params)), truncation: self.truncation }
    }
}

impl PolyField<Q> {
    pub fn to_json(&self) -> FieldJson {
        FieldJson {
            truncation: self.truncation,
            components: self.comps.iter().map(|c| c.to_json()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldJson {
    pub truncation: usize,
    pub components: Vec<PolyJson>,
}

/// Lie bracket `[A, B] = A(B) − B(A)`, truncated at `max_deg`.
pub fn lie_bracket<C: Coeff>(a: &PolyField<C>, b: &PolyField<C>, max_deg: usize) -> PolyField<C> {
    let comps = std::array::from_fn(|i| a.apply(&b.comps[i], max_deg).sub(&b.apply(&a.comps[i], max_deg)));
    PolyField { comps, truncation: max_deg }
}

/// Compiled `f64` polynomial in the six graded variables, for fast evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    monos: Vec<[u8; NGRADED]>,
    coeffs: Vec<f64>,
    max_exp: u8,
}

impl CompiledPoly {
    /// Compile after fixing parameters.
    pub fn new(p: &Poly<f64>) -> Self {
        let mut monos = Vec::new();
        let mut coeffs = Vec::new();
        let mut max_exp = 0;
        for (m, c) in p.terms() {
            let mut g = [0u8; NGRADED];
            g.copy_from_slice(&m[..NGRADED]);
            max_exp = max_exp.max(*g.iter().max().unwrap());
            monos.push(g);
            coeffs.push(*c);
        }
        CompiledPoly { monos, coeffs, max_exp }
    }

    fn powers(&self, x: &[f64; NGRADED]) -> Vec<[f64; NGRADED]> {
        let n = self.max_exp as usize + 1;
        let mut pw = vec![[1.0; NGRADED]; n];
        for k in 1..n {
            for i in 0..NGRADED {
                pw[k][i] = pw[k - 1][i] * x[i];
            }
        }
        pw
    }

    pub fn eval(&self, x: &[f64; NGRADED]) -> f64 {
        let pw = self.powers(x);
        let mut s = 0.0;
        for (m, c) in self.monos.iter().zip(&self.coeffs) {
            let mut t = *c;
            for i in 0..NGRADED {
                t *= pw[m[i] as usize][i];
            }
            s += t;
        }
        s
    }

    pub fn eval_grad(&self, x: &[f64; NGRADED]) -> (f64, [f64; NGRADED]) {
        let pw = self.powers(x);
        let mut s = 0.0;
        let mut g = [0.0; NGRADED];
        for (m, c) in self.monos.iter().zip(&self.coeffs) {
            let mut t = *c;
            for i in 0..NGRADED {
                t *= pw[m[i] as usize][i];
            }
            s += t;
            for j in 0..NGRADED {
                if m[j] == 0 {
                    continue;
                }
                let mut d = *c * m[j] as f64;
                for i in 0..NGRADED {
                    let e = if i == j { m[i] - 1 } else { m[i] };
                    d *= pw[e as usize][i];
                }
                g[j] += d;
            }
        }
        (s, g)
    }
}
