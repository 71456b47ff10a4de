//! Transition maps past the collision manifold and the predicted block map.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::DerivedConstants;
use crate::error::{Result, SbcError};
use crate::normal_form::universal_polys;
use crate::poly::{Z1, Z2};
use crate::special::{gamma_limit_constant, hyp2f1_special, integrate_adaptive};

fn rh_f64() -> &'static Vec<(i32, i32, f64)> {
    static CELL: OnceLock<Vec<(i32, i32, f64)>> = OnceLock::new();
    CELL.get_or_init(|| {
        universal_polys().resonant.rh.terms().map(|(m, c)| (m[Z1] as i32, m[Z2] as i32, crate::coeff::q_to_f64(c))).collect()
    })
}

/// `R_h(z1, z2)`.
pub fn rh_eval(z1: f64, z2: f64) -> f64 {
    rh_f64().iter().map(|&(a, b, c)| c * z1.powi(a) * z2.powi(b)).sum()
}

/// `R̃_h(ū, 1) = R_h(ū + 1, ū − 1)`.
pub fn rh_tilde(u: f64) -> f64 {
    rh_eval(u + 1.0, u - 1.0)
}

fn hbar8_integrand(t: f64) -> f64 {
    (1.0 + 3.0 * t * t).powf(-11.0 / 3.0) * rh_tilde(t)
}

/// `H̄⁽⁸⁾(ū) = 3^{8/3} ∫₀^ū (1 + 3t²)^{−11/3} R̃_h(t, 1) dt` by adaptive quadrature.
pub fn hbar8_quadrature(u: f64) -> f64 {
    3f64.powf(8.0 / 3.0) * integrate_adaptive(hbar8_integrand, 0.0, u, 1e-14)
}

/// Closed form of `H̄⁽⁸⁾` in terms of `₂F₁(1/2, 2/3; 3/2; −3ū²)`.
pub fn hbar8_closed(u: f64) -> Result<f64> {
    let u2 = u * u;
    let alg = 9.0 * (u2 * u2 + 2.0 * u2 - 3.0) / (3.0 * u2 + 1.0).powf(5.0 / 3.0);
    let f = hyp2f1_special(-3.0 * u2)?;
    Ok(-(72.0 / 95.0) * 3f64.powf(2.0 / 3.0) * u * (alg - 38.0 * f))
}

/// `H⁸(ν) = (432/95) ν + ν^{8/3} (H̄⁽⁸⁾(1/ν) − H̄⁽⁸⁾(−1/ν))`.
pub fn h8_of_nu(nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let w = 1.0 / nu;
    Ok(432.0 / 95.0 * nu + nu.powf(8.0 / 3.0) * (hbar8_quadrature(w) - hbar8_quadrature(-w)))
}

/// The unscaled combination `(432/95)ν + H̄⁽⁸⁾(−1/ν) − H̄⁽⁸⁾(1/ν)`,
/// kept for comparison; it has neither the sign nor the scaling of the variational solution.
pub fn h8_of_nu_unscaled(nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let w = 1.0 / nu;
    Ok(432.0 / 95.0 * nu + hbar8_quadrature(-w) - hbar8_quadrature(w))
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(SbcError::Domain(format!("nu = {nu} must lie in (0, 1]")));
    }
    Ok(())
}

/// `H⁸(ν)/ν^{8/3}` on a sequence of ν, and the extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H8Convergence {
    pub nu: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Limit from the last two ratios assuming a `ν^{1/3}` remainder.
    pub extrapolated: f64,
    pub gamma_limit: f64,
    pub relative_error: f64,
}

/// Richardson step for `r(ν) = L + c ν^p` at `ν` and `ν/2`.
pub fn richardson(r_coarse: f64, r_fine: f64, p: f64) -> f64 {
    let q = 2f64.powf(-p);
    (r_fine - q * r_coarse) / (1.0 - q)
}

pub fn h8_convergence(nus: &[f64]) -> Result<H8Convergence> {
    if nus.len() < 2 {
        return Err(SbcError::Precondition("need at least two values of nu".into()));
    }
    let ratio = nus.iter().map(|&n| Ok(h8_of_nu(n)? / n.powf(8.0 / 3.0))).collect::<Result<Vec<_>>>()?;
    let k = nus.len();
    if (nus[k - 2] / nus[k - 1] - 2.0).abs() > 1e-12 {
        return Err(SbcError::Precondition("the last two values of nu must differ by a factor 2".into()));
    }
    let extrapolated = richardson(ratio[k - 2], ratio[k - 1], 1.0 / 3.0);
    let gamma_limit = gamma_limit_constant();
    Ok(H8Convergence { nu: nus.to_vec(), ratio, extrapolated, gamma_limit, relative_error: (extrapolated / gamma_limit - 1.0).abs() })
}

/// Direction of a Dulac passage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DulacDirection {
    /// Ratio 1/3: `v ↦ ν^{−1/3} v^{1/3}`.
    Incoming,
    /// Ratio 3: `u ↦ ν u³`.
    Outgoing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DulacParams {
    /// Ratio of hyperbolicity as `(numerator, denominator)`.
    pub rho: (u32, u32),
    pub nu: f64,
    pub direction: DulacDirection,
}

impl DulacParams {
    pub fn incoming(nu: f64) -> Self {
        DulacParams { rho: (1, 3), nu, direction: DulacDirection::Incoming }
    }

    pub fn outgoing(nu: f64) -> Self {
        DulacParams { rho: (3, 1), nu, direction: DulacDirection::Outgoing }
    }
}

/// Leading-order image and the order of the dropped remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DulacImage {
    /// `(hyperbolic, x, h1, h2, y)`.
    pub coords: [f64; 5],
    /// Remainder is `O(t^k ln t)` in the incoming hyperbolic coordinate `t`.
    pub remainder_exponent: u32,
    pub remainder_log_power: u32,
}

/// Dulac map past a saddle of the collision manifold, at leading order.
pub fn dulac_map(p: &DulacParams, s: &[f64; 5]) -> Result<DulacImage> {
    if !(p.nu > 0.0 && p.nu.is_finite()) {
        return Err(SbcError::Domain(format!("nu = {} must be positive", p.nu)));
    }
    let t = s[0];
    if !(t > 0.0) {
        return Err(SbcError::Domain(format!("hyperbolic coordinate {t} must be positive")));
    }
    let (h, k) = match (p.direction, p.rho) {
        (DulacDirection::Incoming, (1, 3)) => ((t / p.nu).cbrt(), 3),
        (DulacDirection::Outgoing, (3, 1)) => (p.nu * t.powi(3), 9),
        (d, r) => return Err(SbcError::Domain(format!("ratio {}/{} does not match {d:?} passage", r.0, r.1))),
    };
    Ok(DulacImage { coords: [h, s[1], s[2], s[3], s[4]], remainder_exponent: k, remainder_log_power: 1 })
}

/// Passage along the heteroclinic connection: `h1 += β1 H⁸(ν) u⁸`, `h2 −= β2 H⁸(ν) u⁸`
/// on `(u, x, h1, h2, y)`.
pub fn smooth_transition(nu: f64, c: &DerivedConstants, s: &[f64; 5]) -> Result<[f64; 5]> {
    let h8 = h8_of_nu(nu)?;
    let u8 = s[0].powi(8);
    Ok([s[0], s[1], s[2] + c.beta(0) * h8 * u8, s[3] - c.beta(1) * h8 * u8, s[4]])
}

/// The ν-dependent composition `D₂ν ∘ T⁺ ∘ D₁ν` on `(v, x, h1, h2, y)`.
pub fn composed_transition(nu: f64, c: &DerivedConstants, s: &[f64; 5]) -> Result<[f64; 5]> {
    let a = dulac_map(&DulacParams::incoming(nu), s)?;
    let b = smooth_transition(nu, c, &a.coords)?;
    Ok(dulac_map(&DulacParams::outgoing(nu), &b)?.coords)
}

/// Coefficients of the `v^{8/3}` law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMapPrediction {
    pub exponent: String,
    pub coeff_h1: f64,
    /// Sign fixed by conservation of `a₂^{−1/3} h1 + a₁^{−1/3} h2`.
    pub coeff_h2: f64,
    /// The `h2` coefficient under the same-sign convention, for comparison.
    pub coeff_h2_same_sign: f64,
    pub remainder_exponent: String,
    pub remainder_log_power: u32,
}

/// The ν-independent limit `(v, x, h1 + b̃_c a₁^{−1/3} v^{8/3}, h2 − b̃_c a₂^{−1/3} v^{8/3}, y)`.
pub fn predicted_block_map(v: f64, c: &DerivedConstants, s: &[f64; 5]) -> Result<([f64; 5], BlockMapPrediction)> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(SbcError::Domain(format!("v = {v} must be non-negative")));
    }
    let k = c.btilde_c;
    let pred = BlockMapPrediction {
        exponent: "8/3".into(),
        coeff_h1: k * c.al(0),
        coeff_h2: -k * c.al(1),
        coeff_h2_same_sign: k * c.al(1),
        remainder_exponent: "3".into(),
        remainder_log_power: 1,
    };
    let v83 = v.powf(8.0 / 3.0);
    Ok(([v, s[1], s[2] + pred.coeff_h1 * v83, s[3] + pred.coeff_h2 * v83, s[4]], pred))
}

/// Least-squares power law on log-transformed data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

pub fn power_law_fit(v: &[f64], d: &[f64]) -> Result<PowerLawFit> {
    if v.len() != d.len() || v.len() < 2 {
        return Err(SbcError::Fit("need at least two paired samples".into()));
    }
    let sign = d[0].signum();
    if v.iter().any(|x| !(*x > 0.0)) || d.iter().any(|x| *x == 0.0 || x.signum() != sign || !x.is_finite()) {
        return Err(SbcError::Fit("log-log fit needs positive v and nonzero data of one sign".into()));
    }
    let lx: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = d.iter().map(|x| x.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SbcError::Fit("degenerate spread in v".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(x, y)| y - (icpt + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PowerLawFit { exponent: slope, coefficient: sign * icpt.exp(), r_squared, residuals })
}

/// A basis function `v^p (ln v)^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub exponent: f64,
    pub log_power: u32,
}

impl Basis {
    pub fn pow(exponent: f64) -> Self {
        Basis { exponent, log_power: 0 }
    }

    fn eval(&self, v: f64) -> f64 {
        v.powf(self.exponent) * v.ln().powi(self.log_power as i32)
    }
}

/// Least squares on a fixed basis. `relative = true` weights each equation by `1/|d|`.
/// Returns the coefficients and the root-mean-square residual.
pub fn fixed_exponent_fit(v: &[f64], d: &[f64], basis: &[Basis], relative: bool) -> Result<(Vec<f64>, f64)> {
    let n = v.len();
    if n != d.len() || n < basis.len() || basis.is_empty() {
        return Err(SbcError::Fit(format!("{n} samples cannot determine {} coefficients", basis.len())));
    }
    if relative && d.iter().any(|x| *x == 0.0) {
        return Err(SbcError::Fit("relative fit needs nonzero data".into()));
    }
    let a = DMatrix::from_fn(n, basis.len(), |i, j| {
        let w = if relative { 1.0 / d[i].abs() } else { 1.0 };
        basis[j].eval(v[i]) * w
    });
    let b = DVector::from_fn(n, |i, _| if relative { d[i].signum() } else { d[i] });
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-14).map_err(|e| SbcError::Fit(e.to_string()))?;
    let r = &a * &x - &b;
    Ok((x.iter().copied().collect(), (r.norm_squared() / n as f64).sqrt()))
}

/// Residual of the relative fit `c v^p (+ d v³ ln v)` for each candidate exponent `p = k/3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub exponent: String,
    pub value: f64,
    pub coefficient: f64,
    pub rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFit {
    /// Whether each model carries the `v³ ln v` term (for `p < 3`).
    pub with_log: bool,
    pub entries: Vec<GridEntry>,
    pub best: String,
    pub best_value: f64,
    /// `min(rms of the neighbours) / rms(best)`.
    pub selection_ratio: f64,
}

fn thirds(k: i32) -> String {
    if k % 3 == 0 {
        format!("{}", k / 3)
    } else {
        format!("{k}/3")
    }
}

fn grid_basis(p: f64, with_log: bool) -> Vec<Basis> {
    let mut b = vec![Basis::pow(p)];
    if with_log && p < 3.0 {
        b.push(Basis { exponent: 3.0, log_power: 1 });
    }
    b
}

/// Constrained-grid exponent selection over `{k/3 : k_min ≤ k ≤ k_max}`.
pub fn grid_fit(v: &[f64], d: &[f64], k_range: (i32, i32), with_log: bool) -> Result<GridFit> {
    let mut entries = Vec::new();
    for k in k_range.0..=k_range.1 {
        let p = k as f64 / 3.0;
        let (c, rms) = fixed_exponent_fit(v, d, &grid_basis(p, with_log), true)?;
        entries.push(GridEntry { exponent: thirds(k), value: p, coefficient: c[0], rms });
    }
    let best = (0..entries.len()).min_by(|&a, &b| entries[a].rms.total_cmp(&entries[b].rms)).expect("non-empty grid");
    let mut g = GridFit { with_log, best: entries[best].exponent.clone(), best_value: entries[best].value, selection_ratio: 0.0, entries };
    g.selection_ratio = neighbour_ratio(&g, best);
    Ok(g)
}

fn neighbour_ratio(g: &GridFit, i: usize) -> f64 {
    let r = g.entries[i].rms;
    let n = [i.checked_sub(1), Some(i + 1).filter(|&j| j < g.entries.len())];
    n.iter().flatten().map(|&j| g.entries[j].rms).fold(f64::INFINITY, f64::min) / r.max(f64::MIN_POSITIVE)
}

/// Ratio of the neighbour residuals to the residual at a given grid exponent `k/3`.
pub fn grid_ratio_at(g: &GridFit, k: i32) -> Option<f64> {
    let i = g.entries.iter().position(|e| e.exponent == thirds(k))?;
    Some(neighbour_ratio(g, i))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub exponent: String,
    pub exponent_value: f64,
    pub log_power: u32,
    /// One coefficient per fitted component.
    pub coefficient: Vec<f64>,
}

/// Quasi-regular expansion `Σ c_k v^{p_k} (ln v)^{l_k}` fitted per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSeries {
    pub terms: Vec<SeriesTerm>,
    pub truncation_exponent: String,
    pub components: Vec<String>,
    /// The grid used for selection.
    pub grid: GridFit,
    /// The single-term grid, reported whichever grid was selected.
    pub grid_plain: GridFit,
    pub free_fit: PowerLawFit,
    /// Relative rms of the selected model on the first component.
    pub residual: f64,
}

/// Minimum spread of a fit, in decades; the range `[1e-3, 3e-2]` spans `log10 30 ≈ 1.477`.
pub const MIN_DECADES: f64 = 1.47;

/// Samples `(v, [dh1, dh2, dx, dy])`.
pub type FitSample = (f64, [f64; 4]);

pub const FIT_COMPONENTS: [&str; 4] = ["dh1", "dh2", "dx", "dy"];

/// Leading exponent on the `k/3` grid from `dh1`. Models with a `v³ ln v` correction are
/// preferred when their best residual is at least a factor two below the single-term one.
pub fn quasi_regular_fit(samples: &[FitSample]) -> Result<TransitionSeries> {
    if samples.len() < 8 {
        return Err(SbcError::Fit(format!("need at least 8 samples, got {}", samples.len())));
    }
    let v: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(SbcError::Fit("sample coordinates v must be positive".into()));
    }
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    if (hi / lo).log10() < MIN_DECADES {
        return Err(SbcError::Fit(format!("samples span {:.3} decades, need {MIN_DECADES}", (hi / lo).log10())));
    }
    let d1: Vec<f64> = samples.iter().map(|s| s.1[0]).collect();
    let grid_plain = grid_fit(&v, &d1, (3, 12), false)?;
    let grid_log = grid_fit(&v, &d1, (3, 12), true)?;
    let free_fit = power_law_fit(&v, &d1)?;
    let best_rms = |g: &GridFit| g.entries.iter().map(|e| e.rms).fold(f64::INFINITY, f64::min);
    let grid = if best_rms(&grid_log) * 2.0 <= best_rms(&grid_plain) { grid_log } else { grid_plain.clone() };
    let lead = grid.best_value;
    let k_lead = (lead * 3.0).round() as i32;
    let basis = grid_basis(lead, grid.with_log);
    let use_log = basis.len() == 2;
    let mut coeffs = vec![Vec::new(); basis.len()];
    let mut residual = 0.0;
    for comp in 0..4 {
        let d: Vec<f64> = samples.iter().map(|s| s.1[comp]).collect();
        let relative = d.iter().all(|x| *x != 0.0) && d.iter().all(|x| x.signum() == d[0].signum());
        let (c, r) = fixed_exponent_fit(&v, &d, &basis, relative)?;
        if comp == 0 {
            residual = r;
        }
        for (k, ck) in c.into_iter().enumerate() {
            coeffs[k].push(ck);
        }
    }
    let terms = basis
        .iter()
        .zip(coeffs)
        .map(|(b, c)| SeriesTerm {
            exponent: if b.log_power == 0 { thirds(k_lead) } else { "3".into() },
            exponent_value: b.exponent,
            log_power: b.log_power,
            coefficient: c,
        })
        .collect();
    Ok(TransitionSeries {
        terms,
        truncation_exponent: if use_log { "10/3".into() } else { "3".into() },
        components: FIT_COMPONENTS.iter().map(|s| s.to_string()).collect(),
        grid,
        grid_plain,
        free_fit,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive_constants, MassParams};

    #[test]
    fn hbar8_two_ways() {
        assert_eq!(hbar8_quadrature(0.0), 0.0);
        for u in [-20.0, -3.0, -0.4, 0.1, 1.0, 2.5, 7.0, 20.0] {
            let a = hbar8_quadrature(u);
            let b = hbar8_closed(u).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs(), "{u}: {a} {b}");
        }
        assert!((hbar8_quadrature(1.0) - 41.99985092534886).abs() < 1e-10);
    }

    #[test]
    fn hbar8_is_odd() {
        for u in [0.3, 2.0, 11.0] {
            assert!((hbar8_quadrature(u) + hbar8_quadrature(-u)).abs() < 1e-12 * hbar8_quadrature(u).abs());
        }
    }

    #[test]
    fn h8_limit() {
        let c = h8_convergence(&[0.1, 0.05, 0.025]).unwrap();
        assert!(c.ratio.windows(2).all(|w| w[1] > w[0]));
        assert!((c.ratio[0] - 168.85).abs() < 0.01, "{:?}", c.ratio);
        assert!(c.relative_error < 0.01);
        assert!(h8_of_nu(0.01).unwrap() > 0.0);
        assert!(h8_of_nu(0.0).is_err());
    }

    #[test]
    fn dulac_composition() {
        for nu in [0.01, 0.3, 1.0] {
            let s = [0.02, 1.0, 0.1, -0.1, 0.0];
            let a = dulac_map(&DulacParams::incoming(nu), &s).unwrap();
            let b = dulac_map(&DulacParams::outgoing(nu), &a.coords).unwrap();
            assert!((b.coords[0] - s[0]).abs() < 1e-15);
            assert_eq!(&b.coords[1..], &s[1..]);
        }
        let one = dulac_map(&DulacParams::incoming(0.2), &[0.2, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((one.coords[0] - 1.0).abs() < 1e-15);
        assert!(dulac_map(&DulacParams::incoming(0.2), &[0.0, 1.0, 0.0, 0.0, 0.0]).is_err());
        let bad = DulacParams { rho: (3, 1), nu: 0.1, direction: DulacDirection::Incoming };
        assert!(dulac_map(&bad, &[0.1, 1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn transition_conserves_combination() {
        let c = derive_constants(&MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap()).unwrap();
        let s = [0.1, 1.0, 0.1, -0.1, 0.0];
        let t = smooth_transition(0.05, &c, &s).unwrap();
        let w = |x: &[f64; 5]| c.al(1) * x[2] + c.al(0) * x[3];
        assert!((w(&t) - w(&s)).abs() < 1e-18);
        let e = derive_constants(&MassParams::equal()).unwrap();
        let t = smooth_transition(0.05, &e, &[0.1, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let expect = 3.0 / 32.0 * 0.5 * h8_of_nu(0.05).unwrap() * 1e-8;
        assert!((t[2] - expect).abs() < 1e-12 * expect);
        assert_eq!(smooth_transition(0.05, &e, &[0.0, 1.0, 0.1, -0.1, 0.0]).unwrap(), [0.0, 1.0, 0.1, -0.1, 0.0]);
    }

    #[test]
    fn prediction_equal_masses() {
        let c = derive_constants(&MassParams::equal()).unwrap();
        let (s, p) = predicted_block_map(0.01, &c, &[0.0, 1.0, 0.1, -0.1, 0.0]).unwrap();
        assert!((p.coeff_h1 - 11.812458072754373).abs() < 1e-9);
        assert!((p.coeff_h1 / p.coeff_h2 + 1.0).abs() < 1e-15);
        assert!(s[2] > 0.1 && s[3] < -0.1);
        let (z, _) = predicted_block_map(0.0, &c, &[0.0, 1.0, 0.1, -0.1, 0.0]).unwrap();
        assert_eq!(z, [0.0, 1.0, 0.1, -0.1, 0.0]);
    }

    #[test]
    fn composition_tends_to_limit() {
        let c = derive_constants(&MassParams::equal()).unwrap();
        let s = [1e-3, 1.0, 0.0, 0.0, 0.0];
        let (lim, _) = predicted_block_map(s[0], &c, &s).unwrap();
        let mut errs = Vec::new();
        for nu in [0.1, 0.05, 0.025, 0.0125] {
            let t = composed_transition(nu, &c, &s).unwrap();
            errs.push((t[2] / lim[2] - 1.0).abs());
        }
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        let rate = (errs[2] / errs[3]).log2();
        assert!((rate - 1.0 / 3.0).abs() < 0.1, "{rate}");
    }

    fn synth(f: impl Fn(f64) -> f64) -> Vec<FitSample> {
        (0..12).map(|i| 1e-3 * 30f64.powf(i as f64 / 11.0)).map(|v| (v, [f(v), -f(v), 0.0, 0.0])).collect()
    }

    #[test]
    fn fit_exact_law() {
        let s = synth(|v| 2.5 * v.powf(8.0 / 3.0));
        let t = quasi_regular_fit(&s).unwrap();
        assert_eq!(t.grid.best, "8/3");
        assert!((t.terms[0].coefficient[0] - 2.5).abs() < 1e-12);
        assert!((t.terms[0].coefficient[1] + 2.5).abs() < 1e-12);
        assert!(t.residual < 1e-12);
        assert!((t.free_fit.exponent - 8.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn fit_with_log_correction() {
        let f = |v: f64| 2.5 * v.powf(8.0 / 3.0) + 0.25 * v.powi(3) * v.ln();
        let s: Vec<FitSample> = (0..10).map(|i| 1e-3 * 50f64.powf(i as f64 / 9.0)).map(|v| (v, [f(v), 0.0, 0.0, 0.0])).collect();
        let t = quasi_regular_fit(&s).unwrap();
        assert_eq!(t.grid.best, "8/3");
        assert_eq!(t.terms.len(), 2);
        assert!((t.terms[0].coefficient[0] / 2.5 - 1.0).abs() < 0.01);
        assert!((t.free_fit.exponent - 8.0 / 3.0).abs() < 0.02, "{}", t.free_fit.exponent);
    }

    #[test]
    fn fit_preconditions() {
        let s = synth(|v| v.powi(3));
        assert!(quasi_regular_fit(&s[..7]).is_err());
        let narrow: Vec<FitSample> = (0..10).map(|i| (0.01 + 1e-3 * i as f64, [1.0, 0.0, 0.0, 0.0])).collect();
        assert!(quasi_regular_fit(&narrow).is_err());
        assert!(power_law_fit(&[1.0, -1.0], &[1.0, 1.0]).is_err());
    }
}
