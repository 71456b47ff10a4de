//! End-to-end numerical block map through the simultaneous binary collision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{kappa_tilde, HCorrection, NumericChart};
use crate::constants::{derive_constants, DerivedConstants, MassParams};
use crate::dynamics::{glc_rhs, hamiltonian};
use crate::error::{Result, SbcError};
use crate::integrator::{integrate_to_section, integrate_to_section_guarded, Direction, IntegratorConfig, Level, SectionSpec, Trajectory};
use crate::normal_form::{assemble_x9, universal_polys, ResonantPolys};
use crate::poly::{PolyField, E1, E2, NVARS};
use crate::special::brent;
use crate::transition::{fixed_exponent_fit, power_law_fit, predicted_block_map, quasi_regular_fit, Basis, BlockMapPrediction, FitSample, PowerLawFit, TransitionSeries};

/// Multiples of the integrator tolerance below which an energy jump is treated as noise.
const NOISE_FACTOR: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockMapConfig {
    pub masses: MassParams,
    /// Sections `z̃₁ = ∓δ`.
    pub delta: f64,
    pub h_star: [f64; 2],
    pub y_star: f64,
    pub integrator: IntegratorConfig,
    /// Truncation degree of the numeric normal-form chart.
    pub chart_degree: usize,
    /// Escape bound on `|z1|, |z2|`.
    pub tube_radius: f64,
    pub uncoupled: bool,
    pub h_correction: HCorrection,
}

impl Default for BlockMapConfig {
    fn default() -> Self {
        BlockMapConfig {
            masses: MassParams::equal(),
            delta: 0.1,
            h_star: [0.1, -0.1],
            y_star: 0.0,
            integrator: IntegratorConfig::default(),
            chart_degree: 14,
            tube_radius: 1.0,
            uncoupled: false,
            h_correction: HCorrection::Resummed,
        }
    }
}

impl BlockMapConfig {
    pub fn validate(&self) -> Result<()> {
        self.masses.validate()?;
        self.integrator.validate()?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(SbcError::Domain(format!("delta = {} must lie in (0, 1]", self.delta)));
        }
        if self.h_star.iter().chain([&self.y_star]).any(|v| !v.is_finite() || v.abs() >= self.delta.max(0.5)) {
            return Err(SbcError::Domain("base values (h1*, h2*, y*) must be finite and small".into()));
        }
        if self.chart_degree < 9 || self.chart_degree > 15 {
            return Err(SbcError::Domain(format!("chart degree {} must lie in [9, 15]", self.chart_degree)));
        }
        if !(self.tube_radius > 2.0 * self.delta) {
            return Err(SbcError::Domain("tube radius must exceed twice delta".into()));
        }
        Ok(())
    }

    pub fn base(&self) -> [f64; 3] {
        [self.h_star[0], self.h_star[1], self.y_star]
    }
}

/// One passage from `z̃₁ = −δ` to `z̃₁ = +δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMapRow {
    pub s: f64,
    /// Normal-form entry coordinate `κ̃`.
    pub v: f64,
    pub state_in: [f64; 6],
    pub state_out: [f64; 6],
    /// Jumps of the corrected normal-form energies.
    pub dh1: f64,
    pub dh2: f64,
    pub dx: f64,
    pub dy: f64,
    /// Jumps of `h1, h2, y` in the regularised coordinates.
    pub raw_dh1: f64,
    pub raw_dh2: f64,
    pub raw_dy: f64,
    pub kappa_out: f64,
    pub time_rescaled: f64,
    pub time_physical: f64,
    /// `|H_out − H_in| / max(1, |H_in|)`.
    pub energy_drift: f64,
    pub steps: usize,
}

/// Block-map experiment for one configuration; holds the numeric chart.
#[derive(Clone, Debug)]
pub struct BlockMap {
    pub cfg: BlockMapConfig,
    pub constants: DerivedConstants,
    chart: NumericChart,
}

impl BlockMap {
    pub fn new(cfg: BlockMapConfig) -> Result<Self> {
        cfg.validate()?;
        let constants = derive_constants(&cfg.masses)?;
        let mut chart = NumericChart::new(&cfg.masses, cfg.base(), cfg.chart_degree)?;
        chart.mode = cfg.h_correction;
        Ok(BlockMap { cfg, constants, chart })
    }

    pub fn chart(&self) -> &NumericChart {
        &self.chart
    }

    /// Smallest jump the tolerances can resolve.
    pub fn noise_floor(&self) -> f64 {
        let i = &self.cfg.integrator;
        let h = self.cfg.h_star[0].abs().max(self.cfg.h_star[1].abs());
        NOISE_FACTOR * i.abs_tol.max(i.rel_tol * (1.0 + h))
    }

    /// Entry state on `z̃₁ = −δ` with `κ̃ = s` at the base energies.
    pub fn entry_state(&self, s: f64) -> Result<[f64; 6]> {
        let d = self.cfg.delta;
        let [h1, h2] = self.cfg.h_star;
        let w2 = brent(|q| kappa_tilde(-d, q, h1, h2) - s, -1.0, 1.0, 1e-16, 200)?;
        Ok([-d + w2, -d - w2, 1.0, h1, h2, self.cfg.y_star])
    }

    /// Numeric block map at offset `s`; negative offsets pass on the other side of the collision orbit.
    pub fn row(&self, s: f64) -> Result<BlockMapRow> {
        Ok(self.passage(s)?.0)
    }

    /// As [`BlockMap::row`], also returning the trajectory `(z1, z2, x, h1, h2, y, t)` in rescaled time.
    pub fn passage(&self, s: f64) -> Result<(BlockMapRow, Trajectory<7>)> {
        if !s.is_finite() || s == 0.0 {
            return Err(SbcError::TooClose(format!("offset {s} lies on the collision orbit")));
        }
        let c = &self.constants;
        if !self.cfg.uncoupled {
            let predicted = c.btilde_c * c.al(0) * s.abs().powf(8.0 / 3.0);
            if predicted < 10.0 * self.noise_floor() {
                return Err(SbcError::TooClose(format!(
                    "predicted jump {predicted:.2e} is below ten times the noise floor {:.2e}; use a larger offset or tighter tolerances",
                    self.noise_floor()
                )));
            }
        }
        let s0 = self.entry_state(s)?;
        let y0 = [s0[0], s0[1], s0[2], s0[3], s0[4], s0[5], 0.0];
        let coupled = !self.cfg.uncoupled;
        let rhs = |_t: f64, y: &[f64; 7]| -> Result<[f64; 7]> {
            let st = [y[0], y[1], y[2], y[3], y[4], y[5]];
            if 1.0 + st[3] * st[0] * st[0] < 0.0 || 1.0 + st[4] * st[1] * st[1] < 0.0 {
                return Err(SbcError::Domain("branch condition violated".into()));
            }
            let f = glc_rhs(&st, c, coupled);
            Ok([f[0], f[1], f[2], f[3], f[4], f[5], st[0] * st[0] * st[1] * st[1]])
        };
        let mut coeffs = vec![0.0; 7];
        coeffs[0] = 0.5;
        coeffs[1] = 0.5;
        let section = SectionSpec {
            chart: crate::dynamics::ChartId::GeneralisedLC,
            level: Level::Linear { coeffs, value: self.cfg.delta },
            direction: Direction::Increasing,
        };
        let r = self.cfg.tube_radius;
        let guard = |_t: f64, y: &[f64; 7]| -> Result<()> {
            if y[0].abs() > r || y[1].abs() > r || (y[2] - 1.0).abs() > 0.5 {
                return Err(SbcError::Escape(format!("state ({:.3e}, {:.3e}, {:.3e}) outside radius {r}", y[0], y[1], y[2])));
            }
            Ok(())
        };
        let (hit, traj) = integrate_to_section_guarded(rhs, 0.0, y0, 1e6, &section, &self.cfg.integrator, guard)?;
        let out = [hit.state[0], hit.state[1], hit.state[2], hit.state[3], hit.state[4], hit.state[5]];
        let a = self.chart.measure(&s0)?;
        let b = self.chart.measure(&out)?;
        let e0 = hamiltonian(&s0, c)?;
        let e1 = hamiltonian(&out, c)?;
        // the normal-form chart belongs to the coupled field; the uncoupled one needs none
        let d = if self.cfg.uncoupled {
            [out[3] - s0[3], out[4] - s0[4], out[2] - s0[2], out[5] - s0[5]]
        } else {
            [b.h_corrected[0] - a.h_corrected[0], b.h_corrected[1] - a.h_corrected[1], b.nf[2] - a.nf[2], b.nf[5] - a.nf[5]]
        };
        let row = BlockMapRow {
            s,
            v: a.kappa,
            state_in: s0,
            state_out: out,
            dh1: d[0],
            dh2: d[1],
            dx: d[2],
            dy: d[3],
            raw_dh1: out[3] - s0[3],
            raw_dh2: out[4] - s0[4],
            raw_dy: out[5] - s0[5],
            kappa_out: b.kappa,
            time_rescaled: hit.t,
            time_physical: hit.state[6],
            energy_drift: (e1 - e0).abs() / e0.abs().max(1.0),
            steps: traj.accepted,
        };
        Ok((row, traj))
    }
}

/// Convenience wrapper: block map at one offset for a configuration.
pub fn numeric_block_map(s: f64, cfg: &BlockMapConfig) -> Result<BlockMapRow> {
    BlockMap::new(cfg.clone())?.row(s)
}

/// `n` logarithmically spaced values from `lo` to `hi`.
pub fn log_range(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(SbcError::Domain(format!("log range needs 0 < lo < hi and n >= 2, got ({lo}, {hi}, {n})")));
    }
    Ok((0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowFailure {
    pub s: f64,
    pub class: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<BlockMapRow>,
    pub failures: Vec<RowFailure>,
    pub prediction: BlockMapPrediction,
    /// Free log-log fit of `|dh1|` against `v`.
    pub fit: Option<PowerLawFit>,
    pub series: Option<TransitionSeries>,
    /// Coefficient of the relative single-term `v^{8/3}` fit of `dh1`.
    pub coefficient_83: Option<f64>,
    /// `coefficient_83 / (b̃_c a₁^{−1/3})`.
    pub coefficient_ratio: Option<f64>,
    /// `(dh1/dh2) / (−(a₂/a₁)^{1/3})` per row.
    pub dh_ratio: Vec<f64>,
    /// Why the fits are missing, if they are.
    pub fit_error: Option<String>,
    pub max_energy_drift: f64,
}

/// Run the block map at every offset (in parallel with `workers` threads, merged in input order) and fit.
pub fn sweep_and_fit(bm: &BlockMap, s_values: &[f64], workers: usize) -> Result<SweepResult> {
    if s_values.iter().any(|s| !(*s > 0.0)) {
        return Err(SbcError::Domain("offsets must be positive".into()));
    }
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(f64::total_cmp);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| SbcError::Unsupported(e.to_string()))?;
    let results: Vec<Result<BlockMapRow>> = pool.install(|| s_sorted.par_iter().map(|&s| bm.row(s)).collect());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (s, r) in s_sorted.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(RowFailure { s: *s, class: e.class().into(), message: e.to_string() }),
        }
    }
    let c = &bm.constants;
    let (_, prediction) = predicted_block_map(0.0, c, &[0.0; 5])?;
    let expected_ratio = -(c.a2 / c.a1).cbrt();
    let dh_ratio = rows.iter().map(|r| r.dh1 / r.dh2 / expected_ratio).collect();
    let max_energy_drift = rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    let mut res = SweepResult {
        rows,
        failures,
        prediction,
        fit: None,
        series: None,
        coefficient_83: None,
        coefficient_ratio: None,
        dh_ratio,
        fit_error: None,
        max_energy_drift,
    };
    if let Err(e) = fit_sweep(&mut res, bm) {
        res.fit_error = Some(e.to_string());
    }
    Ok(res)
}

fn fit_sweep(res: &mut SweepResult, bm: &BlockMap) -> Result<()> {
    let v: Vec<f64> = res.rows.iter().map(|r| r.v).collect();
    let d: Vec<f64> = res.rows.iter().map(|r| r.dh1).collect();
    let floor = bm.noise_floor();
    if res.rows.iter().all(|r| r.raw_dh1.abs() <= floor && r.raw_dh2.abs() <= floor) {
        let why = if bm.cfg.uncoupled { "the uncoupled field conserves h1 and h2, so " } else { "" };
        return Err(SbcError::Fit(format!("{why}all energy jumps are at the noise floor ({floor:.1e}); nothing to fit")));
    }
    res.fit = Some(power_law_fit(&v, &d)?);
    let (c, _) = fixed_exponent_fit(&v, &d, &[Basis::pow(8.0 / 3.0)], true)?;
    res.coefficient_83 = Some(c[0]);
    res.coefficient_ratio = Some(c[0] / res.prediction.coeff_h1);
    let samples: Vec<FitSample> = res.rows.iter().map(|r| (r.v, [r.dh1, r.dh2, r.dx, r.dy])).collect();
    res.series = Some(quasi_regular_fit(&samples)?);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Row {
    pub s: f64,
    /// `max |Δ(x, h1, h2, y)|` between the exits at `+s` and `−s`.
    pub gap: f64,
    /// Largest normal-form jump `max |(Δx, Δh1, Δh2, Δy)|` at `+s`.
    pub jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C0Report {
    pub rows: Vec<C0Row>,
    pub decay_exponent: f64,
    pub monotone: bool,
    /// Normal-form jump at the smallest offset.
    pub limit_deviation: f64,
}

fn centre_gap(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    (2..6).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Exits on both sides of the collision orbit converge to a common limit as `s → 0`.
pub fn c0_continuity_check(bm: &BlockMap, s_values: &[f64], workers: usize) -> Result<C0Report> {
    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(|a, b| b.total_cmp(a));
    if s_sorted.len() < 3 || s_sorted.iter().any(|s| !(*s > 0.0)) {
        return Err(SbcError::Domain("need at least three positive offsets".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().map_err(|e| SbcError::Unsupported(e.to_string()))?;
    let pairs: Vec<Result<(BlockMapRow, BlockMapRow)>> = pool.install(|| s_sorted.par_iter().map(|&s| Ok((bm.row(s)?, bm.row(-s)?))).collect());
    let mut rows = Vec::new();
    for (s, p) in s_sorted.iter().zip(pairs) {
        let (a, b) = p?;
        rows.push(C0Row { s: *s, gap: centre_gap(&a.state_out, &b.state_out), jump: [a.dx, a.dh1, a.dh2, a.dy].iter().fold(0.0, |m, d| d.abs().max(m)) });
    }
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let decay_exponent = power_law_fit(&s, &g)?.exponent;
    let limit_deviation = rows.last().map(|r| r.jump).unwrap_or(0.0);
    Ok(C0Report { rows, decay_exponent, monotone, limit_deviation })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaDriftReport {
    pub u: Vec<f64>,
    /// `|κ_end − κ_start| / u³`.
    pub drift: Vec<f64>,
    pub slope: f64,
}

/// The degree-9 normal form as an `f64` field with the resonant coefficients of `c`.
pub fn truncated_normal_form(c: &DerivedConstants) -> PolyField<f64> {
    let r = &universal_polys().resonant;
    let unit = ResonantPolys { beta: [crate::coeff::qi(1), crate::coeff::qi(1)], ..r.clone() };
    let mut f = assemble_x9(&unit).to_f64();
    f.comps[E1] = f.comps[E1].scale(&c.beta(0));
    f.comps[E2] = f.comps[E2].scale(&c.beta(1));
    f
}

/// Drift of `κ` along passages of the truncated normal form from `(w1, w2) = (−u, a u)` to `w1 = u`.
///
/// The drift is accumulated as `∫ X(κ) dτ` with `X(κ)` expanded exactly, so it is free of cancellation.
pub fn kappa_drift_check(c: &DerivedConstants, base: [f64; 2], a: f64, u_values: &[f64], cfg: &IntegratorConfig) -> Result<KappaDriftReport> {
    let f = truncated_normal_form(c);
    let xk = f.apply(&universal_polys().kappa.poly.to_f64(), 64);
    let mut drift = Vec::new();
    for &u in u_values {
        let y0 = [-u + a * u, -u - a * u, 1.0, base[0], base[1], 0.0, 0.0];
        let rhs = |_t: f64, y: &[f64; 7]| -> Result<[f64; 7]> {
            let mut vars = [0.0; NVARS];
            vars[..6].copy_from_slice(&y[..6]);
            vars[2] -= 1.0;
            let mut out = [0.0; 7];
            for (i, o) in out.iter_mut().take(6).enumerate() {
                *o = f.comps[i].eval_f64(&vars);
            }
            out[6] = xk.eval_f64(&vars);
            Ok(out)
        };
        let mut coeffs = vec![0.0; 7];
        coeffs[0] = 0.5;
        coeffs[1] = 0.5;
        let section = SectionSpec {
            chart: crate::dynamics::ChartId::NormalForm,
            level: Level::Linear { coeffs, value: u },
            direction: Direction::Increasing,
        };
        let (hit, _) = integrate_to_section(rhs, 0.0, y0, 1e9, &section, cfg)?;
        drift.push(hit.state[6].abs() / u.powi(3));
    }
    let slope = power_law_fit(u_values, &drift)?.exponent;
    Ok(KappaDriftReport { u: u_values.to_vec(), drift, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_state_on_section() {
        let bm = BlockMap::new(BlockMapConfig::default()).unwrap();
        let s = bm.entry_state(0.01).unwrap();
        assert!(((s[0] + s[1]) / 2.0 + 0.1).abs() < 1e-15);
        assert!((kappa_tilde(-0.1, (s[0] - s[1]) / 2.0, 0.1, -0.1) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_passage_conserves() {
        let cfg = BlockMapConfig { uncoupled: true, ..Default::default() };
        let bm = BlockMap::new(cfg).unwrap();
        let r = bm.row(0.01).unwrap();
        assert_eq!((r.raw_dh1, r.raw_dh2, r.raw_dy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn refuses_collision_orbit() {
        let bm = BlockMap::new(BlockMapConfig::default()).unwrap();
        assert_eq!(bm.row(0.0).unwrap_err().class(), "too_close");
        assert_eq!(bm.row(1e-5).unwrap_err().class(), "too_close");
    }

    #[test]
    fn config_validation() {
        assert!(BlockMap::new(BlockMapConfig { delta: 0.0, ..Default::default() }).is_err());
        assert!(BlockMap::new(BlockMapConfig { chart_degree: 5, ..Default::default() }).is_err());
        let j = serde_json::to_string(&BlockMapConfig::default()).unwrap();
        let back: BlockMapConfig = serde_json::from_str(&j).unwrap();
        assert_eq!(back, BlockMapConfig::default());
        assert!(serde_json::from_str::<BlockMapConfig>(r#"{"delta": 0.1, "bogus": 1}"#).is_err());
    }

    #[test]
    fn log_range_endpoints() {
        let r = log_range(1e-3, 3e-2, 12).unwrap();
        assert_eq!(r.len(), 12);
        assert!((r[0] - 1e-3).abs() < 1e-18 && (r[11] - 3e-2).abs() < 1e-16);
        assert!(log_range(0.0, 1.0, 3).is_err());
    }
}
