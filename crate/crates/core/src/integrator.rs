//! Adaptive Dormand-Prince 8(5,3) integration with dense output and section events.

use serde::{Deserialize, Serialize};

use crate::dynamics::ChartId;
use crate::error::{Result, SbcError};
use crate::special::brent;
use crate::tableau::*;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    pub method_order: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_step: 1e3,
            min_step: 1e-14,
            max_steps: 2_000_000,
            method_order: 8,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(SbcError::Domain("tolerances must be positive".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= self.max_step) {
            return Err(SbcError::Domain("need 0 < min_step <= max_step".into()));
        }
        if self.max_steps == 0 {
            return Err(SbcError::Domain("max_steps must be positive".into()));
        }
        if self.method_order != 8 {
            return Err(SbcError::Unsupported(format!(
                "method_order {} is not available; only the order-8 pair is implemented",
                self.method_order
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
    Any,
}

/// Level functions whose zero set defines a section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Level {
    /// `y[index] − value`
    Coordinate { index: usize, value: f64 },
    /// `Σ coeffs[i] y[i] − value`
    Linear { coeffs: Vec<f64>, value: f64 },
}

impl Level {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Level::Coordinate { index, value } => y[*index] - value,
            Level::Linear { coeffs, value } => coeffs.iter().zip(y).map(|(c, v)| c * v).sum::<f64>() - value,
        }
    }

    fn rate(&self, f: &[f64]) -> (f64, f64) {
        match self {
            Level::Coordinate { index, .. } => (f[*index], 1.0),
            Level::Linear { coeffs, .. } => (
                coeffs.iter().zip(f).map(|(c, v)| c * v).sum(),
                coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
            ),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Level::Coordinate { value, .. } | Level::Linear { value, .. } => value.abs().max(1.0),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Level::Coordinate { index, value } => format!("y[{index}] = {value}"),
            Level::Linear { coeffs, value } => format!("{coeffs:?} . y = {value}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub chart: ChartId,
    pub level: Level,
    pub direction: Direction,
}

impl SectionSpec {
    /// `(z1 + z2)/2 = value` in the generalised Levi-Civita chart.
    pub fn rotated_z1(value: f64, direction: Direction) -> Self {
        let mut coeffs = vec![0.0; 6];
        coeffs[0] = 0.5;
        coeffs[1] = 0.5;
        SectionSpec { chart: ChartId::GeneralisedLC, level: Level::Linear { coeffs, value }, direction }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionHit<const N: usize> {
    pub t: f64,
    pub state: [f64; N],
    pub residual: f64,
    /// Time derivative of the level function at the hit.
    pub crossing_rate: f64,
}

/// Dense output on one accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 8],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| {
            let conpar = c[4][i] + s * (c[5][i] + s1 * (c[6][i] + s * c[7][i]));
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * conpar)))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub dense: Vec<DenseStep<N>>,
    pub chart: Option<ChartId>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<const N: usize> Trajectory<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }

    /// Dense-output value at any time inside the integrated span.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        let (lo, hi) = (self.times[0].min(*self.times.last()?), self.times[0].max(*self.times.last()?));
        if t < lo || t > hi {
            return None;
        }
        if self.dense.is_empty() {
            return Some(self.states[0]);
        }
        let fwd = self.times.len() < 2 || self.times[1] >= self.times[0];
        let idx = self.dense.partition_point(|d| if fwd { d.t0 + d.h < t } else { d.t0 + d.h > t });
        Some(self.dense[idx.min(self.dense.len() - 1)].eval(t))
    }

    /// `dt/ds` at every node, for trajectories of a 6-dimensional chart field.
    pub fn rescale_log(&self) -> Vec<f64> {
        match self.chart {
            Some(chart) if N >= 6 => self
                .states
                .iter()
                .map(|y| crate::dynamics::ChartState::new(chart, std::array::from_fn(|i| y[i])).clock_factor())
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

struct StepOut<const N: usize> {
    ynew: [f64; N],
    err: f64,
    k: [[f64; N]; 12],
}

/// The twelve stages of one step; `k[0]` must hold `f(t, y)` on entry.
fn stages<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64, k1: [f64; N], cfg: Option<&IntegratorConfig>) -> Result<StepOut<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 12];
    k[0] = k1;
    k[1] = f(t + C2 * h, &axpy(y, h, &[(A21, &k[0])]))?;
    k[2] = f(t + C3 * h, &axpy(y, h, &[(A31, &k[0]), (A32, &k[1])]))?;
    k[3] = f(t + C4 * h, &axpy(y, h, &[(A41, &k[0]), (A43, &k[2])]))?;
    k[4] = f(t + C5 * h, &axpy(y, h, &[(A51, &k[0]), (A53, &k[2]), (A54, &k[3])]))?;
    k[5] = f(t + C6 * h, &axpy(y, h, &[(A61, &k[0]), (A64, &k[3]), (A65, &k[4])]))?;
    k[6] = f(t + C7 * h, &axpy(y, h, &[(A71, &k[0]), (A74, &k[3]), (A75, &k[4]), (A76, &k[5])]))?;
    k[7] = f(t + C8 * h, &axpy(y, h, &[(A81, &k[0]), (A84, &k[3]), (A85, &k[4]), (A86, &k[5]), (A87, &k[6])]))?;
    k[8] = f(
        t + C9 * h,
        &axpy(y, h, &[(A91, &k[0]), (A94, &k[3]), (A95, &k[4]), (A96, &k[5]), (A97, &k[6]), (A98, &k[7])]),
    )?;
    k[9] = f(
        t + C10 * h,
        &axpy(
            y,
            h,
            &[(A101, &k[0]), (A104, &k[3]), (A105, &k[4]), (A106, &k[5]), (A107, &k[6]), (A108, &k[7]), (A109, &k[8])],
        ),
    )?;
    k[10] = f(
        t + C11 * h,
        &axpy(
            y,
            h,
            &[
                (A111, &k[0]),
                (A114, &k[3]),
                (A115, &k[4]),
                (A116, &k[5]),
                (A117, &k[6]),
                (A118, &k[7]),
                (A119, &k[8]),
                (A1110, &k[9]),
            ],
        ),
    )?;
    k[11] = f(
        t + h,
        &axpy(
            y,
            h,
            &[
                (A121, &k[0]),
                (A124, &k[3]),
                (A125, &k[4]),
                (A126, &k[5]),
                (A127, &k[6]),
                (A128, &k[7]),
                (A129, &k[8]),
                (A1210, &k[9]),
                (A1211, &k[10]),
            ],
        ),
    )?;
    let incr: [f64; N] = std::array::from_fn(|i| {
        B1 * k[0][i]
            + B6 * k[5][i]
            + B7 * k[6][i]
            + B8 * k[7][i]
            + B9 * k[8][i]
            + B10 * k[9][i]
            + B11 * k[10][i]
            + B12 * k[11][i]
    });
    let ynew: [f64; N] = std::array::from_fn(|i| y[i] + h * incr[i]);
    let mut err = 0.0;
    if let Some(cfg) = cfg {
        let mut err2 = 0.0;
        for i in 0..N {
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(ynew[i].abs());
            let e2 = incr[i] - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e2 / sk).powi(2);
            let e = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i];
            err += (e / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        err = h.abs() * err * (1.0 / (N as f64 * deno)).sqrt();
    }
    Ok(StepOut { ynew, err, k })
}

fn dense_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64, s: &StepOut<N>, k13: &[f64; N]) -> Result<DenseStep<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k = &s.k;
    let mut cont = [[0.0; N]; 8];
    for i in 0..N {
        let ydiff = s.ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        cont[0][i] = y[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k13[i] - bspl;
    }
    let d = [
        [D41, D46, D47, D48, D49, D410, D411, D412],
        [D51, D56, D57, D58, D59, D510, D511, D512],
        [D61, D66, D67, D68, D69, D610, D611, D612],
        [D71, D76, D77, D78, D79, D710, D711, D712],
    ];
    let idx = [0, 5, 6, 7, 8, 9, 10, 11];
    for (r, row) in d.iter().enumerate() {
        for i in 0..N {
            cont[4 + r][i] = row.iter().zip(idx).map(|(c, j)| c * k[j][i]).sum();
        }
    }
    let k14 = f(
        t + C14 * h,
        &axpy(
            y,
            h,
            &[
                (A141, &k[0]),
                (A147, &k[6]),
                (A148, &k[7]),
                (A149, &k[8]),
                (A1410, &k[9]),
                (A1411, &k[10]),
                (A1412, &k[11]),
                (A1413, k13),
            ],
        ),
    )?;
    let k15 = f(
        t + C15 * h,
        &axpy(
            y,
            h,
            &[
                (A151, &k[0]),
                (A156, &k[5]),
                (A157, &k[6]),
                (A158, &k[7]),
                (A1511, &k[10]),
                (A1512, &k[11]),
                (A1513, k13),
                (A1514, &k14),
            ],
        ),
    )?;
    let k16 = f(
        t + C16 * h,
        &axpy(
            y,
            h,
            &[
                (A161, &k[0]),
                (A166, &k[5]),
                (A167, &k[6]),
                (A168, &k[7]),
                (A169, &k[8]),
                (A1613, k13),
                (A1614, &k14),
                (A1615, &k15),
            ],
        ),
    )?;
    let tail = [[D413, D414, D415, D416], [D513, D514, D515, D516], [D613, D614, D615, D616], [D713, D714, D715, D716]];
    for (r, c) in tail.iter().enumerate() {
        for i in 0..N {
            cont[4 + r][i] = h * (cont[4 + r][i] + c[0] * k13[i] + c[1] * k14[i] + c[2] * k15[i] + c[3] * k16[i]);
        }
    }
    Ok(DenseStep { t0: t, h, cont })
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], dir: f64, cfg: &IntegratorConfig) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sk: [f64; N] = std::array::from_fn(|i| cfg.abs_tol + cfg.rel_tol * y[i].abs());
    let dnf: f64 = (0..N).map(|i| (f0[i] / sk[i]).powi(2)).sum();
    let dny: f64 = (0..N).map(|i| (y[i] / sk[i]).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(cfg.max_step) * dir;
    let y1: [f64; N] = std::array::from_fn(|i| y[i] + h * f0[i]);
    let f1 = f(t + h, &y1)?;
    let der2 = (0..N).map(|i| ((f1[i] - f0[i]) / sk[i]).powi(2)).sum::<f64>().sqrt() / h.abs();
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 { 1e-6f64.max(h.abs() * 1e-3) } else { (0.01 / der12).powf(1.0 / 8.0) };
    Ok((100.0 * h.abs()).min(h1).min(cfg.max_step).max(cfg.min_step) * dir)
}

/// Core adaptive loop; stops at `t_end` or at the first admissible section crossing.
fn run<const N: usize, F, G>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
    section: Option<&SectionSpec>,
    mut guard: G,
) -> Result<(Trajectory<N>, Option<SectionHit<N>>)>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> Result<()>,
{
    cfg.validate()?;
    if let Some(sec) = section {
        if let Level::Coordinate { index, .. } = sec.level {
            if index >= N {
                return Err(SbcError::Precondition(format!("section index {index} out of range")));
            }
        }
    }
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0],
        dense: Vec::new(),
        chart: section.map(|s| s.chart),
        accepted: 0,
        rejected: 0,
        evaluations: 0,
    };
    if t_end == t0 {
        return Ok((traj, None));
    }
    let dir = (t_end - t0).signum();
    let mut counted = |t: f64, y: &[f64; N], n: &mut usize| {
        *n += 1;
        f(t, y)
    };
    let mut nfev = 0usize;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = counted(t, &y, &mut nfev)?;
    let mut h = initial_step(&mut |tt, yy| counted(tt, yy, &mut nfev), t, &y, &k1, dir, cfg)?;
    let mut last_rejected = false;
    let mut g_old = section.map(|s| s.level.eval(&y));
    let mut steps = 0usize;
    loop {
        if steps >= cfg.max_steps {
            traj.evaluations = nfev;
            return Err(SbcError::MaxSteps(cfg.max_steps));
        }
        steps += 1;
        let mut last = false;
        if (t + 1.01 * h - t_end) * dir >= 0.0 {
            h = t_end - t;
            last = true;
        }
        if h.abs() < cfg.min_step.max(16.0 * f64::EPSILON * t.abs()) && !last {
            return Err(SbcError::StepUnderflow { t, state: y.to_vec() });
        }
        let out = stages(&mut |tt, yy| counted(tt, yy, &mut nfev), t, &y, h, k1, Some(cfg))?;
        let err = out.err;
        let fac11 = err.powf(1.0 / 8.0);
        let fac = (fac11 / 0.9).clamp(1.0 / 6.0, 3.0);
        let mut hnew = h / fac;
        if !err.is_finite() {
            h *= 0.25;
            traj.rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let tph = t + h;
            let k13 = counted(tph, &out.ynew, &mut nfev)?;
            let ds = dense_step(&mut |tt, yy| counted(tt, yy, &mut nfev), t, &y, h, &out, &k13)?;
            traj.accepted += 1;
            if hnew.abs() > cfg.max_step {
                hnew = cfg.max_step * dir;
            }
            if last_rejected {
                hnew = dir * hnew.abs().min(h.abs());
            }
            last_rejected = false;
            if let (Some(sec), Some(g0)) = (section, g_old) {
                let g1 = sec.level.eval(&out.ynew);
                let crosses = match sec.direction {
                    Direction::Increasing => g0 < 0.0 && g1 >= 0.0,
                    Direction::Decreasing => g0 > 0.0 && g1 <= 0.0,
                    Direction::Any => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
                };
                if crosses {
                    let hit = locate(&mut |tt, yy| counted(tt, yy, &mut nfev), sec, &ds, t, tph, g0, g1)?;
                    traj.dense.push(ds);
                    traj.times.push(hit.t);
                    traj.states.push(hit.state);
                    traj.evaluations = nfev;
                    return Ok((traj, Some(hit)));
                }
                g_old = Some(g1);
            }
            traj.dense.push(ds);
            t = tph;
            y = out.ynew;
            k1 = k13;
            traj.times.push(t);
            traj.states.push(y);
            guard(t, &y)?;
            if last {
                traj.evaluations = nfev;
                return Ok((traj, None));
            }
        } else {
            hnew = h / (fac11 / 0.9).min(3.0);
            traj.rejected += 1;
            last_rejected = true;
        }
        h = hnew;
    }
}

#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, F>(
    f: &mut F,
    sec: &SectionSpec,
    ds: &DenseStep<N>,
    ta: f64,
    tb: f64,
    ga: f64,
    gb: f64,
) -> Result<SectionHit<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let t = if gb == 0.0 {
        tb
    } else if ga == 0.0 {
        ta
    } else {
        brent(|tt| sec.level.eval(&ds.eval(tt)), ta, tb, 4.0 * f64::EPSILON * ta.abs().max(tb.abs()), 200)?
    };
    let state = if t == tb { ds.eval(tb) } else { ds.eval(t) };
    let fv = f(t, &state)?;
    let (rate, gnorm) = sec.level.rate(&fv);
    let fnorm = fv.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(rate.abs() > 1e-9 * gnorm * fnorm) {
        return Err(SbcError::Grazing { t });
    }
    let residual = sec.level.eval(&state);
    if residual.abs() > 1e-12 * sec.level.scale() {
        return Err(SbcError::Invariant(format!("section residual {residual:e} exceeds bound")));
    }
    Ok(SectionHit { t, state, residual, crossing_rate: rate })
}

/// Integrate from `t0` to `t_end` (either direction).
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    Ok(run(f, t0, y0, t_end, cfg, None, |_, _| Ok(()))?.0)
}

/// Integrate until the first crossing of `section` with the requested direction.
pub fn integrate_to_section<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_max: f64,
    section: &SectionSpec,
    cfg: &IntegratorConfig,
) -> Result<(SectionHit<N>, Trajectory<N>)>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    integrate_to_section_guarded(f, t0, y0, t_max, section, cfg, |_, _| Ok(()))
}

/// As [`integrate_to_section`], with `guard` called after every accepted step.
pub fn integrate_to_section_guarded<const N: usize, F, G>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_max: f64,
    section: &SectionSpec,
    cfg: &IntegratorConfig,
    guard: G,
) -> Result<(SectionHit<N>, Trajectory<N>)>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    G: FnMut(f64, &[f64; N]) -> Result<()>,
{
    let (traj, hit) = run(f, t0, y0, t_max, cfg, Some(section), guard)?;
    match hit {
        Some(h) => Ok((h, traj)),
        None => Err(SbcError::NoCrossing(format!("no crossing of {} before t = {t_max}", section.level.describe()))),
    }
}

/// Fixed-step integration with the order-8 weights, used for convergence-order studies.
pub fn integrate_fixed<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t1: f64, steps: usize) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = f(t, &y)?;
        y = stages(&mut f, t, &y, h, k1, None)?.ynew;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::with_tolerances(1e-12, 1e-14)
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, &cfg()).unwrap();
        let (t, y) = tr.last();
        assert_eq!(t, 2.0);
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
        let mid = tr.eval(1.234).unwrap();
        assert!((mid[0] - 1.234f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_and_oscillator() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let tr = integrate(f, 0.0, [0.0, 1.0], -10.0, &cfg()).unwrap();
        let (_, y) = tr.last();
        assert!((y[0] - (-10f64).sin()).abs() < 1e-9);
        let dense = tr.eval(-3.3).unwrap();
        assert!((dense[0] - (-3.3f64).sin()).abs() < 1e-9);
    }

    #[test]
    fn zero_field_is_constant() {
        let tr = integrate(|_, _: &[f64; 3]| Ok([0.0; 3]), 0.0, [1.0, 2.0, 3.0], 5.0, &cfg()).unwrap();
        assert_eq!(tr.last().1, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn linear_section_hit() {
        let sec = SectionSpec { chart: ChartId::Physical, level: Level::Coordinate { index: 0, value: 2.5 }, direction: Direction::Increasing };
        let (hit, _) = integrate_to_section(|_, _: &[f64; 2]| Ok([1.0, 0.0]), 0.0, [0.0, 0.0], 10.0, &sec, &cfg()).unwrap();
        assert!((hit.t - 2.5).abs() < 1e-12);
        assert!(hit.residual.abs() < 1e-12);
    }

    #[test]
    fn direction_filter() {
        let f = |t: f64, _: &[f64; 1]| Ok([t.cos()]);
        let down = SectionSpec { chart: ChartId::Physical, level: Level::Coordinate { index: 0, value: 0.5 }, direction: Direction::Decreasing };
        let (hit, _) = integrate_to_section(f, 0.0, [0.0], 10.0, &down, &cfg()).unwrap();
        assert!((hit.t - (std::f64::consts::PI - 0.5f64.asin())).abs() < 1e-10);
        let up = SectionSpec { direction: Direction::Increasing, ..down.clone() };
        let (hit, _) = integrate_to_section(f, 0.0, [0.0], 10.0, &up, &cfg()).unwrap();
        assert!((hit.t - 0.5f64.asin()).abs() < 1e-10);
    }

    #[test]
    fn no_crossing_and_bad_config() {
        let sec = SectionSpec { chart: ChartId::Physical, level: Level::Coordinate { index: 0, value: 5.0 }, direction: Direction::Any };
        let e = integrate_to_section(|_, _: &[f64; 1]| Ok([1.0]), 0.0, [0.0], 1.0, &sec, &cfg()).unwrap_err();
        assert_eq!(e.class(), "no_crossing");
        let bad = IntegratorConfig { method_order: 5, ..cfg() };
        assert!(integrate(|_, _: &[f64; 1]| Ok([1.0]), 0.0, [0.0], 1.0, &bad).is_err());
    }

    #[test]
    fn blowup_underflows() {
        let r = integrate(|_, y: &[f64; 1]| Ok([y[0] * y[0]]), 0.0, [1.0], 2.0, &cfg());
        assert!(matches!(r, Err(SbcError::StepUnderflow { .. }) | Err(SbcError::MaxSteps(_))));
    }
}
