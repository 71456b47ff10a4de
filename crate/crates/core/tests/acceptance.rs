//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use sbc_core::blockmap::{c0_continuity_check, kappa_drift_check, log_range, sweep_and_fit, BlockMap, BlockMapConfig, C0Report, SweepResult};
use sbc_core::constants::{derive_constants, MassParams};
use sbc_core::dynamics::{eigenvalues, jacobian, ChartId, ChartState, FieldKind};
use sbc_core::normal_form::{normal_form_report, reference_rh, scalar_adjoint_kernel, verify_no_foliation, x0_adjoint};
use sbc_core::transition::{h8_convergence, hbar8_closed, hbar8_quadrature};

type Check = std::result::Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Sweep {
    masses: MassParams,
    bm: BlockMap,
    result: SweepResult,
}

fn sweep(masses: MassParams) -> Result<Sweep, String> {
    let bm = BlockMap::new(BlockMapConfig { masses, ..Default::default() }).map_err(err)?;
    let s = log_range(1e-3, 3e-2, 12).map_err(err)?;
    let result = sweep_and_fit(&bm, &s, workers()).map_err(err)?;
    if !result.failures.is_empty() {
        return Err(format!("{} rows failed: {:?}", result.failures.len(), result.failures));
    }
    Ok(Sweep { masses, bm, result })
}

fn sweeps() -> &'static [Result<Sweep, String>; 3] {
    static CELL: OnceLock<[Result<Sweep, String>; 3]> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            sweep(MassParams::equal()),
            sweep(MassParams::new(1.0, 2.0, 3.0, 4.0).unwrap()),
            sweep(MassParams::new(2.0, 1.0, 1.0, 3.0).unwrap()),
        ]
    })
}

fn c0() -> &'static Result<C0Report, String> {
    static CELL: OnceLock<Result<C0Report, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let bm = BlockMap::new(BlockMapConfig::default()).map_err(err)?;
        c0_continuity_check(&bm, &[3e-2, 1e-2, 3e-3, 1e-3], workers()).map_err(err)
    })
}

fn get(i: usize) -> Result<&'static Sweep, String> {
    sweeps()[i].as_ref().map_err(|e| e.clone())
}

fn normal_form_reproduction() -> Check {
    let rep = normal_form_report(&MassParams::equal(), 9).map_err(err)?;
    ensure(
        rep.matches_reference && rep.certificate_ok(),
        format!("R61 = {}, R62 = {}, Rh = {}, kappa7 = {}", rep.r61.unwrap_or_default(), rep.r62.unwrap_or_default(), rep.rh.unwrap_or_default(), rep.kappa_h1.unwrap_or_default()),
    )
}

fn kernel_certificates() -> Check {
    let rh = reference_rh();
    let adj = x0_adjoint(&rh);
    let ker9 = scalar_adjoint_kernel(9);
    let rep = verify_no_foliation(&rh).map_err(err)?;
    ensure(
        adj.is_zero() && ker9.len() == 1 && rep.rh_outside_image && rep.kernel_dim_degree3 == 1 && rep.kernel_degree3_is_kappa_hat,
        format!(
            "X0*Rh = 0: {}, dim ker X0* (deg 9) = {}, residual |Rh - P Rh|^2 = {}, ker X0 (deg 3) = span(z1^3 - z2^3): {}",
            adj.is_zero(),
            ker9.len(),
            rep.residual_norm2,
            rep.kernel_degree3_is_kappa_hat
        ),
    )
}

fn eigenvalue_structure() -> Check {
    let c = derive_constants(&MassParams::equal()).map_err(err)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut details = Vec::new();
    let mut ok = true;
    for (theta, expect) in [(std::f64::consts::FRAC_PI_4, [-3.0 * r, r]), (-3.0 * std::f64::consts::FRAC_PI_4, [-r, 3.0 * r])] {
        let s = ChartState::new(ChartId::PolarBlowup, [0.0, theta, 1.0, 0.1, -0.1, 0.0]);
        let ev = eigenvalues(&jacobian(FieldKind::Polar, &s, &c).map_err(err)?);
        let mut nonzero: Vec<f64> = ev.iter().filter(|z| z.norm() > 1e-12).map(|z| z.re).collect();
        nonzero.sort_by(f64::total_cmp);
        let zeros = ev.iter().filter(|z| z.norm() <= 1e-12).count();
        ok &= zeros == 4 && nonzero.len() == 2 && ev.iter().all(|z| z.im.abs() <= 1e-12);
        ok &= nonzero.len() == 2 && (nonzero[0] - expect[0]).abs() <= 1e-12 && (nonzero[1] - expect[1]).abs() <= 1e-12;
        details.push(format!("theta = {theta:.4}: {nonzero:.6?} + {zeros} zeros"));
    }
    ensure(ok, details.join("; "))
}

fn special_functions() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..=80 {
        let u = -20.0 + 0.5 * i as f64;
        if u == 0.0 {
            continue;
        }
        let a = hbar8_quadrature(u);
        let b = hbar8_closed(u).map_err(err)?;
        worst = worst.max((a - b).abs() / b.abs());
    }
    let conv = h8_convergence(&[0.1, 0.05, 0.025]).map_err(err)?;
    ensure(
        worst <= 1e-10 && conv.relative_error <= 0.01,
        format!(
            "max rel diff {worst:.1e}; ratios {:.3?} -> extrapolated {:.3} vs limit {:.3} (rel err {:.2e})",
            conv.ratio, conv.extrapolated, conv.gamma_limit, conv.relative_error
        ),
    )
}

fn exponent_test(sw: &Sweep) -> Check {
    let r = &sw.result;
    let fit = r.fit.as_ref().ok_or_else(|| r.fit_error.clone().unwrap_or_default())?;
    let se = r.series.as_ref().ok_or_else(|| r.fit_error.clone().unwrap_or_default())?;
    let v0 = r.rows.first().map(|x| x.v).unwrap_or(0.0);
    let v1 = r.rows.last().map(|x| x.v).unwrap_or(0.0);
    let detail = format!(
        "masses {:?}: v in [{v0:.2e}, {v1:.2e}], free exponent {:.4}, grid best {} with neighbour ratio {:.1}",
        sw.masses.as_array(),
        fit.exponent,
        se.grid.best,
        se.grid.selection_ratio
    );
    ensure((2.63..=2.71).contains(&fit.exponent) && se.grid.best == "8/3" && se.grid.selection_ratio >= 10.0, detail)
}

fn headline_exponent() -> Check {
    exponent_test(get(0)?)
}

fn coefficient_check() -> Check {
    let sw = get(0)?;
    let r = &sw.result;
    let ratio = r.coefficient_ratio.ok_or_else(|| r.fit_error.clone().unwrap_or_default())?;
    let dev = r.dh_ratio.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let signs = r.rows.iter().all(|x| x.dh1 > 0.0 && x.dh2 < 0.0);
    ensure(
        (0.95..=1.05).contains(&ratio) && dev <= 0.02 && signs,
        format!(
            "coefficient {:.5} / predicted {:.5} = {ratio:.5}; dh1/dh2 vs -(a2/a1)^(1/3): max deviation {dev:.2e}; dh1 > 0 > dh2 on every row: {signs}",
            r.coefficient_83.unwrap_or(f64::NAN),
            r.prediction.coeff_h1
        ),
    )
}

fn mass_generality() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    let mut scaled = Vec::new();
    for i in [1, 2] {
        let sw = get(i)?;
        match exponent_test(sw) {
            Ok(d) => details.push(d),
            Err(d) => {
                ok = false;
                details.push(d)
            }
        }
        let c = &sw.bm.constants;
        let coef = sw.result.coefficient_83.ok_or_else(|| sw.result.fit_error.clone().unwrap_or_default())?;
        scaled.push(coef / (c.bc * c.al(0)));
        let dev = sw.result.dh_ratio.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        let signs = sw.result.rows.iter().all(|x| x.dh1 > 0.0 && x.dh2 < 0.0);
        details.push(format!("dh ratio max deviation {dev:.2e}, dh1 > 0 > dh2: {signs}"));
    }
    let spread = (scaled[0] / scaled[1] - 1.0).abs();
    ok &= spread <= 0.05;
    details.push(format!("coefficient / (b_c a1^(-1/3)) = {:.4} and {:.4}, spread {spread:.2e}", scaled[0], scaled[1]));
    ensure(ok, details.join("; "))
}

fn continuity() -> Check {
    let rep = c0().as_ref().map_err(|e| e.clone())?;
    let gaps: Vec<String> = rep.rows.iter().map(|r| format!("{:.0e}:{:.2e}", r.s, r.gap)).collect();
    ensure(
        rep.monotone && rep.decay_exponent >= 1.0,
        format!(
            "gaps {} monotone {}, decay exponent {:.3}, jump at smallest offset {:.2e}",
            gaps.join(" "),
            rep.monotone,
            rep.decay_exponent,
            rep.limit_deviation
        ),
    )
}

fn conservation() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut tol: f64 = 0.0;
    for s in sweeps().iter() {
        let sw = s.as_ref().map_err(|e| e.clone())?;
        worst = worst.max(sw.result.max_energy_drift);
        tol = tol.max(sw.bm.cfg.integrator.rel_tol);
    }
    let bm = BlockMap::new(BlockMapConfig::default()).map_err(err)?;
    if c0().is_ok() {
        for s in [3e-2, -3e-2, 1e-3, -1e-3] {
            worst = worst.max(bm.row(s).map_err(err)?.energy_drift);
        }
    }
    ok &= worst < 10.0 * tol;
    details.push(format!("coupled energy drift {worst:.1e} (limit {:.1e})", 10.0 * tol));
    let un = BlockMap::new(BlockMapConfig { uncoupled: true, ..Default::default() }).map_err(err)?;
    let mut un_drift: f64 = 0.0;
    for s in log_range(1e-3, 3e-2, 6).map_err(err)? {
        let r = un.row(s).map_err(err)?;
        un_drift = un_drift.max(r.raw_dh1.abs()).max(r.raw_dh2.abs()).max(r.raw_dy.abs());
    }
    ok &= un_drift < 10.0 * un.cfg.integrator.rel_tol;
    details.push(format!("uncoupled h, y drift {un_drift:.1e}"));
    let u = log_range(0.02, 0.2, 6).map_err(err)?;
    let k = kappa_drift_check(&bm.constants, bm.cfg.h_star, 0.3, &u, &bm.cfg.integrator).map_err(err)?;
    ok &= k.slope >= 7.5;
    details.push(format!("kappa drift slope {:.3} over u in [0.02, 0.2]", k.slope));
    ensure(ok, details.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Check); 9] = [
        (1, "normal-form reproduction", normal_form_reproduction),
        (2, "kernel certificates", kernel_certificates),
        (3, "eigenvalue structure", eigenvalue_structure),
        (4, "special-function pipeline", special_functions),
        (5, "exponent 8/3", headline_exponent),
        (6, "coefficient and energy ratio", coefficient_check),
        (7, "mass generality", mass_generality),
        (8, "continuity", continuity),
        (9, "conservation", conservation),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let t = Instant::now();
        let out = run();
        let secs = t.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("criterion {id} PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} FAIL {name} ({secs:.1}s): {d}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of 9 criteria failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    }
}
