//! Acceptance run: one line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use common::{expr_from_raw, log_uniform, mode, rel};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use serde_json::json;
use tsu_metrology::algebra::{coherent_expectation, CoherentAssignment};
use tsu_metrology::circuit::{Arms, Circuit, InterferometerParams};
use tsu_metrology::closed_form::closed_form;
use tsu_metrology::fock::{factorized_expectation, oracle_expectation, FockConfig};
use tsu_metrology::jones::transduce;
use tsu_metrology::metrology::{dj_dphi_sq, lod_db, lodi_db, mean, moments};
use tsu_metrology::optimize::{optimize_phases, Objective, OptOptions};
use tsu_metrology::report::{sidecar, to_json_string};
use tsu_metrology::scalar::{BigComplex, Precision};
use tsu_metrology::sweep::{run_sweep, vacuum_noise_map, AxisSpec, Param, SweepGrid, Target};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn criterion_1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (eta, target) in [(1.0, -68.3369), (0.8, -67.8524)] {
        let t = Instant::now();
        let p = InterferometerParams::paper_start().with_eta(eta);
        let lod = lod_db(Circuit::Classical, &p).map(|x| x.to_f64());
        let dt = t.elapsed();
        let ok = matches!(lod, Ok(v) if within(v, target, 5e-4)) && dt < Duration::from_secs(1);
        pass &= ok;
        parts.push(format!("η={eta}: {:.5} dB (want {target} ± 0.0005) in {}", lod.unwrap_or(f64::NAN), secs(dt)));
    }
    check(pass, parts.join("; "))
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let cases = [(1.0, -3.854, (0.01017, 0.00117)), (0.8, -2.374, (-0.02422, 0.04879))];
    for (eta, target, (pp, pc)) in cases {
        let p = InterferometerParams::paper_start().with_eta(eta);
        let t = Instant::now();
        let res = optimize_phases(Circuit::Tsu11, &p, Objective::Lodi, &OptOptions::default());
        let dt = t.elapsed();
        match res {
            Ok(r) => {
                let ok = within(r.value_db, target, 0.01)
                    && within(r.phi_p, pp, 2e-3)
                    && within(r.phi_c, pc, 2e-3)
                    && dt < Duration::from_secs(120);
                pass &= ok;
                let at_paper = lodi_db(&p.clone().with_phases(pp, pc)).map(|x| x.lodi_db.to_f64()).unwrap_or(f64::NAN);
                parts.push(format!(
                    "η={eta}: min {:.5} dB at ({:.5}, {:.5}) [{} iters, converged={}] in {}; want {target} at ({pp}, {pc}); LODI at those phases {:.5}",
                    r.value_db, r.phi_p, r.phi_c, r.iterations, r.converged, secs(dt), at_paper
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("η={eta}: {e}"));
            }
        }
    }
    let secondary = lodi_db(&InterferometerParams::paper_start()).map(|x| x.lodi_db.to_f64()).unwrap_or(f64::NAN);
    parts.push(format!("secondary: LODI at φ_p = φ_c = 0 is {secondary:.5} dB (text quotes −3.78)"));
    check(pass, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, target) in [(2.413, -5.29), (2.414, -5.29), (3.0, -5.41)] {
        let p = InterferometerParams { r, ..InterferometerParams::paper_start().with_eta(0.92) };
        let t = Instant::now();
        match optimize_phases(Circuit::Tsu11, &p, Objective::Lodi, &OptOptions::default()) {
            Ok(res) => {
                let ok = within(res.value_db, target, 0.03);
                pass &= ok;
                parts.push(format!(
                    "r={r}: {:.4} dB at ({:.4}, {:.4}) in {} (want {target} ± 0.03)",
                    res.value_db,
                    res.phi_p,
                    res.phi_c,
                    secs(t.elapsed())
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("r={r}: {e}"));
            }
        }
    }
    check(pass, parts.join("; "))
}

fn random_point(rng: &mut ChaCha8Rng, circuit: Circuit) -> InterferometerParams {
    let p = InterferometerParams {
        r: rng.random_range(0.0..=3.0),
        alpha: log_uniform(rng, 1e2, 1e9),
        gamma: log_uniform(rng, 1e2, 1e9),
        kappa: log_uniform(rng, 1e2, 1e9),
        theta_f: rng.random_range(-PI..PI),
        phi_p: rng.random_range(-PI..=PI),
        phi_c: rng.random_range(-PI..=PI),
        arms: if rng.random_bool(0.5) { Arms::Both } else { Arms::ProbeOnly },
        ..InterferometerParams::paper_start().with_eta(rng.random_range(0.1..=1.0))
    };
    match circuit {
        Circuit::Vacuum => InterferometerParams { alpha: 0.0, arms: Arms::Both, ..p },
        Circuit::Tsu11 => InterferometerParams { arms: Arms::Both, ..p },
        _ => p,
    }
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let tol = Precision::default().pow10(-40);
    let mut pass = true;
    let mut parts = Vec::new();
    for circuit in [Circuit::Classical, Circuit::Tsu11, Circuit::Vacuum] {
        let mut worst = [Float::new(64), Float::new(64), Float::new(64)];
        for _ in 0..100 {
            let p = random_point(&mut rng, circuit);
            let (j, state) = circuit.build(&p).expect("build");
            let (m, _, var) = moments(&j, &state).expect("moments");
            let d = dj_dphi_sq(circuit, &p).expect("slope");
            let cf = closed_form(circuit, &p).expect("closed form");
            if circuit == Circuit::Vacuum {
                // both sides must vanish exactly
                if !(m.is_zero() && d.is_zero() && cf.mean.is_zero() && cf.dphi_sq.is_zero()) {
                    pass = false;
                }
            }
            for (w, e) in worst.iter_mut().zip([rel(m.re(), &cf.mean), rel(&d, &cf.dphi_sq), rel(var.re(), &cf.variance)]) {
                if e > *w {
                    *w = Float::with_val(64, &e);
                }
            }
        }
        pass &= worst.iter().all(|w| *w < tol);
        parts.push(format!(
            "{circuit}: max rel ⟨J⟩ {:.1e}, |∂⟨J⟩|² {:.1e}, Δ²J {:.1e}",
            worst[0].to_f64(),
            worst[1].to_f64(),
            worst[2].to_f64()
        ));
    }
    let dt = t.elapsed();
    pass &= dt < Duration::from_secs(300);
    parts.push(format!("300 points in {}", secs(dt)));
    check(pass, parts.join("; "))
}

fn cabs(z: Complex64) -> f64 {
    z.norm()
}

fn to_c64(z: &BigComplex) -> Complex64 {
    let (re, im) = z.to_f64_parts();
    Complex64::new(re, im)
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let prec = Precision::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let (cutoff, bumped) = (30, 35);
    let mut worst_match = 0.0f64;
    let mut worst_cutoff = 0.0f64;
    for _ in 0..200 {
        let n_modes = rng.random_range(1..=2u8);
        let modes: Vec<char> = ['a', 'b'][..n_modes as usize].to_vec();
        let raw = common::random_raw(&mut rng, n_modes, 6, 4);
        let x = expr_from_raw(&raw, &modes, prec);
        let mut state = CoherentAssignment::vacuum(prec);
        for &m in &modes {
            let (rad, th) = (rng.random_range(0.0..=1.0f64), rng.random_range(-PI..PI));
            state.set(mode(m), BigComplex::from_parts_f64(rad * th.cos(), rad * th.sin(), prec)).unwrap();
        }
        let cfg = FockConfig::new(modes.iter().map(|&c| mode(c)).collect(), cutoff).unwrap();
        let engine = to_c64(&coherent_expectation(&x, &state).unwrap());
        let oracle = oracle_expectation(&x, &cfg, &state).unwrap();
        let oracle2 = oracle_expectation(&x, &cfg.with_cutoff(bumped).unwrap(), &state).unwrap();
        let scale = cabs(engine).max(1.0);
        worst_match = worst_match.max(cabs(engine - oracle) / scale);
        worst_cutoff = worst_cutoff.max(cabs(oracle2 - oracle) / scale);
    }

    // miniature squeezed circuit through the per-mode factorized oracle
    let p = InterferometerParams { r: 0.4, alpha: 0.3, gamma: 0.8, kappa: 0.8, ..InterferometerParams::paper_start().with_eta(0.9) };
    let (j, state) = Circuit::Tsu11.build(&p).unwrap();
    let j2 = j.mul(&j).unwrap();
    let (m, second, _) = moments(&j, &state).unwrap();
    let mut mini_match = 0.0f64;
    let mut mini_cutoff = 0.0f64;
    for (x, engine) in [(&j, &m), (&j2, &second)] {
        let engine = to_c64(engine);
        let o24 = factorized_expectation(x, 24, &state).unwrap();
        let o29 = factorized_expectation(x, 29, &state).unwrap();
        let scale = cabs(engine).max(1.0);
        mini_match = mini_match.max(cabs(engine - o24) / scale);
        mini_cutoff = mini_cutoff.max(cabs(o29 - o24) / scale);
    }
    let dt = t.elapsed();
    let pass = worst_match < 1e-8
        && worst_cutoff < 1e-10
        && mini_match < 1e-8
        && mini_cutoff < 1e-10
        && dt < Duration::from_secs(300);
    check(
        pass,
        format!(
            "200 random: max diff {worst_match:.1e}, cutoff+5 drift {worst_cutoff:.1e}; miniature tSU: ⟨J⟩,⟨J²⟩ diff {mini_match:.1e}, cutoff+5 drift {mini_cutoff:.1e}; {}",
            secs(dt)
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);

    // vacuum mean is exactly zero
    let mut exact = true;
    for _ in 0..10 {
        let p = random_point(&mut rng, Circuit::Vacuum);
        let (j, state) = Circuit::Vacuum.build(&p).unwrap();
        exact &= mean(&j, &state).unwrap().is_zero();
    }
    pass &= exact;
    parts.push(format!("vacuum ⟨J⟩ = 0 exactly: {exact}"));

    // classical variance over random phase triples
    let base = InterferometerParams::paper_start();
    let mut vars = Vec::new();
    for _ in 0..10 {
        let p = InterferometerParams {
            theta_f: rng.random_range(-PI..PI),
            phi_p: rng.random_range(-PI..PI),
            phi_c: rng.random_range(-PI..PI),
            ..base.clone()
        };
        let (j, state) = Circuit::Classical.build(&p).unwrap();
        vars.push(moments(&j, &state).unwrap().2.re().clone());
    }
    let spread = vars.iter().map(|v| rel(v, &vars[0])).fold(Float::new(64), |a, b| a.max(&b));
    let ok = spread < base.precision.pow10(-50);
    pass &= ok;
    parts.push(format!("classical Δ²J spread {:.1e}", spread.to_f64()));

    // no squeezing, both circuits at their best phases
    let p0 = InterferometerParams { r: 0.0, ..base.clone() };
    let opts = OptOptions { grid: 16, ..OptOptions::default() };
    let opt = optimize_phases(Circuit::Tsu11, &p0, Objective::Lodi, &opts).map(|r| r.value_db).unwrap_or(f64::NAN);
    let fixed = lodi_db(&p0).map(|r| r.lodi_db.to_f64()).unwrap_or(f64::NAN);
    let ok = opt.abs() < 1e-6;
    pass &= ok;
    parts.push(format!("r=0 LODI at optimized phases {opt:.2e} dB (at φ_p = φ_c = 0: {fixed:.2e})"));

    // vacuum minima locus
    let p = InterferometerParams { alpha: 0.0, ..base.clone() };
    let axes = vec![AxisSpec::linear(Param::Phi, -FRAC_PI_2, FRAC_PI_2, 37), AxisSpec::linear(Param::PhiP, -PI, PI, 73)];
    match vacuum_noise_map(&p, &axes) {
        Ok(map) => {
            let worst = map.minima.iter().map(|m| m.residual.abs()).fold(0.0, f64::max);
            let ok = worst <= map.resolution;
            pass &= ok;
            parts.push(format!("minima |2φ − φ_p − φ_c| ≤ {worst:.1e} (grid {:.1e})", map.resolution));
        }
        Err(e) => {
            pass = false;
            parts.push(format!("vacuum map: {e}"));
        }
    }

    // transduction slope
    let prec = base.precision;
    let h = prec.pow10(-20);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let th = prec.real(rng.random_range(-3.0..3.0));
        let up = transduce(&Float::with_val(prec.bits(), &th + &h), prec);
        let down = transduce(&Float::with_val(prec.bits(), &th - &h), prec);
        let slope = Float::with_val(prec.bits(), &up - &down) / Float::with_val(prec.bits(), &h * 2u32);
        worst = worst.max((slope.abs().to_f64() - 1.0).abs());
    }
    let ok = worst < 1e-12;
    pass &= ok;
    parts.push(format!("||dφ/dθ_f| − 1| ≤ {worst:.1e}"));
    check(pass, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let p = InterferometerParams::paper_start();
    let render = || {
        let grid = SweepGrid::new(
            vec![AxisSpec::linear(Param::R, 0.0, 3.0, 7), AxisSpec::linear(Param::Eta, 0.5, 1.0, 3)],
            p.clone(),
            Circuit::Tsu11,
            Target::Lodi,
        );
        let table = run_sweep(&grid).unwrap();
        let csv = table.to_csv_string().unwrap();
        let opt = optimize_phases(Circuit::Tsu11, &p, Objective::Lodi, &OptOptions { grid: 16, ..OptOptions::default() })
            .unwrap();
        let extra = json!({ "phi_p": opt.phi_p, "phi_c": opt.phi_c, "value_db": opt.value_db });
        let json = to_json_string(&sidecar("sweep", &p, &table, extra)).unwrap();
        (csv, json)
    };
    let (c1, j1) = render();
    let (c2, j2) = render();
    check(c1 == c2 && j1 == j2, format!("CSV {} bytes, JSON {} bytes, identical across two runs: {}", c1.len(), j1.len(), c1 == c2 && j1 == j2))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 classical benchmark", criterion_1),
        ("2 LODI optimum", criterion_2),
        ("3 high-gain points", criterion_3),
        ("4 closed-form equivalence", criterion_4),
        ("5 oracle equivalence", criterion_5),
        ("6 structural identities", criterion_6),
        ("7 determinism", criterion_7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run)
            .unwrap_or_else(|e| check(false, format!("panicked: {:?}", e.downcast_ref::<String>().map(String::as_str).or(e.downcast_ref::<&str>().copied()))));
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        if !outcome.pass {
            failed += 1;
        }
        println!("[{tag}] criterion {name} ({}): {}", secs(t.elapsed()), outcome.detail);
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
