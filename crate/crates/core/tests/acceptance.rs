//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line per
//! criterion and then asserts it.
//!
//! Run with `cargo test -p qav-kdv --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::sync::RwLock;
use std::time::Instant;

use qav_kdv::baselines::avf_step;
use qav_kdv::eip_projection::{project_eip, projection_basis, ProjectionMode, ReferenceInvariants};
use qav_kdv::experiments::{
    refinement_study, simulate, BimodalSpectrum, Domain, ExperimentConfig, InitialCondition,
    Levels, Scheme, SolverSettings,
};
use qav_kdv::kdv_model::{grad_h, hamiltonian_h, mass_h, KdvParams};
use qav_kdv::qav_integrator::{QavStepper, SolverConfig};
use qav_kdv::spectral::{inner_h, make_grid, norm_h, sum_h, GridFunction, SpectralOperator};
use qav_kdv::tableau::{gauss_tableau, symplectic_residual};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wall-clock comparisons hold this exclusively; other long runs share it.
static TIMING: RwLock<()> = RwLock::new(());

fn shared() -> std::sync::RwLockReadGuard<'static, ()> {
    TIMING.read().unwrap_or_else(|e| e.into_inner())
}

fn exclusive() -> std::sync::RwLockWriteGuard<'static, ()> {
    TIMING.write().unwrap_or_else(|e| e.into_inner())
}

fn report(id: &str, pass: bool, detail: String) -> bool {
    println!("[{}] {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn config(scheme: Scheme, domain: (f64, f64, usize), dt: f64, t_final: f64) -> ExperimentConfig {
    ExperimentConfig {
        scheme,
        dt,
        t_final,
        record_every: 1,
        seed: 0,
        output_path: None,
        domain: Domain {
            a: domain.0,
            b: domain.1,
            n: domain.2,
        },
        params: KdvParams::default(),
        solver: SolverSettings::default(),
        initial: InitialCondition::Soliton { c: 1.0, x0: 0.0 },
    }
}

fn soliton_config(scheme: Scheme, n: usize, dt: f64, t_final: f64) -> ExperimentConfig {
    config(scheme, (-40.0, 40.0, n), dt, t_final)
}

fn random_trig(rng: &mut ChaCha8Rng, g: &std::sync::Arc<qav_kdv::Grid>, modes: usize) -> GridFunction {
    let base = 2.0 * PI / g.length();
    let coeffs: Vec<(f64, f64)> = (0..modes)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::from_fn(g, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let th = base * k as f64 * (x - g.a());
                a * th.cos() + b * th.sin()
            })
            .sum()
    })
}

#[test]
fn c01_symplectic_gate() {
    let start = Instant::now();
    let residuals: Vec<f64> = (1..=3)
        .map(|s| symplectic_residual(&gauss_tableau(s).unwrap()))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = residuals.iter().all(|&r| r <= 1e-14) && secs < 1.0;
    assert!(report(
        "C1 symplectic gate",
        pass,
        format!("residuals {}, {secs:.3}s", sci(&residuals))
    ));
}

#[test]
fn c02_spectral_operator_suite() {
    let start = Instant::now();
    let g = make_grid(-3.0, 5.0, 64).unwrap();
    let op = SpectralOperator::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut skew, mut comp, mut exact, mut real) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut skew_ok = true;
    for _ in 0..100 {
        let u = GridFunction::new(&g, (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let v = GridFunction::new(&g, (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let du = op.apply_d1(&u, 1).unwrap();
        let dv = op.apply_d1(&v, 1).unwrap();
        let s = (inner_h(&du, &v).unwrap() + inner_h(&u, &dv).unwrap()).abs();
        skew = skew.max(s);
        skew_ok &= s <= 1e-12 * (norm_h(&u) * norm_h(&v) + 1.0);

        let d2 = op.apply_d1(&u, 2).unwrap();
        let d11 = op.apply_d1(&du, 1).unwrap();
        comp = comp.max(d2.max_abs_diff(&d11).unwrap());

        let (_, residue) = op.inverse_with_residue(op.forward(u.values()));
        real = real.max(residue);

        // random trigonometric polynomial of degree < N/2 and its derivative
        let base = 2.0 * PI / g.length();
        let coeffs: Vec<(f64, f64)> = (0..32)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = |x: f64, deriv: bool| -> f64 {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let th = base * k as f64;
                    let y = th * (x - g.a());
                    if deriv {
                        th * (-a * y.sin() + b * y.cos())
                    } else {
                        a * y.cos() + b * y.sin()
                    }
                })
                .sum()
        };
        let p = GridFunction::from_fn(&g, |x| f(x, false));
        let dp = GridFunction::from_fn(&g, |x| f(x, true));
        exact = exact.max(op.apply_d1(&p, 1).unwrap().max_abs_diff(&dp).unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = skew_ok && comp <= 1e-12 && exact <= 1e-11 && real <= 1e-13 && secs < 5.0;
    assert!(report(
        "C2 spectral operator suite",
        pass,
        format!("skew {skew:.2e}, composition {comp:.2e}, exactness {exact:.2e}, imag residue {real:.2e}, {secs:.2}s")
    ));
}

#[test]
fn c03_temporal_order() {
    let _guard = shared();
    let ladder = vec![0.1, 0.05, 0.025, 0.0125];
    let mut all = true;
    for (scheme, target, tol) in [
        (Scheme::Avf, 2.0, 0.3),
        (Scheme::QavEprk2, 4.0, 0.3),
        (Scheme::QavEprk3, 6.0, 0.4),
    ] {
        let base = soliton_config(scheme, 512, 0.1, 1.0);
        let rows = refinement_study(&base, &Levels::Time(ladder.clone()), None).unwrap();
        let orders: Vec<f64> = rows.iter().filter_map(|r| r.observed_order).collect();
        let errors: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
        let pass = orders.iter().all(|o| (o - target).abs() <= tol);
        all &= report(
            &format!("C3 temporal order {scheme}"),
            pass,
            format!("L2 errors {}, orders {orders:.3?} (target {target} ± {tol})", sci(&errors)),
        );
    }
    assert!(all);
}

/// Local algebraic orders `log(e_i/e_{i+1}) / log(N_{i+1}/N_i)`.
fn local_orders(ns: &[usize], errors: &[f64]) -> Vec<f64> {
    ns.windows(2)
        .zip(errors.windows(2))
        .map(|(n, e)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

#[test]
fn c04_spatial_accuracy() {
    let _guard = shared();
    // Below this the error is round-off, not truncation.
    const FLOOR: f64 = 1e-12;
    let ns = vec![100, 150, 200, 250, 300];
    let base = soliton_config(Scheme::QavEprk3, 100, 1e-3, 0.1);
    let rows = refinement_study(&base, &Levels::Space(ns.clone()), None).unwrap();
    let errors: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let resolved: Vec<f64> = errors.iter().copied().take_while(|&e| e > FLOOR).collect();
    let orders = local_orders(&ns[..resolved.len()], &resolved);
    let accelerating = orders.len() >= 2 && orders.windows(2).all(|w| w[1] > w[0]);
    let final_err = *errors.last().unwrap();
    let pass = accelerating && final_err <= 1e-8;
    assert!(report(
        "C4 spatial accuracy",
        pass,
        format!(
            "L2 errors {}, local algebraic orders above {FLOOR:e}: {orders:.2?}, final {final_err:.2e}",
            sci(&errors)
        )
    ));
}

fn three_soliton_config(scheme: Scheme, dt: f64, t_final: f64) -> ExperimentConfig {
    ExperimentConfig {
        initial: InitialCondition::three_solitons(),
        ..config(scheme, (-100.0, 100.0, 512), dt, t_final)
    }
}

#[test]
fn c05_energy_conservation() {
    let _guard = shared();
    let out = simulate(&three_soliton_config(Scheme::QavEprk2, 0.1, 40.0)).unwrap();
    let (de, dm) = (out.max_relative_energy_error(), out.max_relative_mass_error());
    let pass = de <= 1e-10 && dm <= 1e-12;
    assert!(report(
        "C5 energy conservation",
        pass,
        format!(
            "max rel energy {de:.2e}, max rel mass {dm:.2e}, unconverged steps {}",
            out.unconverged_steps
        )
    ));
}

#[test]
fn c06_grk_contrast() {
    let _guard = shared();
    let grk = simulate(&three_soliton_config(Scheme::Grk2, 0.5, 200.0)).unwrap();
    let qav = simulate(&three_soliton_config(Scheme::QavEprk2, 0.5, 200.0)).unwrap();
    let (eg, eq) = (grk.max_relative_energy_error(), qav.max_relative_energy_error());
    let pass = eg >= 1e3 * eq && eq <= 1e-9;
    assert!(report(
        "C6 GRK contrast",
        pass,
        format!("GRK-2 {eg:.2e}, QAV-EPRK-2 {eq:.2e}, ratio {:.1e}", eg / eq)
    ));
}

#[test]
fn c07_avf_equivalence() {
    let g = make_grid(-20.0, 20.0, 128).unwrap();
    let op = SpectralOperator::new(&g);
    let p = KdvParams::default();
    let cfg = SolverConfig::new(0.01);
    let tab = gauss_tableau(1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let u = random_trig(&mut rng, &g, 8);
        let (a, _) = avf_step(&op, &u, &p, &cfg).unwrap();
        let (q, _) = qav_kdv::qav_integrator::qav_eprk_step(&op, &u, &tab, &p, &cfg, None).unwrap();
        worst = worst.max(a.max_abs_diff(&q).unwrap());
    }
    assert!(report(
        "C7 AVF equivalence",
        worst <= 1e-12,
        format!("max single-step difference {worst:.2e}")
    ));
}

#[test]
fn c08_scheme_equivalence_and_q_invariant() {
    let g = make_grid(-40.0, 40.0, 256).unwrap();
    let op = SpectralOperator::new(&g);
    let p = KdvParams::default();
    let cfg = SolverConfig::new(0.05);
    let tab = gauss_tableau(2).unwrap();
    let u0 = GridFunction::from_fn(&g, |x| 3.0 / (0.5 * x).cosh().powi(2));

    let mut eprk = QavStepper::new(&op, &tab, &p, &cfg).unwrap();
    let mut with_q = QavStepper::new(&op, &tab, &p, &cfg).unwrap();
    let mut with_off = QavStepper::new(&op, &tab, &p, &cfg).unwrap();
    let (mut u4, mut u3, mut q3) = (u0.clone(), u0.clone(), u0.map(|v| v * v));
    let (mut uo, mut qo) = (u0.clone(), u0.map(|v| v * v + 1.0));
    let (mut diff, mut defect, mut offset) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..100 {
        u4 = eprk.step(&u4, None).unwrap().0;
        let (a, b, _) = with_q.step_with_q(&u3, &q3).unwrap();
        (u3, q3) = (a, b);
        let (a, b, _) = with_off.step_with_q(&uo, &qo).unwrap();
        (uo, qo) = (a, b);
        diff = diff.max(u3.max_abs_diff(&u4).unwrap());
        defect = defect.max(q3.zip_map(&u3, |q, u| q - u * u).unwrap().max_abs());
        offset = offset.max(qo.zip_map(&uo, |q, u| q - u * u - 1.0).unwrap().max_abs());
    }
    let pass = diff <= 1e-11 && defect <= 1e-11 && offset <= 1e-11;
    assert!(report(
        "C8 scheme equivalence and q-invariant",
        pass,
        format!("|u3 - u4| {diff:.2e}, |q - u²| {defect:.2e}, |q - u² - 1| {offset:.2e}")
    ));
}

#[test]
fn c09_eip_drift_control() {
    let _guard = exclusive();
    let two = |eip: bool, tol: f64| ExperimentConfig {
        params: KdvParams { eta: 6.0, mu: 1.0 },
        initial: InitialCondition::TwoSolitonRational,
        solver: SolverSettings {
            tol,
            eip,
            ..SolverSettings::default()
        },
        ..config(Scheme::QavEprk2, (-20.0, 20.0, 256), 0.005, 200.0)
    };
    let on_loose = simulate(&two(true, 1e-7)).unwrap();
    let off_loose = simulate(&two(false, 1e-7)).unwrap();
    let off_tight = simulate(&two(false, 1e-14)).unwrap();

    let e_on = on_loose.max_relative_energy_error();
    let f_on = on_loose.final_relative_energy_error();
    let f_off = off_loose.final_relative_energy_error();
    let e_tight = off_tight.max_relative_energy_error();
    let (t_on, t_tight) = (on_loose.elapsed.as_secs_f64(), off_tight.elapsed.as_secs_f64());
    let diff = on_loose.final_state.max_abs_diff(&off_tight.final_state).unwrap();

    let mut all = report(
        "C9a EIP on, Tol 1e-7: energy",
        e_on <= 1e-12,
        format!("max rel energy {e_on:.2e}"),
    );
    all &= report(
        "C9b EIP off, Tol 1e-7: drift",
        f_off >= 1e2 * f_on,
        format!("final rel energy off {f_off:.2e} vs on {f_on:.2e}"),
    );
    all &= report(
        "C9c EIP on (1e-7) vs EIP off (1e-14): cost and behaviour",
        t_on < 0.8 * t_tight && e_on <= e_tight.max(1e-12),
        format!(
            "wall {t_on:.1}s vs {t_tight:.1}s, energy {e_on:.2e} vs {e_tight:.2e}, max |u| diff {diff:.2e}"
        ),
    );
    assert!(all);
}

#[test]
fn c10_projection_suite() {
    let g = make_grid(-40.0, 40.0, 256).unwrap();
    let op = SpectralOperator::new(&g);
    let p = KdvParams::default();
    let u_star = GridFunction::from_fn(&g, |x| 3.0 / (0.5 * x).cosh().powi(2));
    let reference = ReferenceInvariants::from_initial(&op, &u_star, &p).unwrap();
    let e0 = reference.energy0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);

    let fixed = project_eip(&op, &u_star, &reference, &p, ProjectionMode::OneStep).unwrap();
    let mut fixed_ok = fixed.u.max_abs_diff(&u_star).unwrap() <= 1e-14;
    let (mut mass_ok, mut mean_ok, mut newton_ok, mut contraction_ok, mut idem_ok) =
        (true, true, true, true, true);
    let mut worst_ratio = 0.0_f64;

    for _ in 0..100 {
        let noise: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u_tilde = GridFunction::new(
            &g,
            u_star.values().iter().zip(&noise).map(|(u, n)| u + 1e-4 * n).collect(),
        )
        .unwrap();

        let one = project_eip(&op, &u_tilde, &reference, &p, ProjectionMode::OneStep).unwrap();
        let full = project_eip(&op, &u_tilde, &reference, &p, ProjectionMode::FullNewton).unwrap();
        for out in [&one.u, &full.u] {
            mass_ok &= (mass_h(out) - reference.mass0).abs() <= 1e-14 * reference.mass0.abs();
        }

        let (phi, psi) = projection_basis(&op, &u_tilde, &reference, &p).unwrap();
        mean_ok &= sum_h(&psi).abs() <= 1e-13 * (1.0 + norm_h(&psi));

        let h_full = hamiltonian_h(&op, &full.u, &p).unwrap();
        newton_ok &= (h_full - e0).abs() <= 1e-13 * (1.0 + e0.abs());

        // f(λ) = H[φ + λψ] - E0; one Newton step leaves ≈ |f''|/(2 f'(0)²) r0²,
        // with f'' from the slope change between 0 and the full-Newton root
        let slope = |u: &GridFunction| inner_h(&grad_h(&op, u, &p).unwrap(), &psi).unwrap();
        let (f1_0, f1_star) = (slope(&phi), slope(&full.u));
        let f2 = (f1_star - f1_0) / full.lambda;
        let c = f2.abs() / (2.0 * f1_0 * f1_0);
        let r0 = (hamiltonian_h(&op, &phi, &p).unwrap() - e0).abs();
        let r1 = (hamiltonian_h(&op, &one.u, &p).unwrap() - e0).abs();
        let floor = 1e-14 * (1.0 + e0.abs());
        contraction_ok &= r1 <= 2.0 * c * r0 * r0 + floor;
        worst_ratio = worst_ratio.max(r1 / (c * r0 * r0 + floor));

        // a second one-step projection is a Newton step from λ1: |λ2| ≈ |f''|/(2|f'|) λ1²,
        // and it must land on the full-Newton result
        let twice = project_eip(&op, &one.u, &reference, &p, ProjectionMode::OneStep).unwrap();
        let k = f2.abs() / (2.0 * f1_0.abs());
        let to_full = twice.u.max_abs_diff(&full.u).unwrap();
        idem_ok &= twice.lambda.abs() <= 2.0 * k * one.lambda * one.lambda + 1e-14
            && to_full <= 1e-13;

        let again = project_eip(&op, &full.u, &reference, &p, ProjectionMode::OneStep).unwrap();
        fixed_ok &= again.u.max_abs_diff(&full.u).unwrap() <= 1e-13;
    }
    let pass = fixed_ok && mass_ok && mean_ok && newton_ok && contraction_ok && idem_ok;
    assert!(report(
        "C10 projection suite",
        pass,
        format!(
            "fixed point {fixed_ok}, mass {mass_ok}, ψ mean {mean_ok}, full Newton {newton_ok}, \
             contraction {contraction_ok} (worst r1/(C r0²) {worst_ratio:.2}), idempotence {idem_ok}"
        )
    ));
}

#[test]
fn c11_bimodal() {
    let _guard = shared();
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let cfg = ExperimentConfig {
            params: KdvParams {
                eta: 1.0,
                mu: (2.0_f64 / 9.0).sqrt(),
            },
            initial: InitialCondition::Bimodal(BimodalSpectrum::case(2).unwrap()),
            seed: 2021,
            output_path: Some(dir.path().join(name)),
            solver: SolverSettings {
                eip: true,
                ..SolverSettings::default()
            },
            ..config(Scheme::QavEprk2, (0.0, 200.0 * PI, 4096), 0.01, 20.0)
        };
        simulate(&cfg).unwrap()
    };
    let first = run("a.csv");
    let second = run("b.csv");
    let de = first.max_relative_energy_error();
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    let identical = a == b && first.final_state == second.final_state;
    let pass = de <= 1e-11 && identical;
    assert!(report(
        "C11 bimodal determinism and energy",
        pass,
        format!(
            "max rel energy {de:.2e}, bitwise identical {identical}, unconverged steps {}",
            first.unconverged_steps
        )
    ));
}

#[test]
fn c12_cpu_ordering_at_matched_accuracy() {
    let _guard = exclusive();
    let mut results = Vec::new();
    for (scheme, dt) in [
        (Scheme::Avf, 5e-5),
        (Scheme::QavEprk2, 1e-2),
        (Scheme::QavEprk3, 4e-2),
    ] {
        let mut cfg = soliton_config(scheme, 512, dt, 10.0);
        cfg.record_every = usize::MAX;
        let out = simulate(&cfg).unwrap();
        let exact = cfg.initial.exact(&cfg.grid().unwrap(), 10.0, &cfg.params).unwrap().unwrap();
        let diff = out.final_state.zip_map(&exact, |a, b| a - b).unwrap();
        results.push((scheme, norm_h(&diff), out.elapsed.as_secs_f64()));
    }
    let accurate = results.iter().all(|r| r.1 <= 1e-8);
    let t_avf = results[0].2;
    let faster = results[1].2 < t_avf && results[2].2 < t_avf;
    let detail = results
        .iter()
        .map(|(s, e, t)| format!("{s}: L2 {e:.2e} in {t:.2}s"))
        .collect::<Vec<_>>()
        .join(", ");
    assert!(report("C12 CPU ordering at L2 1e-8", accurate && faster, detail));
}
