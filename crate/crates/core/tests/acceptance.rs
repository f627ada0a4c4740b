//! Acceptance run: one PASS/FAIL line per primary criterion. Exits non-zero if
//! any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinetic_eikonal::hamiltonian::{self, eigen_residual, eigenfunction_q, solve_corrector};
use kinetic_eikonal::hj::{self, HJRunConfig, InitialCondition, MacroField};
use kinetic_eikonal::kinetic::{self, KineticConfig};
use kinetic_eikonal::{HamiltonianModel, Result, VelocityModel};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check<'a> = Box<dyn Fn() -> Result<Outcome> + 'a>;

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn uniform64() -> VelocityModel {
    VelocityModel::uniform(1.0, 64).unwrap()
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn coth_closed(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        (p - p.tanh()) / p.tanh()
    }
}

fn closed_form_coth() -> Result<Outcome> {
    let start = Instant::now();
    let h = HamiltonianModel::implicit(uniform64());
    let mut worst = 0.0f64;
    for p in grid(-5.0, 5.0, 401) {
        worst = worst.max((h.eval1(p)? - coth_closed(p)).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-8 && elapsed < Duration::from_secs(5),
        format!("max |H - (p - tanh p)/tanh p| = {worst:.3e} (tol 1e-8), {elapsed:.2?} (< 5 s)"),
    )
}

fn relativistic() -> Result<Outcome> {
    let start = Instant::now();
    let h = HamiltonianModel::implicit(VelocityModel::atoms(&[(1.0, 0.5), (-1.0, 0.5)])?);
    let mut worst = 0.0f64;
    for p in grid(-5.0, 5.0, 401) {
        let exact = ((1.0 + 4.0 * p * p).sqrt() - 1.0) / 2.0;
        worst = worst.max((h.eval1(p)? - exact).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max |H - (sqrt(1+4p^2)-1)/2| = {worst:.3e} (tol 1e-12), {elapsed:.2?} (< 1 s)"),
    )
}

fn derivative_identities() -> Result<Outcome> {
    let h = HamiltonianModel::implicit(uniform64());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let step = 1e-4;
    let (mut fd1, mut fd2, mut lip) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let p: f64 = rng.gen_range(-3.0..3.0);
        let d = h.derivatives(&[p])?;
        let (hm, h0, hp) = (h.eval1(p - step)?, h.eval1(p)?, h.eval1(p + step)?);
        fd1 = fd1.max((d.grad[0] - (hp - hm) / (2.0 * step)).abs());
        fd2 = fd2.max((d.hess[0] - (hp - 2.0 * h0 + hm) / (step * step)).abs());
        lip = lip.max(d.grad[0].abs());
    }
    let v_max = h.speed_bound().unwrap();
    // the Lipschitz bound must hold everywhere, including the steep tail
    for p in grid(-5.0, 5.0, 101) {
        lip = lip.max(h.derivatives(&[p])?.grad[0].abs());
    }
    let mut chord_fail = 0;
    let mut chord_worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let lam: f64 = rng.gen_range(0.0..1.0);
        let lhs = h.eval1(lam * a + (1.0 - lam) * b)?;
        let rhs = lam * h.eval1(a)? + (1.0 - lam) * h.eval1(b)?;
        // only round-off of the three evaluations is forgiven
        let slack = 1e-14 * (1.0 + rhs.abs());
        chord_worst = chord_worst.max(lhs - rhs);
        if lhs > rhs + slack {
            chord_fail += 1;
        }
    }
    outcome(
        fd1 <= 1e-6 && fd2 <= 1e-6 && lip <= v_max + 1e-10 && chord_fail == 0,
        format!(
            "FD error H' {fd1:.2e}, H'' {fd2:.2e} (tol 1e-6); max|H'| = {lip:.12} (<= {v_max} + 1e-10); \
             chord failures {chord_fail}/200 (max excess {chord_worst:.1e})"
        ),
    )
}

fn small_p() -> Result<Outcome> {
    let h = HamiltonianModel::implicit(uniform64());
    let dev = |p: f64| -> Result<f64> { Ok((h.eval1(p)? / (p * p) - 1.0 / 3.0).abs()) };
    let (a, b) = (dev(0.2)?, dev(0.05)?);
    outcome(
        a / b >= 3.0,
        format!("|H/p^2 - 1/3|: {a:.3e} at p=0.2, {b:.3e} at p=0.05, ratio {:.2} (>= 3)", a / b),
    )
}

fn window_error(a: &MacroField, b: &MacroField, half_width: f64) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .filter(|(j, _)| a.x(*j).abs() <= half_width + 1e-12)
        .map(|(_, (u, v))| (u - v).abs())
        .fold(0.0, f64::max)
}

fn hj_vs_hopf_lax() -> Result<Outcome> {
    let start = Instant::now();
    let h = HamiltonianModel::coth(1.0)?;
    let table = hamiltonian::legendre(&h, 4001, 20.0, 8001)?;
    let init = InitialCondition::Parabola { a: 1.0, center: 0.0 };
    let mut central = Vec::new();
    let mut full = Vec::new();
    for n in [400, 800, 1600] {
        let mut c = HJRunConfig::new(h.clone(), init);
        c.n_x = n;
        let out = hj::solve_hj(&c)?;
        let oracle = hj::hopf_lax(&out[0], &table, 1.0)?;
        let last = out.last().unwrap();
        central.push(window_error(last, &oracle, 3.0));
        full.push(last.max_abs_diff(&oracle));
    }
    let elapsed = start.elapsed();
    let monotone = |e: &[f64]| e.windows(2).all(|w| w[1] <= w[0]);
    outcome(
        central[0] <= 0.02 && monotone(&central) && monotone(&full) && elapsed < Duration::from_secs(30),
        format!(
            "L_inf on |x|<=3 at n_x=400/800/1600: {:.4}/{:.4}/{:.4} (tol 0.02, non-increasing); \
             full grid {:.4}/{:.4}/{:.4}; {elapsed:.2?} (< 30 s)",
            central[0], central[1], central[2], full[0], full[1], full[2]
        ),
    )
}

fn classical_exact() -> Result<Outcome> {
    let theta2 = 1.0 / 3.0;
    let mut c = HJRunConfig::new(
        HamiltonianModel::classical(theta2)?,
        InitialCondition::Parabola { a: 1.0, center: 0.0 },
    );
    c.n_x = 400;
    let out = hj::solve_hj(&c)?;
    let last = out.last().unwrap();
    let mut exact = last.clone();
    for (j, v) in exact.values.iter_mut().enumerate() {
        let x = last.x(j);
        *v = x * x / (1.0 + 4.0 * theta2);
    }
    let err = window_error(last, &exact, 2.0);
    outcome(err <= 0.02, format!("L_inf vs a x^2/(1+4a theta^2 t) on |x|<=2 = {err:.4} (tol 0.02)"))
}

fn eps_study() -> Result<(kinetic::ConvergenceTable, Duration)> {
    let start = Instant::now();
    let mut c = KineticConfig::new(
        VelocityModel::uniform(1.0, 32)?,
        0.5,
        InitialCondition::CosineBump { amplitude: 1.0 },
    );
    c.n_x = 200;
    let table = kinetic::converge_study(&[0.5, 0.25, 0.125, 0.0625], &c, None)?;
    Ok((table, start.elapsed()))
}

fn eps_convergence(study: &(kinetic::ConvergenceTable, Duration)) -> Result<Outcome> {
    let (table, elapsed) = study;
    let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.4}", r.sup_error)).collect();
    let last = table.rows.last().unwrap().sup_error;
    outcome(
        table.strictly_decreasing && last <= 0.05 && *elapsed < Duration::from_secs(60),
        format!(
            "sup error at eps=0.5/0.25/0.125/0.0625: {} (strictly decreasing, final <= 0.05), {elapsed:.2?} (< 60 s)",
            errs.join("/")
        ),
    )
}

fn bound_monitors(study: &(kinetic::ConvergenceTable, Duration)) -> Result<Outcome> {
    let total: usize = study.0.bounds.iter().map(|b| b.violations.len()).sum();
    let snapshots: usize = study.0.bounds.iter().map(|b| b.rows.len()).sum();
    let tol = study.0.bounds[0].tolerance;
    outcome(
        total == 0,
        format!("{total} violations over {snapshots} snapshots x 5 estimates (scheme tolerance {tol:.3e})"),
    )
}

fn corrector_and_eigenfunction() -> Result<Outcome> {
    let model = uniform64();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (mut pair, mut norm, mut eig) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let p: f64 = rng.gen_range(-2.0..2.0);
        let anchor = rng.gen_range(0..model.len());
        let c = solve_corrector(&model, &[p], anchor)?;
        pair = pair.max(c.pairwise_defect(&model));
        norm = norm.max(c.normalization_defect(&model));
        let h = hamiltonian::solve_dispersion(&model, &[p], 1e-12)?;
        let q = eigenfunction_q(&model, &[p], 1e-12)?;
        eig = eig.max(eigen_residual(&model, &[p], h, &q));
    }
    outcome(
        pair <= 1e-10 && norm <= 1e-10 && eig <= 1e-12,
        format!("pairwise {pair:.2e}, renormalization {norm:.2e} (tol 1e-10); eigenrelation {eig:.2e} (tol 1e-12)"),
    )
}

fn finite_propagation() -> Result<Outcome> {
    let init = InitialCondition::Ramp {
        half_width: 1.0,
        slope: 20.0,
        height: 2.0,
    };
    let (t, level) = (0.5, 1.0);
    let spread = |h: HamiltonianModel| -> Result<(f64, f64)> {
        let mut c = HJRunConfig::new(h, init);
        c.n_x = 400;
        c.t_final = t;
        let out = hj::solve_hj(&c)?;
        let (a0, b0) = out[0].sublevel_extent(level).expect("plateau below level");
        let (a1, b1) = out[1].sublevel_extent(level).expect("plateau below level");
        Ok(((a0 - a1).max(b1 - b0), out[0].dx))
    };
    let (kin, dx) = spread(HamiltonianModel::coth(1.0)?)?;
    let (cls, _) = spread(HamiltonianModel::classical(1.0 / 3.0)?)?;
    let bound = 1.0 * t + 2.0 * dx;
    outcome(
        kin <= bound && cls > bound,
        format!(
            "level-{level} set spread at t={t}: kinetic {kin:.4} <= {bound:.4} = v_max t + 2dx; classical {cls:.4} > bound"
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let study = eps_study();
    let criteria: Vec<(&str, Check)> = vec![
        ("closed-form coth Hamiltonian", Box::new(closed_form_coth)),
        ("relativistic Hamiltonian", Box::new(relativistic)),
        ("derivative identities", Box::new(derivative_identities)),
        ("small-p equivalence", Box::new(small_p)),
        ("HJ solver vs Hopf-Lax", Box::new(hj_vs_hopf_lax)),
        ("classical eikonal exact solution", Box::new(classical_exact)),
        (
            "eps-convergence",
            Box::new(|| match &study {
                Ok(s) => eps_convergence(s),
                Err(e) => Err(e.clone()),
            }),
        ),
        (
            "uniform-estimate monitors",
            Box::new(|| match &study {
                Ok(s) => bound_monitors(s),
                Err(e) => Err(e.clone()),
            }),
        ),
        ("corrector and eigenfunction", Box::new(corrector_and_eigenfunction)),
        ("finite propagation", Box::new(finite_propagation)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.2?}",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
