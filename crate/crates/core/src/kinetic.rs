//! Asymptotic-preserving solver for the scaled phase equation
//!
//! ```text
//!     phi_t + v phi_x = sum_j w_j (1 - exp((phi(v) - phi(v_j)) / eps))
//! ```
//!
//! obtained from the BGK equation through `f = M exp(-phi / eps)`. Each step
//! is a Strang splitting of two exactly solvable pieces: free transport (by
//! semi-Lagrangian shifts along each velocity node) and linear relaxation
//! `f <- M rho + exp(-dt/eps) (f - M rho)`, rewritten in the phase with a
//! log-sum-exp shift so nothing underflows as `eps -> 0`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::hj::{self, Dissipation, HJRunConfig, InitialCondition, MacroField};
use crate::velocity::{VelocityKind, VelocityModel};

/// `phi^eps(x_j, v_i)` stored x-major: `values[j * n_v + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub x_min: f64,
    pub dx: f64,
    pub n_x: usize,
    pub velocity: VelocityModel,
    pub epsilon: f64,
    pub values: Vec<f64>,
    pub time: f64,
}

impl PhaseField {
    /// Well-prepared data: `phi(0, x, v) = phi0(x)` for every velocity node.
    pub fn from_macro(phi0: &MacroField, velocity: VelocityModel, epsilon: f64) -> Result<Self> {
        check_velocity(&velocity)?;
        check_epsilon(epsilon)?;
        if phi0.boundary != hj::Boundary::Periodic {
            return Err(Error::Invalid("the kinetic solver needs periodic initial data".into()));
        }
        let n_v = velocity.len();
        let mut values = Vec::with_capacity(phi0.len() * n_v);
        for &p in &phi0.values {
            values.extend(std::iter::repeat_n(p, n_v));
        }
        Ok(PhaseField {
            x_min: phi0.x_min,
            dx: phi0.dx,
            n_x: phi0.len(),
            velocity,
            epsilon,
            values,
            time: phi0.time,
        })
    }

    /// Velocity-dependent initial data. This lies outside the well-prepared
    /// setting of the convergence theorem; [`PhaseField::is_v_independent`]
    /// tells the two apart.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        velocity: VelocityModel,
        epsilon: f64,
        f: F,
    ) -> Result<Self> {
        check_velocity(&velocity)?;
        check_epsilon(epsilon)?;
        let grid = MacroField::periodic(x_min, x_max, n_x, |_| 0.0)?;
        let mut values = Vec::with_capacity(n_x * velocity.len());
        for j in 0..n_x {
            let x = grid.x(j);
            values.extend(velocity.nodes().iter().map(|&v| f(x, v)));
        }
        if values.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::Invalid("initial phase must be finite".into()));
        }
        Ok(PhaseField {
            x_min,
            dx: grid.dx,
            n_x,
            velocity,
            epsilon,
            values,
            time: 0.0,
        })
    }

    pub fn n_v(&self) -> usize {
        self.velocity.len()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn at(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n_v() + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n_v = self.n_v();
        &self.values[j * n_v..(j + 1) * n_v]
    }

    pub fn is_v_independent(&self) -> bool {
        self.values
            .chunks(self.n_v())
            .all(|row| row.iter().all(|&v| v == row[0]))
    }

    /// Discrete macroscopic mass `sum_i w_i exp(-(phi_i - m)/eps)` at `x_j`,
    /// with `m` the row minimum, normalized by `sum_i w_i`.
    pub fn shifted_density(&self, j: usize) -> (f64, f64) {
        let row = self.row(j);
        let m = row_min(row);
        (m, shifted_mass(row, self.velocity.weights(), m, self.epsilon) / weight_sum(&self.velocity))
    }
}

fn check_velocity(velocity: &VelocityModel) -> Result<()> {
    if velocity.dim() != 1 {
        return Err(Error::Invalid("the kinetic solver is one-dimensional in velocity".into()));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

fn row_min(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::INFINITY, f64::min)
}

fn shifted_mass(row: &[f64], weights: &[f64], m: f64, eps: f64) -> f64 {
    let mut acc = 0.0;
    for (phi, w) in row.iter().zip(weights) {
        acc += w * (-(phi - m) / eps).exp();
    }
    acc
}

fn weight_sum(velocity: &VelocityModel) -> f64 {
    let mut acc = 0.0;
    for w in velocity.weights() {
        acc += w;
    }
    acc
}

/// Free transport over `dt`: `phi(x, v_i) <- phi(x - v_i dt, v_i)` by periodic
/// linear interpolation. Integer cell shifts are exact.
pub fn transport_step(field: &PhaseField, dt: f64) -> Result<PhaseField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let n = field.n_x as i64;
    let n_v = field.n_v();
    let columns: Vec<Vec<f64>> = field
        .velocity
        .nodes()
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let shift = v * dt / field.dx;
            let whole = shift.floor();
            let frac = shift - whole;
            let whole = whole as i64;
            (0..n)
                .map(|j| {
                    let a = field.values[((j - whole).rem_euclid(n) as usize) * n_v + i];
                    if frac == 0.0 {
                        a
                    } else {
                        let b = field.values[((j - whole - 1).rem_euclid(n) as usize) * n_v + i];
                        (1.0 - frac) * a + frac * b
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![0.0; field.values.len()];
    for (i, col) in columns.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            values[j * n_v + i] = v;
        }
    }
    Ok(PhaseField {
        values,
        time: field.time + dt,
        ..field.clone()
    })
}

/// Exact BGK relaxation over `dt` at every `x`, in phase variables:
///
/// ```text
///     phi_i <- m - eps ln( rho + exp(-dt/eps) (g_i - rho) ),
///     g_i = exp(-(phi_i - m)/eps),  rho = sum_k w_k g_k / sum_k w_k.
/// ```
pub fn relaxation_step(field: &PhaseField, dt: f64) -> Result<PhaseField> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let eps = field.epsilon;
    let decay = (-dt / eps).exp();
    let weights = field.velocity.weights();
    let total = weight_sum(&field.velocity);
    let n_v = field.n_v();
    let rows: Vec<Result<Vec<f64>>> = field
        .values
        .par_chunks(n_v)
        .map(|row| {
            let m = row_min(row);
            let rho = shifted_mass(row, weights, m, eps) / total;
            row.iter()
                .map(|phi| {
                    let g = (-(phi - m) / eps).exp();
                    let arg = rho + decay * (g - rho);
                    if !(arg > 0.0 && arg.is_finite()) {
                        return Err(Error::Numerical(format!(
                            "relaxation underflow (eps = {eps}, dt = {dt}, argument {arg})"
                        )));
                    }
                    Ok(m - eps * arg.ln())
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(field.values.len());
    for r in rows {
        values.extend(r?);
    }
    Ok(PhaseField {
        values,
        ..field.clone()
    })
}

/// Half relaxation, transport, half relaxation.
pub fn strang_step(field: &PhaseField, dt: f64) -> Result<PhaseField> {
    let a = relaxation_step(field, 0.5 * dt)?;
    let b = transport_step(&a, dt)?;
    relaxation_step(&b, 0.5 * dt)
}

/// Macroscopic phase `-eps ln rho`, computed as `m - eps ln(rho~)` with the
/// row minimum `m`. Always `>= min_v phi`, with equality for
/// v-independent rows.
pub fn macro_phase(field: &PhaseField) -> MacroField {
    let values = (0..field.n_x)
        .map(|j| {
            let (m, rho) = field.shifted_density(j);
            m - field.epsilon * rho.ln()
        })
        .collect();
    MacroField {
        x_min: field.x_min,
        dx: field.dx,
        values,
        time: field.time,
        boundary: hj::Boundary::Periodic,
    }
}

#[derive(Debug, Clone)]
pub struct KineticConfig {
    pub velocity: VelocityModel,
    pub epsilon: f64,
    pub initial: InitialCondition,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_final: f64,
    pub cfl: f64,
    pub snapshots: usize,
}

impl KineticConfig {
    pub fn new(velocity: VelocityModel, epsilon: f64, initial: InitialCondition) -> Self {
        KineticConfig {
            velocity,
            epsilon,
            initial,
            x_min: -4.0,
            x_max: 4.0,
            n_x: 200,
            t_final: 1.0,
            cfl: 0.5,
            snapshots: 11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_velocity(&self.velocity)?;
        check_epsilon(self.epsilon)?;
        if matches!(self.initial, InitialCondition::Linear { .. }) {
            return Err(Error::Invalid("linear data is not periodic; use parabola or cosine".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Invalid(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.snapshots < 2 {
            return Err(Error::Invalid("at least two snapshots are required".into()));
        }
        Ok(())
    }

    pub fn initial_field(&self) -> Result<MacroField> {
        self.initial.render(self.x_min, self.x_max, self.n_x)
    }
}

/// Strang-split evolution with `dt = cfl dx / v_max`, landing exactly on the
/// snapshot times.
pub fn solve_kinetic(config: &KineticConfig) -> Result<Vec<PhaseField>> {
    config.validate()?;
    let phi0 = config.initial_field()?;
    let field = PhaseField::from_macro(&phi0, config.velocity.clone(), config.epsilon)?;
    let dt_max = config.cfl * field.dx / config.velocity.v_max();
    let times = hj::output_times(config.t_final, config.snapshots);
    evolve(field, dt_max, &times)
}

pub fn evolve(field: PhaseField, dt_max: f64, times: &[f64]) -> Result<Vec<PhaseField>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = field;
    for &target in times {
        while current.time < target {
            let remaining = target - current.time;
            let dt = if remaining <= dt_max * (1.0 + 1e-9) { remaining } else { dt_max };
            let mut next = strang_step(&current, dt)?;
            if dt == remaining {
                next.time = target;
            }
            current = next;
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Names of the monitored estimates, in report order.
pub const BOUND_NAMES: [&str; 5] = ["nonnegativity", "sup_bound", "lipschitz_x", "lipschitz_v", "time_rate"];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub t: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    pub lip_x: f64,
    /// Difference quotient against the previous snapshot; zero for the first.
    pub rate_t: f64,
    /// `None` for atomic velocity models, where `phi` has no v-derivative.
    pub lip_v: Option<f64>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub bound: &'static str,
    pub measured: f64,
    pub allowed: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
}

/// Evaluates the discrete uniform estimates on every snapshot:
///
/// * `0 <= phi <= |phi0|_inf`
/// * `|d_x phi| <= |d_x phi0|_inf`
/// * `|d_v phi| <= t |d_x phi0|_inf`
/// * `|d_t phi| <= V_max |d_x phi0|_inf`
///
/// each with the scheme allowance `10 dx Lip(phi0) + 1e-10`.
pub fn check_bounds(series: &[PhaseField], phi0: &MacroField) -> BoundsReport {
    let lip0 = phi0.lipschitz();
    let sup0 = phi0.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = 10.0 * phi0.dx * lip0 + 1e-10;
    let mut rows = Vec::with_capacity(series.len());
    let mut violations = Vec::new();

    for (k, field) in series.iter().enumerate() {
        let n_v = field.n_v();
        let n_x = field.n_x;
        let min_phi = field.values.iter().copied().fold(f64::INFINITY, f64::min);
        let max_phi = field.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut lip_x = 0.0f64;
        for j in 0..n_x {
            let next = (j + 1) % n_x;
            for i in 0..n_v {
                lip_x = lip_x.max((field.at(next, i) - field.at(j, i)).abs());
            }
        }
        lip_x /= field.dx;

        let lip_v = match field.velocity.kind() {
            VelocityKind::DiscreteAtoms => None,
            VelocityKind::ContinuousQuadrature => {
                let nodes = field.velocity.nodes();
                let mut worst = 0.0f64;
                for j in 0..n_x {
                    let row = field.row(j);
                    for i in 0..n_v.saturating_sub(1) {
                        worst = worst.max((row[i + 1] - row[i]).abs() / (nodes[i + 1] - nodes[i]));
                    }
                }
                Some(worst)
            }
        };

        let rate_t = if k == 0 {
            0.0
        } else {
            let prev = &series[k - 1];
            let dt = field.time - prev.time;
            if dt > 0.0 {
                field
                    .values
                    .iter()
                    .zip(&prev.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
                    / dt
            } else {
                0.0
            }
        };

        let v_max = field.velocity.v_max();
        let checks = [
            (BOUND_NAMES[0], -min_phi, 0.0),
            (BOUND_NAMES[1], max_phi, sup0),
            (BOUND_NAMES[2], lip_x, lip0),
            (BOUND_NAMES[3], lip_v.unwrap_or(0.0), field.time * lip0),
            (BOUND_NAMES[4], rate_t, v_max * lip0),
        ];
        let mut count = 0;
        for (name, measured, allowed) in checks {
            if name == BOUND_NAMES[3] && lip_v.is_none() {
                continue;
            }
            if measured > allowed + tolerance || measured.is_nan() {
                count += 1;
                violations.push(Violation {
                    t: field.time,
                    bound: name,
                    measured: if name == BOUND_NAMES[0] { min_phi } else { measured },
                    allowed,
                    tolerance,
                });
            }
        }
        rows.push(BoundsRow {
            t: field.time,
            min_phi,
            max_phi,
            lip_x,
            rate_t,
            lip_v,
            violations: count,
        });
    }
    BoundsReport {
        rows,
        violations,
        tolerance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Whether the error column strictly decreases.
    pub strictly_decreasing: bool,
    pub bounds: Vec<BoundsReport>,
    /// Limit solution at `t_final` on the kinetic grid.
    pub reference: MacroField,
}

/// Grid refinement factor of the Hamilton-Jacobi reference run.
pub const REFERENCE_REFINEMENT: usize = 4;

/// Limit phase `phi^0(t_final)` on the kinetic grid, computed by the
/// Lax-Friedrichs solver on a grid `REFERENCE_REFINEMENT` times finer.
pub fn reference_solution(config: &KineticConfig, hamiltonian: &HamiltonianModel) -> Result<MacroField> {
    let mut hj_config = HJRunConfig::new(hamiltonian.clone(), config.initial);
    hj_config.x_min = config.x_min;
    hj_config.x_max = config.x_max;
    hj_config.n_x = config.n_x * REFERENCE_REFINEMENT;
    hj_config.t_final = config.t_final;
    hj_config.cfl = 0.5;
    hj_config.snapshots = 2;
    let fine = hj::solve_hj(&hj_config)?.pop().expect("two snapshots");
    let values = (0..config.n_x)
        .map(|j| fine.values[j * REFERENCE_REFINEMENT])
        .collect();
    let mut coarse = config.initial_field()?;
    coarse.values = values;
    coarse.time = fine.time;
    Ok(coarse)
}

/// `sup_(x,v) |phi^eps(x, v) - phi^0(x)|`.
pub fn sup_error(field: &PhaseField, reference: &MacroField) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..field.n_x {
        let r = reference.values[j];
        for &v in field.row(j) {
            worst = worst.max((v - r).abs());
        }
    }
    worst
}

/// Runs the kinetic solver for each `eps` and measures the distance to the
/// Hamilton-Jacobi limit at `t_final`. `reference` defaults to the exact
/// discrete-measure Hamiltonian of the velocity model.
pub fn converge_study(
    eps_list: &[f64],
    config: &KineticConfig,
    reference: Option<&HamiltonianModel>,
) -> Result<ConvergenceTable> {
    if eps_list.len() < 3 {
        return Err(Error::Invalid(format!(
            "convergence study needs at least 3 values of eps, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Invalid("eps list must be strictly decreasing".into()));
    }
    for &e in eps_list {
        check_epsilon(e)?;
    }
    config.validate()?;
    let default_h;
    let h = match reference {
        Some(h) => h,
        None => {
            default_h = HamiltonianModel::implicit(config.velocity.clone()).with_auto_refine(false);
            &default_h
        }
    };
    let reference = reference_solution(config, h)?;
    let phi0 = config.initial_field()?;

    let mut rows = Vec::with_capacity(eps_list.len());
    let mut bounds = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut c = config.clone();
        c.epsilon = eps;
        let series = solve_kinetic(&c)?;
        let last = series.last().expect("at least two snapshots");
        rows.push(ConvergenceRow {
            epsilon: eps,
            sup_error: sup_error(last, &reference),
        });
        bounds.push(check_bounds(&series, &phi0));
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    Ok(ConvergenceTable {
        rows,
        strictly_decreasing,
        bounds,
        reference,
    })
}

/// Dissipation used by the reference runs; re-exported for callers that
/// drive [`hj::evolve`] themselves.
pub fn reference_dissipation(h: &HamiltonianModel, phi0: &MacroField) -> Result<Dissipation> {
    Ok(Dissipation::Local {
        bound: hj::default_alpha(h, phi0.lipschitz())?,
    })
}
