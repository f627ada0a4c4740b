//! Hamilton-Jacobi solver `phi_t + H(phi_x) = 0` on a uniform 1-D grid.
//!
//! The time stepper is the local Lax-Friedrichs scheme
//!
//! ```text
//!     phi_j <- phi_j - dt * [ H((D+ + D-)/2) - alpha (D+ - D-)/2 ]
//! ```
//!
//! which is monotone for `alpha >= sup|H'|` and `dt <= dx / alpha`. The
//! Hopf-Lax formula gives an independent oracle for convex `H`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, LegendreTable};

pub const MIN_GRID_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Non-periodic grid whose two end points follow the exact solution
    /// `slope * x - t H(slope)` of linear data.
    Linear { slope: f64 },
}

/// The v-independent phase on a uniform grid `x_j = x_min + j dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    pub x_min: f64,
    pub dx: f64,
    pub values: Vec<f64>,
    pub time: f64,
    pub boundary: Boundary,
}

impl MacroField {
    /// Samples `f` on the periodic grid of `n` points covering `[x_min, x_max)`.
    pub fn periodic<F: Fn(f64) -> f64>(x_min: f64, x_max: f64, n: usize, f: F) -> Result<Self> {
        check_grid(x_min, x_max, n)?;
        let dx = (x_max - x_min) / n as f64;
        let values = (0..n).map(|j| f(x_min + j as f64 * dx)).collect();
        Self::from_values(x_min, dx, values, Boundary::Periodic)
    }

    pub fn from_values(x_min: f64, dx: f64, values: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if values.len() < MIN_GRID_POINTS {
            return Err(Error::Invalid(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                values.len()
            )));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Invalid(format!("grid spacing must be positive, got {dx}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("field values must be finite".into()));
        }
        Ok(MacroField {
            x_min,
            dx,
            values,
            time: 0.0,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.x(j))
    }

    /// Period of the grid (`n dx`).
    pub fn period(&self) -> f64 {
        self.len() as f64 * self.dx
    }

    /// Largest one-sided difference quotient.
    pub fn lipschitz(&self) -> f64 {
        let n = self.len();
        let mut lip = 0.0f64;
        for j in 0..n - 1 {
            lip = lip.max((self.values[j + 1] - self.values[j]).abs());
        }
        if self.boundary == Boundary::Periodic {
            lip = lip.max((self.values[0] - self.values[n - 1]).abs());
        }
        lip / self.dx
    }

    pub fn max_abs_diff(&self, other: &MacroField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Left-most and right-most grid points where `phi < level`.
    pub fn sublevel_extent(&self, level: f64) -> Option<(f64, f64)> {
        let first = self.values.iter().position(|&v| v < level)?;
        let last = self.values.iter().rposition(|&v| v < level)?;
        Some((self.x(first), self.x(last)))
    }
}

fn check_grid(x_min: f64, x_max: f64, n: usize) -> Result<()> {
    if n < MIN_GRID_POINTS {
        return Err(Error::Invalid(format!(
            "grid needs at least {MIN_GRID_POINTS} points, got {n}"
        )));
    }
    if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
        return Err(Error::Invalid(format!("invalid domain [{x_min}, {x_max})")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `a (x - center)^2`, periodically rendered.
    Parabola { a: f64, center: f64 },
    /// `amplitude (1 - cos(2 pi (x - x_min) / L)) / 2`: zero at the domain ends,
    /// `amplitude` at the center.
    CosineBump { amplitude: f64 },
    /// `p x` on a non-periodic grid.
    Linear { p: f64 },
    /// `min(slope * max(|x| - half_width, 0), height)`: zero on a plateau,
    /// so `exp(-phi / eps)` is a compactly supported bump in the limit.
    Ramp { half_width: f64, slope: f64, height: f64 },
}

impl InitialCondition {
    pub fn value(&self, x: f64, x_min: f64, x_max: f64) -> f64 {
        match *self {
            InitialCondition::Parabola { a, center } => a * (x - center) * (x - center),
            InitialCondition::CosineBump { amplitude } => {
                let theta = 2.0 * std::f64::consts::PI * (x - x_min) / (x_max - x_min);
                0.5 * amplitude * (1.0 - theta.cos())
            }
            InitialCondition::Linear { p } => p * x,
            InitialCondition::Ramp { half_width, slope, height } => {
                (slope * (x.abs() - half_width).max(0.0)).min(height)
            }
        }
    }

    pub fn render(&self, x_min: f64, x_max: f64, n: usize) -> Result<MacroField> {
        let mut field = MacroField::periodic(x_min, x_max, n, |x| self.value(x, x_min, x_max))?;
        if let InitialCondition::Linear { p } = *self {
            field.boundary = Boundary::Linear { slope: p };
        }
        Ok(field)
    }
}

#[derive(Debug, Clone)]
pub struct HJRunConfig {
    pub hamiltonian: HamiltonianModel,
    pub initial: InitialCondition,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub cfl: f64,
    pub t_final: f64,
    /// Global dissipation speed. `None` selects local dissipation capped by
    /// the Lipschitz constant of `H` (or, for unbounded `H'`, by its maximum
    /// over the initial slope range).
    pub alpha: Option<f64>,
    /// Number of equally spaced output times including `0` and `t_final`.
    pub snapshots: usize,
}

impl HJRunConfig {
    pub fn new(hamiltonian: HamiltonianModel, initial: InitialCondition) -> Self {
        HJRunConfig {
            hamiltonian,
            initial,
            x_min: -4.0,
            x_max: 4.0,
            n_x: 400,
            cfl: 0.5,
            t_final: 1.0,
            alpha: None,
            snapshots: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.x_min, self.x_max, self.n_x)?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::Invalid(format!("t_final must be positive, got {}", self.t_final)));
        }
        if self.snapshots < 2 {
            return Err(Error::Invalid("at least two snapshots (t = 0 and t_final) are required".into()));
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Invalid(format!("alpha must be positive, got {a}")));
            }
        }
        if self.hamiltonian.dim().is_some_and(|d| d != 1) {
            return Err(Error::Invalid("the HJ solver is one-dimensional".into()));
        }
        Ok(())
    }
}

/// Dissipation speed that makes the scheme monotone for data with slopes in
/// `[-lip, lip]`.
pub fn default_alpha(h: &HamiltonianModel, lip: f64) -> Result<f64> {
    if let Some(v) = h.speed_bound() {
        return Ok(v);
    }
    let right = h.derivatives(&[lip])?.grad[0].abs();
    let left = h.derivatives(&[-lip])?.grad[0].abs();
    Ok(right.max(left).max(f64::MIN_POSITIVE))
}

/// Dissipation coefficient of the Lax-Friedrichs flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dissipation {
    /// One `alpha` for every grid point.
    Global(f64),
    /// `alpha_j = max(|H'(D-)|, |H'(D+)|)`, the largest characteristic speed
    /// over the local slope range (convex `H`). `bound` caps every local
    /// value and sets the CFL limit.
    Local { bound: f64 },
}

impl Dissipation {
    fn cfl_speed(&self) -> f64 {
        match *self {
            Dissipation::Global(a) => a,
            Dissipation::Local { bound } => bound,
        }
    }
}

/// One Lax-Friedrichs step of size `dt` with a global dissipation speed.
pub fn lf_step(field: &MacroField, h: &HamiltonianModel, alpha: f64, dt: f64) -> Result<MacroField> {
    step(field, h, Dissipation::Global(alpha), dt)
}

/// One Lax-Friedrichs step of size `dt`.
pub fn step(field: &MacroField, h: &HamiltonianModel, dissipation: Dissipation, dt: f64) -> Result<MacroField> {
    let limit = field.dx / dissipation.cfl_speed();
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(Error::Cfl { dt, limit });
    }
    let n = field.len();
    let u = &field.values;
    let inv_dx = 1.0 / field.dx;
    let periodic = field.boundary == Boundary::Periodic;

    // slope across interface j + 1/2
    let interfaces = if periodic { n } else { n - 1 };
    let slope = |k: usize| (u[(k + 1) % n] - u[k]) * inv_dx;
    let speeds: Vec<f64> = match dissipation {
        Dissipation::Global(_) => Vec::new(),
        Dissipation::Local { bound } => (0..interfaces)
            .into_par_iter()
            .map(|k| Ok(h.derivatives(&[slope(k)])?.grad[0].abs().min(bound)))
            .collect::<Result<Vec<f64>>>()?,
    };

    let update = |j: usize| -> Result<f64> {
        let (km, kp) = match field.boundary {
            Boundary::Periodic => ((j + n - 1) % n, j),
            Boundary::Linear { slope } => {
                if j == 0 || j == n - 1 {
                    return Ok(u[j] - dt * h.eval1(slope)?);
                }
                (j - 1, j)
            }
        };
        let dm = slope(km);
        let dp = slope(kp);
        let alpha = match dissipation {
            Dissipation::Global(a) => a,
            Dissipation::Local { .. } => speeds[km].max(speeds[kp]),
        };
        let flux = h.eval1(0.5 * (dp + dm))? - 0.5 * alpha * (dp - dm);
        Ok(u[j] - dt * flux)
    };
    let values = (0..n).into_par_iter().map(update).collect::<Result<Vec<f64>>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value after HJ step at t = {}", field.time)));
    }
    Ok(MacroField {
        values,
        time: field.time + dt,
        ..field.clone()
    })
}

/// Advances `field` to each time in `times` (ascending, `>= field.time`) with
/// steps no longer than `dt_max`; the last step before each output time is
/// shortened to land on it exactly.
pub fn evolve(
    field: MacroField,
    h: &HamiltonianModel,
    dissipation: Dissipation,
    dt_max: f64,
    times: &[f64],
) -> Result<Vec<MacroField>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = field;
    for &target in times {
        while current.time < target {
            let remaining = target - current.time;
            let dt = if remaining <= dt_max * (1.0 + 1e-9) { remaining } else { dt_max };
            let mut next = step(&current, h, dissipation, dt)?;
            if dt == remaining {
                next.time = target;
            }
            current = next;
        }
        out.push(current.clone());
    }
    Ok(out)
}

/// Output times `t_final * k / (count - 1)`, `k = 0..count`.
pub fn output_times(t_final: f64, count: usize) -> Vec<f64> {
    let m = (count - 1) as f64;
    (0..count)
        .map(|k| if k + 1 == count { t_final } else { t_final * k as f64 / m })
        .collect()
}

/// Runs the configured experiment and returns the snapshots.
pub fn solve_hj(config: &HJRunConfig) -> Result<Vec<MacroField>> {
    config.validate()?;
    let field = config.initial.render(config.x_min, config.x_max, config.n_x)?;
    let dissipation = match config.alpha {
        Some(a) => Dissipation::Global(a),
        None => Dissipation::Local {
            bound: default_alpha(&config.hamiltonian, field.lipschitz())?,
        },
    };
    let dt = config.cfl * field.dx / dissipation.cfl_speed();
    let times = output_times(config.t_final, config.snapshots);
    evolve(field, &config.hamiltonian, dissipation, dt, &times)
}

/// Hopf-Lax value `min_y [phi0(y) + t L((x - y)/t)]` at every grid point.
///
/// Minimization is exhaustive over grid points `y` and, on periodic grids,
/// over every periodic image within reach of the table's speed range.
pub fn hopf_lax(initial: &MacroField, table: &LegendreTable, t: f64) -> Result<MacroField> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Invalid(format!("Hopf-Lax time must be positive, got {t}")));
    }
    let n = initial.len();
    let reach = t * table.q_max();
    let period = initial.period();
    let images: i64 = match initial.boundary {
        Boundary::Periodic => (reach / period).ceil() as i64 + 1,
        Boundary::Linear { .. } => 0,
    };
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = initial.x(j);
            let mut best = f64::INFINITY;
            for m in -images..=images {
                let shift = m as f64 * period;
                for (k, &phi0) in initial.values.iter().enumerate() {
                    let d = x - initial.x(k) - shift;
                    if d.abs() > reach {
                        continue;
                    }
                    let cost = phi0 + t * table.eval(d / t);
                    if cost < best {
                        best = cost;
                    }
                }
            }
            best
        })
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "Hopf-Lax minimum is infinite at some grid point (speed range too small)".into(),
        ));
    }
    Ok(MacroField {
        values,
        time: initial.time + t,
        ..initial.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::legendre;

    fn coth() -> HamiltonianModel {
        HamiltonianModel::coth(1.0).unwrap()
    }

    #[test]
    fn constant_field_is_stationary() {
        let f = MacroField::periodic(-1.0, 1.0, 16, |_| 2.5).unwrap();
        let g = lf_step(&f, &coth(), 1.0, 0.05).unwrap();
        assert_eq!(g.values, f.values);
        assert_eq!(g.time, 0.05);
    }

    #[test]
    fn linear_data_drops_by_dt_h() {
        let p = 0.5;
        let h = coth();
        let f = InitialCondition::Linear { p }.render(-2.0, 2.0, 40).unwrap();
        let dt = 0.05;
        let g = lf_step(&f, &h, 1.0, dt).unwrap();
        let hp = h.eval1(p).unwrap();
        for j in 0..f.len() {
            assert!((f.values[j] - g.values[j] - dt * hp).abs() < 1e-14);
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let f = MacroField::periodic(0.0, 1.0, 10, |x| x).unwrap();
        let e = lf_step(&f, &coth(), 1.0, 0.2).unwrap_err();
        assert!(matches!(e, Error::Cfl { .. }));
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(MacroField::periodic(0.0, 1.0, 4, |x| x).unwrap_err().is_validation());
        let mut cfg = HJRunConfig::new(coth(), InitialCondition::Parabola { a: 1.0, center: 0.0 });
        cfg.n_x = 4;
        assert!(solve_hj(&cfg).unwrap_err().is_validation());
    }

    #[test]
    fn discrete_maximum_principle() {
        let h = coth();
        let f = MacroField::periodic(-2.0, 2.0, 64, |x| (3.0 * x).sin() + 0.3 * x.cos()).unwrap();
        let dt = 0.5 * f.dx;
        let g = lf_step(&f, &h, 1.0, dt).unwrap();
        let lip = f.lipschitz();
        let h_range = h.eval1(lip).unwrap();
        let lo = f.values.iter().cloned().fold(f64::INFINITY, f64::min) - dt * h_range;
        let hi = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(g.values.iter().all(|&v| v >= lo - 1e-14 && v <= hi + 1e-14));
    }

    #[test]
    fn linear_run_matches_traveling_solution() {
        let h = coth();
        let mut cfg = HJRunConfig::new(h.clone(), InitialCondition::Linear { p: 0.5 });
        cfg.n_x = 80;
        let out = solve_hj(&cfg).unwrap();
        let last = out.last().unwrap();
        assert_eq!(last.time, 1.0);
        let hp = h.eval1(0.5).unwrap();
        for (j, v) in last.values.iter().enumerate() {
            assert!((v - (0.5 * last.x(j) - hp)).abs() < 1e-10);
        }
    }

    #[test]
    fn output_times_land_exactly() {
        let t = output_times(1.0, 5);
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let mut cfg = HJRunConfig::new(coth(), InitialCondition::CosineBump { amplitude: 1.0 });
        cfg.n_x = 50;
        cfg.t_final = 0.37;
        cfg.snapshots = 3;
        let out = solve_hj(&cfg).unwrap();
        assert_eq!(out.iter().map(|f| f.time).collect::<Vec<_>>(), vec![0.0, 0.185, 0.37]);
    }

    #[test]
    fn hopf_lax_small_time_and_constant() {
        let table = legendre(&coth(), 201, 20.0, 2001).unwrap();
        let f = MacroField::periodic(-4.0, 4.0, 64, |x| 0.5 * x * x).unwrap();
        let g = hopf_lax(&f, &table, 1e-6).unwrap();
        assert!(f.max_abs_diff(&g) < 1e-5);
        let c = MacroField::periodic(-4.0, 4.0, 64, |_| 1.25).unwrap();
        let g = hopf_lax(&c, &table, 0.7).unwrap();
        assert!(g.values.iter().all(|&v| (v - 1.25).abs() < 1e-15));
    }

    #[test]
    fn hopf_lax_classical_parabola() {
        let theta2 = 1.0 / 3.0;
        let h = HamiltonianModel::classical(theta2).unwrap();
        let table = legendre(&h, 4001, 40.0, 8001).unwrap();
        let f = MacroField::periodic(-4.0, 4.0, 400, |x| x * x).unwrap();
        let g = hopf_lax(&f, &table, 1.0).unwrap();
        for (j, v) in g.values.iter().enumerate() {
            let x = g.x(j);
            if x.abs() <= 1.0 {
                assert!((v - 3.0 / 7.0 * x * x).abs() < 1e-3, "x = {x}");
            }
        }
    }
}
