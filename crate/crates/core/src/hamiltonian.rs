//! Effective Hamiltonian of the BGK relaxation model.
//!
//! `H(p)` is the unique root `h > sup_V(v.p) - 1` of the dispersion relation
//!
//! ```text
//!     sum_i w_i / (1 + h - v_i.p) = 1
//! ```
//!
//! where `(v_i, w_i)` is the weighted node set of a [`VelocityModel`]. Closed
//! forms are available for the constant Maxwellian (`p coth p - 1`) and the
//! symmetric two-velocity model (`(sqrt(1 + 4p^2) - 1) / 2`); the classical
//! eikonal Hamiltonian `theta^2 |p|^2` is exposed alongside for comparison.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::root::decreasing_root;
use crate::velocity::{dot, VelocityKind, VelocityModel};

pub const DEFAULT_ROOT_TOLERANCE: f64 = 1e-12;

/// Deepest dyadic grading used by automatic refinement.
const MAX_REFINE_LEVELS: usize = 56;

/// Gap-to-panel ratio below which the composite rule is graded further.
const REFINE_TRIGGER: f64 = 0.25;

#[derive(Debug, Clone)]
pub enum HamiltonianSource {
    /// Root of the dispersion relation for the given velocity model.
    Implicit(VelocityModel),
    /// `a p coth(a p) - 1`: constant Maxwellian on `(-a, a)`.
    ClosedCoth { v_max: f64 },
    /// `(sqrt(1 + 4 p^2) - 1) / 2`: atoms at `+-1` with mass one half each.
    ClosedRelativistic,
    /// `theta^2 |p|^2`.
    ClassicalEikonal { theta2: f64 },
}

/// Value, gradient and Hessian (row-major, `dim x dim`) of `H` at one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    source: HamiltonianSource,
    root_tolerance: f64,
    auto_refine: bool,
    refined: Arc<Mutex<BTreeMap<usize, Arc<VelocityModel>>>>,
}

impl HamiltonianModel {
    /// Implicit Hamiltonian of `model`. One-dimensional continuous models get
    /// automatic boundary refinement; see [`HamiltonianModel::with_auto_refine`].
    pub fn implicit(model: VelocityModel) -> Self {
        let auto = model.kind() == VelocityKind::ContinuousQuadrature && model.dim() == 1;
        Self::new(HamiltonianSource::Implicit(model)).with_auto_refine(auto)
    }

    pub fn coth(v_max: f64) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::Invalid(format!("v_max must be positive, got {v_max}")));
        }
        Ok(Self::new(HamiltonianSource::ClosedCoth { v_max }))
    }

    pub fn relativistic() -> Self {
        Self::new(HamiltonianSource::ClosedRelativistic)
    }

    pub fn classical(theta2: f64) -> Result<Self> {
        if !(theta2.is_finite() && theta2 > 0.0) {
            return Err(Error::Invalid(format!("theta2 must be positive, got {theta2}")));
        }
        Ok(Self::new(HamiltonianSource::ClassicalEikonal { theta2 }))
    }

    fn new(source: HamiltonianSource) -> Self {
        HamiltonianModel {
            source,
            root_tolerance: DEFAULT_ROOT_TOLERANCE,
            auto_refine: false,
            refined: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    /// Toggle quadrature grading toward `+-v_max` when the denominator
    /// `1 + H - v_max|p|` becomes small. Only meaningful for one-dimensional
    /// continuous models; with it off, `H` is the exact root for the given
    /// discrete measure.
    pub fn with_auto_refine(mut self, on: bool) -> Self {
        self.auto_refine = on;
        self
    }

    pub fn with_root_tolerance(mut self, tol: f64) -> Self {
        self.root_tolerance = tol;
        self
    }

    pub fn source(&self) -> &HamiltonianSource {
        &self.source
    }

    pub fn root_tolerance(&self) -> f64 {
        self.root_tolerance
    }

    /// Lipschitz constant of `H`, when finite.
    pub fn speed_bound(&self) -> Option<f64> {
        match &self.source {
            HamiltonianSource::Implicit(m) => Some(m.v_max()),
            HamiltonianSource::ClosedCoth { v_max } => Some(*v_max),
            HamiltonianSource::ClosedRelativistic => Some(1.0),
            HamiltonianSource::ClassicalEikonal { .. } => None,
        }
    }

    /// Second moment `theta^2` of the underlying Maxwellian; equals `H''(0) / 2`.
    pub fn theta2(&self) -> f64 {
        match &self.source {
            HamiltonianSource::Implicit(m) => m.theta2(),
            HamiltonianSource::ClosedCoth { v_max } => v_max * v_max / 3.0,
            HamiltonianSource::ClosedRelativistic => 1.0,
            HamiltonianSource::ClassicalEikonal { theta2 } => *theta2,
        }
    }

    /// Dimension of `p` this model accepts; `None` for any dimension.
    pub fn dim(&self) -> Option<usize> {
        match &self.source {
            HamiltonianSource::Implicit(m) => Some(m.dim()),
            HamiltonianSource::ClosedCoth { .. } | HamiltonianSource::ClosedRelativistic => Some(1),
            HamiltonianSource::ClassicalEikonal { .. } => None,
        }
    }

    fn check_p(&self, p: &[f64]) -> Result<()> {
        if p.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("p must be finite, got {p:?}")));
        }
        match self.dim() {
            Some(d) if d != p.len() => Err(Error::Invalid(format!(
                "p has dimension {}, model expects {d}",
                p.len()
            ))),
            _ if p.is_empty() => Err(Error::Invalid("p is empty".into())),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_p(p)?;
        match &self.source {
            HamiltonianSource::Implicit(m) => self.solve_implicit(m, p).map(|(_, h)| h),
            HamiltonianSource::ClosedCoth { v_max } => Ok(coth_h(v_max * p[0])),
            HamiltonianSource::ClosedRelativistic => Ok(relativistic_h(p[0])),
            HamiltonianSource::ClassicalEikonal { theta2 } => Ok(theta2 * dot(p, p)),
        }
    }

    pub fn eval1(&self, p: f64) -> Result<f64> {
        self.eval(&[p])
    }

    pub fn derivatives(&self, p: &[f64]) -> Result<Derivatives> {
        self.check_p(p)?;
        match &self.source {
            HamiltonianSource::Implicit(m) => {
                let (model, _) = self.solve_implicit(m, p)?;
                implicit_derivatives(&model, p, self.root_tolerance)
            }
            HamiltonianSource::ClosedCoth { v_max } => {
                let a = *v_max;
                let x = a * p[0];
                Ok(Derivatives {
                    value: coth_h(x),
                    grad: vec![a * coth_dh(x)],
                    hess: vec![a * a * coth_d2h(x)],
                })
            }
            HamiltonianSource::ClosedRelativistic => {
                let q = p[0];
                let s = (1.0 + 4.0 * q * q).sqrt();
                Ok(Derivatives {
                    value: relativistic_h(q),
                    grad: vec![2.0 * q / s],
                    hess: vec![2.0 / (s * s * s)],
                })
            }
            HamiltonianSource::ClassicalEikonal { theta2 } => {
                let n = p.len();
                let mut hess = vec![0.0; n * n];
                for k in 0..n {
                    hess[k * n + k] = 2.0 * theta2;
                }
                Ok(Derivatives {
                    value: theta2 * dot(p, p),
                    grad: p.iter().map(|c| 2.0 * theta2 * c).collect(),
                    hess,
                })
            }
        }
    }

    /// Solves the dispersion relation, grading the quadrature toward
    /// `+-v_max` when automatic refinement is on. Returns the node set the
    /// root was computed on together with the root.
    fn solve_implicit(&self, base: &VelocityModel, p: &[f64]) -> Result<(Arc<VelocityModel>, f64)> {
        if !self.auto_refine || base.dim() != 1 || base.kind() != VelocityKind::ContinuousQuadrature {
            let h = solve_dispersion(base, p, self.root_tolerance)?;
            return Ok((Arc::new(base.clone()), h));
        }

        let v_max = base.v_max();
        let p_abs = p[0].abs();
        let mut levels = 0usize;
        loop {
            let model = self.refined_model(base, levels)?;
            match solve_dispersion(&model, p, self.root_tolerance) {
                Ok(h) => {
                    let needed = required_levels(v_max, p_abs, h);
                    if needed <= levels {
                        return Ok((model, h));
                    }
                    levels = needed;
                }
                Err(Error::Underresolved { .. }) if levels < MAX_REFINE_LEVELS => levels += 4,
                Err(e) => return Err(e),
            }
            if levels > MAX_REFINE_LEVELS {
                return Err(Error::Underresolved {
                    p: p.to_vec(),
                    residual: f64::NAN,
                    tolerance: self.root_tolerance,
                    suggest: vec![v_max * p[0].signum()],
                });
            }
        }
    }

    fn refined_model(&self, base: &VelocityModel, levels: usize) -> Result<Arc<VelocityModel>> {
        let mut cache = self.refined.lock().expect("refinement cache poisoned");
        if let Some(m) = cache.get(&levels) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(base.refine_near(base.v_max(), levels)?);
        cache.insert(levels, Arc::clone(&m));
        Ok(m)
    }
}

/// Dyadic levels needed so the panel next to `v_max` is no wider than the
/// distance from `v_max` to the pole of `1 / (1 + h - v p)`.
fn required_levels(v_max: f64, p_abs: f64, h: f64) -> usize {
    if p_abs == 0.0 {
        return 0;
    }
    let gap = 1.0 + h - v_max * p_abs;
    let pole_distance = gap / p_abs;
    if pole_distance >= REFINE_TRIGGER * v_max {
        return 0;
    }
    if pole_distance <= 0.0 {
        return MAX_REFINE_LEVELS + 1;
    }
    1 + (v_max / pole_distance).log2().ceil() as usize
}

/// `F(h) = sum_i w_i / (1 + h - v_i.p) - 1` and `F'(h)`, summed in node order.
pub fn dispersion_residual(model: &VelocityModel, p: &[f64], h: f64) -> (f64, f64) {
    let den = Denominators::new(model, p);
    den.residual(model, h - den.sup + 1.0)
}

/// Denominators `1 + h - v_i.p` written as `g + c_i`, with
/// `g = 1 + h - sup_V(v.p)` and `c_i = sup_V(v.p) - v_i.p >= 0`.
///
/// Near the singular edge `g` is tiny while `h` is O(|p|); carrying `g` as the
/// unknown keeps every denominator at full relative precision.
struct Denominators {
    sup: f64,
    offsets: Vec<f64>,
}

impl Denominators {
    fn new(model: &VelocityModel, p: &[f64]) -> Self {
        let sup = model.support_sup(p);
        let offsets = if model.dim() == 1 {
            let a = p[0].abs();
            let s = p[0].signum();
            let edge = model.v_max();
            model
                .nodes()
                .iter()
                .map(|&v| if a == 0.0 { 0.0 } else { a * (edge - s * v) })
                .collect()
        } else {
            model.nodes().chunks(model.dim()).map(|v| sup - dot(v, p)).collect()
        };
        Denominators { sup, offsets }
    }

    fn residual(&self, model: &VelocityModel, g: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for (c, w) in self.offsets.iter().zip(model.weights()) {
            let inv = 1.0 / (g + c);
            f += w * inv;
            df -= w * inv * inv;
        }
        (f - 1.0, df)
    }

    fn h_of(&self, g: f64) -> f64 {
        g + self.sup - 1.0
    }

    /// Bracket in `g`. `h >= 0` means `g >= 1 - sup`; positivity of every
    /// denominator on the true velocity set means `g > 0`.
    fn bracket(&self, model: &VelocityModel, p: &[f64]) -> Result<(f64, f64)> {
        let lo = if self.sup < 1.0 { 1.0 - self.sup } else { f64::EPSILON * self.sup.max(1.0) };
        let (flo, _) = self.residual(model, lo);
        if flo < 0.0 || flo.is_nan() {
            return Err(Error::Underresolved {
                p: p.to_vec(),
                residual: flo,
                tolerance: 0.0,
                suggest: refinement_targets(model, p),
            });
        }
        let mut step = 1.0f64;
        loop {
            let hi = lo + step;
            let (fhi, _) = self.residual(model, hi);
            if fhi < 0.0 || (flo == 0.0 && fhi <= 0.0) {
                return Ok((lo, hi));
            }
            step *= 2.0;
            if step > 2f64.powi(60) {
                return Err(Error::BracketOverflow { p: p.to_vec() });
            }
        }
    }

    fn solve(&self, model: &VelocityModel, p: &[f64], tolerance: f64) -> Result<f64> {
        let (lo, hi) = self.bracket(model, p)?;
        let root = decreasing_root(|g| self.residual(model, g), lo, hi)?;
        if !(root.residual.abs() <= tolerance) {
            return Err(Error::Underresolved {
                p: p.to_vec(),
                residual: root.residual,
                tolerance,
                suggest: refinement_targets(model, p),
            });
        }
        Ok(root.x)
    }
}

/// Bracket `[h_lo, h_hi]` for the dispersion root with `F(h_lo) >= 0 > F(h_hi)`.
///
/// The lower end is `max(0, sup_V(v.p) - 1)`, nudged up by one ulp-scale
/// step when `sup_V(v.p) > 1` so every denominator stays positive. If the
/// discrete residual is already negative there, the quadrature cannot
/// represent the root above the continuum bound and the bracket is reported
/// as under-resolved.
pub fn bracket(model: &VelocityModel, p: &[f64]) -> Result<(f64, f64)> {
    check_model_p(model, p)?;
    let den = Denominators::new(model, p);
    let (lo, hi) = den.bracket(model, p)?;
    Ok((den.h_of(lo).max(0.0), den.h_of(hi)))
}

fn check_model_p(model: &VelocityModel, p: &[f64]) -> Result<()> {
    if p.len() != model.dim() || p.iter().any(|c| !c.is_finite()) {
        return Err(Error::Invalid(format!("p = {p:?} does not match the velocity model")));
    }
    Ok(())
}

fn refinement_targets(model: &VelocityModel, p: &[f64]) -> Vec<f64> {
    let sign = p.first().copied().unwrap_or(0.0).signum();
    vec![model.v_max() * sign, -model.v_max() * sign]
}

/// Root of the dispersion relation on the given node set, without refinement.
pub fn solve_dispersion(model: &VelocityModel, p: &[f64], tolerance: f64) -> Result<f64> {
    solve_gap(model, p, tolerance).map(|(den, g)| den.h_of(g))
}

fn solve_gap(model: &VelocityModel, p: &[f64], tolerance: f64) -> Result<(Denominators, f64)> {
    check_model_p(model, p)?;
    let den = Denominators::new(model, p);
    if p.iter().all(|&c| c == 0.0) {
        return Ok((den, 1.0));
    }
    let g = den.solve(model, p, tolerance)?;
    Ok((den, g))
}

fn implicit_derivatives(model: &VelocityModel, p: &[f64], tolerance: f64) -> Result<Derivatives> {
    let (den, g) = solve_gap(model, p, tolerance)?;
    let dim = model.dim();
    let mut s2 = 0.0;
    let mut first = vec![0.0; dim];
    for ((v, w), c) in model.nodes().chunks(dim).zip(model.weights()).zip(&den.offsets) {
        let inv = 1.0 / (g + c);
        let a = w * inv * inv;
        s2 += a;
        for k in 0..dim {
            first[k] += a * v[k];
        }
    }
    let grad: Vec<f64> = first.iter().map(|f| f / s2).collect();

    let mut hess = vec![0.0; dim * dim];
    for ((v, w), c) in model.nodes().chunks(dim).zip(model.weights()).zip(&den.offsets) {
        let inv = 1.0 / (g + c);
        let a = 2.0 * w * inv * inv * inv;
        for r in 0..dim {
            for col in 0..dim {
                hess[r * dim + col] += a * (grad[r] - v[r]) * (grad[col] - v[col]);
            }
        }
    }
    for x in &mut hess {
        *x /= s2;
    }
    Ok(Derivatives { value: den.h_of(g), grad, hess })
}

// Taylor branches below |x| = 0.2 avoid the cancellation in x coth x - 1;
// the first omitted terms are below 1e-18 there.
const SERIES_CUTOFF: f64 = 0.2;

fn coth_h(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_CUTOFF {
        let y = x * x;
        y * (1.0 / 3.0
            + y * (-1.0 / 45.0
                + y * (2.0 / 945.0
                    + y * (-1.0 / 4725.0
                        + y * (2.0 / 93555.0 + y * (-1382.0 / 638512875.0 + y * 4.0 / 18243225.0))))))
    } else {
        ax / ax.tanh() - 1.0
    }
}

fn coth_dh(x: f64) -> f64 {
    let ax = x.abs();
    let g = if ax < SERIES_CUTOFF {
        let y = x * x;
        ax * (2.0 / 3.0
            + y * (-4.0 / 45.0
                + y * (4.0 / 315.0
                    + y * (-8.0 / 4725.0
                        + y * (4.0 / 18711.0 + y * (-5528.0 / 212837625.0 + y * 8.0 / 2606175.0))))))
    } else {
        let s = ax.sinh();
        1.0 / ax.tanh() - ax / (s * s)
    };
    g.copysign(x)
}

fn coth_d2h(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_CUTOFF {
        let y = x * x;
        2.0 / 3.0
            + y * (-4.0 / 15.0
                + y * (4.0 / 63.0
                    + y * (-8.0 / 675.0 + y * (4.0 / 2079.0 + y * (-5528.0 / 19348875.0 + y * 8.0 / 200475.0)))))
    } else {
        let s = ax.sinh();
        2.0 * coth_h(ax) / (s * s)
    }
}

fn relativistic_h(p: f64) -> f64 {
    let s = (1.0 + 4.0 * p * p).sqrt();
    2.0 * p * p / (s + 1.0)
}

/// Cell eigenfunction `Q(v_i) = 1 / (1 + H(p) - v_i.p)` on the model's nodes.
///
/// `H` is the dispersion root on exactly these nodes, so `sum_i w_i Q_i = 1`
/// up to the root tolerance.
pub fn eigenfunction_q(model: &VelocityModel, p: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    let (den, g) = solve_gap(model, p, tolerance)?;
    Ok(den.offsets.iter().map(|c| 1.0 / (g + c)).collect())
}

/// Largest eigenrelation residual `|(1 + H - v_i.p) Q_i - sum_j w_j Q_j|`.
pub fn eigen_residual(model: &VelocityModel, p: &[f64], h: f64, q: &[f64]) -> f64 {
    let mean: f64 = q.iter().zip(model.weights()).map(|(qi, w)| w * qi).sum();
    model
        .nodes()
        .chunks(model.dim())
        .zip(q)
        .map(|(v, qi)| ((1.0 + h - dot(v, p)) * qi - mean).abs())
        .fold(0.0, f64::max)
}

/// Velocity corrector `eta` with `e^eta(v) - e^eta(v') = (v' - v).p` and
/// `sum_i w_i e^-eta(v_i) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorResult {
    /// `e^eta` at the anchor node.
    pub mu0: f64,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub anchor: usize,
}

impl CorrectorResult {
    pub fn exp_eta(&self) -> impl Iterator<Item = f64> + '_ {
        self.eta.iter().map(|e| e.exp())
    }

    /// Largest violation of the pairwise relation over all node pairs.
    pub fn pairwise_defect(&self, model: &VelocityModel) -> f64 {
        let dim = model.dim();
        let e: Vec<f64> = self.exp_eta().collect();
        let mut worst = 0.0f64;
        for i in 0..e.len() {
            for j in 0..e.len() {
                let vi = model.node(i);
                let vj = model.node(j);
                let rhs: f64 = (0..dim).map(|k| (vj[k] - vi[k]) * self.p[k]).sum();
                worst = worst.max((e[i] - e[j] - rhs).abs());
            }
        }
        worst
    }

    /// `|sum_i w_i e^-eta_i - 1|`.
    pub fn normalization_defect(&self, model: &VelocityModel) -> f64 {
        let s: f64 = self.eta.iter().zip(model.weights()).map(|(e, w)| w * (-e).exp()).sum();
        (s - 1.0).abs()
    }
}

/// Corrector anchored at node `anchor`: `e^eta(v) = mu0 + (v0 - v).p` with the
/// unique `mu0 > max_i (v_i - v0).p` that renormalizes `e^-eta`.
pub fn solve_corrector(model: &VelocityModel, p: &[f64], anchor: usize) -> Result<CorrectorResult> {
    if anchor >= model.len() {
        return Err(Error::Invalid(format!(
            "anchor index {anchor} out of range for {} nodes",
            model.len()
        )));
    }
    if p.len() != model.dim() || p.iter().any(|c| !c.is_finite()) {
        return Err(Error::Invalid(format!("p = {p:?} does not match the velocity model")));
    }
    let dim = model.dim();
    let v0 = model.node(anchor).to_vec();
    let shifts: Vec<f64> = model
        .nodes()
        .chunks(dim)
        .map(|v| (0..dim).map(|k| (v0[k] - v[k]) * p[k]).sum())
        .collect();
    let residual = |mu: f64| {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (s, w) in shifts.iter().zip(model.weights()) {
            let inv = 1.0 / (mu + s);
            g += w * inv;
            dg -= w * inv * inv;
        }
        (g - 1.0, dg)
    };

    let floor = shifts.iter().map(|s| -s).fold(f64::NEG_INFINITY, f64::max);
    let lo = floor + f64::EPSILON * floor.abs().max(1.0);
    let mut hi = lo + 1.0;
    while residual(hi).0 >= 0.0 {
        hi = lo + 2.0 * (hi - lo);
        if hi - lo > 2f64.powi(60) {
            return Err(Error::BracketOverflow { p: p.to_vec() });
        }
    }
    let root = decreasing_root(residual, lo, hi)?;
    let mu0 = root.x;
    let eta = shifts.iter().map(|s| (mu0 + s).ln()).collect();
    Ok(CorrectorResult {
        mu0,
        eta,
        p: p.to_vec(),
        anchor,
    })
}

/// Sampled Legendre transform `L(q) = sup_p (p q - H(p))` of a 1-D Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreTable {
    pub q_grid: Vec<f64>,
    pub l_values: Vec<f64>,
    pub p_grid: Vec<f64>,
}

impl LegendreTable {
    pub fn q_max(&self) -> f64 {
        *self.q_grid.last().expect("non-empty table")
    }

    /// Linear interpolation of `L`; `+inf` outside the tabulated range.
    pub fn eval(&self, q: f64) -> f64 {
        let n = self.q_grid.len();
        let q0 = self.q_grid[0];
        let q1 = self.q_grid[n - 1];
        if !(q >= q0 && q <= q1) {
            return f64::INFINITY;
        }
        let dq = (q1 - q0) / (n - 1) as f64;
        let s = (q - q0) / dq;
        let j = (s.floor() as usize).min(n - 2);
        let frac = s - j as f64;
        self.l_values[j] + frac * (self.l_values[j + 1] - self.l_values[j])
    }
}

/// Symmetric uniform grid of `count` points on `[-span, span]`; entries
/// `k` and `count - 1 - k` are exact negatives.
pub(crate) fn symmetric_grid(span: f64, count: usize) -> Vec<f64> {
    let m = (count - 1) as f64;
    (0..count)
        .map(|k| {
            let num = 2.0 * k as f64 - m;
            if num < 0.0 {
                -(span * (-num) / m)
            } else {
                span * num / m
            }
        })
        .collect()
}

/// Legendre transform by dense maximization over a uniform p-grid.
///
/// The q-grid covers `|q| <= (1 - 1e-3) V_max`; for the classical eikonal
/// Hamiltonian (no speed bound) it covers `|q| <= (1 - 1e-3) theta^2 p_span`,
/// which keeps every maximizer at `|p| <= p_span / 2`.
pub fn legendre(h: &HamiltonianModel, q_count: usize, p_span: f64, p_count: usize) -> Result<LegendreTable> {
    if !(p_span.is_finite() && p_span > 0.0) {
        return Err(Error::Invalid(format!("p_span must be positive, got {p_span}")));
    }
    if q_count < 3 || p_count < 3 {
        return Err(Error::Invalid("q_count and p_count must be at least 3".into()));
    }
    if h.dim().is_some_and(|d| d != 1) {
        return Err(Error::Invalid("Legendre tables are one-dimensional".into()));
    }
    let q_max = match h.speed_bound() {
        Some(v) => v * (1.0 - 1e-3),
        None => h.theta2() * p_span * (1.0 - 1e-3),
    };
    let p_grid = symmetric_grid(p_span, p_count);
    let h_values = eval_many(h, &p_grid)?;
    let q_grid = symmetric_grid(q_max, q_count);

    let mut l_values = Vec::with_capacity(q_count);
    for &q in &q_grid {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (j, (&p, &hp)) in p_grid.iter().zip(&h_values).enumerate() {
            let v = p * q - hp;
            if v > best {
                best = v;
                arg = j;
            }
        }
        if arg == 0 || arg == p_count - 1 {
            return Err(Error::LegendreBoundary { q });
        }
        l_values.push(best);
    }
    Ok(LegendreTable { q_grid, l_values, p_grid })
}

/// `H` at many 1-D points, in parallel, order preserved.
pub(crate) fn eval_many(h: &HamiltonianModel, ps: &[f64]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    ps.par_iter().map(|&p| h.eval1(p)).collect()
}
