//! Velocity sets and Maxwellians as weighted node sets.
//!
//! A continuous Maxwellian on a bounded symmetric interval is stored as a
//! composite Gauss-Legendre rule whose weights already include the density;
//! an atomic Maxwellian is stored as its atoms. Every integral against
//! `M(v) dv` is then a finite weighted sum in ascending node order.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const MOMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityKind {
    ContinuousQuadrature,
    DiscreteAtoms,
}

/// Weighted node representation of `M(v) dv` on a bounded symmetric set.
///
/// Nodes are stored flat, `dim` coordinates per node, in lexicographically
/// ascending order. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    kind: VelocityKind,
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    v_max: f64,
    theta2: f64,
    /// Per-axis half-widths of the support box (continuous kind only).
    half_widths: Vec<f64>,
    /// Composite-rule panels and their order (1-D continuous kind only).
    panels: Vec<(f64, f64)>,
    panel_order: usize,
}

impl VelocityModel {
    /// Constant Maxwellian `1 / (2 v_max)` on `(-v_max, v_max)` sampled by an
    /// `n_nodes`-point Gauss-Legendre rule.
    pub fn uniform(v_max: f64, n_nodes: usize) -> Result<Self> {
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::Invalid(format!("v_max must be positive and finite, got {v_max}")));
        }
        if n_nodes < 2 || n_nodes % 2 != 0 {
            return Err(Error::Invalid(format!(
                "n_nodes must be even and at least 2, got {n_nodes}"
            )));
        }
        Self::from_panels(v_max, vec![(-v_max, v_max)], n_nodes)
    }

    fn from_panels(v_max: f64, panels: Vec<(f64, f64)>, order: usize) -> Result<Self> {
        let density = 0.5 / v_max;
        let (ref_nodes, ref_weights) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels.len() * order);
        let mut weights = Vec::with_capacity(panels.len() * order);
        for &(lo, hi) in &panels {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            nodes.extend(ref_nodes.iter().map(|t| mid + half * t));
            weights.extend(ref_weights.iter().map(|w| half * w * density));
        }
        let mut model = VelocityModel {
            kind: VelocityKind::ContinuousQuadrature,
            dim: 1,
            nodes,
            weights,
            v_max,
            theta2: 0.0,
            half_widths: vec![v_max],
            panels,
            panel_order: order,
        };
        model.theta2 = model.second_moment();
        model.verify()?;
        Ok(model)
    }

    /// One-dimensional atomic Maxwellian `sum_k m_k delta_{v_k}`.
    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let vectors: Vec<(Vec<f64>, f64)> = atoms.iter().map(|&(v, m)| (vec![v], m)).collect();
        Self::atoms_nd(&vectors)
    }

    /// Atomic Maxwellian with vector-valued atoms.
    pub fn atoms_nd(atoms: &[(Vec<f64>, f64)]) -> Result<Self> {
        let dim = match atoms.first() {
            Some((v, _)) if !v.is_empty() => v.len(),
            _ => return Err(Error::Invalid("atom list is empty".into())),
        };
        for (v, m) in atoms {
            if v.len() != dim {
                return Err(Error::Invalid("atoms have inconsistent dimensions".into()));
            }
            if !(m.is_finite() && *m > 0.0) {
                return Err(Error::Invalid(format!("atom mass must be positive, got {m}")));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid(format!("atom velocity must be finite, got {v:?}")));
            }
        }

        let sum: f64 = atoms.iter().map(|(_, m)| m).sum();
        if (sum - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Normalization { sum });
        }

        // Keep the strictly positive half, check each has a mirror, then
        // rebuild the negative half as an exact reflection.
        let mut positive: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut zero_mass = 0.0;
        for (v, m) in atoms {
            match lex_sign(v) {
                std::cmp::Ordering::Greater => {
                    let mirror = atoms.iter().find(|(w, mw)| {
                        w.iter().zip(v).all(|(a, b)| (a + b).abs() <= MOMENT_TOL * b.abs().max(1.0))
                            && (mw - m).abs() <= MOMENT_TOL
                    });
                    if mirror.is_none() {
                        return Err(Error::Asymmetric { velocity: v[0], mass: *m });
                    }
                    positive.push((v.clone(), *m));
                }
                std::cmp::Ordering::Less => {
                    let mirror = atoms.iter().any(|(w, mw)| {
                        w.iter().zip(v).all(|(a, b)| (a + b).abs() <= MOMENT_TOL * b.abs().max(1.0))
                            && (mw - m).abs() <= MOMENT_TOL
                    });
                    if !mirror {
                        return Err(Error::Asymmetric { velocity: v[0], mass: *m });
                    }
                }
                std::cmp::Ordering::Equal => zero_mass += m,
            }
        }
        positive.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        if positive.windows(2).any(|w| lex_cmp(&w[0].0, &w[1].0).is_eq()) {
            return Err(Error::Invalid("duplicate atom velocities".into()));
        }

        let mut nodes = Vec::with_capacity(atoms.len() * dim);
        let mut weights = Vec::with_capacity(atoms.len());
        for (v, m) in positive.iter().rev() {
            nodes.extend(v.iter().map(|c| -c));
            weights.push(*m);
        }
        if zero_mass > 0.0 {
            nodes.extend(std::iter::repeat_n(0.0, dim));
            weights.push(zero_mass);
        }
        for (v, m) in &positive {
            nodes.extend(v.iter().copied());
            weights.push(*m);
        }

        let v_max = nodes
            .chunks(dim)
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if v_max <= 0.0 {
            return Err(Error::Invalid("velocity set reduces to {0}; v_max must be positive".into()));
        }
        let mut model = VelocityModel {
            kind: VelocityKind::DiscreteAtoms,
            dim,
            nodes,
            weights,
            v_max,
            theta2: 0.0,
            half_widths: Vec::new(),
            panels: Vec::new(),
            panel_order: 0,
        };
        model.theta2 = model.second_moment();
        model.verify()?;
        Ok(model)
    }

    /// Tensor product of one-dimensional continuous models: the product
    /// Maxwellian on the product box.
    pub fn tensor(factors: &[VelocityModel]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Invalid("tensor product of zero factors".into()));
        }
        if factors.iter().any(|f| f.dim != 1 || f.kind != VelocityKind::ContinuousQuadrature) {
            return Err(Error::Invalid(
                "tensor factors must be one-dimensional continuous models".into(),
            ));
        }
        let dim = factors.len();
        let total: usize = factors.iter().map(|f| f.len()).product();
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut index = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (axis, f) in factors.iter().enumerate() {
                nodes.push(f.nodes[index[axis]]);
                w *= f.weights[index[axis]];
            }
            weights.push(w);
            // row-major odometer, last axis fastest
            for axis in (0..dim).rev() {
                index[axis] += 1;
                if index[axis] < factors[axis].len() {
                    break;
                }
                index[axis] = 0;
            }
        }
        let half_widths: Vec<f64> = factors.iter().map(|f| f.v_max).collect();
        let v_max = half_widths.iter().map(|h| h * h).sum::<f64>().sqrt();
        let mut model = VelocityModel {
            kind: VelocityKind::ContinuousQuadrature,
            dim,
            nodes,
            weights,
            v_max,
            theta2: 0.0,
            half_widths,
            panels: Vec::new(),
            panel_order: 0,
        };
        model.theta2 = model.second_moment();
        model.verify()?;
        Ok(model)
    }

    /// Composite rule whose panels are dyadically graded toward `v_star` and
    /// `-v_star`. Each level bisects every panel that ends at one of the two
    /// targets, so after `levels` levels the panel next to a target has width
    /// `2^-levels` times the original.
    pub fn refine_near(&self, v_star: f64, levels: usize) -> Result<Self> {
        if self.kind != VelocityKind::ContinuousQuadrature || self.dim != 1 || self.panels.is_empty() {
            return Err(Error::Invalid(
                "refine_near applies to one-dimensional continuous quadrature models only".into(),
            ));
        }
        if !(v_star.is_finite() && v_star.abs() <= self.v_max) {
            return Err(Error::Invalid(format!(
                "refinement target {v_star} outside [-{0}, {0}]",
                self.v_max
            )));
        }
        if levels == 0 {
            return Ok(self.clone());
        }
        let s = v_star.abs();
        let targets = [-s, s];
        let mut panels = self.panels.clone();

        // make the targets breakpoints
        for &t in &targets {
            if let Some(k) = panels.iter().position(|&(lo, hi)| lo < t && t < hi) {
                let (lo, hi) = panels[k];
                panels.splice(k..=k, [(lo, t), (t, hi)]);
            }
        }
        for _ in 0..levels {
            let mut next = Vec::with_capacity(panels.len() + 4);
            for &(lo, hi) in &panels {
                if targets.contains(&lo) || targets.contains(&hi) {
                    let mid = 0.5 * (lo + hi);
                    next.push((lo, mid));
                    next.push((mid, hi));
                } else {
                    next.push((lo, hi));
                }
            }
            panels = next;
        }
        Self::from_panels(self.v_max, panels, self.panel_order)
    }

    pub fn kind(&self) -> VelocityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Flat node coordinates, `dim` per node.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Speed bound `V_max`: the support radius for continuous models, the
    /// largest atom speed for atomic ones.
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Second moment per axis, `(1/n) * sum_i w_i |v_i|^2`.
    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn panels(&self) -> &[(f64, f64)] {
        &self.panels
    }

    /// `sup_{v in V} v . p` over the true velocity set: the support box for
    /// continuous models, the atoms otherwise.
    pub fn support_sup(&self, p: &[f64]) -> f64 {
        match self.kind {
            VelocityKind::ContinuousQuadrature => {
                self.half_widths.iter().zip(p).map(|(h, pk)| h * pk.abs()).sum()
            }
            VelocityKind::DiscreteAtoms => self.max_node_dot(p),
        }
    }

    /// `max_i v_i . p` over the nodes.
    pub fn max_node_dot(&self, p: &[f64]) -> f64 {
        self.nodes
            .chunks(self.dim)
            .map(|v| dot(v, p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sum_i w_i f(v_i)`, accumulated in ascending node order.
    pub fn integrate<F>(&self, integrand: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut acc = 0.0;
        for (i, (v, w)) in self.nodes.chunks(self.dim).zip(&self.weights).enumerate() {
            let value = integrand(v);
            if !value.is_finite() {
                return Err(Error::NonFiniteIntegrand {
                    index: i,
                    velocity: v.to_vec(),
                    value,
                });
            }
            acc += w * value;
        }
        Ok(acc)
    }

    fn second_moment(&self) -> f64 {
        let mut acc = 0.0;
        for (v, w) in self.nodes.chunks(self.dim).zip(&self.weights) {
            acc += w * v.iter().map(|c| c * c).sum::<f64>();
        }
        acc / self.dim as f64
    }

    fn verify(&self) -> Result<()> {
        let n = self.len();
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Normalization { sum });
        }
        for axis in 0..self.dim {
            let mean: f64 = (0..n).map(|i| self.weights[i] * self.nodes[i * self.dim + axis]).sum();
            if mean.abs() > MOMENT_TOL {
                return Err(Error::Numerical(format!("velocity model mean {mean} is not zero")));
            }
        }
        for i in 0..n {
            let j = n - 1 - i;
            let mirrored = self.node(i).iter().zip(self.node(j)).all(|(a, b)| *a == -*b);
            if !mirrored || self.weights[i] != self.weights[j] {
                return Err(Error::Asymmetric {
                    velocity: self.node(i)[0],
                    mass: self.weights[i],
                });
            }
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::Invalid(format!("v_max must be positive, got {}", self.v_max)));
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lex_sign(v: &[f64]) -> std::cmp::Ordering {
    for &c in v {
        if c > 0.0 {
            return std::cmp::Ordering::Greater;
        }
        if c < 0.0 {
            return std::cmp::Ordering::Less;
        }
    }
    std::cmp::Ordering::Equal
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}
