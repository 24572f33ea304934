//! Soliton residuals of Hbar + F_perp = 0 in parametric and scalar form,
//! their equivalence check, and a pseudo-time Dirichlet solver for the
//! graphical shrinker system g^{ij} D2_{ij} f = x . Df - f.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{geometry_at, spd_inverse_det_into};
use crate::grid::{GraphField, GridSpec};

/// Reusable per-node evaluator of the graph jet quantities, allocation-free
/// in the hot loop. Loads the centered-difference gradient/hessian, the
/// induced metric and its inverse at an interior node.
pub(crate) struct NodeOperator {
    spec: GridSpec,
    strides: Vec<usize>,
    multi: Vec<usize>,
    pub point: Vec<f64>,
    /// k x n
    pub grad: DMatrix<f64>,
    /// k matrices, n x n
    pub hess: Vec<DMatrix<f64>>,
    g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
}

impl NodeOperator {
    pub fn new(spec: &GridSpec) -> Self {
        let (n, k) = (spec.n(), spec.k());
        Self {
            spec: spec.clone(),
            strides: spec.strides(),
            multi: vec![0; n],
            point: vec![0.0; n],
            grad: DMatrix::zeros(k, n),
            hess: vec![DMatrix::zeros(n, n); k],
            g: DMatrix::zeros(n, n),
            ginv: DMatrix::zeros(n, n),
        }
    }

    /// True when `flat` is interior (ring 1); in that case the scratch
    /// buffers are filled from `values`.
    pub fn load(&mut self, values: &[f64], flat: usize) -> bool {
        let (n, k) = (self.spec.n(), self.spec.k());
        let m = self.spec.points_per_axis();
        let h = self.spec.spacing();
        self.spec.flat_to_multi(flat, &mut self.multi);
        for axis in 0..n {
            let i = self.multi[axis];
            if i == 0 || i + 1 >= m {
                return false;
            }
            self.point[axis] = self.spec.axis_coord(i);
        }
        let at = |f: usize, alpha: usize| values[f * k + alpha];
        for i in 0..n {
            let (p, q) = (flat + self.strides[i], flat - self.strides[i]);
            for alpha in 0..k {
                self.grad[(alpha, i)] = (at(p, alpha) - at(q, alpha)) / (2.0 * h);
                self.hess[alpha][(i, i)] =
                    (at(p, alpha) - 2.0 * at(flat, alpha) + at(q, alpha)) / (h * h);
            }
            for j in (i + 1)..n {
                let pp = flat + self.strides[i] + self.strides[j];
                let pm = flat + self.strides[i] - self.strides[j];
                let mp = flat - self.strides[i] + self.strides[j];
                let mm = flat - self.strides[i] - self.strides[j];
                for alpha in 0..k {
                    let v = (at(pp, alpha) - at(pm, alpha) - at(mp, alpha) + at(mm, alpha))
                        / (4.0 * h * h);
                    self.hess[alpha][(i, j)] = v;
                    self.hess[alpha][(j, i)] = v;
                }
            }
        }
        // g = I + grad^T grad
        for i in 0..n {
            for j in i..n {
                let mut v = if i == j { 1.0 } else { 0.0 };
                for alpha in 0..k {
                    v += self.grad[(alpha, i)] * self.grad[(alpha, j)];
                }
                self.g[(i, j)] = v;
                self.g[(j, i)] = v;
            }
        }
        spd_inverse_det_into(&self.g, &mut self.ginv);
        true
    }

    /// g^{ij} D2_{ij} f^alpha, written into `out` (k entries).
    pub fn parabolic_into(&self, out: &mut [f64]) {
        let n = self.spec.n();
        for (alpha, slot) in out.iter_mut().enumerate() {
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += self.ginv[(i, j)] * self.hess[alpha][(i, j)];
                }
            }
            *slot = v;
        }
    }

    /// Scalar soliton residual r^alpha = g^{ij} D2 f^alpha - x . Df^alpha + f^alpha.
    pub fn scalar_residual_into(&self, values: &[f64], flat: usize, out: &mut [f64]) {
        let (n, k) = (self.spec.n(), self.spec.k());
        self.parabolic_into(out);
        for alpha in 0..k {
            let mut drift = 0.0;
            for i in 0..n {
                drift += self.point[i] * self.grad[(alpha, i)];
            }
            out[alpha] += -drift + values[flat * k + alpha];
        }
    }

    /// Rescaled-flow right-hand side 2 g^{ij} D2 f^alpha + x . Df^alpha - f^alpha.
    pub fn rescaled_rhs_into(&self, values: &[f64], flat: usize, out: &mut [f64]) {
        let (n, k) = (self.spec.n(), self.spec.k());
        self.parabolic_into(out);
        for alpha in 0..k {
            let mut drift = 0.0;
            for i in 0..n {
                drift += self.point[i] * self.grad[(alpha, i)];
            }
            out[alpha] = 2.0 * out[alpha] + drift - values[flat * k + alpha];
        }
    }
}

/// Fill a node-major buffer (k entries per node, zero on the boundary ring)
/// by applying `eval` at every interior node. Parallel over nodes; writes are
/// disjoint so the result is identical for any thread count.
pub(crate) fn apply_interior<F>(field_spec: &GridSpec, values: &[f64], out: &mut [f64], eval: F)
where
    F: Fn(&mut NodeOperator, &[f64], usize, &mut [f64]) + Sync,
{
    let k = field_spec.k();
    out.par_chunks_mut(k)
        .enumerate()
        .for_each_init(
            || NodeOperator::new(field_spec),
            |op, (flat, chunk)| {
                if op.load(values, flat) {
                    eval(op, values, flat, chunk);
                } else {
                    chunk.fill(0.0);
                }
            },
        );
}

/// Soliton residual of a field: parametric r = Hbar + F_perp per interior
/// node and scalar r^alpha = g^{ij} D2 f^alpha - x . Df^alpha + f^alpha.
#[derive(Debug, Clone)]
pub struct SolitonResidual {
    /// Flat indices of the interior nodes the residuals live on.
    pub nodes: Vec<usize>,
    pub parametric: Vec<DVector<f64>>,
    pub scalar: Vec<DVector<f64>>,
    pub sup_parametric: f64,
    pub sup_scalar: f64,
}

pub fn soliton_residual(field: &GraphField) -> Result<SolitonResidual> {
    let spec = field.spec();
    let mut nodes = Vec::new();
    let mut parametric = Vec::new();
    let mut scalar = Vec::new();
    let mut sup_par: f64 = 0.0;
    let mut sup_sc: f64 = 0.0;
    let mut op = NodeOperator::new(spec);
    let mut r = vec![0.0; spec.k()];
    for flat in 0..spec.num_nodes() {
        if !op.load(field.values(), flat) {
            continue;
        }
        let geo = geometry_at(field, flat)?;
        let par = &geo.mean_curvature + &geo.f_perp;
        op.scalar_residual_into(field.values(), flat, &mut r);
        let sc = DVector::from_column_slice(&r);
        sup_par = sup_par.max(par.amax());
        sup_sc = sup_sc.max(sc.amax());
        nodes.push(flat);
        parametric.push(par);
        scalar.push(sc);
    }
    Ok(SolitonResidual { nodes, parametric, scalar, sup_parametric: sup_par, sup_scalar: sup_sc })
}

/// Maximum over interior nodes and components of
/// |<nu^alpha, r_par> + r^alpha| with nu^alpha = (Df^alpha, -e_alpha).
pub fn equivalence_check(field: &GraphField) -> Result<f64> {
    let spec = field.spec();
    let (n, k) = (spec.n(), spec.k());
    let res = soliton_residual(field)?;
    let mut defect: f64 = 0.0;
    for (idx, &flat) in res.nodes.iter().enumerate() {
        let jet = field.jet_at(flat)?;
        let par = &res.parametric[idx];
        for alpha in 0..k {
            let mut pairing = 0.0;
            for i in 0..n {
                pairing += jet.gradient[(alpha, i)] * par[i];
            }
            pairing -= par[n + alpha];
            defect = defect.max((pairing + res.scalar[idx][alpha]).abs());
        }
    }
    Ok(defect)
}

fn default_c_tau() -> f64 {
    0.2
}
fn default_eps() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_max_iters() -> usize {
    200_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Pseudo-time step factor: dtau = c_tau * h^2.
    #[serde(default = "default_c_tau")]
    pub c_tau: f64,
    /// Stop when sup|r| <= eps * initial sup|r|.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Absolute residual floor; an initial residual at roundoff level counts
    /// as converged at iteration 0.
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Damping schedule: multiply dtau by `factor` every `every` iterations.
    #[serde(default)]
    pub damping: Option<DampingSchedule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingSchedule {
    pub every: usize,
    pub factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c_tau: default_c_tau(),
            eps: default_eps(),
            abs_tol: default_abs_tol(),
            max_iters: default_max_iters(),
            damping: None,
        }
    }
}

impl SolverConfig {
    /// The stable range is c_tau in (0, 0.5]; values outside it are allowed
    /// (the divergence guard reports honestly) but flagged here.
    pub fn stability_warning(&self) -> Option<String> {
        if self.c_tau <= 0.0 || self.c_tau > 0.5 {
            Some(format!(
                "c_tau = {} is outside the stable range (0, 0.5]; expect divergence",
                self.c_tau
            ))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub residual_sup_history: Vec<f64>,
    pub residual_l2_history: Vec<f64>,
    /// Measured sup|Df| of the returned field.
    pub final_c0: f64,
}

/// Pseudo-time relaxation f <- f + dtau * r_scalar(f) with the boundary ring
/// frozen to the values of `init`. Returns the best iterate seen if the
/// residual diverges (grows past 10x the best sup).
pub fn solve_dirichlet(init: &GraphField, cfg: &SolverConfig) -> (GraphField, SolverReport) {
    let spec = init.spec().clone();
    let h = spec.spacing();
    let mut dtau = cfg.c_tau * h * h;
    let k = spec.k();
    let mut field = init.clone();
    let mut residual = vec![0.0; spec.num_nodes() * k];
    let mut sup_history = Vec::new();
    let mut l2_history = Vec::new();
    let cell = h.powi(spec.n() as i32);

    let mut best_sup = f64::INFINITY;
    let mut best_values = field.values().to_vec();
    let mut converged = false;
    let mut diverged = false;
    let mut initial_sup = None;
    let mut iterations = 0;

    for iter in 0..=cfg.max_iters {
        apply_interior(&spec, field.values(), &mut residual, |op, values, flat, out| {
            op.scalar_residual_into(values, flat, out);
        });
        let sup = residual.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        let l2 = (residual.iter().map(|&v| v * v).sum::<f64>() * cell).sqrt();
        sup_history.push(sup);
        l2_history.push(l2);
        iterations = iter;

        if !sup.is_finite() {
            diverged = true;
            break;
        }
        let init_sup = *initial_sup.get_or_insert(sup);
        if sup < best_sup {
            best_sup = sup;
            best_values.copy_from_slice(field.values());
        }
        if sup <= cfg.eps * init_sup || sup <= cfg.abs_tol {
            converged = true;
            break;
        }
        if sup > 10.0 * best_sup {
            diverged = true;
            break;
        }
        if iter == cfg.max_iters {
            break;
        }
        if let Some(d) = &cfg.damping {
            if d.every > 0 && iter > 0 && iter % d.every == 0 {
                dtau *= d.factor;
            }
        }
        // interior update; the residual buffer is zero on the boundary ring,
        // and skipping zero entries keeps boundary bytes untouched
        let values = field.values_mut();
        for (slot, r) in values.iter_mut().zip(&residual) {
            if *r != 0.0 {
                *slot += dtau * r;
            }
        }
    }

    if diverged {
        field
            .values_mut()
            .copy_from_slice(&best_values);
    }
    let final_c0 = field.check_gradient_bound().measured;
    (
        field,
        SolverReport {
            iterations,
            converged,
            diverged,
            residual_sup_history: sup_history,
            residual_l2_history: l2_history,
            final_c0,
        },
    )
}

/// Returns Err when the two fields disagree on their boundary ring; the
/// solver promises bit-exact preservation there.
pub fn boundary_ring_equal(a: &GraphField, b: &GraphField) -> bool {
    let spec = a.spec();
    if spec != b.spec() {
        return false;
    }
    let k = spec.k();
    (0..spec.num_nodes())
        .filter(|&flat| !spec.is_interior(flat, 1))
        .all(|flat| a.values()[flat * k..(flat + 1) * k] == b.values()[flat * k..(flat + 1) * k])
}
