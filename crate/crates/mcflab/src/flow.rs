//! Explicit time-steppers for the graphical MCF system
//! df/dt = g^{ij} D2_{ij} f and its forward-rescaled normalization
//! fhat(x, s) = t^{-1/2} f(sqrt(t) x, t), s = log(t)/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphField, GridSpec};
use crate::soliton::{apply_interior, NodeOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// Boundary ring frozen to the initial data.
    FrozenDirichlet,
    /// Boundary ring refilled by linear extrapolation from the interior.
    LinearExtrapolation,
}

impl Default for BoundaryPolicy {
    fn default() -> Self {
        BoundaryPolicy::FrozenDirichlet
    }
}

fn default_cfl() -> f64 {
    0.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    /// CFL factor: dt = c * h^2 (ds = c * h^2 / 2 for the rescaled flow).
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub boundary: BoundaryPolicy,
    /// Times at which snapshots are recorded (hit exactly by clamping the
    /// final step before each).
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub field: GraphField,
    pub time: f64,
    pub steps: usize,
}

impl FlowState {
    pub fn new(field: GraphField, time: f64) -> Self {
        Self { field, time, steps: 0 }
    }

    pub fn sup_gradient(&self) -> f64 {
        self.field.check_gradient_bound().measured
    }
}

#[derive(Debug, Clone)]
pub struct RescaledFlowState {
    pub field: GraphField,
    pub s: f64,
    pub steps: usize,
}

impl RescaledFlowState {
    pub fn new(field: GraphField, s: f64) -> Self {
        Self { field, s, steps: 0 }
    }

    /// Underlying MCF time t = e^{2s}.
    pub fn t(&self) -> f64 {
        (2.0 * self.s).exp()
    }
}

fn check_finite(values: &[f64], t: f64, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState { t, what: what.to_string() })
    }
}

fn extrapolate_boundary(field: &mut GraphField) {
    let spec = field.spec().clone();
    let m = spec.points_per_axis();
    let k = spec.k();
    let strides = spec.strides();
    let mut multi = vec![0usize; spec.n()];
    for axis in 0..spec.n() {
        let stride = strides[axis];
        for flat in 0..spec.num_nodes() {
            spec.flat_to_multi(flat, &mut multi);
            let (src1, src2) = if multi[axis] == 0 {
                (flat + stride, flat + 2 * stride)
            } else if multi[axis] + 1 == m {
                (flat - stride, flat - 2 * stride)
            } else {
                continue;
            };
            for alpha in 0..k {
                let v = 2.0 * field.values()[src1 * k + alpha] - field.values()[src2 * k + alpha];
                field.values_mut()[flat * k + alpha] = v;
            }
        }
    }
}

fn euler_step(
    field: &mut GraphField,
    dt: f64,
    boundary: BoundaryPolicy,
    rhs: impl Fn(&mut NodeOperator, &[f64], usize, &mut [f64]) + Sync,
    t_label: f64,
) -> Result<()> {
    let spec = field.spec().clone();
    let mut update = vec![0.0; spec.num_nodes() * spec.k()];
    apply_interior(&spec, field.values(), &mut update, rhs);
    for (slot, u) in field.values_mut().iter_mut().zip(&update) {
        if *u != 0.0 {
            *slot += dt * u;
        }
    }
    if boundary == BoundaryPolicy::LinearExtrapolation {
        extrapolate_boundary(field);
    }
    check_finite(field.values(), t_label, "flow step produced non-finite values")
}

/// One explicit Euler step of df/dt = g^{ij} D2_{ij} f. `dt_cap` limits the
/// step (used to land exactly on snapshot times); the CFL step is c * h^2.
pub fn mcf_step(state: &mut FlowState, cfg: &FlowConfig, dt_cap: Option<f64>) -> Result<()> {
    let h = state.field.spec().spacing();
    let mut dt = cfg.cfl * h * h;
    if let Some(cap) = dt_cap {
        dt = dt.min(cap);
    }
    euler_step(
        &mut state.field,
        dt,
        cfg.boundary,
        |op, values, flat, out| {
            let _ = (values, flat);
            op.parabolic_into(out);
        },
        state.time,
    )?;
    state.time += dt;
    state.steps += 1;
    Ok(())
}

/// One explicit Euler step of the rescaled equation
/// dfhat/ds = 2 ghat^{ij} D2 fhat + x . Dfhat - fhat, with ds = c h^2 / 2.
pub fn rescaled_step(
    state: &mut RescaledFlowState,
    cfg: &FlowConfig,
    ds_cap: Option<f64>,
) -> Result<()> {
    let h = state.field.spec().spacing();
    let mut ds = cfg.cfl * h * h / 2.0;
    if let Some(cap) = ds_cap {
        ds = ds.min(cap);
    }
    euler_step(
        &mut state.field,
        ds,
        cfg.boundary,
        |op, values, flat, out| op.rescaled_rhs_into(values, flat, out),
        state.s,
    )?;
    state.s += ds;
    state.steps += 1;
    Ok(())
}

/// Evolve to cfg.t_end, recording a snapshot at each requested time (and at
/// t_end). Snapshot times are landed on exactly.
pub fn run_mcf(mut state: FlowState, cfg: &FlowConfig) -> Result<Vec<FlowState>> {
    let mut events: Vec<f64> = cfg
        .snapshots
        .iter()
        .copied()
        .filter(|&t| t > state.time && t < cfg.t_end)
        .collect();
    events.push(cfg.t_end);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::new();
    if cfg.snapshots.iter().any(|&t| (t - state.time).abs() < 1e-15) {
        out.push(state.clone());
    }
    for target in events {
        while state.time < target - 1e-14 {
            let cap = target - state.time;
            mcf_step(&mut state, cfg, Some(cap))?;
        }
        state.time = target; // absorb roundoff from the clamped final step
        out.push(state.clone());
    }
    Ok(out)
}

/// Evolve the rescaled flow to s_end (stored in cfg.t_end as an s value).
pub fn run_rescaled(mut state: RescaledFlowState, cfg: &FlowConfig) -> Result<Vec<RescaledFlowState>> {
    let mut events: Vec<f64> = cfg
        .snapshots
        .iter()
        .copied()
        .filter(|&s| s > state.s && s < cfg.t_end)
        .collect();
    events.push(cfg.t_end);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::new();
    if cfg.snapshots.iter().any(|&s| (s - state.s).abs() < 1e-15) {
        out.push(state.clone());
    }
    for target in events {
        while state.s < target - 1e-14 {
            let cap = target - state.s;
            rescaled_step(&mut state, cfg, Some(cap))?;
        }
        state.s = target;
        out.push(state.clone());
    }
    Ok(out)
}

/// fhat(x, s) = t^{-1/2} f(sqrt(t) x, t) sampled on `target` by multilinear
/// interpolation. Nodes whose query sqrt(t) x leaves the stored domain are
/// marked missing (false in the mask) and hold zero.
pub fn normalize_snapshot(
    snap: &FlowState,
    target: &GridSpec,
) -> Result<(RescaledFlowState, Vec<bool>)> {
    let t = snap.time;
    if t <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "normalization needs t > 0, got t = {t}"
        )));
    }
    let scale = t.sqrt();
    let k = target.k();
    let mut values = vec![0.0; target.num_nodes() * k];
    let mut mask = vec![true; target.num_nodes()];
    let mut query = vec![0.0; target.n()];
    for flat in 0..target.num_nodes() {
        let x = target.node_point(flat);
        for axis in 0..target.n() {
            query[axis] = scale * x[axis];
        }
        match snap.field.interpolate(&query) {
            Ok(v) => {
                for alpha in 0..k {
                    values[flat * k + alpha] = v[alpha] / scale;
                }
            }
            Err(Error::OutOfDomain { .. }) => mask[flat] = false,
            Err(e) => return Err(e),
        }
    }
    let field = GraphField::from_values(target.clone(), values)?;
    Ok((
        RescaledFlowState { field, s: 0.5 * t.ln(), steps: snap.steps },
        mask,
    ))
}

pub fn normalize_snapshots(
    snaps: &[FlowState],
    target: &GridSpec,
) -> Result<Vec<(RescaledFlowState, Vec<bool>)>> {
    snaps.iter().map(|s| normalize_snapshot(s, target)).collect()
}

/// Sup norm of the evolution right-hand side over interior nodes; a
/// stationarity measure for run tables.
pub fn rhs_sup(field: &GraphField, rescaled: bool) -> f64 {
    let spec = field.spec();
    let mut buf = vec![0.0; spec.num_nodes() * spec.k()];
    apply_interior(spec, field.values(), &mut buf, |op, values, flat, out| {
        if rescaled {
            op.rescaled_rhs_into(values, flat, out);
        } else {
            let _ = (values, flat);
            op.parabolic_into(out);
        }
    });
    buf.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}

/// Scale-invariance experiment at lambda = 2: evolve f0 on (L, h) to t_end,
/// evolve f0 scaled by 1/2 on (L/2, h/2) to t_end/4, and compare
/// f(2x, t)/2 against the scaled run on the common nodes.
pub fn scaling_invariance_defect<G>(
    spec: &GridSpec,
    generator: G,
    cfg: &FlowConfig,
) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64> + Copy,
{
    let lambda = 2.0;
    let coarse = GraphField::build(spec.clone(), generator)?;
    let fine_spec = GridSpec::new(
        spec.n(),
        spec.k(),
        spec.half_width() / lambda,
        spec.spacing() / lambda,
    )?;
    if fine_spec.points_per_axis() != spec.points_per_axis() {
        return Err(Error::GridMismatch(
            "lambda = 2 run needs h to halve with L".to_string(),
        ));
    }
    let fine = GraphField::build(fine_spec.clone(), |x: &[f64]| {
        let y: Vec<f64> = x.iter().map(|c| c * lambda).collect();
        generator(&y).into_iter().map(|v| v / lambda).collect()
    })?;

    let coarse_end = run_mcf(FlowState::new(coarse, 0.0), cfg)?
        .pop()
        .expect("run_mcf returns at least the final state");
    let fine_cfg = FlowConfig {
        t_end: cfg.t_end / (lambda * lambda),
        snapshots: Vec::new(),
        ..cfg.clone()
    };
    let fine_end = run_mcf(FlowState::new(fine, 0.0), &fine_cfg)?
        .pop()
        .expect("run_mcf returns at least the final state");

    let k = spec.k();
    let mut defect: f64 = 0.0;
    let mut query = vec![0.0; spec.n()];
    for flat in 0..fine_spec.num_nodes() {
        let x = fine_spec.node_point(flat);
        for axis in 0..spec.n() {
            query[axis] = lambda * x[axis];
        }
        let coarse_flat = spec
            .nearest_node(&query)
            .expect("2x is a coarse node for every fine node x");
        for alpha in 0..k {
            let a = coarse_end.field.values()[coarse_flat * k + alpha] / lambda;
            let b = fine_end.field.values()[flat * k + alpha];
            defect = defect.max((a - b).abs());
        }
    }
    Ok(defect)
}
