//! Extrinsic geometry of the graph Sigma = {(x, f(x))}: induced metric,
//! normal projection, second fundamental form, mean curvature vector and
//! surface divergence.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::grid::{GraphField, JetSample};

/// Inverse and determinant of a small SPD matrix, written into `inv`.
/// Closed forms for n <= 3, Cholesky otherwise.
pub(crate) fn spd_inverse_det_into(g: &DMatrix<f64>, inv: &mut DMatrix<f64>) -> f64 {
    let n = g.nrows();
    match n {
        1 => {
            let det = g[(0, 0)];
            inv[(0, 0)] = 1.0 / det;
            det
        }
        2 => {
            let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
            let det = a * c - b * b;
            inv[(0, 0)] = c / det;
            inv[(0, 1)] = -b / det;
            inv[(1, 0)] = -b / det;
            inv[(1, 1)] = a / det;
            det
        }
        3 => {
            let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(0, 2)]);
            let (d, e, f) = (g[(1, 1)], g[(1, 2)], g[(2, 2)]);
            let ca = d * f - e * e;
            let cb = c * e - b * f;
            let cc = b * e - c * d;
            let det = a * ca + b * cb + c * cc;
            inv[(0, 0)] = ca / det;
            inv[(0, 1)] = cb / det;
            inv[(0, 2)] = cc / det;
            inv[(1, 0)] = cb / det;
            inv[(1, 1)] = (a * f - c * c) / det;
            inv[(1, 2)] = (b * c - a * e) / det;
            inv[(2, 0)] = cc / det;
            inv[(2, 1)] = (b * c - a * e) / det;
            inv[(2, 2)] = (a * d - b * b) / det;
            det
        }
        _ => {
            let chol = g
                .clone()
                .cholesky()
                .expect("induced metric is SPD by construction");
            inv.copy_from(&chol.inverse());
            chol.determinant()
        }
    }
}

/// Inverse and determinant of a small SPD matrix. Closed forms for n <= 3.
pub(crate) fn spd_inverse_det(g: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let mut inv = DMatrix::zeros(g.nrows(), g.ncols());
    let det = spd_inverse_det_into(g, &mut inv);
    (inv, det)
}

/// Coordinate tangent vectors tau_i = e_i + D_i f of the graph, as the
/// columns of an (n+k) x n matrix.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    pub columns: DMatrix<f64>,
}

impl TangentFrame {
    pub fn from_jet(jet: &JetSample) -> Self {
        let n = jet.point.len();
        let k = jet.value.len();
        let mut t = DMatrix::zeros(n + k, n);
        for i in 0..n {
            t[(i, i)] = 1.0;
            for alpha in 0..k {
                t[(n + alpha, i)] = jet.gradient[(alpha, i)];
            }
        }
        Self { columns: t }
    }
}

/// Per-point extrinsic geometry package of the graph.
#[derive(Debug, Clone)]
pub struct GeometrySample {
    pub point: DVector<f64>,
    /// F = (x, f(x)) in R^{n+k}.
    pub position: DVector<f64>,
    pub frame: TangentFrame,
    /// g = I + (Df)^T Df.
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub det_g: f64,
    pub area_element: f64,
    /// Orthogonal projection onto the normal space, (n+k) x (n+k).
    pub projection: DMatrix<f64>,
    /// II_{ij} in R^{n+k}, stored at index i * n + j.
    pub second_fundamental: Vec<DVector<f64>>,
    pub mean_curvature: DVector<f64>,
    pub f_perp: DVector<f64>,
    pub f_tan: DVector<f64>,
    /// Extreme eigenvalues of g; lambda_max / lambda_min is the condition
    /// number reported by callers when it exceeds 1e8.
    pub g_eig_min: f64,
    pub g_eig_max: f64,
}

pub fn induced_metric(jet: &JetSample) -> DMatrix<f64> {
    let n = jet.point.len();
    let mut g = DMatrix::identity(n, n);
    g.gemm_tr(1.0, &jet.gradient, &jet.gradient, 1.0);
    g
}

pub fn normal_projection(jet: &JetSample) -> DMatrix<f64> {
    let frame = TangentFrame::from_jet(jet);
    let g = induced_metric(jet);
    let (ginv, _) = spd_inverse_det(&g);
    projection_from(&frame, &ginv, jet.point.len() + jet.value.len())
}

fn projection_from(frame: &TangentFrame, ginv: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let t = &frame.columns;
    DMatrix::identity(dim, dim) - t * ginv * t.transpose()
}

pub fn second_fundamental_form(jet: &JetSample) -> Vec<DVector<f64>> {
    let q = normal_projection(jet);
    second_fundamental_from(jet, &q)
}

fn second_fundamental_from(jet: &JetSample, q: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = jet.point.len();
    let k = jet.value.len();
    let mut out = Vec::with_capacity(n * n);
    let mut ambient = DVector::zeros(n + k);
    for i in 0..n {
        for j in 0..n {
            ambient.fill(0.0);
            for alpha in 0..k {
                ambient[n + alpha] = jet.hessian[alpha][(i, j)];
            }
            out.push(q * &ambient);
        }
    }
    out
}

pub fn mean_curvature(jet: &JetSample) -> DVector<f64> {
    geometry_from_jet(jet).mean_curvature
}

pub fn geometry_from_jet(jet: &JetSample) -> GeometrySample {
    let n = jet.point.len();
    let k = jet.value.len();
    let frame = TangentFrame::from_jet(jet);
    let metric = induced_metric(jet);
    let (metric_inv, det_g) = spd_inverse_det(&metric);
    let projection = projection_from(&frame, &metric_inv, n + k);
    let second_fundamental = second_fundamental_from(jet, &projection);
    let mut mean_curvature = DVector::zeros(n + k);
    for i in 0..n {
        for j in 0..n {
            mean_curvature.axpy(metric_inv[(i, j)], &second_fundamental[i * n + j], 1.0);
        }
    }
    let mut position = DVector::zeros(n + k);
    position.rows_mut(0, n).copy_from(&jet.point);
    position.rows_mut(n, k).copy_from(&jet.value);
    let f_perp = &projection * &position;
    let f_tan = &position - &f_perp;
    let eig = metric.clone().symmetric_eigenvalues();
    GeometrySample {
        point: jet.point.clone(),
        position,
        frame,
        det_g,
        area_element: det_g.sqrt(),
        metric,
        metric_inv,
        projection,
        second_fundamental,
        mean_curvature,
        f_perp,
        f_tan,
        g_eig_min: eig.min(),
        g_eig_max: eig.max(),
    }
}

pub fn geometry_at(field: &GraphField, flat: usize) -> Result<GeometrySample> {
    Ok(geometry_from_jet(&field.jet_at(flat)?))
}

/// Surface divergence of an ambient vector field X: R^{n+k} -> R^{n+k} along
/// the graph, at an interior node one ring inside (the composite X(F(x)) is
/// differentiated by centered differences).
pub fn surface_divergence<X>(field: &GraphField, flat: usize, ambient_field: X) -> Result<f64>
where
    X: Fn(&DVector<f64>) -> DVector<f64>,
{
    let spec = field.spec();
    let n = spec.n();
    surface_divergence_nodewise(field, flat, |node_flat| {
        let jet = field.jet_at(node_flat).or_else(|_| {
            // Only the value is needed to form F at the neighbors.
            Ok::<_, crate::error::Error>(JetSample {
                point: spec.node_point(node_flat),
                value: DVector::from_column_slice(field.value(node_flat)),
                gradient: DMatrix::zeros(spec.k(), n),
                hessian: vec![DMatrix::zeros(n, n); spec.k()],
            })
        })?;
        let mut position = DVector::zeros(n + spec.k());
        position.rows_mut(0, n).copy_from(&jet.point);
        position.rows_mut(n, spec.k()).copy_from(&jet.value);
        Ok(ambient_field(&position))
    })
}

/// Surface divergence of a vector field given by its values at grid nodes
/// (a field along Sigma in the graph gauge).
pub fn surface_divergence_nodewise<V>(field: &GraphField, flat: usize, values: V) -> Result<f64>
where
    V: Fn(usize) -> Result<DVector<f64>>,
{
    let spec = field.spec();
    let n = spec.n();
    let h = spec.spacing();
    let strides = spec.strides();
    let geo = geometry_at(field, flat)?;
    let mut div = 0.0;
    for i in 0..n {
        let plus = values(flat + strides[i])?;
        let minus = values(flat - strides[i])?;
        let deriv = (plus - minus) / (2.0 * h);
        for j in 0..n {
            let tau_j = geo.frame.columns.column(j);
            div += geo.metric_inv[(i, j)] * deriv.dot(&tau_j);
        }
    }
    Ok(div)
}

/// One CSV row per interior node:
/// x coords, |Hbar|, |Fperp|, |Hbar + Fperp|, det g, lambda_min(g), lambda_max(g).
pub fn geometry_report(field: &GraphField) -> Vec<Vec<f64>> {
    let spec = field.spec();
    let mut rows = Vec::new();
    for flat in 0..spec.num_nodes() {
        if !spec.is_interior(flat, 1) {
            continue;
        }
        let geo = geometry_at(field, flat).expect("interior node");
        let mut row: Vec<f64> = geo.point.iter().copied().collect();
        row.push(geo.mean_curvature.norm());
        row.push(geo.f_perp.norm());
        row.push((&geo.mean_curvature + &geo.f_perp).norm());
        row.push(geo.det_g);
        row.push(geo.g_eig_min);
        row.push(geo.g_eig_max);
        rows.push(row);
    }
    rows
}
