//! Quadrature on the boundary slice over |x| = R of a graph, with the
//! outward conormal: the unit vector tangent to the graph, normal to the
//! boundary slice, pointing away from the origin.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::GraphField;

#[derive(Debug, Clone)]
pub struct BoundaryNode {
    /// Base point x on the sphere |x| = R.
    pub base: DVector<f64>,
    /// Lifted point F = (x, f(x)) in R^{n+k}.
    pub position: DVector<f64>,
    /// Outward conormal in R^{n+k}.
    pub conormal: DVector<f64>,
    /// (n-1)-dimensional surface weight of the lifted slice.
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub radius: f64,
    pub nodes: Vec<BoundaryNode>,
}

/// Conormal at base point x (|x| = R): project the lifted radial direction
/// onto the tangent space, orthogonalize against the lifted sphere tangents,
/// normalize, orient outward.
fn conormal_at(field: &GraphField, base: &DVector<f64>) -> Result<DVector<f64>> {
    let spec = field.spec();
    let (n, k) = (spec.n(), spec.k());
    let x: Vec<f64> = base.iter().copied().collect();
    let jet = field.jet_interp(&x)?;
    let frame = crate::geometry::TangentFrame::from_jet(&jet);
    let t = &frame.columns;

    let u = base / base.norm();
    // T^T (u, 0) = u, so the tangential projection of the lifted radial
    // direction is T g^{-1} u.
    let g = crate::geometry::induced_metric(&jet);
    let (ginv, _) = crate::geometry::spd_inverse_det(&g);
    let mut v: DVector<f64> = t * (&ginv * &u);

    // Base-sphere tangent directions w_a (orthonormal completion of u),
    // lifted to eta_a = T w_a.
    let mut w_basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for axis in 0..n {
        let mut w = DVector::zeros(n);
        w[axis] = 1.0;
        w -= &u * u[axis];
        for prev in &w_basis {
            let c = w.dot(prev);
            w -= prev * c;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            w_basis.push(w / norm);
        }
    }
    for w in &w_basis {
        let eta: DVector<f64> = t * w;
        let c = v.dot(&eta) / eta.dot(&eta);
        v -= eta * c;
    }

    let norm = v.norm();
    if norm < 1e-12 {
        return Err(Error::GridMismatch(format!(
            "degenerate conormal at base point {:?}",
            x
        )));
    }
    v /= norm;
    let mut u_amb = DVector::zeros(n + k);
    u_amb.rows_mut(0, n).copy_from(&u);
    if v.dot(&u_amb) < 0.0 {
        v = -v;
    }
    Ok(v)
}

fn lift(field: &GraphField, base: &DVector<f64>) -> Result<DVector<f64>> {
    let spec = field.spec();
    let (n, k) = (spec.n(), spec.k());
    let x: Vec<f64> = base.iter().copied().collect();
    let value = field.interpolate(&x)?;
    let mut p = DVector::zeros(n + k);
    p.rows_mut(0, n).copy_from(base);
    p.rows_mut(n, k).copy_from(&value);
    Ok(p)
}

impl BoundaryQuadrature {
    /// Build the quadrature over |x| = R. `count` controls resolution for
    /// n = 2 (polygon vertices) and n = 3 (approximate vertex count);
    /// ignored for n = 1. Requires R <= L - 2h so that interpolated jets
    /// stay inside the grid.
    pub fn new(field: &GraphField, radius: f64, count: usize) -> Result<Self> {
        let spec = field.spec();
        let n = spec.n();
        let usable = spec.half_width() - 2.0 * spec.spacing();
        if radius <= 0.0 || radius > usable + 1e-12 {
            return Err(Error::RadiusTooLarge { requested: radius, max: usable });
        }
        match n {
            1 => Self::segment(field, radius),
            2 => Self::polygon(field, radius, count.max(16)),
            3 => Self::lat_long(field, radius, count.max(64)),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    fn segment(field: &GraphField, radius: f64) -> Result<Self> {
        let mut nodes = Vec::with_capacity(2);
        for sign in [-1.0, 1.0] {
            let base = DVector::from_vec(vec![sign * radius]);
            nodes.push(BoundaryNode {
                position: lift(field, &base)?,
                conormal: conormal_at(field, &base)?,
                base,
                weight: 1.0,
            });
        }
        Ok(Self { radius, nodes })
    }

    fn polygon(field: &GraphField, radius: f64, count: usize) -> Result<Self> {
        let mut bases = Vec::with_capacity(count);
        let mut lifted = Vec::with_capacity(count);
        for i in 0..count {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let base = DVector::from_vec(vec![radius * theta.cos(), radius * theta.sin()]);
            lifted.push(lift(field, &base)?);
            bases.push(base);
        }
        let mut nodes = Vec::with_capacity(count);
        for i in 0..count {
            let prev = &lifted[(i + count - 1) % count];
            let next = &lifted[(i + 1) % count];
            let weight = 0.5 * ((&lifted[i] - prev).norm() + (next - &lifted[i]).norm());
            nodes.push(BoundaryNode {
                position: lifted[i].clone(),
                conormal: conormal_at(field, &bases[i])?,
                base: bases[i].clone(),
                weight,
            });
        }
        Ok(Self { radius, nodes })
    }

    fn lat_long(field: &GraphField, radius: f64, count: usize) -> Result<Self> {
        // rings x (2 rings) longitudes gives ~2 rings^2 vertices
        let rings = ((count as f64 / 2.0).sqrt().round() as usize).max(4);
        let longs = 2 * rings;
        let pi = std::f64::consts::PI;
        let vertex = |a: usize, b: usize| -> DVector<f64> {
            let theta = pi * a as f64 / rings as f64;
            let phi = 2.0 * pi * b as f64 / longs as f64;
            DVector::from_vec(vec![
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ])
        };
        // vertex ids: 0 = north pole, 1 = south pole, then (a-1)*longs + b + 2
        let vid = |a: usize, b: usize| -> usize {
            match a {
                0 => 0,
                a if a == rings => 1,
                a => (a - 1) * longs + (b % longs) + 2,
            }
        };
        let num_vertices = (rings - 1) * longs + 2;
        let mut bases = vec![DVector::zeros(3); num_vertices];
        bases[0] = vertex(0, 0);
        bases[1] = vertex(rings, 0);
        for a in 1..rings {
            for b in 0..longs {
                bases[vid(a, b)] = vertex(a, b);
            }
        }
        let mut lifted = Vec::with_capacity(num_vertices);
        for base in &bases {
            lifted.push(lift(field, base)?);
        }

        let mut triangles: Vec<[usize; 3]> = Vec::new();
        for b in 0..longs {
            triangles.push([vid(0, 0), vid(1, b), vid(1, b + 1)]);
            triangles.push([vid(rings, 0), vid(rings - 1, b + 1), vid(rings - 1, b)]);
        }
        for a in 1..rings - 1 {
            for b in 0..longs {
                let (p, q, r, s) = (vid(a, b), vid(a, b + 1), vid(a + 1, b), vid(a + 1, b + 1));
                triangles.push([p, q, r]);
                triangles.push([q, s, r]);
            }
        }

        let mut weights = vec![0.0; num_vertices];
        for tri in &triangles {
            let u = &lifted[tri[1]] - &lifted[tri[0]];
            let v = &lifted[tri[2]] - &lifted[tri[0]];
            let gram = u.norm_squared() * v.norm_squared() - u.dot(&v).powi(2);
            let area = 0.5 * gram.max(0.0).sqrt();
            for &id in tri {
                weights[id] += area / 3.0;
            }
        }

        let mut nodes = Vec::with_capacity(num_vertices);
        for id in 0..num_vertices {
            nodes.push(BoundaryNode {
                position: lifted[id].clone(),
                conormal: conormal_at(field, &bases[id])?,
                base: bases[id].clone(),
                weight: weights[id],
            });
        }
        Ok(Self { radius, nodes })
    }

    /// Total (n-1)-dimensional measure of the lifted slice.
    pub fn total_measure(&self) -> f64 {
        self.nodes.iter().map(|node| node.weight).sum()
    }

    /// Boundary flux integral of an ambient field X against the conormal.
    pub fn integrate_flux<X>(&self, ambient_field: X) -> f64
    where
        X: Fn(&DVector<f64>) -> DVector<f64>,
    {
        self.nodes
            .iter()
            .map(|node| node.weight * ambient_field(&node.position).dot(&node.conormal))
            .sum()
    }

    /// Boundary integral of a scalar function of the lifted position.
    pub fn integrate_scalar<S>(&self, scalar: S) -> f64
    where
        S: Fn(&DVector<f64>) -> f64,
    {
        self.nodes.iter().map(|node| node.weight * scalar(&node.position)).sum()
    }

    /// Worst-case conormal defects over all nodes:
    /// (| |nu| - 1 |, |Q nu|, max |<nu, eta_a>|, min <nu, lifted radial>).
    pub fn conormal_defects(&self, field: &GraphField) -> Result<(f64, f64, f64, f64)> {
        let spec = field.spec();
        let (n, k) = (spec.n(), spec.k());
        let mut unit_defect: f64 = 0.0;
        let mut normal_defect: f64 = 0.0;
        let mut slice_defect: f64 = 0.0;
        let mut orientation: f64 = f64::INFINITY;
        for node in &self.nodes {
            let nu = &node.conormal;
            unit_defect = unit_defect.max((nu.norm() - 1.0).abs());
            let x: Vec<f64> = node.base.iter().copied().collect();
            let jet = field.jet_interp(&x)?;
            let q = crate::geometry::normal_projection(&jet);
            normal_defect = normal_defect.max((&q * nu).norm());
            let frame = crate::geometry::TangentFrame::from_jet(&jet);
            let u = &node.base / node.base.norm();
            let mut w_basis: Vec<DVector<f64>> = Vec::new();
            for axis in 0..n {
                let mut w = DVector::zeros(n);
                w[axis] = 1.0;
                w -= &u * u[axis];
                for prev in &w_basis {
                    let c = w.dot(prev);
                    w -= prev * c;
                }
                if w.norm() > 1e-8 {
                    let norm = w.norm();
                    w_basis.push(w / norm);
                }
            }
            for w in &w_basis {
                let eta: DVector<f64> = &frame.columns * w;
                slice_defect = slice_defect.max(nu.dot(&eta).abs() / eta.norm());
            }
            let mut u_amb = DVector::zeros(n + k);
            u_amb.rows_mut(0, n).copy_from(&u);
            orientation = orientation.min(nu.dot(&u_amb));
        }
        Ok((unit_defect, normal_defect, slice_defect, orientation))
    }
}
