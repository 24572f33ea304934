//! Uniform cube grids for graph maps f: R^n -> R^k, with centered-difference
//! jets, multilinear interpolation and midpoint ball quadrature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over the cube [-L, L]^n with an odd number of nodes per axis,
/// so the origin is always a node. `L` is snapped to an integer multiple of
/// the spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    n: usize,
    k: usize,
    half_count: usize,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    n: usize,
    k: usize,
    #[serde(rename = "L")]
    l: f64,
    h: f64,
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecJson {
            n: self.n,
            k: self.k,
            l: self.half_width(),
            h: self.spacing,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SpecJson::deserialize(d)?;
        GridSpec::new(raw.n, raw.k, raw.l, raw.h).map_err(serde::de::Error::custom)
    }
}

impl GridSpec {
    pub fn new(n: usize, k: usize, half_width: f64, spacing: f64) -> Result<Self> {
        if n < 1 || k < 1 {
            return Err(Error::InvalidSpec(format!("need n >= 1 and k >= 1, got n={n}, k={k}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidSpec(format!("spacing h must be positive, got {spacing}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "half-width L must be positive, got {half_width}"
            )));
        }
        if spacing > half_width * (1.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "need h <= L (at least 3 nodes per axis), got h={spacing}, L={half_width}"
            )));
        }
        let half_count = (half_width / spacing).round() as usize;
        debug_assert!(half_count >= 1);
        Ok(Self { n, k, half_count, spacing })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Usable half-width; node coordinates run over {-L, -L+h, ..., L}.
    pub fn half_width(&self) -> f64 {
        self.half_count as f64 * self.spacing
    }

    pub fn points_per_axis(&self) -> usize {
        2 * self.half_count + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.points_per_axis().pow(self.n as u32)
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let m = self.points_per_axis();
        let mut s = vec![1usize; self.n];
        for axis in (0..self.n.saturating_sub(1)).rev() {
            s[axis] = s[axis + 1] * m;
        }
        s
    }

    pub fn axis_coord(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_count as f64) * self.spacing
    }

    pub fn flat_to_multi(&self, flat: usize, out: &mut [usize]) {
        let m = self.points_per_axis();
        let mut rem = flat;
        for axis in (0..self.n).rev() {
            out[axis] = rem % m;
            rem /= m;
        }
    }

    pub fn multi_to_flat(&self, multi: &[usize]) -> usize {
        let m = self.points_per_axis();
        let mut flat = 0usize;
        for &i in multi {
            flat = flat * m + i;
        }
        flat
    }

    pub fn node_point(&self, flat: usize) -> DVector<f64> {
        let mut multi = vec![0usize; self.n];
        self.flat_to_multi(flat, &mut multi);
        DVector::from_iterator(self.n, multi.iter().map(|&i| self.axis_coord(i)))
    }

    /// True when the node is at least `ring` nodes away from every face.
    pub fn is_interior(&self, flat: usize, ring: usize) -> bool {
        let m = self.points_per_axis();
        let mut multi = vec![0usize; self.n];
        self.flat_to_multi(flat, &mut multi);
        multi.iter().all(|&i| i >= ring && i + ring < m)
    }

    /// Flat index of the origin node.
    pub fn center_flat(&self) -> usize {
        let multi = vec![self.half_count; self.n];
        self.multi_to_flat(&multi)
    }

    /// Nearest grid node to `x` (component-wise rounding).
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let m = self.points_per_axis();
        let mut multi = vec![0usize; self.n];
        for axis in 0..self.n {
            let u = x[axis] / self.spacing + self.half_count as f64;
            let i = u.round();
            if i < 0.0 || i > (m - 1) as f64 {
                return None;
            }
            multi[axis] = i as usize;
        }
        Some(self.multi_to_flat(&multi))
    }
}

/// Pointwise jet of f at a grid node: value, gradient and symmetrized hessian
/// from second-order centered differences.
#[derive(Debug, Clone)]
pub struct JetSample {
    pub point: DVector<f64>,
    /// k-vector f(x).
    pub value: DVector<f64>,
    /// k x n matrix, row alpha = Df^alpha.
    pub gradient: DMatrix<f64>,
    /// One n x n symmetric matrix per codimension component.
    pub hessian: Vec<DMatrix<f64>>,
}

impl JetSample {
    /// Evaluate the second-order Taylor model of this jet at `y`.
    pub fn taylor_value(&self, y: &[f64]) -> DVector<f64> {
        let n = self.point.len();
        let k = self.value.len();
        let d = DVector::from_iterator(n, (0..n).map(|i| y[i] - self.point[i]));
        let mut out = self.value.clone();
        for alpha in 0..k {
            let mut v = 0.0;
            for i in 0..n {
                v += self.gradient[(alpha, i)] * d[i];
            }
            v += 0.5 * (&d.transpose() * &self.hessian[alpha] * &d)[(0, 0)];
            out[alpha] += v;
        }
        out
    }

    /// Jet of the second-order Taylor model at `y` (hessian is carried over).
    pub fn taylor_jet(&self, y: &[f64]) -> JetSample {
        let n = self.point.len();
        let k = self.value.len();
        let d = DVector::from_iterator(n, (0..n).map(|i| y[i] - self.point[i]));
        let value = self.taylor_value(y);
        let mut gradient = self.gradient.clone();
        for alpha in 0..k {
            let corr = &self.hessian[alpha] * &d;
            for i in 0..n {
                gradient[(alpha, i)] += corr[i];
            }
        }
        JetSample {
            point: DVector::from_column_slice(y),
            value,
            gradient,
            hessian: self.hessian.clone(),
        }
    }

    /// Operator norm of the gradient (largest singular value).
    pub fn gradient_norm(&self) -> f64 {
        if self.gradient.is_empty() {
            return 0.0;
        }
        self.gradient.clone().singular_values().max()
    }
}

/// Sampled graph map f: R^n -> R^k on a cube grid.
#[derive(Debug, Clone)]
pub struct GraphField {
    spec: GridSpec,
    /// Node-major storage: k contiguous components per node, nodes in
    /// row-major (lexicographic) order.
    values: Vec<f64>,
    gradient_bound: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    spec: GridSpec,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gradient_bound: Option<f64>,
}

impl GraphField {
    /// Evaluate `generator` at every node. Rejects non-finite outputs.
    pub fn build<G>(spec: GridSpec, generator: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> Vec<f64>,
    {
        let k = spec.k();
        let mut values = vec![0.0; spec.num_nodes() * k];
        let mut multi = vec![0usize; spec.n()];
        let mut point = vec![0.0; spec.n()];
        for flat in 0..spec.num_nodes() {
            spec.flat_to_multi(flat, &mut multi);
            for axis in 0..spec.n() {
                point[axis] = spec.axis_coord(multi[axis]);
            }
            let v = generator(&point);
            assert_eq!(v.len(), k, "generator must return k = {k} components");
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFiniteValue { node: point.clone() });
            }
            values[flat * k..(flat + 1) * k].copy_from_slice(&v);
        }
        Ok(Self { spec, values, gradient_bound: None })
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.num_nodes() * spec.k() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.num_nodes() * spec.k(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let node = spec.node_point(pos / spec.k());
            return Err(Error::NonFiniteValue { node: node.iter().copied().collect() });
        }
        Ok(Self { spec, values, gradient_bound: None })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, flat: usize) -> &[f64] {
        let k = self.spec.k();
        &self.values[flat * k..(flat + 1) * k]
    }

    pub fn gradient_bound(&self) -> Option<f64> {
        self.gradient_bound
    }

    pub fn with_gradient_bound(mut self, c0: f64) -> Self {
        self.gradient_bound = Some(c0);
        self
    }

    /// Measured sup of the centered-difference gradient norm over interior
    /// nodes, compared against the declared bound (reported, never enforced).
    pub fn check_gradient_bound(&self) -> GradientBoundReport {
        let mut measured: f64 = 0.0;
        for flat in 0..self.spec.num_nodes() {
            if self.spec.is_interior(flat, 1) {
                let jet = self.jet_at(flat).expect("interior node");
                measured = measured.max(jet.gradient_norm());
            }
        }
        let tolerance = 10.0 * self.spec.spacing();
        GradientBoundReport {
            declared: self.gradient_bound,
            measured,
            tolerance,
            within: self.gradient_bound.map(|c0| measured <= c0 + tolerance),
        }
    }

    /// Centered-difference jet at an interior node.
    pub fn jet_at(&self, flat: usize) -> Result<JetSample> {
        let spec = &self.spec;
        let (n, k, h) = (spec.n(), spec.k(), spec.spacing());
        let m = spec.points_per_axis();
        let strides = spec.strides();
        let mut multi = vec![0usize; n];
        spec.flat_to_multi(flat, &mut multi);
        for axis in 0..n {
            if multi[axis] == 0 || multi[axis] + 1 >= m {
                return Err(Error::BoundaryNode { axis });
            }
        }
        let point = spec.node_point(flat);
        let value = DVector::from_column_slice(self.value(flat));
        let mut gradient = DMatrix::zeros(k, n);
        let mut hessian = vec![DMatrix::zeros(n, n); k];
        let at = |f: usize, alpha: usize| self.values[f * k + alpha];
        for i in 0..n {
            let (p, q) = (flat + strides[i], flat - strides[i]);
            for alpha in 0..k {
                gradient[(alpha, i)] = (at(p, alpha) - at(q, alpha)) / (2.0 * h);
                hessian[alpha][(i, i)] =
                    (at(p, alpha) - 2.0 * at(flat, alpha) + at(q, alpha)) / (h * h);
            }
            for j in (i + 1)..n {
                let pp = flat + strides[i] + strides[j];
                let pm = flat + strides[i] - strides[j];
                let mp = flat - strides[i] + strides[j];
                let mm = flat - strides[i] - strides[j];
                for alpha in 0..k {
                    let v = (at(pp, alpha) - at(pm, alpha) - at(mp, alpha) + at(mm, alpha))
                        / (4.0 * h * h);
                    hessian[alpha][(i, j)] = v;
                    hessian[alpha][(j, i)] = v;
                }
            }
        }
        Ok(JetSample { point, value, gradient, hessian })
    }

    /// Multilinear interpolation over the containing cell.
    pub fn interpolate(&self, x: &[f64]) -> Result<DVector<f64>> {
        let cell = self.locate_cell(x)?;
        let k = self.spec.k();
        let mut out = DVector::zeros(k);
        self.for_each_corner(&cell, |corner_flat, weight| {
            let v = self.value(corner_flat);
            for alpha in 0..k {
                out[alpha] += weight * v[alpha];
            }
        });
        Ok(out)
    }

    /// Multilinear blend of the centered-difference jets at the cell corners.
    /// All corners must be interior nodes.
    pub fn jet_interp(&self, x: &[f64]) -> Result<JetSample> {
        let cell = self.locate_cell(x)?;
        let (n, k) = (self.spec.n(), self.spec.k());
        let mut value = DVector::zeros(k);
        let mut gradient = DMatrix::zeros(k, n);
        let mut hessian = vec![DMatrix::zeros(n, n); k];
        let mut err = None;
        self.for_each_corner(&cell, |corner_flat, weight| {
            if err.is_some() {
                return;
            }
            match self.jet_at(corner_flat) {
                Ok(jet) => {
                    value.axpy(weight, &jet.value, 1.0);
                    gradient += &jet.gradient * weight;
                    for alpha in 0..k {
                        hessian[alpha] += &jet.hessian[alpha] * weight;
                    }
                }
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(JetSample { point: DVector::from_column_slice(x), value, gradient, hessian })
    }

    fn locate_cell(&self, x: &[f64]) -> Result<Cell> {
        let spec = &self.spec;
        let m = spec.points_per_axis();
        let h = spec.spacing();
        let mut base = vec![0usize; spec.n()];
        let mut frac = vec![0.0; spec.n()];
        for axis in 0..spec.n() {
            let u = x[axis] / h + spec.half_count as f64;
            // Tolerate roundoff right at the faces.
            if u < -1e-9 {
                return Err(Error::OutOfDomain { axis, overshoot: -u * h });
            }
            if u > (m - 1) as f64 + 1e-9 {
                return Err(Error::OutOfDomain { axis, overshoot: (u - (m - 1) as f64) * h });
            }
            let clamped = u.clamp(0.0, (m - 1) as f64);
            let i0 = (clamped.floor() as usize).min(m - 2);
            base[axis] = i0;
            frac[axis] = clamped - i0 as f64;
        }
        Ok(Cell { base, frac })
    }

    fn for_each_corner<F: FnMut(usize, f64)>(&self, cell: &Cell, mut f: F) {
        let n = self.spec.n();
        let mut multi = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            for axis in 0..n {
                let hi = (corner >> axis) & 1 == 1;
                multi[axis] = cell.base[axis] + hi as usize;
                weight *= if hi { cell.frac[axis] } else { 1.0 - cell.frac[axis] };
            }
            if weight != 0.0 {
                f(self.spec.multi_to_flat(&multi), weight);
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = FieldJson {
            spec: self.spec.clone(),
            values: self.values.clone(),
            gradient_bound: self.gradient_bound,
        };
        serde_json::to_string(&doc).expect("field serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldJson = serde_json::from_str(text)?;
        let mut field = Self::from_values(doc.spec, doc.values)?;
        field.gradient_bound = doc.gradient_bound;
        Ok(field)
    }
}

struct Cell {
    base: Vec<usize>,
    frac: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientBoundReport {
    pub declared: Option<f64>,
    pub measured: f64,
    pub tolerance: f64,
    pub within: Option<bool>,
}

/// All grid nodes with |x| <= R, lexicographic order, midpoint weight h^n.
pub fn ball_quadrature_nodes(spec: &GridSpec, radius: f64) -> Result<Vec<(usize, f64)>> {
    if radius > spec.half_width() + 1e-12 {
        return Err(Error::RadiusTooLarge { requested: radius, max: spec.half_width() });
    }
    let weight = spec.spacing().powi(spec.n() as i32);
    let mut multi = vec![0usize; spec.n()];
    let mut nodes = Vec::new();
    let r2 = radius * radius * (1.0 + 1e-14);
    for flat in 0..spec.num_nodes() {
        spec.flat_to_multi(flat, &mut multi);
        let norm2: f64 = multi.iter().map(|&i| spec.axis_coord(i).powi(2)).sum();
        if norm2 <= r2 {
            nodes.push((flat, weight));
        }
    }
    Ok(nodes)
}
