//! Named field generators shared by configs, tests, and the CLI: closed
//! forms evaluated onto grids, plus loading stored field files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GraphField, GridSpec};

fn default_radius2() -> f64 {
    2.0
}

fn default_floor() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    Zero,
    Constant {
        value: Vec<f64>,
    },
    /// f^alpha = sum_i a[alpha][i] x_i.
    Linear {
        a: Vec<Vec<f64>>,
    },
    /// Sphere graph sqrt(radius2 - |x|^2), clamped at `floor` so cube
    /// corners outside the sphere stay finite.
    Sphere {
        #[serde(default = "default_radius2")]
        radius2: f64,
        #[serde(default = "default_floor")]
        floor: f64,
    },
    /// Gaussian bump amp * exp(-|x|^2 / width^2).
    Bump {
        amp: f64,
        width: f64,
    },
    /// f = |x| + 1: blow-down limit is the unit cone.
    AbsPlusOne,
    /// f = |x|^2: smooth but not a soliton.
    Quadratic,
    /// Stored field file (JSON field format).
    File {
        path: String,
    },
}

impl FieldKind {
    /// Codimension implied by the parameters, if any.
    pub fn implied_k(&self) -> Option<usize> {
        match self {
            FieldKind::Constant { value } => Some(value.len()),
            FieldKind::Linear { a } => Some(a.len()),
            FieldKind::Sphere { .. }
            | FieldKind::Bump { .. }
            | FieldKind::AbsPlusOne
            | FieldKind::Quadratic => Some(1),
            FieldKind::Zero | FieldKind::File { .. } => None,
        }
    }

    /// Closed-form evaluation; errors for stored-file sources.
    pub fn evaluate(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        match self {
            FieldKind::Zero => Ok(vec![0.0; k]),
            FieldKind::Constant { value } => Ok(value.clone()),
            FieldKind::Linear { a } => Ok(a
                .iter()
                .map(|row| row.iter().zip(x).map(|(c, xi)| c * xi).sum())
                .collect()),
            FieldKind::Sphere { radius2, floor } => Ok(vec![(radius2 - r2).max(*floor).sqrt()]),
            FieldKind::Bump { amp, width } => Ok(vec![amp * (-r2 / (width * width)).exp()]),
            FieldKind::AbsPlusOne => Ok(vec![r2.sqrt() + 1.0]),
            FieldKind::Quadratic => Ok(vec![r2]),
            FieldKind::File { path } => Err(Error::InvalidConfig(format!(
                "field kind 'file' ({path}) has no closed form"
            ))),
        }
    }

    fn validate(&self, spec: &GridSpec) -> Result<()> {
        if let Some(k) = self.implied_k() {
            if k != spec.k() {
                return Err(Error::InvalidConfig(format!(
                    "field kind implies codimension {k}, grid has k = {}",
                    spec.k()
                )));
            }
        }
        if let FieldKind::Linear { a } = self {
            if a.iter().any(|row| row.len() != spec.n()) {
                return Err(Error::InvalidConfig(format!(
                    "linear coefficient rows must have length n = {}",
                    spec.n()
                )));
            }
        }
        Ok(())
    }

    /// Materialize on the given grid. Stored files must match the grid.
    pub fn realize(&self, spec: &GridSpec) -> Result<GraphField> {
        if let FieldKind::File { path } = self {
            let text = std::fs::read_to_string(path)?;
            let field = GraphField::from_json(&text)?;
            if field.spec() != spec {
                return Err(Error::GridMismatch(format!(
                    "stored field {path} has a different grid than the config"
                )));
            }
            return Ok(field);
        }
        self.validate(spec)?;
        let k = spec.k();
        GraphField::build(spec.clone(), |x| {
            self.evaluate(x, k).expect("closed form validated above")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_roundtrip_through_json() {
        let kinds = vec![
            FieldKind::Zero,
            FieldKind::Constant { value: vec![1.0, -2.0] },
            FieldKind::Linear { a: vec![vec![0.5, -1.0]] },
            FieldKind::Sphere { radius2: 2.0, floor: 0.01 },
            FieldKind::Bump { amp: 0.1, width: 0.5 },
            FieldKind::AbsPlusOne,
            FieldKind::Quadratic,
        ];
        for kind in kinds {
            let text = serde_json::to_string(&kind).unwrap();
            let back: FieldKind = serde_json::from_str(&text).unwrap();
            let x = [0.3, -0.2];
            let k = kind.implied_k().unwrap_or(1);
            assert_eq!(kind.evaluate(&x, k).unwrap(), back.evaluate(&x, k).unwrap());
        }
    }

    #[test]
    fn sphere_defaults_apply() {
        let kind: FieldKind = serde_json::from_str(r#"{"kind":"sphere"}"#).unwrap();
        let v = kind.evaluate(&[0.0, 0.0], 1).unwrap();
        assert!((v[0] - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn codimension_mismatch_rejected() {
        let spec = GridSpec::new(2, 2, 1.0, 0.25).unwrap();
        let kind = FieldKind::Quadratic;
        assert!(matches!(kind.realize(&spec), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn linear_realizes_expected_values() {
        let spec = GridSpec::new(2, 1, 1.0, 0.5).unwrap();
        let kind = FieldKind::Linear { a: vec![vec![2.0, -1.0]] };
        let field = kind.realize(&spec).unwrap();
        let center = spec.center_flat();
        assert_eq!(field.value(center)[0], 0.0);
        let flat = spec.num_nodes() - 1; // corner (1, 1)
        assert_eq!(field.value(flat)[0], 1.0);
    }
}
