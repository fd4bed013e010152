//! Per-node scalar and tangent-vector fields.
//!
//! Vector components are stored in the orthonormal frame of the grid's
//! chart (e.g. `(e_theta, e_phi)` on the sphere); metric coefficients are
//! applied inside the differential operators, never by callers.

use ndarray::Array1;

use crate::error::{Error, Result};

/// A real-valued function sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Array1<f64>,
}

impl ScalarField {
    pub fn new(values: Array1<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: Array1::zeros(len),
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(Array1::from_vec(values))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array1<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array1<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Array1<f64>> for ScalarField {
    fn from(values: Array1<f64>) -> Self {
        Self { values }
    }
}

/// A tangent vector field, one component array per frame direction.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    comps: Vec<Array1<f64>>,
}

impl VectorField {
    pub fn new(comps: Vec<Array1<f64>>) -> Result<Self> {
        for c in &comps {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { comps })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            comps: (0..dim).map(|_| Array1::zeros(len)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn len(&self) -> usize {
        self.comps.first().map_or(0, |c| c.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn comp(&self, i: usize) -> &Array1<f64> {
        &self.comps[i]
    }

    pub fn comp_mut(&mut self, i: usize) -> &mut Array1<f64> {
        &mut self.comps[i]
    }

    pub fn comps(&self) -> &[Array1<f64>] {
        &self.comps
    }

    /// Pointwise squared norm `|X|_g^2` (frame is orthonormal).
    pub fn norm_sq(&self) -> ScalarField {
        let mut out = Array1::zeros(self.len());
        for c in &self.comps {
            out.zip_mut_with(c, |o, v| *o += v * v);
        }
        ScalarField::from(out)
    }

    /// Pointwise inner product with another field on the same grid.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        assert_eq!(self.dim(), other.dim());
        let mut out = Array1::zeros(self.len());
        for (a, b) in self.comps.iter().zip(&other.comps) {
            out.zip_mut_with(&(a * b), |o, v| *o += v);
        }
        ScalarField::from(out)
    }

    pub fn scale_pointwise(&self, s: &ScalarField) -> VectorField {
        VectorField {
            comps: self.comps.iter().map(|c| c * s.values()).collect(),
        }
    }
}
