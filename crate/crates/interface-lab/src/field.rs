//! Scalar samples on the interface with an interpretation tag.
//!
//! Every field on the curve is stored as one real sample per collocation
//! node. The `FieldKind` tag records how the samples are meant to be read:
//! a plain scalar, the coefficient `g` of a tangent vector `g·τ`, or the
//! coefficient `w` of a normal vector `w·N₊`. Operators check the tag so
//! that, for example, a surface divergence is never applied to a plain
//! scalar by accident.

use crate::error::{Result, SolverError};
use nalgebra::DVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    /// Coefficient of the unit tangent: the field is `g·τ`.
    TangentVector,
    /// Coefficient of the outward interior normal: the field is `w·N₊`.
    NormalComponent,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Scalar => "scalar",
            FieldKind::TangentVector => "tangent-vector",
            FieldKind::NormalComponent => "normal-component",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryField {
    values: DVector<f64>,
    kind: FieldKind,
    mean_zero: bool,
    resolution_warning: bool,
}

impl BoundaryField {
    pub fn new(values: Vec<f64>, kind: FieldKind) -> Self {
        Self {
            values: DVector::from_vec(values),
            kind,
            mean_zero: false,
            resolution_warning: false,
        }
    }

    pub fn scalar(values: Vec<f64>) -> Self {
        Self::new(values, FieldKind::Scalar)
    }

    pub fn tangent(values: Vec<f64>) -> Self {
        Self::new(values, FieldKind::TangentVector)
    }

    pub fn normal_component(values: Vec<f64>) -> Self {
        Self::new(values, FieldKind::NormalComponent)
    }

    pub fn zeros(n: usize, kind: FieldKind) -> Self {
        Self::new(vec![0.0; n], kind)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.as_slice().to_vec()
    }

    /// Returns the same samples under a different interpretation.
    pub fn reinterpret(&self, kind: FieldKind) -> Self {
        let mut out = self.clone();
        out.kind = kind;
        out
    }

    pub fn expect_kind(&self, kind: FieldKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(SolverError::WrongFieldKind {
                expected: kind.name(),
                got: self.kind.name(),
            }
            .into())
        }
    }

    /// True if the mean-zero flag has been established for this field.
    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub(crate) fn set_mean_zero(&mut self, flag: bool) {
        self.mean_zero = flag;
    }

    pub fn resolution_warning(&self) -> bool {
        self.resolution_warning
    }

    pub(crate) fn set_resolution_warning(&mut self, flag: bool) {
        self.resolution_warning = flag;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.as_slice().iter().map(|&v| f(v)).collect(), self.kind)
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.map(|v| c * v);
        out.mean_zero = self.mean_zero;
        out
    }

    /// Pointwise sum; both fields must share the interpretation tag.
    pub fn add(&self, other: &Self) -> Result<Self> {
        other.expect_kind(self.kind)?;
        if self.len() != other.len() {
            return Err(SolverError::ShapeMismatch {
                got: other.len(),
                want: self.len(),
            }
            .into());
        }
        let mut out = Self::new(
            self.as_slice()
                .iter()
                .zip(other.as_slice())
                .map(|(a, b)| a + b)
                .collect(),
            self.kind,
        );
        out.mean_zero = self.mean_zero && other.mean_zero;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product; the result is tagged with the given kind.
    pub fn mul_pointwise(&self, other: &Self, kind: FieldKind) -> Result<Self> {
        if self.len() != other.len() {
            return Err(SolverError::ShapeMismatch {
                got: other.len(),
                want: self.len(),
            }
            .into());
        }
        Ok(Self::new(
            self.as_slice()
                .iter()
                .zip(other.as_slice())
                .map(|(a, b)| a * b)
                .collect(),
            kind,
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}
