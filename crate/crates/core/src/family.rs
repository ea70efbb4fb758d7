//! Holomorphic parameter maps `t ∈ ℂ^d ↦ FamilyPoint`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::curve::{make_point, FamilyModel, FamilyPoint, ModelKind};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Family {
    /// The model's own parameters.
    Universal { model: FamilyModel },
    /// `s = base + Σ_k t_k·directions[k]`.  A zero direction is a dummy
    /// parameter the curve does not depend on.
    Slice { model: FamilyModel, base: Vec<C64>, directions: Vec<Vec<C64>> },
    /// `f(x) = f₀(x − t)` for the even-degree `f₀` with coefficients `base`.
    /// All fibres are isomorphic.
    Translation { model: FamilyModel, base: Vec<C64> },
}

impl Family {
    pub fn universal(model: FamilyModel) -> Self {
        Family::Universal { model }
    }

    pub fn model(&self) -> FamilyModel {
        match self {
            Family::Universal { model } | Family::Slice { model, .. } | Family::Translation { model, .. } => *model,
        }
    }

    /// Number of complex parameters `d`.
    pub fn dim(&self) -> usize {
        match self {
            Family::Universal { model } => model.arity(),
            Family::Slice { directions, .. } => directions.len(),
            Family::Translation { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Universal { .. } => Ok(()),
            Family::Slice { model, base, directions } => {
                let n = model.arity();
                if base.len() != n {
                    return Err(Error::Arity { expected: n, got: base.len() });
                }
                match directions.iter().find(|d| d.len() != n) {
                    Some(d) => Err(Error::Arity { expected: n, got: d.len() }),
                    None => Ok(()),
                }
            }
            Family::Translation { model, base } => {
                if model.kind != ModelKind::EvenDeg {
                    return Err(Error::Unsupported("translation families need the even-degree model".into()));
                }
                if base.len() != model.arity() {
                    return Err(Error::Arity { expected: model.arity(), got: base.len() });
                }
                Ok(())
            }
        }
    }

    /// Model parameters at `t`, unvalidated.
    pub fn params(&self, t: &[C64]) -> Result<Vec<C64>> {
        if t.len() != self.dim() {
            return Err(Error::Arity { expected: self.dim(), got: t.len() });
        }
        self.validate()?;
        Ok(match self {
            Family::Universal { .. } => t.to_vec(),
            Family::Slice { base, directions, .. } => {
                let mut s = base.clone();
                for (tk, d) in t.iter().zip(directions) {
                    for (si, di) in s.iter_mut().zip(d) {
                        *si += tk * di;
                    }
                }
                s
            }
            Family::Translation { model, base } => {
                let f0 = model.polynomial::<f64>(base);
                let shift = Poly::new(vec![-t[0], Complex::new(1.0, 0.0)]);
                let mut acc = Poly::zero();
                for a in f0.coeffs().iter().rev() {
                    acc = &(&acc * &shift) + &Poly::constant(*a);
                }
                let mut cs = acc.into_coeffs();
                cs.truncate(model.arity());
                cs
            }
        })
    }

    pub fn point(&self, t: &[C64]) -> Result<FamilyPoint> {
        make_point(self.model(), self.params(t)?)
    }

    /// Parameter of the family that reproduces a model point, when the family
    /// is universal.
    pub fn coordinates_of(&self, p: &FamilyPoint) -> Option<Vec<C64>> {
        match self {
            Family::Universal { model } if *model == p.family() => Some(p.params.clone()),
            _ => None,
        }
    }
}
