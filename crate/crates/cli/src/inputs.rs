//! Loose input forms accepted in job files.

use betti_core::poly::{parse_rational, parse_sparse, Poly, QPoly};
use betti_core::{Rational, C64};
use num_complex::Complex;
use serde::Deserialize;

use crate::CliError;

/// A rational given as an integer, a decimal or a `"p/q"` string.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RatInput {
    Int(i64),
    Text(String),
    Float(f64),
}

impl RatInput {
    pub fn to_rational(&self) -> Result<Rational, CliError> {
        let text = match self {
            RatInput::Int(k) => return Ok(Rational::from_integer((*k).into())),
            RatInput::Text(s) => s.clone(),
            // `Display` for f64 never uses an exponent.
            RatInput::Float(x) if x.is_finite() => x.to_string(),
            RatInput::Float(x) => return Err(CliError::Schema(format!("non-finite number {x}"))),
        };
        Ok(parse_rational(&text)?)
    }
}

/// A polynomial: sparse text (`"x^4-1"`) or dense coefficients, constant first.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PolyInput {
    Sparse(String),
    Dense(Vec<RatInput>),
}

impl PolyInput {
    pub fn to_poly(&self) -> Result<QPoly, CliError> {
        match self {
            PolyInput::Sparse(s) => Ok(parse_sparse(s)?),
            PolyInput::Dense(cs) => Ok(Poly::new(cs.iter().map(RatInput::to_rational).collect::<Result<_, _>>()?)),
        }
    }
}

/// A matrix entry: exact rational or complex `[re, im]`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EntryInput {
    Complex([f64; 2]),
    Exact(RatInput),
}

impl EntryInput {
    pub fn to_complex(&self) -> Result<C64, CliError> {
        match self {
            EntryInput::Complex([re, im]) => Ok(Complex::new(*re, *im)),
            EntryInput::Exact(r) => {
                use num_traits::ToPrimitive;
                Ok(Complex::new(r.to_rational()?.to_f64().unwrap_or(f64::NAN), 0.0))
            }
        }
    }
}
