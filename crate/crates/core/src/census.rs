//! Arithmetic census of minuscule symplectic representations against the
//! dimensions of the matching Hermitian symmetric domains.
//!
//! A simple factor of type `X_ℓ` acting through `m` (odd) tensor copies of a
//! minuscule representation of dimension `2d` gives `(2d)^m = 2g`; the case
//! is feasible when the real dimension of the domain is at least `2g`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Series {
    A,
    B,
    C,
    DReal,
    DQuaternion,
}

impl Series {
    pub const ALL: [Series; 5] = [Series::A, Series::B, Series::C, Series::DReal, Series::DQuaternion];

    /// Smallest rank considered.
    pub fn floor(self) -> usize {
        match self {
            Series::A | Series::B => 5,
            Series::C => 1,
            Series::DReal | Series::DQuaternion => 6,
        }
    }

    /// Whether the minuscule representation of rank `ell` is symplectic.
    pub fn congruence_ok(self, ell: usize) -> bool {
        match self {
            Series::A => ell % 4 == 1,
            Series::B => matches!(ell % 8, 1 | 2 | 5 | 6),
            Series::C => true,
            Series::DReal | Series::DQuaternion => ell % 4 == 2,
        }
    }

    /// `2d`.
    pub fn rep_dim(self, ell: usize) -> BigUint {
        match self {
            Series::A => binomial(ell + 1, (ell + 1) / 2),
            Series::B => BigUint::one() << ell,
            Series::C => BigUint::from(2 * ell),
            Series::DReal | Series::DQuaternion => BigUint::one() << (ell - 1),
        }
    }

    /// Real dimension of the domain; `r` only matters for type A.
    pub fn domain_dim(self, ell: usize, r: usize) -> BigUint {
        BigUint::from(match self {
            Series::A => 2 * r * (ell + 1 - r),
            Series::B => 2 * (2 * ell - 1),
            Series::C => ell * (ell + 1),
            Series::DReal => 4 * (ell - 1),
            Series::DQuaternion => ell * (ell - 1),
        })
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Series::A => "A",
            Series::B => "B",
            Series::C => "C",
            Series::DReal => "D_real",
            Series::DQuaternion => "D_quaternion",
        })
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * BigUint::from(n - i) / BigUint::from(i + 1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusCase {
    pub series: Series,
    pub ell: usize,
    pub m: usize,
    /// Signature parameter, type A only.
    pub r: Option<usize>,
    pub rep_dim_2d: BigUint,
    pub g: BigUint,
    pub domain_dim: BigUint,
    pub feasible: bool,
    pub congruence_ok: bool,
}

pub fn census_case(series: Series, ell: usize, m: usize, r: Option<usize>) -> Result<CensusCase> {
    if m % 2 == 0 {
        return Err(Error::InvalidParam(format!("tensor multiplicity m = {m} must be odd")));
    }
    if ell < series.floor() {
        return Err(Error::InvalidParam(format!("rank {ell} below the floor {} for {series}", series.floor())));
    }
    let r_val = match (series, r) {
        (Series::A, Some(r)) if (1..=ell).contains(&r) => r,
        (Series::A, _) => return Err(Error::InvalidParam("type A needs 1 ≤ r ≤ ℓ".into())),
        _ => 0,
    };
    let two_d = series.rep_dim(ell);
    let two_g: BigUint = Pow::pow(&two_d, m as u32);
    let domain_dim = series.domain_dim(ell, r_val);
    Ok(CensusCase {
        series,
        ell,
        m,
        r: if series == Series::A { Some(r_val) } else { None },
        g: &two_g >> 1,
        feasible: domain_dim >= two_g,
        rep_dim_2d: two_d,
        domain_dim,
        congruence_ok: series.congruence_ok(ell),
    })
}

/// Every symplectic case with `ℓ ≤ ell_max` and odd `m ≤ m_max`.
pub fn enumerate_cases(ell_max: usize, m_max: usize) -> Result<Vec<CensusCase>> {
    if ell_max < 6 {
        return Err(Error::InvalidParam(format!("ell_max = {ell_max} must be at least 6")));
    }
    if m_max % 2 == 0 {
        return Err(Error::InvalidParam(format!("m_max = {m_max} must be odd")));
    }
    let mut out = Vec::new();
    for series in Series::ALL {
        for ell in series.floor()..=ell_max {
            if !series.congruence_ok(ell) {
                continue;
            }
            for m in (1..=m_max).step_by(2) {
                if series == Series::A {
                    for r in 1..=ell {
                        out.push(census_case(series, ell, m, Some(r))?);
                    }
                } else {
                    out.push(census_case(series, ell, m, None)?);
                }
            }
        }
    }
    Ok(out)
}

/// One CSV line of the table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CensusRow {
    pub series: String,
    pub ell: usize,
    pub m: usize,
    pub r: String,
    pub rep_dim_2d: String,
    pub g: String,
    pub domain_dim: String,
    pub feasible: bool,
}

impl From<&CensusCase> for CensusRow {
    fn from(c: &CensusCase) -> Self {
        CensusRow {
            series: c.series.to_string(),
            ell: c.ell,
            m: c.m,
            r: c.r.map(|r| r.to_string()).unwrap_or_default(),
            rep_dim_2d: c.rep_dim_2d.to_string(),
            g: c.g.to_string(),
            domain_dim: c.domain_dim.to_string(),
            feasible: c.feasible,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CensusReport {
    pub ell_max: usize,
    pub m_max: usize,
    pub cases: usize,
    /// `(series, ℓ, m)` of every feasible case.
    pub feasible: Vec<(Series, usize, usize)>,
    pub rows: Vec<CensusRow>,
}

/// Full table, failing with `CensusViolation` unless the feasible set is
/// exactly `{(C, ℓ, 1)}`.
pub fn census_report(ell_max: usize, m_max: usize) -> Result<CensusReport> {
    let cases = enumerate_cases(ell_max, m_max)?;
    let mut feasible: Vec<(Series, usize, usize)> = cases.iter().filter(|c| c.feasible).map(|c| (c.series, c.ell, c.m)).collect();
    feasible.dedup();
    let expected: Vec<(Series, usize, usize)> = (1..=ell_max).map(|l| (Series::C, l, 1)).collect();
    if feasible != expected {
        let extra: Vec<String> = feasible.iter().filter(|f| !expected.contains(f)).map(|(s, l, m)| format!("{s}{l} m={m}")).collect();
        return Err(Error::CensusViolation(format!("feasible set differs from C-series with m = 1; extra: {}", extra.join(", "))));
    }
    Ok(CensusReport { ell_max, m_max, cases: cases.len(), feasible, rows: cases.iter().map(CensusRow::from).collect() })
}
