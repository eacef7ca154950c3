//! Finite-dimensional linear algebra and quantum-channel primitives.

mod channel;
mod matrix;
mod perm;
pub mod random;

use std::ops::Mul;

use serde::{Deserialize, Serialize};

pub use channel::{
    kraus_compose, kraus_compose_limited, kraus_tensor, kraus_tensor_all, kraus_tensor_limited,
    CptniMap,
};
pub use matrix::{tensor, tensor_all, ComplexMatrix, C64, HERMITIAN_TOL};
pub use perm::{permutation_matrix, FactorPermutation};

use crate::error::{Error, Result};
use crate::outcome::CheckOutcome;

/// Default absolute tolerance on eigenvalues for positivity verdicts.
pub const DEFAULT_TOL_PSD: f64 = 1e-9;
/// Tolerance for extensional equality of channels and effects.
pub const EXT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_TOTAL_DIM: usize = 4096;
pub const DEFAULT_MAX_KRAUS: usize = 4096;

/// Hilbert-space dimension, always at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dim(usize);

impl Dim {
    pub const ONE: Dim = Dim(1);

    pub fn new(value: usize) -> Result<Self> {
        if value == 0 {
            Err(Error::ZeroDimension)
        } else {
            Ok(Dim(value))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    pub fn product<'a>(dims: impl IntoIterator<Item = &'a Dim>) -> Dim {
        dims.into_iter().fold(Dim::ONE, |acc, d| acc * *d)
    }
}

impl Mul for Dim {
    type Output = Dim;
    fn mul(self, rhs: Dim) -> Dim {
        Dim(self.0 * rhs.0)
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        Dim::new(v)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.0
    }
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Size caps on operators built by tensoring and composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_total_dim: usize,
    pub max_kraus: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_total_dim: DEFAULT_MAX_TOTAL_DIM,
            max_kraus: DEFAULT_MAX_KRAUS,
        }
    }
}

impl Limits {
    pub fn check_dim(&self, requested: usize) -> Result<()> {
        if requested > self.max_total_dim {
            Err(Error::DimensionLimit {
                requested,
                limit: self.max_total_dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn check_kraus(&self, requested: usize) -> Result<()> {
        if requested > self.max_kraus {
            Err(Error::KrausLimit {
                requested,
                limit: self.max_kraus,
            })
        } else {
            Ok(())
        }
    }
}

/// Hermitian operator read as the functional `rho -> tr(E rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianEffect {
    matrix: ComplexMatrix,
}

impl HermitianEffect {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: Dim) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim.get()),
        }
    }

    pub fn zero(dim: Dim) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim.get(), dim.get()),
        }
    }

    pub fn dim(&self) -> Dim {
        Dim(self.matrix.rows().max(1))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.matrix.min_hermitian_eigenvalue()
    }

    pub fn is_psd(&self, tol_psd: f64) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -tol_psd)
    }

    /// `tr(E rho)`, real part.
    pub fn expectation(&self, rho: &ComplexMatrix) -> Result<f64> {
        Ok(self.matrix.matmul(rho)?.trace().re)
    }

    pub fn max_abs_diff(&self, other: &HermitianEffect) -> Result<f64> {
        self.matrix.max_abs_diff(&other.matrix)
    }
}

/// Partial trace of `m` over the factors listed in `traced`. Remaining
/// factors keep their relative order.
pub fn partial_trace(m: &ComplexMatrix, dims: &[Dim], traced: &[usize]) -> Result<ComplexMatrix> {
    let total = Dim::product(dims).get();
    if !m.is_square() || m.rows() != total {
        return Err(Error::DimensionMismatch {
            context: "partial trace".into(),
            expected: total,
            actual: m.rows(),
        });
    }
    let n = dims.len();
    let mut is_traced = vec![false; n];
    for &t in traced {
        if t >= n {
            return Err(Error::BadIndex { index: t, len: n });
        }
        is_traced[t] = true;
    }
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1].get();
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !is_traced[i]).collect();
    let gone: Vec<usize> = (0..n).filter(|&i| is_traced[i]).collect();
    let offsets = |factors: &[usize]| -> Vec<usize> {
        // flat offsets of every multi-index over `factors`, in lexicographic order
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * dims[f].get());
            for base in &out {
                for d in 0..dims[f].get() {
                    next.push(base + d * strides[f]);
                }
            }
            out = next;
        }
        out
    };
    let kept_off = offsets(&kept);
    let gone_off = offsets(&gone);
    let k = kept_off.len();
    let mut out = ComplexMatrix::zeros(k, k);
    for (r, &ro) in kept_off.iter().enumerate() {
        for (c, &co) in kept_off.iter().enumerate() {
            let s: C64 = gone_off.iter().map(|&g| m.get(ro + g, co + g)).sum();
            out.set(r, c, s);
        }
    }
    Ok(out)
}

/// Complete positivity and trace non-increase, with both witnessing
/// eigenvalues reported as `choi_min_eigenvalue` and `slack_min_eigenvalue`.
pub fn is_cptni(f: &CptniMap, tol_psd: f64) -> CheckOutcome {
    let choi = f.choi_min_eigenvalue();
    let slack = ComplexMatrix::identity(f.dim_in().get())
        .sub(&f.effect())
        .and_then(|m| m.min_hermitian_eigenvalue());
    match (choi, slack) {
        (Ok(c), Ok(s)) => {
            let out = CheckOutcome::pass("cptni")
                .with_metric("choi_min_eigenvalue", c)
                .with_metric("slack_min_eigenvalue", s);
            if c < -tol_psd {
                CheckOutcome {
                    passed: false,
                    detail: format!("Choi matrix has eigenvalue {c:.3e}"),
                    ..out
                }
            } else if s < -tol_psd {
                CheckOutcome {
                    passed: false,
                    detail: format!("trace increasing: I - effect has eigenvalue {s:.3e}"),
                    ..out
                }
            } else {
                out
            }
        }
        (Err(e), _) | (_, Err(e)) => CheckOutcome::fail("cptni", e.to_string()),
    }
}

/// `a ⊒ b` in the Löwner order, reporting `min_eigenvalue` of `a - b`.
pub fn loewner_geq(a: &HermitianEffect, b: &HermitianEffect, tol_psd: f64) -> Result<CheckOutcome> {
    let diff = a.matrix.sub(&b.matrix)?;
    let min = diff.min_hermitian_eigenvalue()?;
    let out = CheckOutcome::pass("loewner").with_metric("min_eigenvalue", min);
    Ok(if min < -tol_psd {
        CheckOutcome {
            passed: false,
            detail: format!("difference has eigenvalue {min:.3e}"),
            ..out
        }
    } else {
        out
    })
}
