use super::{tensor, ComplexMatrix, Dim, FactorPermutation, Limits};
use crate::error::{Error, Result};

/// A candidate quantum channel in Kraus form, `rho -> sum_k K_k rho K_k†`.
///
/// Kraus lists are kept as given; two channels are compared through
/// [`CptniMap::deviation`], never by their Kraus operators.
#[derive(Clone, Debug)]
pub struct CptniMap {
    dim_in: Dim,
    dim_out: Dim,
    kraus: Vec<ComplexMatrix>,
}

impl CptniMap {
    pub fn new(dim_in: Dim, dim_out: Dim, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        for k in &kraus {
            if k.rows() != dim_out.get() {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator rows".into(),
                    expected: dim_out.get(),
                    actual: k.rows(),
                });
            }
            if k.cols() != dim_in.get() {
                return Err(Error::DimensionMismatch {
                    context: "Kraus operator columns".into(),
                    expected: dim_in.get(),
                    actual: k.cols(),
                });
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Channel given by Kraus operators whose shape fixes the dimensions.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let dim_out = Dim::new(first.rows())?;
        let dim_in = Dim::new(first.cols())?;
        Self::new(dim_in, dim_out, kraus)
    }

    pub fn identity(dim: Dim) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim.get())],
        }
    }

    /// Conjugation by a single operator.
    pub fn conjugation(op: ComplexMatrix) -> Result<Self> {
        Self::from_kraus(vec![op])
    }

    #[inline]
    pub fn dim_in(&self) -> Dim {
        self.dim_in
    }

    #[inline]
    pub fn dim_out(&self) -> Dim {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Multiplies every Kraus operator by `factor` (the channel by `factor²`).
    pub fn scale_kraus(&self, factor: f64) -> Self {
        Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus: self.kraus.iter().map(|k| k.scale_real(factor)).collect(),
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim_in.get();
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch {
                context: "channel input state".into(),
                expected: d,
                actual: rho.rows().max(rho.cols()),
            });
        }
        let n = self.dim_out.get();
        let mut out = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            let term = k.mul_unchecked(rho).mul_unchecked(&k.adjoint());
            out.add_assign_unchecked(&term, 1.0);
        }
        Ok(out)
    }

    /// `sum_k K_k† K_k`, the operator representing `rho -> tr(apply(rho))`.
    pub fn effect(&self) -> ComplexMatrix {
        self.pullback_unchecked(None)
    }

    /// `sum_k K_k† E K_k`: the effect of "apply, then measure `E`".
    pub fn pullback(&self, e: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim_out.get();
        if e.rows() != n || e.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "pulled-back effect".into(),
                expected: n,
                actual: e.rows().max(e.cols()),
            });
        }
        Ok(self.pullback_unchecked(Some(e)))
    }

    fn pullback_unchecked(&self, e: Option<&ComplexMatrix>) -> ComplexMatrix {
        let d = self.dim_in.get();
        let mut out = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            let inner = match e {
                Some(e) => e.mul_unchecked(k),
                None => k.clone(),
            };
            out.add_assign_unchecked(&k.adjoint().mul_unchecked(&inner), 1.0);
        }
        out
    }

    /// Choi matrix `sum_ij E_ij ⊗ apply(E_ij)`, indexed `[(i, a), (j, b)]`.
    pub fn choi(&self) -> ComplexMatrix {
        let (din, dout) = (self.dim_in.get(), self.dim_out.get());
        let n = din * dout;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.kraus {
            for i in 0..din {
                for a in 0..dout {
                    let x = k.get(a, i);
                    if x.re == 0.0 && x.im == 0.0 {
                        continue;
                    }
                    for jj in 0..din {
                        for b in 0..dout {
                            let v = j.get(i * dout + a, jj * dout + b) + x * k.get(b, jj).conj();
                            j.set(i * dout + a, jj * dout + b, v);
                        }
                    }
                }
            }
        }
        j
    }

    /// Smallest eigenvalue of the Choi matrix. The Choi matrix equals
    /// `V V†` where the columns of `V` are the vectorised Kraus operators, so
    /// its nonzero spectrum is that of the Gram matrix `V† V`, which is the
    /// smaller of the two whenever there are fewer Kraus operators than
    /// Choi rows.
    pub fn choi_min_eigenvalue(&self) -> Result<f64> {
        let r = self.kraus.len();
        let n = self.dim_in.get() * self.dim_out.get();
        if r > n {
            return self.choi().min_hermitian_eigenvalue();
        }
        let gram = ComplexMatrix::from_fn(r, r, |p, q| {
            self.kraus[p]
                .data()
                .iter()
                .zip(self.kraus[q].data())
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        let min = gram.min_hermitian_eigenvalue()?;
        Ok(if r < n { min.min(0.0) } else { min })
    }

    /// Largest Choi-block l1 deviation: `max_ij sum_ab |A(E_ij) - B(E_ij)|_ab`.
    /// Zero iff both channels act identically on every operator.
    pub fn deviation(&self, other: &CptniMap) -> Result<f64> {
        if self.dim_in != other.dim_in || self.dim_out != other.dim_out {
            return Err(Error::DimensionMismatch {
                context: "channel comparison".into(),
                expected: self.dim_in.get() * self.dim_out.get(),
                actual: other.dim_in.get() * other.dim_out.get(),
            });
        }
        let (din, dout) = (self.dim_in.get(), self.dim_out.get());
        let diff = self.choi().sub(&other.choi())?;
        let mut worst: f64 = 0.0;
        for i in 0..din {
            for j in 0..din {
                let mut s = 0.0;
                for a in 0..dout {
                    for b in 0..dout {
                        s += diff.get(i * dout + a, j * dout + b).norm();
                    }
                }
                worst = worst.max(s);
            }
        }
        Ok(worst)
    }

    pub fn approx_eq(&self, other: &CptniMap, tol: f64) -> bool {
        matches!(self.deviation(other), Ok(d) if d <= tol)
    }

    /// `self ∘ Ad(P)`: accepts input factors in the order `p.dims()` and
    /// routes them to the order this channel expects, `p.output_dims()`.
    pub fn with_input_permutation(&self, p: &FactorPermutation) -> Result<Self> {
        if p.total_dim() != self.dim_in.get() {
            return Err(Error::DimensionMismatch {
                context: "input permutation".into(),
                expected: self.dim_in.get(),
                actual: p.total_dim(),
            });
        }
        if p.is_identity() {
            return Ok(self.clone());
        }
        let map = p.index_map();
        let kraus = self
            .kraus
            .iter()
            .map(|k| ComplexMatrix::from_fn(k.rows(), k.cols(), |r, c| k.get(r, map[c])))
            .collect();
        Ok(Self {
            kraus,
            ..self.clone()
        })
    }

    /// `Ad(P) ∘ self`: reorders the output factors from `p.dims()` to
    /// `p.output_dims()`.
    pub fn with_output_permutation(&self, p: &FactorPermutation) -> Result<Self> {
        if p.total_dim() != self.dim_out.get() {
            return Err(Error::DimensionMismatch {
                context: "output permutation".into(),
                expected: self.dim_out.get(),
                actual: p.total_dim(),
            });
        }
        if p.is_identity() {
            return Ok(self.clone());
        }
        let map = p.index_map();
        let kraus = self
            .kraus
            .iter()
            .map(|k| {
                let mut m = ComplexMatrix::zeros(k.rows(), k.cols());
                for r in 0..k.rows() {
                    for c in 0..k.cols() {
                        m.set(map[r], c, k.get(r, c));
                    }
                }
                m
            })
            .collect();
        Ok(Self {
            kraus,
            ..self.clone()
        })
    }
}

/// `g ∘ f`, Kraus set `{G_j K_i}`.
pub fn kraus_compose(g: &CptniMap, f: &CptniMap) -> Result<CptniMap> {
    kraus_compose_limited(g, f, &Limits::default())
}

pub fn kraus_compose_limited(g: &CptniMap, f: &CptniMap, limits: &Limits) -> Result<CptniMap> {
    if f.dim_out != g.dim_in {
        return Err(Error::DimensionMismatch {
            context: "channel composition".into(),
            expected: g.dim_in.get(),
            actual: f.dim_out.get(),
        });
    }
    let count = g.kraus.len() * f.kraus.len();
    limits.check_kraus(count)?;
    let mut kraus = Vec::with_capacity(count);
    for gk in &g.kraus {
        for fk in &f.kraus {
            kraus.push(gk.mul_unchecked(fk));
        }
    }
    Ok(CptniMap {
        dim_in: f.dim_in,
        dim_out: g.dim_out,
        kraus,
    })
}

/// `f ⊗ g`, Kraus set `{K_i ⊗ G_j}`.
pub fn kraus_tensor(f: &CptniMap, g: &CptniMap) -> Result<CptniMap> {
    kraus_tensor_limited(f, g, &Limits::default())
}

pub fn kraus_tensor_limited(f: &CptniMap, g: &CptniMap, limits: &Limits) -> Result<CptniMap> {
    let dim_in = f.dim_in * g.dim_in;
    let dim_out = f.dim_out * g.dim_out;
    limits.check_dim(dim_in.get())?;
    limits.check_dim(dim_out.get())?;
    let count = f.kraus.len() * g.kraus.len();
    limits.check_kraus(count)?;
    let mut kraus = Vec::with_capacity(count);
    for a in &f.kraus {
        for b in &g.kraus {
            kraus.push(tensor(a, b));
        }
    }
    Ok(CptniMap {
        dim_in,
        dim_out,
        kraus,
    })
}

/// Tensor of a sequence of channels; the empty tensor is `id_1`.
pub fn kraus_tensor_all<'a>(
    maps: impl IntoIterator<Item = &'a CptniMap>,
    limits: &Limits,
) -> Result<CptniMap> {
    maps.into_iter()
        .try_fold(CptniMap::identity(Dim::ONE), |acc, m| {
            kraus_tensor_limited(&acc, m, limits)
        })
}
