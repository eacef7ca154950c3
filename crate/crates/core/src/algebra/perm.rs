use super::{ComplexMatrix, Dim, C64};
use crate::error::{Error, Result};

/// Reordering of tensor factors. Output position `i` carries input factor
/// `perm[i]`, so the output dims are `dims[perm[0]], dims[perm[1]], ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorPermutation {
    dims: Vec<Dim>,
    perm: Vec<usize>,
}

impl FactorPermutation {
    pub fn new(dims: Vec<Dim>, perm: Vec<usize>) -> Result<Self> {
        let n = dims.len();
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::BadPermutation(perm));
        }
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::BadPermutation(perm));
            }
            seen[p] = true;
        }
        Ok(Self { dims, perm })
    }

    pub fn identity(dims: Vec<Dim>) -> Self {
        let perm = (0..dims.len()).collect();
        Self { dims, perm }
    }

    /// Permutation taking factors labelled by `source` into the order of
    /// `target`. Both must hold the same labels exactly once.
    pub fn between<K: PartialEq + std::fmt::Debug>(
        dims: Vec<Dim>,
        source: &[K],
        target: &[K],
    ) -> Result<Self> {
        if source.len() != target.len() || dims.len() != source.len() {
            return Err(Error::BadPermutation(Vec::new()));
        }
        let perm = target
            .iter()
            .map(|t| {
                source
                    .iter()
                    .position(|s| s == t)
                    .ok_or_else(|| Error::BadPermutation(Vec::new()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dims, perm)
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn output_dims(&self) -> Vec<Dim> {
        self.perm.iter().map(|&p| self.dims[p]).collect()
    }

    pub fn total_dim(&self) -> usize {
        Dim::product(&self.dims).get()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self {
            dims: self.output_dims(),
            perm: inv,
        }
    }

    /// `map[input_index] = output_index` for the induced basis permutation.
    pub fn index_map(&self) -> Vec<usize> {
        let n = self.dims.len();
        let total = self.total_dim();
        let out_dims = self.output_dims();
        let mut out_strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * out_dims[i + 1].get();
        }
        // stride, inside the output index, of each input factor
        let mut stride_of_input = vec![0usize; n];
        for (i, &p) in self.perm.iter().enumerate() {
            stride_of_input[p] = out_strides[i];
        }
        let mut map = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for _ in 0..total {
            map.push(
                digits
                    .iter()
                    .zip(&stride_of_input)
                    .map(|(d, s)| d * s)
                    .sum(),
            );
            for f in (0..n).rev() {
                digits[f] += 1;
                if digits[f] < self.dims[f].get() {
                    break;
                }
                digits[f] = 0;
            }
        }
        map
    }
}

/// The unitary `P` with `P |input basis⟩ = |permuted basis⟩`.
pub fn permutation_matrix(p: &FactorPermutation) -> ComplexMatrix {
    let n = p.total_dim();
    let mut m = ComplexMatrix::zeros(n, n);
    for (input, output) in p.index_map().into_iter().enumerate() {
        m.set(output, input, C64::new(1.0, 0.0));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::tensor;

    fn dims(v: &[usize]) -> Vec<Dim> {
        v.iter().map(|&d| Dim::new(d).unwrap()).collect()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(FactorPermutation::new(dims(&[2, 2]), vec![0, 0]).is_err());
        assert!(FactorPermutation::new(dims(&[2, 2]), vec![0, 2]).is_err());
        assert!(FactorPermutation::new(dims(&[2, 2]), vec![0]).is_err());
    }

    #[test]
    fn identity_is_identity_matrix() {
        let p = FactorPermutation::identity(dims(&[2, 3]));
        assert_eq!(permutation_matrix(&p), ComplexMatrix::identity(6));
    }

    #[test]
    fn swap_2_3_is_a_permutation_matrix() {
        let p = FactorPermutation::new(dims(&[2, 3]), vec![1, 0]).unwrap();
        let m = permutation_matrix(&p);
        assert_eq!(m.rows(), 6);
        for i in 0..6 {
            let ones = (0..6).filter(|&j| m.get(i, j) == C64::new(1.0, 0.0)).count();
            let zeros = (0..6).filter(|&j| m.get(i, j) == C64::new(0.0, 0.0)).count();
            assert_eq!((ones, zeros), (1, 5));
        }
    }

    #[test]
    fn swap_conjugation_exchanges_factors() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = ComplexMatrix::from_real_rows(&[&[0.0, 5.0, 1.0], &[6.0, 7.0, 0.5], &[1.0, 0.0, 2.0]]);
        let p = FactorPermutation::new(dims(&[2, 3]), vec![1, 0]).unwrap();
        let pm = permutation_matrix(&p);
        let conj = pm
            .matmul(&tensor(&a, &b))
            .unwrap()
            .matmul(&pm.adjoint())
            .unwrap();
        assert_eq!(conj, tensor(&b, &a));
    }

    #[test]
    fn inverse_composes_to_identity_exactly() {
        let p = FactorPermutation::new(dims(&[2, 3, 4]), vec![2, 0, 1]).unwrap();
        let prod = permutation_matrix(&p)
            .matmul(&permutation_matrix(&p.inverse()))
            .unwrap();
        // both orders must be the exact identity
        assert_eq!(prod, ComplexMatrix::identity(24));
        let prod2 = permutation_matrix(&p.inverse())
            .matmul(&permutation_matrix(&p))
            .unwrap();
        assert_eq!(prod2, ComplexMatrix::identity(24));
    }

    #[test]
    fn between_labels() {
        let p = FactorPermutation::between(dims(&[2, 3, 5]), &["a", "b", "c"], &["c", "a", "b"]).unwrap();
        assert_eq!(p.perm(), &[2, 0, 1]);
        assert_eq!(p.output_dims(), dims(&[5, 2, 3]));
    }
}
