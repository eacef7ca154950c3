//! Random matrices, states and channels for sampling-based checks.

use rand::Rng;

use super::{ComplexMatrix, CptniMap, Dim, C64};

pub fn index<R: Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.gen_range(0..n)
}

fn entry<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Matrix with entries uniform in the unit square of the complex plane.
pub fn matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| entry(rng))
}

/// Random positive semidefinite matrix `A A†`.
pub fn psd<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let a = matrix(rng, dim, dim);
    a.matmul(&a.adjoint()).expect("square")
}

/// Random density matrix (unit trace).
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let p = psd(rng, dim);
    let t = p.trace().re;
    p.scale_real(1.0 / t)
}

/// Orthonormalises the columns of `m` (Gram-Schmidt); needs `rows >= cols`
/// and full column rank, which holds almost surely for random input.
fn orthonormal_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v: Vec<C64> = (0..rows).map(|i| m.get(i, j)).collect();
        for u in &q {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        q.push(v);
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| q[j][i])
}

pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    orthonormal_columns(&matrix(rng, dim, dim))
}

/// Random channel `dim_in -> dim_out` with at least `kraus` Kraus operators.
/// Trace-preserving channels come from a random isometry; otherwise the
/// isometry is followed by a random contraction on the input, so the
/// effect is a generic operator below the identity.
pub fn channel<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    kraus: usize,
    trace_preserving: bool,
) -> CptniMap {
    let r = kraus.max(dim_in.div_ceil(dim_out)).max(1);
    let v = orthonormal_columns(&matrix(rng, r * dim_out, dim_in));
    let mut ks: Vec<ComplexMatrix> = (0..r)
        .map(|k| ComplexMatrix::from_fn(dim_out, dim_in, |a, b| v.get(k * dim_out + a, b)))
        .collect();
    if !trace_preserving {
        let u = unitary(rng, dim_in);
        let s: Vec<f64> = (0..dim_in).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c = u
            .matmul(&ComplexMatrix::diag(&s))
            .and_then(|m| m.matmul(&u.adjoint()))
            .expect("square");
        ks = ks.iter().map(|k| k.matmul(&c).expect("shapes")).collect();
    }
    CptniMap::new(
        Dim::new(dim_in).expect("positive"),
        Dim::new(dim_out).expect("positive"),
        ks,
    )
    .expect("consistent shapes")
}

/// Random unitary conjugation scaled by `sqrt(weight)`, so its effect is
/// `weight * I`.
pub fn scaled_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize, weight: f64) -> CptniMap {
    CptniMap::conjugation(unitary(rng, dim).scale_real(weight.sqrt())).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trace_preserving_channels_have_identity_effect() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (din, dout, k) in [(2, 2, 1), (4, 2, 1), (3, 5, 2), (8, 8, 2)] {
            let f = channel(&mut rng, din, dout, k, true);
            let dev = f.effect().max_abs_diff(&ComplexMatrix::identity(din)).unwrap();
            assert!(dev < 1e-12, "{din}->{dout}: {dev}");
        }
    }

    #[test]
    fn densities_are_unit_trace_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = density(&mut rng, 4);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.min_hermitian_eigenvalue().unwrap() > -1e-12);
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = unitary(&mut rng, 5);
        let p = u.adjoint().matmul(&u).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(5)).unwrap() < 1e-12);
    }
}
