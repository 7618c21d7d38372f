use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    c, hermitian_eigen, CMatrix, CVector, DensityMatrix, Povm, QuantumChannel, StateVector,
    SubsystemLayout, C64,
};
use crate::error::{Error, Result};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian(rng);
        }
    }
    m
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    assert!(dim >= 1, "unitary dimension must be positive");
    let z = ginibre(dim, dim, rng);
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly distributed unit vector; distributed as any fixed column of a
/// Haar unitary.
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| gaussian(rng));
        let n = v.norm();
        if n > 0.0 {
            return v.unscale(n);
        }
    }
}

/// Uniformly random pure state on a layout.
pub fn random_state<R: Rng + ?Sized>(layout: &SubsystemLayout, rng: &mut R) -> StateVector {
    let v = haar_vector(layout.total_dim(), rng);
    StateVector::normalized(layout.clone(), v).expect("haar vector is normalized")
}

/// Random mixed state `G G† / Tr(G G†)` with `G` a `d × rank` Gaussian matrix.
pub fn random_density<R: Rng + ?Sized>(
    layout: &SubsystemLayout,
    rank: usize,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let g = ginibre(d, rank, rng);
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    m.unscale_mut(tr);
    let m = (&m + m.adjoint()).scale(0.5);
    DensityMatrix::new(layout.clone(), m)
}

/// Random general POVM: positive Wishart matrices `Aₖ` conjugated by
/// `S^{-1/2}` where `S = Σ Aₖ`, so the effects partition the identity.
pub fn random_povm<R: Rng + ?Sized>(dim: usize, n_outcomes: usize, rng: &mut R) -> Result<Povm> {
    if n_outcomes < 2 {
        return Err(Error::InvalidArgument("POVM needs at least two outcomes".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("POVM dimension must be positive".into()));
    }
    let parts: Vec<CMatrix> = (0..n_outcomes)
        .map(|_| {
            let g = ginibre(dim, dim, rng);
            &g * g.adjoint()
        })
        .collect();
    let sum = parts.iter().fold(CMatrix::zeros(dim, dim), |acc, a| acc + a);
    let (vals, vecs) = hermitian_eigen(&sum);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::Numerical("singular POVM normalizer".into()));
    }
    let inv_sqrt = CMatrix::from_diagonal(&CVector::from_iterator(
        dim,
        vals.iter().map(|v| c(1.0 / v.sqrt(), 0.0)),
    ));
    let s = &vecs * inv_sqrt * vecs.adjoint();
    let mut effects: Vec<CMatrix> = parts
        .iter()
        .map(|a| {
            let e = &s * a * &s;
            (&e + e.adjoint()).scale(0.5)
        })
        .collect();
    // absorb the rounding residue into the last effect
    let residue = CMatrix::identity(dim, dim) - effects.iter().fold(CMatrix::zeros(dim, dim), |acc, e| acc + e);
    *effects.last_mut().expect("n_outcomes >= 2") += residue;
    Povm::new(effects, (0..n_outcomes).map(|i| i.to_string()).collect())
}

/// Projective measurement onto the columns of a Haar unitary.
pub fn random_projective_povm<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Povm> {
    let u = random_unitary(dim, rng);
    let cols: Vec<CVector> = u.column_iter().map(|col| col.into_owned()).collect();
    Povm::projective(&cols, (0..dim).map(|i| i.to_string()).collect())
}

/// Random channel with `n_kraus` operators cut from a Haar isometry
/// (Stinespring dilation).
pub fn random_channel<R: Rng + ?Sized>(
    dim: usize,
    n_kraus: usize,
    rng: &mut R,
) -> Result<QuantumChannel> {
    if n_kraus == 0 || dim == 0 {
        return Err(Error::InvalidArgument("channel needs positive dimension and Kraus count".into()));
    }
    let u = random_unitary(dim * n_kraus, rng);
    let kraus = (0..n_kraus)
        .map(|k| u.view((k * dim, 0), (dim, dim)).into_owned())
        .collect();
    QuantumChannel::new(kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{max_abs, unitarity_deviation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dim_one_unitary_is_a_phase() {
        let u = random_unitary(1, &mut ChaCha8Rng::seed_from_u64(1));
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unitaries_are_unitary_and_reproducible() {
        for d in [2, 3, 5, 16] {
            let u = random_unitary(d, &mut ChaCha8Rng::seed_from_u64(d as u64));
            assert!(unitarity_deviation(&u) < 1e-10);
        }
        let a = random_unitary(2, &mut ChaCha8Rng::seed_from_u64(42));
        let b = random_unitary(2, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn haar_second_moment() {
        // E|U_00|^2 = 1/d and E|U_00|^4 = 2/(d(d+1)) for Haar unitaries
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = 3;
        let n = 20_000;
        let (mut m2, mut m4) = (0.0, 0.0);
        for _ in 0..n {
            let x = random_unitary(d, &mut rng)[(0, 0)].norm_sqr();
            m2 += x;
            m4 += x * x;
        }
        m2 /= n as f64;
        m4 /= n as f64;
        assert!((m2 - 1.0 / 3.0).abs() < 0.01, "m2 = {m2}");
        assert!((m4 - 2.0 / 12.0).abs() < 0.01, "m4 = {m4}");
    }

    #[test]
    fn povm_completeness_and_determinism() {
        let a = random_povm(3, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_povm(3, 4, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let sum = a.effects().iter().fold(CMatrix::zeros(3, 3), |acc, e| acc + e);
        assert!(max_abs(&(sum - CMatrix::identity(3, 3))) < 1e-10);
        assert!(random_povm(2, 1, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn projective_povm_has_orthogonal_rank_one_projectors() {
        let p = random_projective_povm(3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for (i, e) in p.effects().iter().enumerate() {
            assert!(max_abs(&(e * e - e)) < 1e-10);
            assert!((e.trace().re - 1.0).abs() < 1e-10);
            for f in &p.effects()[i + 1..] {
                assert!(max_abs(&(e * f)) < 1e-10);
            }
        }
    }

    #[test]
    fn random_channel_is_trace_preserving() {
        let ch = random_channel(2, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert!(ch.completeness_deviation() < 1e-10);
    }
}
