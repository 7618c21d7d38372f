//! Dense finite-dimensional quantum states and the operations on them.

mod channel;
mod density;
mod layout;
mod random;
mod vector;

pub use channel::{born_probabilities, Povm, QuantumChannel};
pub use density::{mix, trace_distance, DensityMatrix};
pub use layout::{Factor, SubsystemLayout};
pub use random::{
    haar_vector, random_channel, random_density, random_povm, random_projective_povm,
    random_state, random_unitary,
};
pub use vector::StateVector;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Normalization tolerance for states and density matrices.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance for unitarity, channel and POVM completeness.
pub const OPERATOR_TOL: f64 = 1e-10;
/// Slack allowed below zero for eigenvalues of a PSD matrix.
pub const PSD_SLACK: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `u†u` from the identity.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Largest entrywise deviation of `m` from `m†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition of the Hermitian part of `m`: eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Kronecker product, left operand most significant.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Projector `|v⟩⟨v|`.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub(crate) fn all_finite<'a>(it: impl IntoIterator<Item = &'a C64>) -> bool {
    it.into_iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Applies `op` (square, of size `selected.len()`) to every slice of `amps`
/// picked out by the offset split. Untouched factors see the identity.
pub(crate) fn apply_on_offsets(amps: &mut [C64], op: &CMatrix, selected: &[usize], rest: &[usize]) {
    let d = selected.len();
    let mut buf = vec![C64::default(); d];
    for &r in rest {
        for (k, &s) in selected.iter().enumerate() {
            buf[k] = amps[r + s];
        }
        for (i, &s) in selected.iter().enumerate() {
            let mut acc = C64::default();
            for (k, b) in buf.iter().enumerate() {
                acc += op[(i, k)] * b;
            }
            amps[r + s] = acc;
        }
    }
}

/// `op ρ op†` with `op` acting on the selected factors only.
pub(crate) fn conjugate_on_offsets(
    rho: &CMatrix,
    op: &CMatrix,
    selected: &[usize],
    rest: &[usize],
) -> CMatrix {
    let n = rho.nrows();
    let mut out = rho.clone();
    // left multiplication, column by column
    let mut col = vec![C64::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = out[(i, j)];
        }
        apply_on_offsets(&mut col, op, selected, rest);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    // right multiplication by op†: each row r becomes (op conj(r†))†
    let op_conj = op.map(|z| z.conj());
    let mut row = vec![C64::default(); n];
    for i in 0..n {
        for j in 0..n {
            row[j] = out[(i, j)];
        }
        apply_on_offsets(&mut row, &op_conj, selected, rest);
        for j in 0..n {
            out[(i, j)] = row[j];
        }
    }
    out
}
