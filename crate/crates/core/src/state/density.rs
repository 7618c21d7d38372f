use super::{
    all_finite, conjugate_on_offsets, hermitian_eigenvalues, hermiticity_deviation, max_abs,
    unitarity_deviation, CMatrix, QuantumChannel, StateVector, SubsystemLayout, C64,
    OPERATOR_TOL, PSD_SLACK, STATE_TOL,
};
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite, unit-trace operator on a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: SubsystemLayout, m: CMatrix) -> Result<Self> {
        let n = layout.total_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape(format!(
                "{}x{} matrix for layout {layout}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(m.iter()) {
            return Err(Error::NonFinite);
        }
        let herm = hermiticity_deviation(&m);
        if herm > STATE_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -PSD_SLACK {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { layout, m })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        Self {
            layout: psi.layout().clone(),
            m: a * a.adjoint(),
        }
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let n = layout.total_dim();
        Self {
            m: CMatrix::identity(n, n).unscale(n as f64),
            layout,
        }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Real diagonal (populations in the computational basis).
    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// Largest entrywise deviation from another matrix of the same size.
    pub fn max_entry_diff(&self, other: &DensityMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(max_abs(&(&self.m - &other.m)))
    }

    /// Row-major `[re, im]` pairs, the JSON dump format for matrices.
    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect()
    }

    /// Same matrix under a relabelled layout of identical dimensions.
    pub fn relabel(&self, layout: SubsystemLayout) -> Result<Self> {
        if layout.dims() != self.layout.dims() {
            return Err(Error::Shape(format!("cannot relabel {} as {layout}", self.layout)));
        }
        Ok(Self {
            layout,
            m: self.m.clone(),
        })
    }

    /// Traces out every factor not named in `keep`. Kept factors retain
    /// their original order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let mut positions = self.layout.resolve(keep)?;
        positions.sort_unstable();
        let (sel, rest) = self.layout.split_offsets(&positions);
        let k = sel.len();
        let out = CMatrix::from_fn(k, k, |i, j| {
            rest.iter()
                .map(|&r| self.m[(sel[i] + r, sel[j] + r)])
                .sum::<C64>()
        });
        DensityMatrix::new(self.layout.select(&positions), out)
    }

    /// `U ρ U†` with `u` on the named factors.
    pub fn apply_unitary(&self, u: &CMatrix, on: &[&str]) -> Result<DensityMatrix> {
        let (sel, rest) = self.local_offsets(u, on)?;
        let dev = unitarity_deviation(u);
        if dev > OPERATOR_TOL {
            return Err(Error::NotUnitary(dev));
        }
        DensityMatrix::new(self.layout.clone(), conjugate_on_offsets(&self.m, u, &sel, &rest))
    }

    /// Operator-sum evolution `Σ K ρ K†` on the named factors.
    pub fn apply_channel(&self, ch: &QuantumChannel, on: &[&str]) -> Result<DensityMatrix> {
        ch.check()?;
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for k in ch.kraus() {
            let (sel, rest) = self.local_offsets(k, on)?;
            out += conjugate_on_offsets(&self.m, k, &sel, &rest);
        }
        DensityMatrix::new(self.layout.clone(), out)
    }

    /// Expresses the matrix in another orthonormal basis: `B† ρ B` where the
    /// columns of `basis` are the new basis vectors.
    pub fn in_basis(&self, basis: &CMatrix) -> Result<CMatrix> {
        if basis.nrows() != self.dim() || basis.ncols() != self.dim() {
            return Err(Error::Shape("basis matrix does not match state dimension".into()));
        }
        Ok(basis.adjoint() * &self.m * basis)
    }

    fn local_offsets(&self, op: &CMatrix, on: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
        let positions = self.layout.resolve(on)?;
        let sub: usize = positions.iter().map(|&p| self.layout.factors()[p].dim).product();
        if op.nrows() != sub || op.ncols() != sub {
            return Err(Error::Shape(format!(
                "{}x{} operator on factors of dimension {sub}",
                op.nrows(),
                op.ncols()
            )));
        }
        Ok(self.layout.split_offsets(&positions))
    }

    fn check_same_dim(&self, other: &DensityMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Shape(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

/// Weighted ensemble `Σ pᵢ |ψᵢ⟩⟨ψᵢ|`.
pub fn mix(ensemble: &[(f64, StateVector)]) -> Result<DensityMatrix> {
    let (_, first) = ensemble.first().ok_or(Error::EmptySelection)?;
    let layout = first.layout().clone();
    let n = layout.total_dim();
    let mut total = 0.0;
    let mut m = CMatrix::zeros(n, n);
    for (p, psi) in ensemble {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        if *p < 0.0 {
            return Err(Error::NegativeProbability(*p));
        }
        if psi.layout() != &layout {
            return Err(Error::Shape(format!(
                "ensemble mixes layouts {layout} and {}",
                psi.layout()
            )));
        }
        total += p;
        let a = psi.amplitudes();
        m += (a * a.adjoint()).scale(*p);
    }
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::Normalization(total));
    }
    DensityMatrix::new(layout, m)
}

/// `½ Σ |λ(a − b)|`, clamped to `[0, 1]`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.layout().dims() != b.layout().dims() {
        return Err(Error::Shape(format!(
            "trace distance between {} and {}",
            a.layout(),
            b.layout()
        )));
    }
    let diff = a.matrix() - b.matrix();
    let d: f64 = hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>() * 0.5;
    Ok(d.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::c;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(a: f64, b: f64) -> StateVector {
        StateVector::qubit("s", c(a, 0.), c(b, 0.)).unwrap()
    }

    fn diag(a: f64, b: f64) -> DensityMatrix {
        let m = CMatrix::from_row_slice(2, 2, &[c(a, 0.), c(0., 0.), c(0., 0.), c(b, 0.)]);
        DensityMatrix::new(SubsystemLayout::single("s", 2).unwrap(), m).unwrap()
    }

    fn close(a: &DensityMatrix, b: &DensityMatrix, tol: f64) -> bool {
        a.max_entry_diff(b).unwrap() <= tol
    }

    #[test]
    fn pure_density_examples() {
        assert!(close(&qubit(1., 0.).to_density(), &diag(1., 0.), 0.0));
        let plus = qubit(FRAC_1_SQRT_2, FRAC_1_SQRT_2).to_density();
        assert!(plus.matrix().iter().all(|z| (z - c(0.5, 0.)).norm() < 1e-15));
        let d = qubit(0.6, 0.8).to_density().diagonal();
        assert!((d[0] - 0.36).abs() < 1e-15 && (d[1] - 0.64).abs() < 1e-15);
        assert!((plus.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bell_reduced_is_half_identity() {
        let l = SubsystemLayout::new([("a", 2), ("b", 2)]).unwrap();
        let phi = StateVector::from_slice(
            l,
            &[c(FRAC_1_SQRT_2, 0.), c(0., 0.), c(0., 0.), c(FRAC_1_SQRT_2, 0.)],
        )
        .unwrap();
        let rho = phi.to_density();
        for keep in ["a", "b"] {
            let r = rho.partial_trace(&[keep]).unwrap();
            assert!(r.max_entry_diff(&DensityMatrix::maximally_mixed(r.layout().clone())).unwrap() < 1e-12);
            assert_eq!(r.layout().labels(), vec![keep]);
        }
    }

    #[test]
    fn partial_trace_errors() {
        let rho = qubit(1., 0.).to_density();
        assert_eq!(rho.partial_trace(&[]), Err(Error::EmptySelection));
        assert_eq!(rho.partial_trace(&["q"]), Err(Error::UnknownLabel("q".into())));
    }

    #[test]
    fn mixing_examples() {
        let half = mix(&[(0.5, qubit(1., 0.)), (0.5, qubit(0., 1.))]).unwrap();
        assert!(close(&half, &diag(0.5, 0.5), 1e-15));
        let psi = qubit(0.6, 0.8);
        assert!(close(&mix(&[(1.0, psi.clone())]).unwrap(), &psi.to_density(), 0.0));
        let w = mix(&[(0.36, qubit(1., 0.)), (0.64, qubit(0., 1.))]).unwrap();
        assert!(close(&w, &diag(0.36, 0.64), 1e-15));
    }

    #[test]
    fn mixing_errors() {
        assert!(matches!(
            mix(&[(0.5, qubit(1., 0.)), (0.4, qubit(0., 1.))]),
            Err(Error::Normalization(_))
        ));
        assert!(matches!(
            mix(&[(1.5, qubit(1., 0.)), (-0.5, qubit(0., 1.))]),
            Err(Error::NegativeProbability(_))
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let r = qubit(0.6, 0.8).to_density();
        assert!(trace_distance(&r, &r).unwrap() < 1e-15);
        assert!((trace_distance(&diag(1., 0.), &diag(0., 1.)).unwrap() - 1.0).abs() < 1e-15);
        assert!((trace_distance(&diag(0.5, 0.5), &diag(0.75, 0.25)).unwrap() - 0.25).abs() < 1e-15);
        let other = DensityMatrix::maximally_mixed(SubsystemLayout::single("t", 3).unwrap());
        assert!(matches!(trace_distance(&r, &other), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_invalid_matrices() {
        let l = SubsystemLayout::single("s", 2).unwrap();
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.), c(0., 0.), c(0., 0.), c(-0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(l.clone(), neg), Err(Error::NotPositive(_))));
        let nh = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.), c(0.1, 0.), c(0., 0.), c(0.5, 0.)]);
        assert!(matches!(DensityMatrix::new(l.clone(), nh), Err(Error::NotHermitian(_))));
        let tr = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(l, tr), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn unitary_on_density() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let out = diag(0.36, 0.64).apply_unitary(&x, &["s"]).unwrap();
        assert!(close(&out, &diag(0.64, 0.36), 1e-15));
    }
}
