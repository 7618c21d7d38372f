use super::{
    all_finite, apply_on_offsets, unitarity_deviation, CMatrix, CVector, DensityMatrix,
    SubsystemLayout, C64, OPERATOR_TOL, STATE_TOL,
};
use crate::error::{Error, Result};

/// Normalized pure state over a tensor-product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SubsystemLayout,
    amps: CVector,
}

impl StateVector {
    /// Validating constructor; the norm must already be 1 within 1e-12.
    pub fn new(layout: SubsystemLayout, amps: CVector) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for layout {layout} of dimension {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        if !all_finite(amps.iter()) {
            return Err(Error::NonFinite);
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { layout, amps })
    }

    /// Normalizes `amps` before validation.
    pub fn normalized(layout: SubsystemLayout, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(layout, amps.unscale(norm))
    }

    pub fn from_slice(layout: SubsystemLayout, amps: &[C64]) -> Result<Self> {
        Self::new(layout, CVector::from_column_slice(amps))
    }

    /// Computational basis state `e_index`.
    pub fn basis(layout: SubsystemLayout, index: usize) -> Result<Self> {
        let n = layout.total_dim();
        if index >= n {
            return Err(Error::Shape(format!("basis index {index} out of range {n}")));
        }
        let mut amps = CVector::zeros(n);
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    /// `α|0⟩ + β|1⟩` on a single qubit factor.
    pub fn qubit(label: &str, alpha: C64, beta: C64) -> Result<Self> {
        Self::new(
            SubsystemLayout::single(label, 2)?,
            CVector::from_column_slice(&[alpha, beta]),
        )
    }

    /// `(|00⟩ + |11⟩)/√2` on two qubit factors.
    pub fn bell_phi(first: &str, second: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::default();
        Self::from_slice(
            SubsystemLayout::new([(first, 2), (second, 2)])?,
            &[C64::new(h, 0.0), z, z, C64::new(h, 0.0)],
        )
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `[re, im]` pairs in index order.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.amps.iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Same amplitudes under a relabelled layout of identical dimensions.
    pub fn relabel(&self, layout: SubsystemLayout) -> Result<Self> {
        if layout.dims() != self.layout.dims() {
            return Err(Error::Shape(format!(
                "cannot relabel {} as {layout}",
                self.layout
            )));
        }
        Ok(Self {
            layout,
            amps: self.amps.clone(),
        })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::Shape("inner product of different dimensions".into()));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let layout = self.layout.concat(&other.layout)?;
        let amps = self.amps.kronecker(&other.amps);
        Self::new(layout, amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// Applies a unitary acting on the named factors (in the given order,
    /// first label most significant); identity elsewhere.
    pub fn apply_unitary(&self, u: &CMatrix, on: &[&str]) -> Result<StateVector> {
        let positions = self.layout.resolve(on)?;
        let sub: usize = positions.iter().map(|&p| self.layout.factors()[p].dim).product();
        if u.nrows() != sub || u.ncols() != sub {
            return Err(Error::Shape(format!(
                "{}x{} operator on factors of dimension {sub}",
                u.nrows(),
                u.ncols()
            )));
        }
        let dev = unitarity_deviation(u);
        if dev > OPERATOR_TOL {
            return Err(Error::NotUnitary(dev));
        }
        let (sel, rest) = self.layout.split_offsets(&positions);
        let mut amps = self.amps.clone();
        apply_on_offsets(amps.as_mut_slice(), u, &sel, &rest);
        Self::new(self.layout.clone(), amps)
    }

    /// Applies `unitaries[k]` to the `targets` whenever the `control`
    /// factor is in basis state `k`.
    pub fn apply_controlled(
        &self,
        control: &str,
        targets: &[&str],
        unitaries: &[CMatrix],
    ) -> Result<StateVector> {
        let ctrl = self.layout.position(control)?;
        let positions = self.layout.resolve(targets)?;
        if positions.contains(&ctrl) {
            return Err(Error::LabelCollision(control.to_string()));
        }
        let cdim = self.layout.factors()[ctrl].dim;
        if unitaries.len() != cdim {
            return Err(Error::Shape(format!(
                "{} unitaries for a control of dimension {cdim}",
                unitaries.len()
            )));
        }
        let sub: usize = positions.iter().map(|&p| self.layout.factors()[p].dim).product();
        for u in unitaries {
            if u.nrows() != sub || u.ncols() != sub {
                return Err(Error::Shape(format!("controlled operator must be {sub}x{sub}")));
            }
            let dev = unitarity_deviation(u);
            if dev > OPERATOR_TOL {
                return Err(Error::NotUnitary(dev));
            }
        }
        let (sel, rest) = self.layout.split_offsets(&positions);
        let cstride = self.layout.strides()[ctrl];
        let mut amps = self.amps.clone();
        let slice = amps.as_mut_slice();
        // group the rest offsets by control value
        let mut by_ctrl: Vec<Vec<usize>> = vec![Vec::new(); cdim];
        for &r in &rest {
            by_ctrl[(r / cstride) % cdim].push(r);
        }
        for (k, offs) in by_ctrl.iter().enumerate() {
            apply_on_offsets(slice, &unitaries[k], &sel, offs);
        }
        Self::new(self.layout.clone(), amps)
    }

    /// Reduced density matrix of the kept factors, computed directly from
    /// the amplitudes without forming `|ψ⟩⟨ψ|`.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let mut positions = self.layout.resolve(keep)?;
        positions.sort_unstable();
        let (sel, rest) = self.layout.split_offsets(&positions);
        let k = sel.len();
        let mut m = CMatrix::zeros(k, k);
        for &r in &rest {
            for i in 0..k {
                let a = self.amps[sel[i] + r];
                if a == C64::default() {
                    continue;
                }
                for j in 0..k {
                    m[(i, j)] += a * self.amps[sel[j] + r].conj();
                }
            }
        }
        DensityMatrix::new(self.layout.select(&positions), m)
    }
}
