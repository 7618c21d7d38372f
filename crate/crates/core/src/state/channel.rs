use super::{
    c, hermitian_eigenvalues, hermiticity_deviation, kron, max_abs, projector, CMatrix, CVector,
    DensityMatrix, OPERATOR_TOL, PSD_SLACK,
};
use crate::error::{Error, Result};

/// Completely positive trace-preserving map in operator-sum form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let ch = Self { kraus };
        ch.check()?;
        Ok(ch)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    /// Deviation of `Σ K†K` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let n = self.input_dim();
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        max_abs(&(sum - CMatrix::identity(n, n)))
    }

    pub(crate) fn check(&self) -> Result<()> {
        let first = self
            .kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("channel has no Kraus operators".into()))?;
        let shape = first.shape();
        if self.kraus.iter().any(|k| k.shape() != shape) {
            return Err(Error::Shape("Kraus operators differ in shape".into()));
        }
        let dev = self.completeness_deviation();
        if dev.is_nan() || dev > OPERATOR_TOL {
            return Err(Error::Channel(dev));
        }
        Ok(())
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            kraus: vec![CMatrix::identity(dim, dim)],
        }
    }

    /// Maps every state to `I/d`.
    pub fn fully_depolarizing(dim: usize) -> Self {
        let s = 1.0 / (dim as f64).sqrt();
        let mut kraus = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = c(s, 0.0);
                kraus.push(k);
            }
        }
        Self { kraus }
    }

    /// Qubit dephasing with flip probability `p`: Kraus `{√(1−p) I, √p Z}`.
    pub fn dephasing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("dephasing probability {p}")));
        }
        let z = CMatrix::from_diagonal(&CVector::from_column_slice(&[c(1., 0.), c(-1., 0.)]));
        Self::new(vec![
            CMatrix::identity(2, 2).scale((1.0 - p).sqrt()),
            z.scale(p.sqrt()),
        ])
    }

    /// Applies the channel to the whole state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let labels = rho.layout().labels();
        rho.apply_channel(self, &labels)
    }
}

/// Positive operator-valued measure with labelled outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidArgument("POVM has no effects".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let n = effects[0].nrows();
        let mut sum = CMatrix::zeros(n, n);
        for e in &effects {
            if e.nrows() != n || e.ncols() != n {
                return Err(Error::Shape("POVM effects differ in shape".into()));
            }
            let herm = hermiticity_deviation(e);
            if herm > OPERATOR_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let min = hermitian_eigenvalues(e)[0];
            if min < -PSD_SLACK {
                return Err(Error::NotPositive(min));
            }
            sum += e;
        }
        let dev = max_abs(&(sum - CMatrix::identity(n, n)));
        if dev.is_nan() || dev > OPERATOR_TOL {
            return Err(Error::Completeness(dev));
        }
        Ok(Self { effects, labels })
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn projective(vectors: &[CVector], labels: Vec<String>) -> Result<Self> {
        Self::new(vectors.iter().map(projector).collect(), labels)
    }

    /// Projective measurement in the computational basis, outcomes `0..dim`.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|i| {
                let mut e = CMatrix::zeros(dim, dim);
                e[(i, i)] = c(1.0, 0.0);
                e
            })
            .collect();
        Self {
            effects,
            labels: (0..dim).map(|i| i.to_string()).collect(),
        }
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// Joint measurement `self ⊗ other`; outcome `(i, j)` has index
    /// `i * other.len() + j`.
    pub fn product(&self, other: &Povm) -> Povm {
        let mut effects = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(self.len() * other.len());
        for (ea, la) in self.effects.iter().zip(&self.labels) {
            for (eb, lb) in other.effects.iter().zip(&other.labels) {
                effects.push(kron(ea, eb));
                labels.push(format!("{la},{lb}"));
            }
        }
        Povm { effects, labels }
    }

    /// Born probabilities `Tr(Eᵢ ρ)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        born_probabilities(rho, self)
    }
}

/// Born-rule outcome probabilities `pᵢ = Tr(Eᵢ ρ)`, clamped to `[0, 1]`.
pub fn born_probabilities(rho: &DensityMatrix, m: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != m.dim() {
        return Err(Error::Shape(format!(
            "POVM of dimension {} on a state of dimension {}",
            m.dim(),
            rho.dim()
        )));
    }
    let r = rho.matrix();
    let n = rho.dim();
    let mut probs = Vec::with_capacity(m.len());
    for e in m.effects() {
        // Tr(E ρ) = Σ_ij E_ij ρ_ji
        let mut tr = 0.0;
        for i in 0..n {
            for j in 0..n {
                tr += (e[(i, j)] * r[(j, i)]).re;
            }
        }
        if !(-OPERATOR_TOL..=1.0 + OPERATOR_TOL).contains(&tr) {
            return Err(Error::Numerical(format!("Born probability {tr} out of range")));
        }
        probs.push(tr.clamp(0.0, 1.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization(total));
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{StateVector, SubsystemLayout};

    fn l1() -> SubsystemLayout {
        SubsystemLayout::single("s", 2).unwrap()
    }

    fn dm(entries: [f64; 4]) -> DensityMatrix {
        let m = CMatrix::from_row_slice(2, 2, &entries.map(|x| c(x, 0.)));
        DensityMatrix::new(l1(), m).unwrap()
    }

    #[test]
    fn identity_channel_is_noop() {
        let rho = StateVector::qubit("s", c(0.6, 0.), c(0., 0.8)).unwrap().to_density();
        let out = QuantumChannel::identity(2).apply(&rho).unwrap();
        assert!(out.max_entry_diff(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn full_depolarization_gives_maximally_mixed() {
        let rho = StateVector::qubit("s", c(0.6, 0.), c(0., 0.8)).unwrap().to_density();
        let out = QuantumChannel::fully_depolarizing(2).apply(&rho).unwrap();
        assert!(out.max_entry_diff(&dm([0.5, 0., 0., 0.5])).unwrap() < 1e-15);
    }

    #[test]
    fn dephasing_kills_coherence() {
        let out = QuantumChannel::dephasing(0.5)
            .unwrap()
            .apply(&dm([0.5, 0.5, 0.5, 0.5]))
            .unwrap();
        assert!(out.max_entry_diff(&dm([0.5, 0., 0., 0.5])).unwrap() < 1e-15);
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let k = CMatrix::identity(2, 2).scale(0.9);
        assert!(matches!(QuantumChannel::new(vec![k]), Err(Error::Channel(_))));
    }

    #[test]
    fn born_examples() {
        let z = Povm::computational(2);
        let p = born_probabilities(&dm([0.5, 0., 0., 0.5]), &z).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let p = born_probabilities(&dm([1., 0., 0., 0.]), &z).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        let p = born_probabilities(&dm([0.36, 0., 0., 0.64]), &z).unwrap();
        assert!((p[0] - 0.36).abs() < 1e-15 && (p[1] - 0.64).abs() < 1e-15);
    }

    #[test]
    fn born_dimension_mismatch() {
        let rho = dm([1., 0., 0., 0.]);
        assert!(matches!(born_probabilities(&rho, &Povm::computational(3)), Err(Error::Shape(_))));
    }

    #[test]
    fn povm_validation() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()], vec!["a".into(), "b".into()]).is_ok());
        assert!(matches!(
            Povm::new(vec![half.clone()], vec!["a".into()]),
            Err(Error::Completeness(_))
        ));
        let neg = CMatrix::from_diagonal(&CVector::from_column_slice(&[c(1.5, 0.), c(1., 0.)]));
        let comp = CMatrix::from_diagonal(&CVector::from_column_slice(&[c(-0.5, 0.), c(0., 0.)]));
        assert!(matches!(
            Povm::new(vec![neg, comp], vec!["a".into(), "b".into()]),
            Err(Error::NotPositive(_))
        ));
    }
}
