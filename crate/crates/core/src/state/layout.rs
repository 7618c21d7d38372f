use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One tensor factor of a compound system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor-product structure. The leftmost factor is the most
/// significant digit of a joint basis index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    factors: Vec<Factor>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(factors: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor {
                label: label.into(),
                dim,
            })
            .collect();
        if factors.is_empty() {
            return Err(Error::InvalidLayout("layout has no factors".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::InvalidLayout(format!("factor `{}` has dimension 0", f.label)));
            }
            if f.label.is_empty() {
                return Err(Error::InvalidLayout("empty factor label".into()));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::LabelCollision(f.label.clone()));
            }
        }
        Ok(Self { factors })
    }

    /// Single-factor layout.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    /// Layout of `n` qubit factors labelled `q0..q{n-1}`.
    pub fn qubits(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| (format!("q{i}"), 2)))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].dim)
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &SubsystemLayout) -> Result<Self> {
        Self::new(
            self.factors
                .iter()
                .chain(other.factors.iter())
                .map(|f| (f.label.clone(), f.dim)),
        )
    }

    /// Layout restricted to the given positions, in the given order.
    pub(crate) fn select(&self, positions: &[usize]) -> Self {
        Self {
            factors: positions.iter().map(|&p| self.factors[p].clone()).collect(),
        }
    }

    /// Stride (weight in the joint index) of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].dim;
        }
        strides
    }

    /// Resolves labels to distinct positions, preserving the caller's order.
    pub(crate) fn resolve(&self, labels: &[&str]) -> Result<Vec<usize>> {
        if labels.is_empty() {
            return Err(Error::EmptySelection);
        }
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l)?;
            if out.contains(&p) {
                return Err(Error::LabelCollision(l.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Splits the joint index space into a selected part and the rest.
    ///
    /// Returns `(selected, rest)` offsets such that every joint index is
    /// uniquely `selected[s] + rest[r]`. Selected offsets enumerate the
    /// factors in `positions` order, first position most significant; the
    /// rest enumerate the remaining factors in layout order.
    pub(crate) fn split_offsets(&self, positions: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides = self.strides();
        let rest: Vec<usize> = (0..self.factors.len())
            .filter(|p| !positions.contains(p))
            .collect();
        let enumerate = |ps: &[usize]| -> Vec<usize> {
            let mut offs = vec![0usize];
            for &p in ps {
                let d = self.factors[p].dim;
                let mut next = Vec::with_capacity(offs.len() * d);
                for &o in &offs {
                    for k in 0..d {
                        next.push(o + k * strides[p]);
                    }
                }
                offs = next;
            }
            offs
        };
        (enumerate(positions), enumerate(&rest))
    }
}

impl std::fmt::Display for SubsystemLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}:{}", x.label, x.dim))
            .collect();
        write!(f, "[{}]", parts.join(" ⊗ "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_and_strides() {
        let l = SubsystemLayout::new([("a", 2), ("b", 3), ("c", 4)]).unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.strides(), vec![12, 4, 1]);
    }

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert_eq!(
            SubsystemLayout::new([("a", 2), ("a", 2)]),
            Err(Error::LabelCollision("a".into()))
        );
        assert!(SubsystemLayout::new([("a", 0)]).is_err());
        assert!(SubsystemLayout::new(Vec::<(&str, usize)>::new()).is_err());
    }

    #[test]
    fn split_offsets_partition_the_index_space() {
        let l = SubsystemLayout::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let (sel, rest) = l.split_offsets(&[2, 0]);
        let mut all: Vec<usize> = sel
            .iter()
            .flat_map(|s| rest.iter().map(move |r| s + r))
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..12).collect::<Vec<_>>());
        // c is most significant within the selection
        assert_eq!(sel, vec![0, 6, 1, 7]);
    }

    #[test]
    fn resolve_errors() {
        let l = SubsystemLayout::qubits(2).unwrap();
        assert_eq!(l.resolve(&[]), Err(Error::EmptySelection));
        assert_eq!(l.resolve(&["zz"]), Err(Error::UnknownLabel("zz".into())));
    }
}
