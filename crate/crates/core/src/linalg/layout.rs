use std::collections::HashSet;

use crate::error::{Error, Result};

/// Tensor-factor structure of a composite system: one dimension and one
/// unique label per subsystem, in the order used by the Kronecker product.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl SystemLayout {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.is_empty() {
            return Err(Error::InvalidLayout(
                "layout needs at least one factor".into(),
            ));
        }
        if dims.len() != labels.len() {
            return Err(Error::InvalidLayout(format!(
                "{} dimensions but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidLayout(format!(
                "factor `{}` has dimension 0",
                labels[pos]
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() {
                return Err(Error::InvalidLayout("empty label".into()));
            }
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidLayout(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { dims, labels })
    }

    /// A single unlabelled-looking factor called `label`.
    pub fn single(dim: usize, label: &str) -> Result<Self> {
        Self::new(vec![dim], vec![label])
    }

    pub fn qubits<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let n = labels.len();
        Self::new(vec![2; n], labels)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Factor positions for `labels`, sorted into layout order and deduplicated.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut pos = labels
            .iter()
            .map(|l| self.position(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        pos.sort_unstable();
        pos.dedup();
        Ok(pos)
    }

    /// Sub-layout made of the given factor positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Self {
        Self {
            dims: positions.iter().map(|&p| self.dims[p]).collect(),
            labels: positions.iter().map(|&p| self.labels[p].clone()).collect(),
        }
    }

    /// Row-major strides of each factor in the composite index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Split a composite index into per-factor digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }

    pub fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// For a reordering of the factors (`order[k]` is the layout position
    /// placed k-th), map each composite index of the reordered space to the
    /// corresponding composite index of this layout.
    pub fn permutation_to(&self, order: &[usize]) -> Result<Vec<usize>> {
        let mut check: Vec<usize> = order.to_vec();
        check.sort_unstable();
        if check != (0..self.dims.len()).collect::<Vec<_>>() {
            return Err(Error::InvalidLayout(format!(
                "{order:?} is not a factor permutation"
            )));
        }
        let reordered = self.select(order);
        let strides = self.strides();
        Ok((0..self.total_dim())
            .map(|idx| {
                reordered
                    .digits(idx)
                    .iter()
                    .zip(order)
                    .map(|(&d, &p)| d * strides[p])
                    .sum()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SystemLayout::new(vec![2, 0], vec!["a", "b"]).is_err());
        assert!(SystemLayout::new(vec![2, 2], vec!["a", "a"]).is_err());
        assert!(SystemLayout::new(vec![2], vec!["a", "b"]).is_err());
        assert!(SystemLayout::new(Vec::<usize>::new(), Vec::<String>::new()).is_err());
        let l = SystemLayout::new(vec![2, 3, 4], vec!["a", "b", "c"]).unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.strides(), vec![12, 4, 1]);
    }

    #[test]
    fn digits_round_trip() {
        let l = SystemLayout::new(vec![2, 3, 2], vec!["a", "b", "c"]).unwrap();
        for i in 0..12 {
            assert_eq!(l.compose(&l.digits(i)), i);
        }
        assert_eq!(l.digits(7), vec![1, 0, 1]);
    }

    #[test]
    fn permutation_swaps_two_qubits() {
        let l = SystemLayout::qubits(vec!["a", "b"]).unwrap();
        // |ab> in order (b, a): reordered index 1 = |b=0,a=1> = layout index 2.
        assert_eq!(l.permutation_to(&[1, 0]).unwrap(), vec![0, 2, 1, 3]);
        assert!(l.permutation_to(&[0, 0]).is_err());
    }
}
