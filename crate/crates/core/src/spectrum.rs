//! Ordered lists of spectral parameters with run metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two spectral parameters closer than this are the same eigenvalue.
pub const MERGE_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub n: usize,
    pub r: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ListMetadata {
    pub eps: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub timestamp: String,
    pub code_version: String,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueList {
    pub group: u64,
    pub records: Vec<EigenRecord>,
    pub meta: ListMetadata,
}

/// Rounds to 15 significant digits, the precision of the CSV format, so that
/// a list survives a save/load cycle unchanged.
pub fn round15(v: f64) -> f64 {
    format!("{v:.14e}").parse().expect("formatted float parses")
}

impl EigenvalueList {
    pub fn new(group: u64, mut rs: Vec<f64>, meta: ListMetadata) -> Result<Self> {
        if rs.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::Domain("spectral parameters must be positive and finite".into()));
        }
        rs.sort_by(f64::total_cmp);
        for w in rs.windows(2) {
            if w[1] - w[0] < MERGE_TOLERANCE {
                return Err(Error::Monotonicity(format!(
                    "spectral parameters {} and {} coincide within the merge tolerance",
                    w[0], w[1]
                )));
            }
        }
        let records = rs
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let r = round15(r);
                EigenRecord { n: i + 1, r, lambda: round15(r * r + 0.25) }
            })
            .collect();
        Ok(EigenvalueList { group, records, meta })
    }

    pub fn rs(&self) -> Vec<f64> {
        self.records.iter().map(|e| e.r).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks ordering and the `λ = r² + 1/4` relation.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.records.iter().enumerate() {
            if e.n != i + 1 {
                return Err(Error::Parse(format!("record {} has index {}", i + 1, e.n)));
            }
            if (e.lambda - (e.r * e.r + 0.25)).abs() > 1e-12 * e.lambda.max(1.0) {
                return Err(Error::Parse(format!("record {} has lambda inconsistent with r", e.n)));
            }
        }
        for w in self.records.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(Error::Monotonicity(format!("r is not increasing at record {}", w[1].n)));
            }
        }
        Ok(())
    }

    /// The list with an extra eigenvalue `lambda`.
    pub fn inject(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.25) {
            return Err(Error::Domain("injected eigenvalue must exceed 1/4".into()));
        }
        let mut rs = self.rs();
        rs.push((lambda - 0.25).sqrt());
        EigenvalueList::new(self.group, rs, self.meta.clone())
    }

    /// The list without record `index` (1-based).
    pub fn remove(&self, index: usize) -> Result<Self> {
        if index == 0 || index > self.len() {
            return Err(Error::Range(format!("no record {index} in a list of {}", self.len())));
        }
        let mut rs = self.rs();
        rs.remove(index - 1);
        EigenvalueList::new(self.group, rs, self.meta.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_collisions() {
        assert!(EigenvalueList::new(5, vec![4.0, 4.0 + 1e-9], ListMetadata::default()).is_err());
    }

    #[test]
    fn inject_then_remove() {
        let l = EigenvalueList::new(5, vec![4.1, 4.87, 6.05], ListMetadata::default()).unwrap();
        let r = 5.5f64;
        let m = l.inject(r * r + 0.25).unwrap();
        let back = m.remove(3).unwrap();
        assert_eq!(back, l);
    }
}
