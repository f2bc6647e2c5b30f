//! Nonempty subsets of the component set and vectors indexed by them.
//!
//! Subsets are bitmasks over components (bit `j` is component `j + 1`), and a
//! [`SubsetVector`] stores one value per nonempty subset in increasing bitmask
//! order, so slot `mask - 1` belongs to subset `mask`. For `d = 2` the order is
//! `{1}, {2}, {1,2}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension; `2^d - 1` subsets are enumerated eagerly.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetIndex(u32);

impl SubsetIndex {
    pub fn new(mask: u32, d: usize) -> Result<Self> {
        if d > MAX_DIM || mask == 0 || (mask >> d) != 0 {
            return Err(Error::InvalidSubset { d });
        }
        Ok(Self(mask))
    }

    /// Builds a subset from 1-based component labels.
    pub fn from_components(components: &[usize], d: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &c in components {
            if c == 0 || c > d {
                return Err(Error::InvalidSubset { d });
            }
            mask |= 1 << (c - 1);
        }
        Self::new(mask, d)
    }

    pub fn full(d: usize) -> Self {
        Self((1u32 << d) - 1)
    }

    #[inline]
    pub fn mask(self) -> u32 {
        self.0
    }

    /// Position in a [`SubsetVector`].
    #[inline]
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn contains(self, j: usize) -> bool {
        self.0 & (1 << j) != 0
    }

    /// 0-based members in increasing order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mask = self.0;
        (0..32).filter(move |j| mask & (1 << j) != 0)
    }
}

/// All nonempty subsets of `{1..d}` in canonical order.
pub fn all_subsets(d: usize) -> impl Iterator<Item = SubsetIndex> {
    (1u32..(1u32 << d)).map(SubsetIndex)
}

#[inline]
pub fn subset_count(d: usize) -> usize {
    (1usize << d) - 1
}

/// One real per nonempty subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetVector {
    d: usize,
    values: Vec<f64>,
}

impl SubsetVector {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            values: vec![0.0; subset_count(d)],
        }
    }

    pub fn from_values(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != subset_count(d) {
            return Err(Error::DimensionMismatch {
                expected: subset_count(d),
                actual: values.len(),
            });
        }
        Ok(Self { d, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, a: SubsetIndex) -> f64 {
        self.values[a.slot()]
    }

    pub fn set(&mut self, a: SubsetIndex, v: f64) {
        self.values[a.slot()] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SubsetIndex, f64)> + '_ {
        all_subsets(self.d).zip(self.values.iter().copied())
    }
}
