//! Measures induced on Cantor space by total prefix functionals, computed by
//! exhaustive use-bounded preimage counting in exact dyadic arithmetic.

use crate::error::{Error, Result};
use crate::functionals::PrefixFunctional;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Hard cap on use bounds: preimage enumeration walks `2^use_bound` strings.
pub const MAX_USE_BOUND: usize = 24;

/// An exact dyadic rational `num / 2^exp` in normalized form (odd numerator,
/// or zero with exponent zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u128,
    exp: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { num: 0, exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { num: 1, exp: 0 }
    }

    pub fn new(num: u128, exp: u32) -> Self {
        let mut d = Dyadic { num, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.num == 0 {
            self.exp = 0;
            return;
        }
        while self.exp > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.exp -= 1;
        }
    }

    pub fn num(&self) -> u128 {
        self.num
    }

    pub fn exp(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let exp = self.exp.max(other.exp);
        let a = self.num << (exp - self.exp);
        let b = other.num << (exp - other.exp);
        Dyadic::new(a + b, exp)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(self.num * other.num, self.exp + other.exp)
    }

    /// Exact difference, or `None` when the result would be negative.
    pub fn sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let exp = self.exp.max(other.exp);
        let a = self.num << (exp - self.exp);
        let b = other.num << (exp - other.exp);
        (a >= b).then(|| Dyadic::new(a - b, exp))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.max(other.exp);
        let a = self.num << (exp - self.exp);
        let b = other.num << (exp - other.exp);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

/// A closed interval of dyadic rationals bracketing a measure value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    pub lower: Dyadic,
    pub upper: Dyadic,
}

impl DyadicInterval {
    pub fn new(lower: Dyadic, upper: Dyadic) -> Self {
        debug_assert!(lower <= upper);
        DyadicInterval { lower, upper }
    }

    pub fn point(value: Dyadic) -> Self {
        DyadicInterval {
            lower: value,
            upper: value,
        }
    }

    pub fn zero() -> Self {
        Self::point(Dyadic::zero())
    }

    pub fn add(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval {
            lower: self.lower.add(&other.lower),
            upper: self.upper.add(&other.upper),
        }
    }

    pub fn contains(&self, other: &DyadicInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }

    /// Nesting check: `other` (at a larger use bound) refines `self`.
    pub fn refines(&self, other: &DyadicInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lower, self.upper)
    }
}

fn comparable(a: &[bool], b: &[bool]) -> bool {
    let n = a.len().min(b.len());
    a[..n] == b[..n]
}

/// Brackets the induced measure of the cylinder at `sigma` by enumerating
/// every input string of length `use_bound`: inputs whose image already
/// extends `sigma` witness the lower bound, and inputs whose image is merely
/// compatible with `sigma` the upper.
pub fn induced_measure(
    functional: &PrefixFunctional,
    sigma: &[bool],
    use_bound: usize,
) -> Result<DyadicInterval> {
    if use_bound > MAX_USE_BOUND {
        return Err(Error::HorizonExceeded);
    }
    let mut lower = 0u128;
    let mut upper = 0u128;
    let mut input = alloc::vec![false; use_bound];
    for code in 0u128..(1u128 << use_bound) {
        for (i, slot) in input.iter_mut().enumerate() {
            *slot = (code >> i) & 1 == 1;
        }
        let out = functional.eval(&input, sigma.len())?;
        if out.len() >= sigma.len() && out[..sigma.len()] == *sigma {
            lower += 1;
            upper += 1;
        } else if comparable(&out, sigma) {
            upper += 1;
        }
    }
    Ok(DyadicInterval::new(
        Dyadic::new(lower, use_bound as u32),
        Dyadic::new(upper, use_bound as u32),
    ))
}

/// The product-measure rule on cylinders of a pairwise join: endpointwise
/// exact multiplication.
pub fn product_measure(a: &DyadicInterval, b: &DyadicInterval) -> DyadicInterval {
    DyadicInterval {
        lower: a.lower.mul(&b.lower),
        upper: a.upper.mul(&b.upper),
    }
}

/// An upper-bound probe on the weight of a single point: the induced
/// measure of the point's depth-`depth` cylinder.
pub fn atom_probe(
    functional: &PrefixFunctional,
    point: &crate::streams::BitStream,
    depth: usize,
    use_bound: usize,
    horizon: usize,
) -> Result<DyadicInterval> {
    let sigma = point.prefix(depth, horizon)?;
    induced_measure(functional, &sigma, use_bound)
}

/// Brackets the measure of a finite union of cylinders. The list is made
/// prefix-free first when `normalize` is set; otherwise an overlapping list
/// is an error.
pub fn open_measure_bound(
    functional: &PrefixFunctional,
    cylinders: &[Vec<bool>],
    use_bound: usize,
    normalize: bool,
) -> Result<DyadicInterval> {
    let mut list: Vec<Vec<bool>> = cylinders.to_vec();
    list.sort();
    list.dedup();
    if normalize {
        let mut kept: Vec<Vec<bool>> = Vec::new();
        for c in list {
            if !kept.iter().any(|k| comparable(k, &c) && k.len() <= c.len()) {
                kept.push(c);
            }
        }
        list = kept;
    } else {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                if comparable(&list[i], &list[j]) {
                    return Err(Error::NotPrefixFree);
                }
            }
        }
    }
    let mut total = DyadicInterval::zero();
    for c in &list {
        total = total.add(&induced_measure(functional, c, use_bound)?);
    }
    Ok(total)
}

/// Measure brackets for every cylinder up to a depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderTable {
    pub depth: usize,
    pub use_bound: usize,
    pub entries: BTreeMap<Vec<bool>, DyadicInterval>,
}

impl CylinderTable {
    pub fn build(
        functional: &PrefixFunctional,
        depth: usize,
        use_bound: usize,
    ) -> Result<CylinderTable> {
        let mut entries = BTreeMap::new();
        for len in 0..=depth {
            for code in 0u64..(1u64 << len) {
                let sigma: Vec<bool> = (0..len).map(|i| (code >> i) & 1 == 1).collect();
                let interval = induced_measure(functional, &sigma, use_bound)?;
                entries.insert(sigma, interval);
            }
        }
        Ok(CylinderTable {
            depth,
            use_bound,
            entries,
        })
    }

    /// Sum of lower (resp. upper) endpoints over all cylinders of a length.
    pub fn level_sums(&self, len: usize) -> (Dyadic, Dyadic) {
        let mut lo = Dyadic::zero();
        let mut hi = Dyadic::zero();
        for (sigma, interval) in &self.entries {
            if sigma.len() == len {
                lo = lo.add(&interval.lower);
                hi = hi.add(&interval.upper);
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::PrefixFunctional;
    use crate::streams::{BitStream, Delta02Script};
    use alloc::sync::Arc;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn example_phi() -> PrefixFunctional {
        PrefixFunctional::Phi(Arc::new(
            Delta02Script::from_changes(8, &[(0, 1, true), (1, 2, true)]).unwrap(),
        ))
    }

    #[test]
    fn dyadic_arithmetic() {
        let half = Dyadic::new(1, 1);
        let quarter = Dyadic::new(1, 2);
        assert_eq!(half.add(&quarter), Dyadic::new(3, 2));
        assert_eq!(half.mul(&quarter), Dyadic::new(1, 3));
        assert_eq!(Dyadic::new(2, 2), Dyadic::new(1, 1));
        assert!(quarter < half);
        assert_eq!(alloc::format!("{half}"), "1/2^1");
    }

    #[test]
    fn induced_measure_of_full_space() {
        let phi = example_phi();
        let m = induced_measure(&phi, &bits(""), 4).unwrap();
        assert_eq!(m, DyadicInterval::point(Dyadic::one()));
    }

    #[test]
    fn induced_measure_of_one_cylinder() {
        // Half of all inputs start with 1 and map into the cylinder "1".
        let phi = example_phi();
        let m = induced_measure(&phi, &bits("1"), 1).unwrap();
        assert_eq!(m, DyadicInterval::point(Dyadic::new(1, 1)));
    }

    #[test]
    fn induced_measure_empty_preimage() {
        let zero = PrefixFunctional::Constant(BitStream::zeros());
        let m = induced_measure(&zero, &bits("1"), 3).unwrap();
        assert_eq!(m, DyadicInterval::zero());
    }

    #[test]
    fn product_measure_examples() {
        let full = DyadicInterval::point(Dyadic::one());
        let half = DyadicInterval::point(Dyadic::new(1, 1));
        let quarter = DyadicInterval::point(Dyadic::new(1, 2));
        assert_eq!(product_measure(&full, &half), half);
        assert_eq!(
            product_measure(&half, &quarter),
            DyadicInterval::point(Dyadic::new(1, 3))
        );
        assert_eq!(
            product_measure(&DyadicInterval::zero(), &half),
            DyadicInterval::zero()
        );
    }

    #[test]
    fn no_output_starts_with_two_ones() {
        let phi = example_phi();
        let m = open_measure_bound(&phi, &[bits("11")], 2, true).unwrap();
        assert_eq!(m, DyadicInterval::zero());
    }

    #[test]
    fn full_cover_is_everything() {
        let phi = example_phi();
        let m = open_measure_bound(&phi, &[bits("0"), bits("1")], 4, true).unwrap();
        assert_eq!(m, DyadicInterval::point(Dyadic::one()));
    }

    #[test]
    fn overlap_detected_without_normalization() {
        let phi = example_phi();
        assert_eq!(
            open_measure_bound(&phi, &[bits("1"), bits("10")], 2, false),
            Err(Error::NotPrefixFree)
        );
        assert!(open_measure_bound(&phi, &[bits("1"), bits("10")], 2, true).is_ok());
    }

    #[test]
    fn atom_probe_whole_space_on_constant() {
        let zero = PrefixFunctional::Constant(BitStream::zeros());
        let m = atom_probe(&zero, &BitStream::zeros(), 8, 8, 64).unwrap();
        assert_eq!(m, DyadicInterval::point(Dyadic::one()));
    }

    #[test]
    fn cylinder_table_nesting() {
        let phi = example_phi();
        let table = CylinderTable::build(&phi, 3, 8).unwrap();
        for (sigma, interval) in &table.entries {
            if sigma.len() < 3 {
                let mut child_sum = DyadicInterval::zero();
                for b in [false, true] {
                    let mut ext = sigma.clone();
                    ext.push(b);
                    child_sum = child_sum.add(&table.entries[&ext]);
                }
                // Images extending a child extend the parent, and images
                // compatible with the parent are compatible with a child,
                // so the child sum brackets the parent interval.
                assert!(child_sum.lower <= interval.lower);
                assert!(interval.upper <= child_sum.upper);
            }
        }
        let (lo, hi) = table.level_sums(2);
        assert!(lo <= Dyadic::one());
        assert!(hi >= Dyadic::one());
    }
}
