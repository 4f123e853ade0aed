//! Ordinal notations and Cantor-normal-form ordinal values.
//!
//! Notations form a small fragment of Kleene-style systems: a constant for
//! zero, successors, and limit nodes whose fundamental sequences come from a
//! fixed catalog of generator shapes with known suprema. Values live in
//! Cantor normal form below `w^w^w^w`, which is far beyond any rank these
//! constructions produce.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Maximum nesting depth of Cantor normal forms (exponents of exponents...).
pub const MAX_CNF_DEPTH: usize = 4;

/// Default bound for the existential search in limit comparisons.
pub const DEFAULT_SEARCH_BOUND: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrdinalError {
    /// A limit generator is not of a recognized shape, so its supremum is
    /// not representable.
    UnrepresentableLimit,
    /// A bounded search against a limit notation neither confirmed nor
    /// refuted the comparison.
    SearchExhausted,
    /// A fundamental-sequence index at or past the search bound.
    OutOfBound { index: usize, bound: usize },
    /// A normal form nested deeper than [`MAX_CNF_DEPTH`].
    CnfTooDeep,
    /// A term list that is not strictly decreasing in exponents or has a
    /// zero coefficient.
    MalformedCnf,
}

impl fmt::Display for OrdinalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdinalError::UnrepresentableLimit => {
                write!(f, "limit generator has no representable supremum")
            }
            OrdinalError::SearchExhausted => {
                write!(f, "bounded search against a limit notation was inconclusive")
            }
            OrdinalError::OutOfBound { index, bound } => {
                write!(f, "fundamental sequence index {index} >= search bound {bound}")
            }
            OrdinalError::CnfTooDeep => {
                write!(f, "normal form exceeds maximum nesting depth {MAX_CNF_DEPTH}")
            }
            OrdinalError::MalformedCnf => write!(f, "malformed Cantor normal form"),
        }
    }
}

/// An ordinal below `w^w^w^w` in Cantor normal form: a finite list of
/// `(exponent, coefficient)` terms with strictly decreasing exponents and
/// positive coefficients. The empty list denotes zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfOrdinal {
    terms: Vec<(CnfOrdinal, u64)>,
}

impl CnfOrdinal {
    pub fn zero() -> Self {
        CnfOrdinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            CnfOrdinal {
                terms: alloc::vec![(Self::zero(), n)],
            }
        }
    }

    pub fn omega() -> Self {
        CnfOrdinal {
            terms: alloc::vec![(Self::finite(1), 1)],
        }
    }

    pub fn finite_usize(n: usize) -> Self {
        Self::finite(n as u64)
    }

    /// Builds a normal form from terms, which must be strictly decreasing in
    /// exponent with coefficients >= 1.
    pub fn from_terms(terms: Vec<(CnfOrdinal, u64)>) -> Result<Self, OrdinalError> {
        for pair in terms.windows(2) {
            if cnf_compare(&pair[0].0, &pair[1].0) != Ordering::Greater {
                return Err(OrdinalError::MalformedCnf);
            }
        }
        if terms.iter().any(|(_, c)| *c == 0) {
            return Err(OrdinalError::MalformedCnf);
        }
        let out = CnfOrdinal { terms };
        if out.depth() > MAX_CNF_DEPTH {
            return Err(OrdinalError::CnfTooDeep);
        }
        Ok(out)
    }

    pub fn terms(&self) -> &[(CnfOrdinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the value is a natural number.
    pub fn is_finite(&self) -> bool {
        self.terms.len() <= 1 && self.terms.iter().all(|(e, _)| e.is_zero())
    }

    pub fn as_finite(&self) -> Option<u64> {
        if self.terms.is_empty() {
            Some(0)
        } else if self.is_finite() {
            Some(self.terms[0].1)
        } else {
            None
        }
    }

    fn depth(&self) -> usize {
        if self.terms.is_empty() {
            0
        } else {
            1 + self.terms.iter().map(|(e, _)| e.depth()).max().unwrap_or(0)
        }
    }

    pub fn successor(&self) -> Self {
        hessenberg_sum(self, &Self::finite(1))
    }

    /// Leading exponent, or `None` for zero.
    pub fn leading_exponent(&self) -> Option<&CnfOrdinal> {
        self.terms.first().map(|(e, _)| e)
    }

    /// Ordinal sum `self + w`: terms of exponent zero are absorbed and the
    /// coefficient at exponent one grows by one.
    pub fn plus_omega(&self) -> Self {
        let one = Self::finite(1);
        let mut terms: Vec<(CnfOrdinal, u64)> = Vec::new();
        for (e, c) in &self.terms {
            match cnf_compare(e, &one) {
                Ordering::Greater => terms.push((e.clone(), *c)),
                Ordering::Equal => terms.push((e.clone(), *c + 1)),
                Ordering::Less => {}
            }
        }
        if terms.last().map(|(e, _)| cnf_compare(e, &one)) != Some(Ordering::Equal) {
            terms.push((one, 1));
        }
        CnfOrdinal { terms }
    }
}

impl PartialOrd for CnfOrdinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(cnf_compare(self, other))
    }
}

impl Ord for CnfOrdinal {
    fn cmp(&self, other: &Self) -> Ordering {
        cnf_compare(self, other)
    }
}

/// Total order on normal forms agreeing with ordinal order: lexicographic on
/// the `(exponent, coefficient)` term lists.
pub fn cnf_compare(a: &CnfOrdinal, b: &CnfOrdinal) -> Ordering {
    let mut left = a.terms.iter();
    let mut right = b.terms.iter();
    loop {
        match (left.next(), right.next()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some((ea, ca)), Some((eb, cb))) => {
                match cnf_compare(ea, eb) {
                    Ordering::Equal => {}
                    ord => return ord,
                }
                match ca.cmp(cb) {
                    Ordering::Equal => {}
                    ord => return ord,
                }
            }
        }
    }
}

/// Hessenberg (natural) sum: coefficient-wise addition after aligning the
/// exponent lists.
pub fn hessenberg_sum(a: &CnfOrdinal, b: &CnfOrdinal) -> CnfOrdinal {
    let mut terms: Vec<(CnfOrdinal, u64)> = Vec::new();
    let mut left = a.terms.iter().peekable();
    let mut right = b.terms.iter().peekable();
    loop {
        let take = match (left.peek(), right.peek()) {
            (None, None) => break,
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (Some((ea, _)), Some((eb, _))) => cnf_compare(ea, eb),
        };
        match take {
            Ordering::Greater => {
                let (e, c) = left.next().unwrap();
                terms.push((e.clone(), *c));
            }
            Ordering::Less => {
                let (e, c) = right.next().unwrap();
                terms.push((e.clone(), *c));
            }
            Ordering::Equal => {
                let (e, c) = left.next().unwrap();
                let (_, d) = right.next().unwrap();
                terms.push((e.clone(), *c + *d));
            }
        }
    }
    CnfOrdinal { terms }
}

impl fmt::Display for CnfOrdinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if e.is_zero() {
                write!(f, "{c}")?;
            } else {
                if e.as_finite() == Some(1) {
                    write!(f, "w")?;
                } else if e.is_finite() || e == &CnfOrdinal::omega() {
                    write!(f, "w^{e}")?;
                } else {
                    write!(f, "w^({e})")?;
                }
                if *c != 1 {
                    write!(f, "*{c}")?;
                }
            }
        }
        Ok(())
    }
}

/// Shapes of limit generators with known suprema.
///
/// `Finite` enumerates the notations of the natural numbers (supremum `w`).
/// `Add(base)` enumerates `base, base+1, base+2, ...` (supremum `base + w`).
/// `Mul(base)` enumerates `base, base+w, base+w*2, ...`; its declared
/// supremum `w^2` is only honest when `w <= |base| < w^2`, which is enforced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GeneratorShape {
    Finite,
    Add(Box<OrdinalNotation>),
    Mul(Box<OrdinalNotation>),
}

/// An ordinal notation: zero, a successor, or a limit with a fundamental
/// sequence drawn from a generator catalog. Limit nodes store a finitely
/// described generator together with the bound used by existential searches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OrdinalNotation {
    One,
    Succ(Box<OrdinalNotation>),
    Lim {
        shape: GeneratorShape,
        search_bound: usize,
    },
}

impl OrdinalNotation {
    pub fn zero() -> Self {
        OrdinalNotation::One
    }

    pub fn succ(of: OrdinalNotation) -> Self {
        OrdinalNotation::Succ(Box::new(of))
    }

    /// The notation of the finite ordinal `n`.
    pub fn of_finite(n: usize) -> Self {
        let mut out = OrdinalNotation::One;
        for _ in 0..n {
            out = OrdinalNotation::succ(out);
        }
        out
    }

    /// The standard notation of `w` with the given search bound.
    pub fn omega(search_bound: usize) -> Self {
        OrdinalNotation::Lim {
            shape: GeneratorShape::Finite,
            search_bound,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(self, OrdinalNotation::Lim { .. })
    }
}

/// The `n`-th notation of a limit node's fundamental sequence.
pub fn fundamental_at(a: &OrdinalNotation, n: usize) -> Result<OrdinalNotation, OrdinalError> {
    let OrdinalNotation::Lim { shape, search_bound } = a else {
        return Err(OrdinalError::UnrepresentableLimit);
    };
    if n >= *search_bound {
        return Err(OrdinalError::OutOfBound {
            index: n,
            bound: *search_bound,
        });
    }
    match shape {
        GeneratorShape::Finite => Ok(OrdinalNotation::of_finite(n)),
        GeneratorShape::Add(base) => {
            let mut out = (**base).clone();
            for _ in 0..n {
                out = OrdinalNotation::succ(out);
            }
            Ok(out)
        }
        GeneratorShape::Mul(base) => {
            check_mul_base(base)?;
            let mut out = (**base).clone();
            for _ in 0..n {
                out = OrdinalNotation::Lim {
                    shape: GeneratorShape::Add(Box::new(out)),
                    search_bound: *search_bound,
                };
            }
            Ok(out)
        }
    }
}

fn check_mul_base(base: &OrdinalNotation) -> Result<(), OrdinalError> {
    let v = value_of(base)?;
    let omega = CnfOrdinal::omega();
    let omega_sq = CnfOrdinal::from_terms(alloc::vec![(CnfOrdinal::finite(2), 1)]).unwrap();
    if cnf_compare(&v, &omega) == Ordering::Less || cnf_compare(&v, &omega_sq) != Ordering::Less {
        return Err(OrdinalError::UnrepresentableLimit);
    }
    Ok(())
}

/// The ordinal value of a notation.
pub fn value_of(a: &OrdinalNotation) -> Result<CnfOrdinal, OrdinalError> {
    match a {
        OrdinalNotation::One => Ok(CnfOrdinal::zero()),
        OrdinalNotation::Succ(inner) => Ok(value_of(inner)?.successor()),
        OrdinalNotation::Lim { shape, .. } => match shape {
            GeneratorShape::Finite => Ok(CnfOrdinal::omega()),
            GeneratorShape::Add(base) => Ok(value_of(base)?.plus_omega()),
            GeneratorShape::Mul(base) => {
                check_mul_base(base)?;
                CnfOrdinal::from_terms(alloc::vec![(CnfOrdinal::finite(2), 1)])
            }
        },
    }
}

/// The `<_O` comparison: `b <_O succ(a)` iff `b <_O a` or `b = a`, and
/// `b <_O lim` iff `b <_O phi(n)` for some `n` below the search bound.
///
/// A failed bounded search is refuted through the value map when possible;
/// otherwise the outcome is [`OrdinalError::SearchExhausted`] rather than a
/// silent `false`.
pub fn notation_lt(b: &OrdinalNotation, a: &OrdinalNotation) -> Result<bool, OrdinalError> {
    match a {
        OrdinalNotation::One => Ok(false),
        OrdinalNotation::Succ(inner) => {
            if b == &**inner {
                Ok(true)
            } else {
                notation_lt(b, inner)
            }
        }
        OrdinalNotation::Lim { search_bound, .. } => {
            for n in 0..*search_bound {
                match fundamental_at(a, n).and_then(|phi_n| notation_lt(b, &phi_n)) {
                    Ok(true) => return Ok(true),
                    Ok(false) | Err(OrdinalError::SearchExhausted) => {}
                    Err(e) => return Err(e),
                }
            }
            // Values refute: b <_O a implies |b| < |a|.
            if cnf_compare(&value_of(b)?, &value_of(a)?) != Ordering::Less {
                Ok(false)
            } else {
                Err(OrdinalError::SearchExhausted)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn omega_times(c: u64) -> CnfOrdinal {
        CnfOrdinal::from_terms(vec![(CnfOrdinal::finite(1), c)]).unwrap()
    }

    #[test]
    fn value_of_base_cases() {
        assert_eq!(value_of(&OrdinalNotation::One).unwrap(), CnfOrdinal::zero());
        assert_eq!(
            value_of(&OrdinalNotation::of_finite(1)).unwrap(),
            CnfOrdinal::finite(1)
        );
        assert_eq!(
            value_of(&OrdinalNotation::omega(16)).unwrap(),
            CnfOrdinal::omega()
        );
    }

    #[test]
    fn value_of_catalog_limits() {
        let omega = OrdinalNotation::omega(16);
        let add = OrdinalNotation::Lim {
            shape: GeneratorShape::Add(Box::new(omega.clone())),
            search_bound: 16,
        };
        assert_eq!(value_of(&add).unwrap(), omega_times(2));
        let mul = OrdinalNotation::Lim {
            shape: GeneratorShape::Mul(Box::new(omega.clone())),
            search_bound: 16,
        };
        assert_eq!(
            value_of(&mul).unwrap(),
            CnfOrdinal::from_terms(vec![(CnfOrdinal::finite(2), 1)]).unwrap()
        );
        // A base below w has no honest multiplicative chain.
        let bad = OrdinalNotation::Lim {
            shape: GeneratorShape::Mul(Box::new(OrdinalNotation::of_finite(3))),
            search_bound: 16,
        };
        assert_eq!(value_of(&bad), Err(OrdinalError::UnrepresentableLimit));
    }

    #[test]
    fn notation_lt_examples() {
        let one = OrdinalNotation::of_finite(1);
        let two = OrdinalNotation::of_finite(2);
        assert_eq!(notation_lt(&OrdinalNotation::One, &one), Ok(true));
        assert_eq!(notation_lt(&one, &two), Ok(true));
        assert_eq!(notation_lt(&two, &OrdinalNotation::omega(64)), Ok(true));
        assert_eq!(notation_lt(&two, &one), Ok(false));
        assert_eq!(notation_lt(&one, &one), Ok(false));
    }

    #[test]
    fn notation_lt_refutes_by_value() {
        // w is not below w, and the bounded search cannot show otherwise.
        let omega = OrdinalNotation::omega(8);
        assert_eq!(notation_lt(&omega, &omega), Ok(false));
        // w <_O w*2 holds: w equals phi(0) of the add generator... phi(1) = w+1 exceeds it.
        let add = OrdinalNotation::Lim {
            shape: GeneratorShape::Add(Box::new(omega.clone())),
            search_bound: 8,
        };
        assert_eq!(notation_lt(&omega, &add), Ok(true));
    }

    #[test]
    fn fundamental_sequence_of_omega() {
        let omega = OrdinalNotation::omega(8);
        assert_eq!(fundamental_at(&omega, 0).unwrap(), OrdinalNotation::One);
        assert_eq!(
            fundamental_at(&omega, 2).unwrap(),
            OrdinalNotation::of_finite(2)
        );
        assert_eq!(
            fundamental_at(&omega, 8),
            Err(OrdinalError::OutOfBound { index: 8, bound: 8 })
        );
    }

    #[test]
    fn hessenberg_examples() {
        assert_eq!(
            hessenberg_sum(&CnfOrdinal::finite(2), &CnfOrdinal::finite(3)),
            CnfOrdinal::finite(5)
        );
        let a = hessenberg_sum(&omega_times(2), &CnfOrdinal::finite(1));
        let b = hessenberg_sum(&CnfOrdinal::omega(), &CnfOrdinal::finite(3));
        let sum = hessenberg_sum(&a, &b);
        let expected = hessenberg_sum(&omega_times(3), &CnfOrdinal::finite(4));
        assert_eq!(sum, expected);
        assert_eq!(sum.to_string(), "w*3+4");
        assert_eq!(hessenberg_sum(&a, &CnfOrdinal::zero()), a);
    }

    #[test]
    fn compare_examples() {
        assert_eq!(
            cnf_compare(&CnfOrdinal::zero(), &CnfOrdinal::zero()),
            Ordering::Equal
        );
        assert_eq!(
            cnf_compare(&CnfOrdinal::omega(), &CnfOrdinal::finite(5)),
            Ordering::Greater
        );
        let w_plus_1 = hessenberg_sum(&CnfOrdinal::omega(), &CnfOrdinal::finite(1));
        assert_eq!(cnf_compare(&w_plus_1, &omega_times(2)), Ordering::Less);
    }

    #[test]
    fn rendering() {
        assert_eq!(CnfOrdinal::zero().to_string(), "0");
        assert_eq!(CnfOrdinal::finite(7).to_string(), "7");
        assert_eq!(CnfOrdinal::omega().to_string(), "w");
        let w2 = CnfOrdinal::from_terms(vec![(CnfOrdinal::finite(2), 1)]).unwrap();
        assert_eq!(w2.to_string(), "w^2");
    }

    #[test]
    fn depth_cap_enforced() {
        let mut deep = CnfOrdinal::finite(1);
        for _ in 0..3 {
            deep = CnfOrdinal::from_terms(vec![(deep, 1)]).unwrap();
        }
        // Depth 4 is allowed; one more level is not.
        assert_eq!(
            CnfOrdinal::from_terms(vec![(deep, 1)]),
            Err(OrdinalError::CnfTooDeep)
        );
    }
}
