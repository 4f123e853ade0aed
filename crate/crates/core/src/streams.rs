//! Binary sequences and their finite descriptions: stage approximations with
//! finitely many mind changes, the interleaving index sets `I_k` and `J_n`,
//! and lazily evaluable bit streams closed under joins and restrictions.

use crate::error::{Error, Result};
use crate::functionals::PrefixFunctional;
use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// A finite-mind-change stage approximation `(A_s)` of a binary sequence.
///
/// `changes[n]` lists the stages at which bit `n` flips to a new value, in
/// strictly increasing order. Bits start at 0, and no change of bit `n` may
/// occur at a stage `<= n`, so `A_s ⊆ [0, s)` for every stage `s`. Each list
/// is finite, so every bit stabilizes and the limit sequence exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delta02Script {
    depth: usize,
    changes: Vec<Vec<(usize, bool)>>,
}

impl Delta02Script {
    /// A script with no changes: the approximation is constantly empty.
    pub fn constant_zero(depth: usize) -> Self {
        Delta02Script {
            depth,
            changes: Vec::new(),
        }
    }

    /// Builds a script from `(bit, stage, value)` triples.
    pub fn from_changes(depth: usize, triples: &[(usize, usize, bool)]) -> Result<Self> {
        let mut changes: Vec<Vec<(usize, bool)>> = Vec::new();
        for &(bit, stage, value) in triples {
            if bit >= depth {
                return Err(Error::DepthExceeded { index: bit, depth });
            }
            if changes.len() <= bit {
                changes.resize(bit + 1, Vec::new());
            }
            changes[bit].push((stage, value));
        }
        for (bit, list) in changes.iter().enumerate() {
            for pair in list.windows(2) {
                if pair[1].0 <= pair[0].0 {
                    return Err(Error::MalformedScript);
                }
            }
            if list.first().is_some_and(|&(s, _)| s <= bit) {
                return Err(Error::MalformedScript);
            }
        }
        Ok(Delta02Script { depth, changes })
    }

    pub(crate) fn from_parts(depth: usize, changes: Vec<Vec<(usize, bool)>>) -> Self {
        debug_assert!(changes.len() <= depth);
        Delta02Script { depth, changes }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn changes_of(&self, bit: usize) -> &[(usize, bool)] {
        self.changes.get(bit).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The limit value of bit `n`.
    pub fn limit_bit(&self, n: usize) -> Result<bool> {
        if n >= self.depth {
            return Err(Error::DepthExceeded {
                index: n,
                depth: self.depth,
            });
        }
        Ok(self
            .changes
            .get(n)
            .and_then(|l| l.last())
            .map(|&(_, v)| v)
            .unwrap_or(false))
    }

    /// The limit sequence restricted to `[0, n)`.
    pub fn limit_prefix(&self, n: usize) -> Result<Vec<bool>> {
        (0..n).map(|i| self.limit_bit(i)).collect()
    }

    /// The stage set `A_s` restricted to `[0, s)`, replaying each bit's
    /// change list through stage `s`.
    pub fn stage_set(&self, s: usize) -> Result<Vec<bool>> {
        if s > self.depth {
            return Err(Error::StageExceeded {
                stage: s,
                depth: self.depth,
            });
        }
        Ok((0..s).map(|n| self.bit_at_stage(n, s)).collect())
    }

    /// `A_s(n)` for any stage; bits at index `>= s` are 0 by the stage
    /// discipline, and bits must be below the depth.
    pub fn bit_at_stage_checked(&self, n: usize, s: usize) -> Result<bool> {
        if n >= self.depth {
            return Err(Error::DepthExceeded {
                index: n,
                depth: self.depth,
            });
        }
        Ok(self.bit_at_stage(n, s))
    }

    fn bit_at_stage(&self, n: usize, s: usize) -> bool {
        self.changes
            .get(n)
            .into_iter()
            .flatten()
            .take_while(|&&(stage, _)| stage <= s)
            .last()
            .map(|&(_, v)| v)
            .unwrap_or(false)
    }

    /// `A_s` restricted to `[0, n)` for an arbitrary stage `s`; unlike
    /// [`stage_set`](Self::stage_set) the stage may exceed the depth because
    /// only the first `n` bits are replayed.
    pub fn stage_prefix(&self, s: usize, n: usize) -> Result<Vec<bool>> {
        if n > self.depth {
            return Err(Error::DepthExceeded {
                index: n,
                depth: self.depth,
            });
        }
        Ok((0..n).map(|i| self.bit_at_stage(i, s)).collect())
    }

    /// The least stage from which `A_s` agrees with the limit on `[0, d)`:
    /// one past the last change of any bit below `d`.
    pub fn stabilization_stage(&self, d: usize) -> Result<usize> {
        if d > self.depth {
            return Err(Error::DepthExceeded {
                index: d,
                depth: self.depth,
            });
        }
        Ok(self
            .changes
            .iter()
            .take(d)
            .filter_map(|l| l.last().map(|&(s, _)| s + 1))
            .max()
            .unwrap_or(0))
    }
}

/// The index sets used by the dynamic join: `I_k` is the residue class
/// `2^k - 1 mod 2^(k+1)`, `J_0` is everything, and `J_{n+1}` is the
/// complement of `I_0 ∪ ... ∪ I_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IndexFamily {
    I(usize),
    J(usize),
    Evens,
    Odds,
    Explicit(Vec<usize>),
}

impl IndexFamily {
    pub fn member(&self, n: usize) -> bool {
        match self {
            IndexFamily::I(k) => {
                let modulus = 1usize << (k + 1);
                n % modulus == modulus / 2 - 1
            }
            IndexFamily::J(j) => {
                let modulus = 1usize << j;
                n % modulus == modulus - 1
            }
            IndexFamily::Evens => n % 2 == 0,
            IndexFamily::Odds => n % 2 == 1,
            IndexFamily::Explicit(list) => list.binary_search(&n).is_ok(),
        }
    }

    /// The principal function: the `(n+1)`-st element in increasing order.
    pub fn principal(&self, n: usize) -> Result<usize> {
        match self {
            IndexFamily::I(k) => Ok(n * (1 << (k + 1)) + (1 << k) - 1),
            IndexFamily::J(j) => Ok((n + 1) * (1 << j) - 1),
            IndexFamily::Evens => Ok(2 * n),
            IndexFamily::Odds => Ok(2 * n + 1),
            IndexFamily::Explicit(list) => {
                list.get(n).copied().ok_or(Error::IndexSetExhausted)
            }
        }
    }

    /// The rank of a member position within the set, if it belongs.
    pub fn rank_of(&self, pos: usize) -> Option<usize> {
        if !self.member(pos) {
            return None;
        }
        match self {
            IndexFamily::I(k) => Some(pos >> (k + 1)),
            IndexFamily::J(j) => Some(((pos + 1) >> j) - 1),
            IndexFamily::Evens | IndexFamily::Odds => Some(pos / 2),
            IndexFamily::Explicit(list) => list.binary_search(&pos).ok(),
        }
    }
}

/// Membership test for an index family.
pub fn index_member(family: &IndexFamily, n: usize) -> bool {
    family.member(n)
}

/// The component of position `p` under the infinite-join layout, which
/// places component `k` on `I_k`: `k` is the number of trailing ones of `p`.
pub fn infinite_join_component(p: usize) -> (usize, usize) {
    let k = (p + 1).trailing_zeros() as usize;
    (k, p >> (k + 1))
}

/// The component of position `p` in the left-nested `n`-fold join.
pub fn nfold_component(n: usize, mut p: usize) -> (usize, usize) {
    for level in (1..n).rev() {
        if p % 2 == 1 {
            return (level, p / 2);
        }
        p /= 2;
    }
    (0, p)
}

/// The position of component `i`'s bit `m` in the left-nested `n`-fold join.
pub fn nfold_position(n: usize, i: usize, m: usize) -> usize {
    if i == 0 {
        m << (n - 1)
    } else {
        (2 * m + 1) << (n - 1 - i)
    }
}

/// A lazily evaluable infinite binary sequence.
#[derive(Clone)]
pub enum BitStream {
    /// The limit of a stage approximation.
    ScriptLimit(Arc<Delta02Script>),
    /// A finite prefix followed by a constant tail.
    EventuallyConstant { prefix: Vec<bool>, tail: bool },
    Join2(Box<BitStream>, Box<BitStream>),
    NFoldJoin(Vec<BitStream>),
    InfiniteJoin(Arc<dyn Fn(usize) -> BitStream + Send + Sync>),
    Restrict {
        source: Box<BitStream>,
        indices: IndexFamily,
    },
    /// The image of an input stream under a prefix functional.
    FunctionalOutput {
        functional: Arc<PrefixFunctional>,
        input: Box<BitStream>,
    },
}

impl core::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            BitStream::ScriptLimit(_) => write!(f, "ScriptLimit"),
            BitStream::EventuallyConstant { prefix, tail } => {
                write!(f, "EventuallyConstant({} bits, tail {})", prefix.len(), tail)
            }
            BitStream::Join2(..) => write!(f, "Join2"),
            BitStream::NFoldJoin(list) => write!(f, "NFoldJoin({})", list.len()),
            BitStream::InfiniteJoin(_) => write!(f, "InfiniteJoin"),
            BitStream::Restrict { indices, .. } => write!(f, "Restrict({indices:?})"),
            BitStream::FunctionalOutput { .. } => write!(f, "FunctionalOutput"),
        }
    }
}

impl BitStream {
    pub fn zeros() -> Self {
        BitStream::EventuallyConstant {
            prefix: Vec::new(),
            tail: false,
        }
    }

    pub fn ones() -> Self {
        BitStream::EventuallyConstant {
            prefix: Vec::new(),
            tail: true,
        }
    }

    /// The bit at index `i`. Evaluation is pure: two queries of the same
    /// index return the same bit. The horizon bounds the input prefixes fed
    /// to functional outputs.
    pub fn bit_at(&self, i: usize, horizon: usize) -> Result<bool> {
        match self {
            BitStream::ScriptLimit(script) => script.limit_bit(i),
            BitStream::EventuallyConstant { prefix, tail } => {
                Ok(prefix.get(i).copied().unwrap_or(*tail))
            }
            BitStream::Join2(a, b) => {
                if i % 2 == 0 {
                    a.bit_at(i / 2, horizon)
                } else {
                    b.bit_at(i / 2, horizon)
                }
            }
            BitStream::NFoldJoin(list) => {
                if list.is_empty() {
                    return Err(Error::EmptyList);
                }
                let (comp, idx) = nfold_component(list.len(), i);
                list[comp].bit_at(idx, horizon)
            }
            BitStream::InfiniteJoin(family) => {
                let (comp, idx) = infinite_join_component(i);
                family(comp).bit_at(idx, horizon)
            }
            BitStream::Restrict { source, indices } => {
                source.bit_at(indices.principal(i)?, horizon)
            }
            BitStream::FunctionalOutput { functional, input } => {
                let mut len = (i + 1).min(horizon);
                loop {
                    let prefix = input.prefix(len, horizon)?;
                    let out = functional.eval(&prefix, i + 1)?;
                    if out.len() > i {
                        return Ok(out[i]);
                    }
                    if len >= horizon {
                        return Err(Error::HorizonExceeded);
                    }
                    len = (len * 2).min(horizon);
                }
            }
        }
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: usize, horizon: usize) -> Result<Vec<bool>> {
        (0..n).map(|i| self.bit_at(i, horizon)).collect()
    }
}

/// The computable join: bit `2n` is `a(n)`, bit `2n+1` is `b(n)`.
pub fn join2(a: BitStream, b: BitStream) -> BitStream {
    BitStream::Join2(Box::new(a), Box::new(b))
}

/// The left-nested finite join of a nonempty list.
pub fn nfold_join(streams: Vec<BitStream>) -> Result<BitStream> {
    if streams.is_empty() {
        return Err(Error::EmptyList);
    }
    Ok(BitStream::NFoldJoin(streams))
}

/// The infinite join: component `k` lives on the index set `I_k`, so
/// restriction along `I_k` recovers it exactly. This layout is not the limit
/// of the left-nested finite join.
pub fn infinite_join(family: Arc<dyn Fn(usize) -> BitStream + Send + Sync>) -> BitStream {
    BitStream::InfiniteJoin(family)
}

/// Reads a stream along an index set through its principal function.
pub fn restrict(source: BitStream, indices: IndexFamily) -> BitStream {
    BitStream::Restrict {
        source: Box::new(source),
        indices,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn limit_bit_examples() {
        let none = Delta02Script::constant_zero(8);
        assert_eq!(none.limit_bit(3), Ok(false));

        let one = Delta02Script::from_changes(4, &[(0, 1, true)]).unwrap();
        assert_eq!(one.limit_bit(0), Ok(true));

        let flip = Delta02Script::from_changes(4, &[(2, 3, true), (2, 7, false)]).unwrap();
        assert_eq!(flip.limit_bit(2), Ok(false));
        assert!(flip.limit_bit(4).is_err());
    }

    #[test]
    fn stage_set_replay() {
        let script =
            Delta02Script::from_changes(4, &[(0, 1, true), (1, 2, true)]).unwrap();
        assert_eq!(script.stage_set(0).unwrap(), bits(""));
        assert_eq!(script.stage_set(1).unwrap(), bits("1"));
        assert_eq!(script.stage_set(2).unwrap(), bits("11"));
    }

    #[test]
    fn stabilization_examples() {
        let none = Delta02Script::constant_zero(8);
        assert_eq!(none.stabilization_stage(5), Ok(0));
        let one = Delta02Script::from_changes(4, &[(0, 1, true)]).unwrap();
        assert_eq!(one.stabilization_stage(1), Ok(2));
        let flip = Delta02Script::from_changes(4, &[(2, 3, true), (2, 7, false)]).unwrap();
        assert_eq!(flip.stabilization_stage(3), Ok(8));
    }

    #[test]
    fn stage_discipline_rejected() {
        // A change of bit 2 at stage 2 would put 2 into A_2 ∩ [2, ∞).
        assert!(Delta02Script::from_changes(4, &[(2, 2, true)]).is_err());
        assert!(Delta02Script::from_changes(4, &[(0, 3, true), (0, 3, false)]).is_err());
    }

    #[test]
    fn join_and_restrict() {
        let a = BitStream::ones();
        let b = BitStream::zeros();
        let j = join2(a, b);
        let got = j.prefix(6, 64).unwrap();
        assert_eq!(got, bits("101010"));

        let evens = restrict(j.clone(), IndexFamily::Evens);
        assert_eq!(evens.prefix(4, 64).unwrap(), bits("1111"));
        let odds = restrict(j, IndexFamily::Odds);
        assert_eq!(odds.prefix(4, 64).unwrap(), bits("0000"));
    }

    #[test]
    fn nfold_layout() {
        let streams = vec![
            BitStream::EventuallyConstant { prefix: bits("10"), tail: false },
            BitStream::EventuallyConstant { prefix: bits("01"), tail: false },
            BitStream::EventuallyConstant { prefix: bits("11"), tail: false },
        ];
        let j = nfold_join(streams).unwrap();
        // Position 1 is component 2's bit 0; position 2 is component 1's bit 0.
        assert_eq!(j.bit_at(1, 64).unwrap(), true);
        assert_eq!(j.bit_at(2, 64).unwrap(), false);
        assert_eq!(j.bit_at(0, 64).unwrap(), true);
        assert_eq!(nfold_component(3, 4), (0, 1));
        assert_eq!(nfold_position(3, 2, 0), 1);
        assert_eq!(nfold_position(3, 1, 0), 2);
        assert_eq!(nfold_position(3, 0, 1), 4);
    }

    #[test]
    fn infinite_join_layout() {
        let family: Arc<dyn Fn(usize) -> BitStream + Send + Sync> = Arc::new(|k| {
            if k == 1 {
                BitStream::ones()
            } else {
                BitStream::zeros()
            }
        });
        let j = infinite_join(family);
        // 5 is the second element of I_1.
        assert_eq!(j.bit_at(5, 64).unwrap(), true);
        assert_eq!(j.bit_at(4, 64).unwrap(), false);
        assert_eq!(j.bit_at(1, 64).unwrap(), true);
    }

    #[test]
    fn index_family_membership() {
        assert!(IndexFamily::I(0).member(4));
        assert!(IndexFamily::I(2).member(3));
        assert!(IndexFamily::I(3).member(7));
        assert!(!IndexFamily::I(1).member(3));
        // J_1 is the odds; J_0 is everything.
        for n in 0..32 {
            assert_eq!(IndexFamily::J(1).member(n), n % 2 == 1);
            assert!(IndexFamily::J(0).member(n));
        }
    }

    #[test]
    fn principal_and_rank() {
        assert_eq!(IndexFamily::I(1).principal(0), Ok(1));
        assert_eq!(IndexFamily::I(1).principal(1), Ok(5));
        assert_eq!(IndexFamily::I(1).rank_of(5), Some(1));
        assert_eq!(IndexFamily::J(2).principal(1), Ok(7));
        assert_eq!(
            IndexFamily::Explicit(vec![3]).principal(1),
            Err(Error::IndexSetExhausted)
        );
    }

    #[test]
    fn explicit_restrict_exhausts() {
        let y = BitStream::EventuallyConstant { prefix: bits("0110"), tail: false };
        let r = restrict(y, IndexFamily::Explicit(vec![2]));
        assert_eq!(r.bit_at(0, 64), Ok(true));
        assert_eq!(r.bit_at(1, 64), Err(Error::IndexSetExhausted));
    }

    #[test]
    fn restrict_i1_example() {
        let y = BitStream::EventuallyConstant { prefix: bits("0110"), tail: false };
        let r = restrict(y, IndexFamily::I(1));
        assert_eq!(r.bit_at(0, 64), Ok(true));
    }
}
