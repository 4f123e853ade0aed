//! Symbolic points of the countable image classes, their enumeration, the
//! derivative-based rank oracle, structural rank formulas, and the
//! rank-faithfulness cross-check.
//!
//! Points come in two exact forms: eventually-one points (a complete finite
//! description) and limit-form points (materialized to the horizon, with
//! certified infinitely many zeros). The derivative works on those forms:
//! a point survives exactly when it is a limit form that some other member
//! approaches, where each member of the set is attributed to its unique
//! strictly nearest limit-form neighbor. The removal round of a point is
//! its rank whenever the enumeration is witness-closed at that rank.

use crate::error::{Error, Result};
use crate::functionals::{
    component_script, dyn_join_symbolic, eval_symbolic, rank_at_or_after, split_script,
    verify_eq1, verify_eq2, ComponentFamily, EvalOut, PrefixFunctional, RestKind, SymbolicInput,
    ZeroSupply,
};
use crate::ordinals::{fundamental_at, hessenberg_sum, value_of, CnfOrdinal, OrdinalNotation};
use crate::streams::{infinite_join_component, BitStream, Delta02Script, IndexFamily};
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

/// The exact form of an enumerated point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointForm {
    /// The point is `prefix` followed by ones; the stored prefix is empty or
    /// ends in a zero, so equality on this form is syntactic.
    EventuallyOne { prefix: Vec<bool> },
    /// A point with certified infinitely many zeros, named by its recipe.
    Limit { name: String },
}

/// A profile of a dynamic-join input: how many leading components are
/// designated and the truncation levels of the deviant run that follows.
/// Promoting the first truncation level to designated yields the profile
/// the point's construction family converges to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynProfile {
    pub designated: usize,
    pub levels: Vec<usize>,
    /// The fully designated input.
    pub full: bool,
}

impl DynProfile {
    fn promote(&self) -> Option<DynProfile> {
        if self.full {
            return None;
        }
        match self.levels.split_first() {
            None => Some(DynProfile {
                designated: 0,
                levels: Vec::new(),
                full: true,
            }),
            Some((_, rest)) => Some(DynProfile {
                designated: self.designated + 1,
                levels: rest.to_vec(),
                full: false,
            }),
        }
    }
}

/// How a point was constructed, which drives the derivative's attribution
/// of approaching witnesses.
#[derive(Debug, Clone)]
pub enum Lineage {
    /// No structure: witnesses are attributed to their unique strictly
    /// nearest limit-form neighbor by bits alone.
    Flat,
    /// A join of two points; approach decomposes coordinate-wise.
    Join(Box<SymbolicPoint>, Box<SymbolicPoint>),
    /// A dynamic-join image; approach follows level promotion. A point may
    /// own several profiles when indistinguishable profiles were merged.
    Dyn { profiles: Vec<DynProfile> },
}

/// A finitely described member of an image class.
#[derive(Debug, Clone)]
pub struct SymbolicPoint {
    pub id: String,
    pub form: PointForm,
    /// Bits materialized to the enumeration horizon (or further).
    pub bits: Vec<bool>,
    /// The input whose image this point is.
    pub input: SymbolicInput,
    /// Whether the enumeration contains the point's full witness ladder, so
    /// its derivative removal round is meaningful.
    pub witness_closed: bool,
    pub lineage: Lineage,
}

impl SymbolicPoint {
    /// A bare eventually-one point (trailing ones are stripped).
    pub fn eventually_one(mut prefix: Vec<bool>) -> Self {
        while prefix.last() == Some(&true) {
            prefix.pop();
        }
        let bits: Vec<bool> = (0..prefix.len().max(64))
            .map(|i| prefix.get(i).copied().unwrap_or(true))
            .collect();
        let id = format!("eo:{}", bits_string(&prefix));
        SymbolicPoint {
            id,
            form: PointForm::EventuallyOne { prefix: prefix.clone() },
            bits,
            input: SymbolicInput::Leaf(BitStream::EventuallyConstant { prefix, tail: true }),
            witness_closed: true,
            lineage: Lineage::Flat,
        }
    }

    /// A bare limit-form point with materialized bits.
    pub fn limit(name: &str, bits: Vec<bool>) -> Self {
        SymbolicPoint {
            id: String::from(name),
            form: PointForm::Limit {
                name: String::from(name),
            },
            bits,
            input: SymbolicInput::Designated,
            witness_closed: true,
            lineage: Lineage::Flat,
        }
    }

    fn from_eval(
        id: String,
        input: SymbolicInput,
        out: EvalOut,
        horizon: usize,
        witness_closed: bool,
        lineage: Lineage,
    ) -> Option<Self> {
        match out.zeros_beyond {
            ZeroSupply::NoMore => {
                let mut prefix = out.bits;
                while prefix.last() == Some(&true) {
                    prefix.pop();
                }
                let bits: Vec<bool> = (0..horizon.max(prefix.len()))
                    .map(|i| prefix.get(i).copied().unwrap_or(true))
                    .collect();
                Some(SymbolicPoint {
                    id,
                    form: PointForm::EventuallyOne { prefix },
                    bits,
                    input,
                    witness_closed,
                    lineage,
                })
            }
            ZeroSupply::Infinite => {
                if out.bits.len() < horizon {
                    // The point is not materializable to the horizon; it is
                    // outside the desk's resolution.
                    return None;
                }
                let mut bits = out.bits;
                bits.truncate(horizon);
                Some(SymbolicPoint {
                    id: id.clone(),
                    form: PointForm::Limit { name: id },
                    bits,
                    input,
                    witness_closed,
                    lineage,
                })
            }
            ZeroSupply::Unknown => None,
        }
    }

    pub fn is_limit_form(&self) -> bool {
        matches!(self.form, PointForm::Limit { .. })
    }

    /// The bit at `i`, exact for eventually-one points at any index.
    pub fn bit(&self, i: usize) -> Option<bool> {
        if i < self.bits.len() {
            return Some(self.bits[i]);
        }
        match &self.form {
            PointForm::EventuallyOne { prefix } => {
                Some(prefix.get(i).copied().unwrap_or(true))
            }
            PointForm::Limit { .. } => None,
        }
    }

    fn dedup_key(&self) -> (u8, Vec<bool>) {
        match &self.form {
            PointForm::EventuallyOne { prefix } => (0, prefix.clone()),
            PointForm::Limit { .. } => (1, self.bits.clone()),
        }
    }
}

/// Renders bits as a 0/1 string.
pub fn bits_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// The first index at which two points disagree.
pub fn agreement(a: &SymbolicPoint, b: &SymbolicPoint) -> Result<usize> {
    let limit = a.bits.len().max(b.bits.len()) + 1;
    for i in 0..=limit {
        match (a.bit(i), b.bit(i)) {
            (Some(x), Some(y)) => {
                if x != y {
                    return Ok(i);
                }
            }
            _ => return Err(Error::HorizonExceeded),
        }
    }
    // Two eventually-one points that agree past both prefixes are equal.
    Err(Error::HorizonExceeded)
}

// ---------------------------------------------------------------------------
// Class descriptors
// ---------------------------------------------------------------------------

/// How a dynamic-join class assigns ranks to its components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DynKind {
    /// Every component is a rank-one block encoder; the limit point has
    /// rank `w`.
    Unit,
    /// Component `i` is the transfinite driver at the `i`-th notation of
    /// this limit's fundamental sequence.
    Fundamental(OrdinalNotation),
}

/// A recipe for one of the countable image classes.
#[derive(Debug, Clone)]
pub enum ClassDescriptor {
    Rank1 {
        script: Arc<Delta02Script>,
    },
    Product {
        left: Box<ClassDescriptor>,
        right: Box<ClassDescriptor>,
    },
    DynJoin {
        master: Arc<Delta02Script>,
        kind: DynKind,
    },
    Theta {
        script: Arc<Delta02Script>,
        notation: OrdinalNotation,
    },
}

/// A descriptor with its transfinite cases unfolded one step.
enum Reduced {
    /// The one-point class of the constant-zero image.
    Singleton,
    Rank1(Arc<Delta02Script>),
    Product(ClassDescriptor, ClassDescriptor),
    DynJoin {
        master: Arc<Delta02Script>,
        kind: DynKind,
    },
}

impl ClassDescriptor {
    pub fn rank1(script: Arc<Delta02Script>) -> Self {
        ClassDescriptor::Rank1 { script }
    }

    pub fn product(left: ClassDescriptor, right: ClassDescriptor) -> Self {
        ClassDescriptor::Product {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// The functional whose image the class is.
    pub fn functional(&self) -> PrefixFunctional {
        match self {
            ClassDescriptor::Rank1 { script } => PrefixFunctional::Phi(script.clone()),
            ClassDescriptor::Product { left, right } => PrefixFunctional::PairJoin(
                Box::new(left.functional()),
                Box::new(right.functional()),
            ),
            ClassDescriptor::DynJoin { master, kind } => match kind {
                DynKind::Unit => PrefixFunctional::DynJoin(ComponentFamily::PhiComponents {
                    master: master.clone(),
                }),
                DynKind::Fundamental(limit) => {
                    PrefixFunctional::DynJoin(ComponentFamily::ThetaComponents {
                        master: master.clone(),
                        limit: limit.clone(),
                    })
                }
            },
            ClassDescriptor::Theta { script, notation } => PrefixFunctional::Theta {
                script: script.clone(),
                notation: notation.clone(),
            },
        }
    }

    /// The structural rank of the class's designated limit point.
    pub fn limit_rank(&self) -> Result<CnfOrdinal> {
        match self.reduce()? {
            Reduced::Singleton => Ok(CnfOrdinal::zero()),
            Reduced::Rank1(_) => Ok(CnfOrdinal::finite(1)),
            Reduced::Product(l, r) => Ok(hessenberg_sum(&l.limit_rank()?, &r.limit_rank()?)),
            Reduced::DynJoin { kind, .. } => match kind {
                DynKind::Unit => Ok(CnfOrdinal::omega()),
                DynKind::Fundamental(limit) => Ok(value_of(&limit)?),
            },
        }
    }

    fn reduce(&self) -> Result<Reduced> {
        match self {
            ClassDescriptor::Rank1 { script } => Ok(Reduced::Rank1(script.clone())),
            ClassDescriptor::Product { left, right } => {
                Ok(Reduced::Product((**left).clone(), (**right).clone()))
            }
            ClassDescriptor::DynJoin { master, kind } => Ok(Reduced::DynJoin {
                master: master.clone(),
                kind: kind.clone(),
            }),
            ClassDescriptor::Theta { script, notation } => match notation {
                OrdinalNotation::One => Ok(Reduced::Singleton),
                OrdinalNotation::Succ(b) if **b == OrdinalNotation::One => {
                    Ok(Reduced::Rank1(script.clone()))
                }
                OrdinalNotation::Succ(b) => Ok(Reduced::Product(
                    ClassDescriptor::Theta {
                        script: Arc::new(split_script(script, false)),
                        notation: (**b).clone(),
                    },
                    ClassDescriptor::Rank1 {
                        script: Arc::new(split_script(script, true)),
                    },
                )),
                OrdinalNotation::Lim { .. } => Ok(Reduced::DynJoin {
                    master: script.clone(),
                    kind: DynKind::Fundamental(notation.clone()),
                }),
            },
        }
    }
}

fn dyn_family(master: &Arc<Delta02Script>, kind: &DynKind) -> ComponentFamily {
    match kind {
        DynKind::Unit => ComponentFamily::PhiComponents {
            master: master.clone(),
        },
        DynKind::Fundamental(limit) => ComponentFamily::ThetaComponents {
            master: master.clone(),
            limit: limit.clone(),
        },
    }
}

fn dyn_component_class(
    master: &Arc<Delta02Script>,
    kind: &DynKind,
    i: usize,
) -> Result<ClassDescriptor> {
    let script = Arc::new(component_script(master, i));
    match kind {
        DynKind::Unit => Ok(ClassDescriptor::Rank1 { script }),
        DynKind::Fundamental(limit) => Ok(ClassDescriptor::Theta {
            script,
            notation: fundamental_at(limit, i)?,
        }),
    }
}

fn dyn_gamma(kind: &DynKind, i: usize) -> Result<CnfOrdinal> {
    match kind {
        DynKind::Unit => Ok(CnfOrdinal::finite(1)),
        DynKind::Fundamental(limit) => Ok(value_of(&fundamental_at(limit, i)?)?),
    }
}

// ---------------------------------------------------------------------------
// Point enumeration
// ---------------------------------------------------------------------------

/// The truncation positions at which cutting the limit sequence produces a
/// genuinely deviant input: zero, and one past each one-bit that is not the
/// last. Positions are capped by `bound`.
fn trunc_points(script: &Delta02Script, bound: usize) -> Vec<usize> {
    let depth = script.depth();
    let limit = script.limit_prefix(depth).unwrap_or_default();
    let last_one = limit.iter().rposition(|&b| b);
    let mut out = Vec::new();
    let Some(last_one) = last_one else {
        return out;
    };
    out.push(0);
    for p in 0..depth.min(bound.max(1)) {
        if limit[p] && p < last_one && p + 1 < bound {
            out.push(p + 1);
        }
    }
    out
}

/// The largest valid truncation point at most `level` (used to derive fully
/// deviant structured inputs from a single level parameter).
fn quantize_trunc(script: &Delta02Script, level: usize) -> Option<usize> {
    let candidates = trunc_points(script, script.depth());
    candidates.into_iter().filter(|&m| m <= level).max()
}

fn trunc_leaf(script: &Delta02Script, m: usize) -> Result<SymbolicInput> {
    Ok(SymbolicInput::Leaf(BitStream::EventuallyConstant {
        prefix: script.limit_prefix(m)?,
        tail: false,
    }))
}

/// A fully deviant input for a component class: every leaf of the recipe is
/// truncated at (the quantization of) `level`, so no sub-leaf is designated.
/// A leaf whose limit has no ones gets the all-ones stream instead, which
/// deviates at bit zero.
fn deviant_input(class: &ClassDescriptor, level: usize) -> Result<Option<SymbolicInput>> {
    match class.reduce()? {
        Reduced::Singleton => Ok(Some(SymbolicInput::zeros())),
        Reduced::Rank1(script) => match quantize_trunc(&script, level) {
            Some(m) => Ok(Some(trunc_leaf(&script, m)?)),
            None => {
                if script.depth() == 0 {
                    return Ok(None);
                }
                Ok(Some(SymbolicInput::Leaf(BitStream::ones())))
            }
        },
        Reduced::Product(l, r) => {
            let (Some(a), Some(b)) = (deviant_input(&l, level)?, deviant_input(&r, level)?)
            else {
                return Ok(None);
            };
            Ok(Some(SymbolicInput::Pair(Box::new(a), Box::new(b))))
        }
        Reduced::DynJoin { master, kind } => {
            let mut explicit = Vec::new();
            for i in 0..3 {
                match deviant_input(&dyn_component_class(&master, &kind, i)?, level)? {
                    Some(sub) => explicit.push(sub),
                    None => explicit.push(SymbolicInput::zeros()),
                }
            }
            Ok(Some(SymbolicInput::Components {
                explicit,
                rest: RestKind::Zeros,
            }))
        }
    }
}

struct Enumeration {
    points: Vec<SymbolicPoint>,
    seen: BTreeSet<(u8, Vec<bool>)>,
}

impl Enumeration {
    fn new() -> Self {
        Enumeration {
            points: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    fn push(&mut self, point: Option<SymbolicPoint>) {
        let Some(p) = point else { return };
        let key = p.dedup_key();
        if self.seen.insert(key.clone()) {
            self.points.push(p);
            return;
        }
        // An indistinguishable point: keep the first construction but let
        // the survivor own both dynamic profiles, so witnesses that target
        // the merged profile still count.
        if let Lineage::Dyn { profiles } = p.lineage {
            if let Some(existing) = self.points.iter_mut().find(|q| q.dedup_key() == key) {
                if let Lineage::Dyn {
                    profiles: existing_profiles,
                } = &mut existing.lineage
                {
                    for pr in profiles {
                        if !existing_profiles.contains(&pr) {
                            existing_profiles.push(pr);
                        }
                    }
                }
            }
        }
    }
}

/// Enumerates the class: its designated limit point plus the images of all
/// deviant inputs whose deviation parameters are below `bound`, normalized,
/// deduplicated, and each materialized to `horizon` bits. Images outside the
/// desk's resolution (undecidable or too shallow to materialize) are
/// dropped.
pub fn enumerate_points(
    class: &ClassDescriptor,
    bound: usize,
    horizon: usize,
) -> Result<Vec<SymbolicPoint>> {
    let mut en = Enumeration::new();
    enumerate_into(class, bound, horizon, &mut en)?;
    Ok(en.points)
}

fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::UndecidableEquality
            | Error::HorizonExceeded
            | Error::DepthExceeded { .. }
            | Error::ComponentStall { .. }
            | Error::Ordinal(crate::ordinals::OrdinalError::OutOfBound { .. })
    )
}

fn eval_point(
    class: &ClassDescriptor,
    id: String,
    input: SymbolicInput,
    horizon: usize,
    closed: bool,
    lineage: Lineage,
) -> Result<Option<SymbolicPoint>> {
    match eval_symbolic(&class.functional(), &input, horizon, horizon) {
        Ok(out) => Ok(SymbolicPoint::from_eval(
            id, input, out, horizon, closed, lineage,
        )),
        Err(e) if skippable(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

fn enumerate_into(
    class: &ClassDescriptor,
    bound: usize,
    horizon: usize,
    en: &mut Enumeration,
) -> Result<()> {
    match class.reduce()? {
        Reduced::Singleton => {
            en.push(eval_point(
                class,
                String::from("0w"),
                SymbolicInput::Designated,
                horizon,
                true,
                Lineage::Flat,
            )?);
        }
        Reduced::Rank1(script) => {
            en.push(eval_point(
                class,
                String::from("R"),
                SymbolicInput::Designated,
                horizon,
                true,
                Lineage::Flat,
            )?);
            for m in trunc_points(&script, bound) {
                en.push(eval_point(
                    class,
                    format!("x{m}"),
                    trunc_leaf(&script, m)?,
                    horizon,
                    true,
                    Lineage::Flat,
                )?);
            }
        }
        Reduced::Product(left, right) => {
            let l = enumerate_points(&left, bound, horizon)?;
            let r = enumerate_points(&right, bound, horizon)?;
            for a in &l {
                for b in &r {
                    en.push(Some(join_points(a, b, horizon)));
                }
            }
        }
        Reduced::DynJoin { master, kind } => {
            enumerate_dyn_join(&master, &kind, class, bound, horizon, en)?;
        }
    }
    Ok(())
}

fn join_points(a: &SymbolicPoint, b: &SymbolicPoint, horizon: usize) -> SymbolicPoint {
    let id = format!("({}+{})", a.id, b.id);
    let input = SymbolicInput::Pair(Box::new(a.input.clone()), Box::new(b.input.clone()));
    let witness_closed = a.witness_closed && b.witness_closed;
    let lineage = Lineage::Join(Box::new(a.clone()), Box::new(b.clone()));
    match (&a.form, &b.form) {
        (PointForm::EventuallyOne { prefix: pa }, PointForm::EventuallyOne { prefix: pb }) => {
            let span = 2 * pa.len().max(pb.len()) + 2;
            let mut prefix: Vec<bool> = (0..span)
                .map(|i| {
                    let (side, idx) = (i % 2, i / 2);
                    let p = if side == 0 { pa } else { pb };
                    p.get(idx).copied().unwrap_or(true)
                })
                .collect();
            while prefix.last() == Some(&true) {
                prefix.pop();
            }
            let bits: Vec<bool> = (0..horizon.max(prefix.len()))
                .map(|i| prefix.get(i).copied().unwrap_or(true))
                .collect();
            SymbolicPoint {
                id,
                form: PointForm::EventuallyOne { prefix },
                bits,
                input,
                witness_closed,
                lineage,
            }
        }
        _ => {
            let bits: Vec<bool> = (0..horizon)
                .map(|i| {
                    let (side, idx) = (i % 2, i / 2);
                    let p = if side == 0 { a } else { b };
                    p.bit(idx).unwrap_or(true)
                })
                .collect();
            SymbolicPoint {
                id: id.clone(),
                form: PointForm::Limit { name: id },
                bits,
                input,
                witness_closed,
                lineage,
            }
        }
    }
}

fn enumerate_dyn_join(
    master: &Arc<Delta02Script>,
    kind: &DynKind,
    class: &ClassDescriptor,
    bound: usize,
    horizon: usize,
    en: &mut Enumeration,
) -> Result<()> {
    en.push(eval_point(
        class,
        String::from("Xi(A)"),
        SymbolicInput::Components {
            explicit: Vec::new(),
            rest: RestKind::Designated,
        },
        horizon,
        false,
        Lineage::Dyn {
            profiles: alloc::vec![DynProfile {
                designated: 0,
                levels: Vec::new(),
                full: true,
            }],
        },
    )?);
    // The designated-prefix ladder: components below j designated, the rest
    // zero.
    for j in 0..bound {
        let input = SymbolicInput::Components {
            explicit: alloc::vec![SymbolicInput::Designated; j],
            rest: RestKind::Zeros,
        };
        let lineage = Lineage::Dyn {
            profiles: alloc::vec![DynProfile {
                designated: j,
                levels: Vec::new(),
                full: false,
            }],
        };
        en.push(eval_point(
            class,
            format!("B^{j}"),
            input,
            horizon,
            j <= 3,
            lineage,
        )?);
    }
    // Truncation chains: components below j designated, then a run of fully
    // deviant components at given levels, then zeros. Chains of length t
    // witness the removal round of the (j + t <= 3) points above them.
    for t in 1..=3usize {
        let j_max = match t {
            1 => bound.saturating_sub(1),
            2 => 1,
            _ => 0,
        };
        for j in 0..=j_max {
            let mut stack: Vec<Vec<usize>> = alloc::vec![Vec::new()];
            while let Some(levels) = stack.pop() {
                if levels.len() == t {
                    let mut explicit = alloc::vec![SymbolicInput::Designated; j];
                    let mut ok = true;
                    for (offset, &level) in levels.iter().enumerate() {
                        let comp = dyn_component_class(master, kind, j + offset)?;
                        match deviant_input(&comp, level)? {
                            Some(sub) => explicit.push(sub),
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        let input = SymbolicInput::Components {
                            explicit,
                            rest: RestKind::Zeros,
                        };
                        let id = format!("Xi[{j}|{levels:?}]");
                        let lineage = Lineage::Dyn {
                            profiles: alloc::vec![DynProfile {
                                designated: j,
                                levels: levels.clone(),
                                full: false,
                            }],
                        };
                        en.push(eval_point(class, id, input, horizon, j + t <= 3, lineage)?);
                    }
                    continue;
                }
                let comp_idx = j + levels.len();
                let comp_script = component_script(master, comp_idx);
                let mut ms = trunc_points(&comp_script, bound);
                if ms.is_empty() {
                    ms.push(0);
                }
                for m in ms {
                    let mut next = levels.clone();
                    next.push(m);
                    stack.push(next);
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Derivative and rank oracle
// ---------------------------------------------------------------------------

/// One pass of the finite-sample Cantor-Bendixson derivative.
///
/// Eventually-one points never survive: their complete descriptions certify
/// isolation. A limit-form point survives iff the set approaches it, judged
/// along the points' construction structure: flat points count witnesses
/// attributed to their unique strictly nearest limit-form neighbor, joined
/// points are approached iff one coordinate is approached within its
/// row or column projection, and dynamic-join points are approached by the
/// members whose profiles promote to theirs. `depth` is the minimum
/// materialized resolution demanded of limit-form points.
pub fn cb_derivative(points: &[SymbolicPoint], depth: usize) -> Result<Vec<SymbolicPoint>> {
    let survivors = derivative_survivors(points, depth)?;
    Ok(survivors
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

fn derivative_survivors(points: &[SymbolicPoint], depth: usize) -> Result<Vec<usize>> {
    for p in points {
        if p.is_limit_form() && p.bits.len() < depth {
            return Err(Error::HorizonExceeded);
        }
    }
    let refs: Vec<&SymbolicPoint> = points.iter().collect();
    let flat = flat_witnessed(&refs)?;
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !p.is_limit_form() {
            continue;
        }
        let approached = match &p.lineage {
            Lineage::Flat => flat[i],
            Lineage::Join(..) | Lineage::Dyn { .. } => structured_approached(p, &refs)?,
        };
        if approached {
            out.push(i);
        }
    }
    Ok(out)
}

/// Flat attribution: which points are some other member's unique strictly
/// nearest limit-form neighbor.
fn flat_witnessed(points: &[&SymbolicPoint]) -> Result<Vec<bool>> {
    let n = points.len();
    let mut witnessed = alloc::vec![false; n];
    for q in 0..n {
        let mut best: Option<(usize, usize)> = None;
        let mut tie = false;
        for t in 0..n {
            if t == q || !points[t].is_limit_form() {
                continue;
            }
            let a = agreement(points[q], points[t])?;
            match best {
                None => best = Some((t, a)),
                Some((_, b)) => {
                    if a > b {
                        best = Some((t, a));
                        tie = false;
                    } else if a == b {
                        tie = true;
                    }
                }
            }
        }
        if let Some((t, _)) = best {
            if !tie {
                witnessed[t] = true;
            }
        }
    }
    Ok(witnessed)
}

fn structured_approached(p: &SymbolicPoint, set: &[&SymbolicPoint]) -> Result<bool> {
    match &p.lineage {
        Lineage::Flat => {
            let flat = flat_witnessed(set)?;
            let idx = set
                .iter()
                .position(|q| q.dedup_key() == p.dedup_key())
                .ok_or(Error::InputShape)?;
            Ok(flat[idx])
        }
        Lineage::Dyn { profiles } => {
            for q in set {
                if q.dedup_key() == p.dedup_key() {
                    continue;
                }
                if let Lineage::Dyn {
                    profiles: q_profiles,
                } = &q.lineage
                {
                    for pr in q_profiles {
                        if let Some(promoted) = pr.promote() {
                            if profiles.contains(&promoted) {
                                return Ok(true);
                            }
                        }
                    }
                }
            }
            Ok(false)
        }
        Lineage::Join(a, b) => {
            // Approach in a product decomposes along the coordinates: the
            // column through b must approach a, or the row through a must
            // approach b.
            let column: Vec<&SymbolicPoint> = set
                .iter()
                .filter_map(|q| match &q.lineage {
                    Lineage::Join(qa, qb) if qb.dedup_key() == b.dedup_key() => {
                        Some(qa.as_ref())
                    }
                    _ => None,
                })
                .collect();
            if a.is_limit_form() && structured_approached(a, &column)? {
                return Ok(true);
            }
            let row: Vec<&SymbolicPoint> = set
                .iter()
                .filter_map(|q| match &q.lineage {
                    Lineage::Join(qa, qb) if qa.dedup_key() == a.dedup_key() => {
                        Some(qb.as_ref())
                    }
                    _ => None,
                })
                .collect();
            if b.is_limit_form() && structured_approached(b, &row)? {
                return Ok(true);
            }
            Ok(false)
        }
    }
}

/// The round at which each point is removed by iterating the derivative
/// (`None` when it survives to the fixed point). Applying the derivative
/// `|S|` times always reaches a fixed point.
pub fn derivative_rounds(points: &[SymbolicPoint], depth: usize) -> Result<Vec<Option<usize>>> {
    let mut rounds: Vec<Option<usize>> = alloc::vec![None; points.len()];
    let mut current: Vec<usize> = (0..points.len()).collect();
    let mut round = 0;
    loop {
        let set: Vec<SymbolicPoint> = current.iter().map(|&i| points[i].clone()).collect();
        let survivors = derivative_survivors(&set, depth)?;
        let surviving: BTreeSet<usize> = survivors.iter().map(|&k| current[k]).collect();
        let mut removed_any = false;
        for &i in &current {
            if !surviving.contains(&i) {
                rounds[i] = Some(round);
                removed_any = true;
            }
        }
        current.retain(|i| surviving.contains(i));
        if !removed_any || current.is_empty() {
            break;
        }
        round += 1;
    }
    Ok(rounds)
}

/// Brute-force rank: the least `k` with the point in the `k`-th derivative
/// of the enumeration but not the `k+1`-st. `None` means the enumeration
/// cannot witness the rank (the point survives to a fixed point, or its
/// witness ladder is not closed at this bound).
pub fn brute_rank(
    class: &ClassDescriptor,
    point: &SymbolicPoint,
    bound: usize,
    depth: usize,
    horizon: usize,
) -> Result<Option<usize>> {
    let points = enumerate_points(class, bound, horizon)?;
    let idx = points
        .iter()
        .position(|p| p.dedup_key() == point.dedup_key())
        .ok_or(Error::InputShape)?;
    if !points[idx].witness_closed {
        return Ok(None);
    }
    let rounds = derivative_rounds(&points, depth)?;
    Ok(rounds[idx])
}

// ---------------------------------------------------------------------------
// Structural rank
// ---------------------------------------------------------------------------

fn leaf_deviation(script: &Delta02Script, stream: &BitStream, horizon: usize) -> Result<Option<usize>> {
    for i in 0..script.depth() {
        if stream.bit_at(i, horizon)? != script.limit_bit(i)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// The rank of an input's image within the class, by the structural
/// formulas: one or zero for the block encoder, natural sums over products,
/// and for dynamic joins the sum of the activated components' contributions
/// up to the stalled phase (the full limit value on the designated input).
pub fn structural_rank(
    class: &ClassDescriptor,
    input: &SymbolicInput,
    horizon: usize,
) -> Result<CnfOrdinal> {
    match class.reduce()? {
        Reduced::Singleton => Ok(CnfOrdinal::zero()),
        Reduced::Rank1(script) => match input {
            SymbolicInput::Designated => Ok(CnfOrdinal::finite(1)),
            SymbolicInput::Leaf(stream) => match leaf_deviation(&script, stream, horizon)? {
                Some(_) => Ok(CnfOrdinal::zero()),
                None => Err(Error::UndecidableEquality),
            },
            _ => Err(Error::InputShape),
        },
        Reduced::Product(l, r) => {
            let (a, b) = split_pair_input(input)?;
            Ok(hessenberg_sum(
                &structural_rank(&l, &a, horizon)?,
                &structural_rank(&r, &b, horizon)?,
            ))
        }
        Reduced::DynJoin { master, kind } => {
            if input.is_designated() {
                return ClassDescriptor::DynJoin {
                    master,
                    kind,
                }
                .limit_rank();
            }
            let family = dyn_family(&master, &kind);
            let (_, state) = dyn_join_symbolic(&family, input, horizon, horizon)?;
            let contribution = |i: usize| -> Result<CnfOrdinal> {
                let sub = component_input(input, i)?;
                if sub.is_designated() {
                    dyn_gamma(&kind, i)
                } else {
                    let class = dyn_component_class(&master, &kind, i)?;
                    if component_script(&master, i).depth() == 0 {
                        // The master describes nothing about this
                        // component; at the desk scale it contributes no
                        // rank and can never complete a phase.
                        return Ok(CnfOrdinal::zero());
                    }
                    structural_rank(&class, &sub, horizon)
                }
            };
            if state.stalled == Some(true) {
                let mut total = CnfOrdinal::zero();
                for i in 0..=state.phase {
                    total = hessenberg_sum(&total, &contribution(i)?);
                }
                return Ok(total);
            }
            // The stall lies past the horizon. The sum over the activated
            // components is still determined when every designated
            // component is already activated and every component that the
            // stall could still admit contributes zero.
            let SymbolicInput::Components { explicit, rest } = input else {
                return Err(Error::HorizonExceeded);
            };
            if *rest != RestKind::Zeros {
                return Err(Error::HorizonExceeded);
            }
            let stall_cap = (0..64)
                .find(|&i| component_script(&master, i).depth() == 0)
                .ok_or(Error::HorizonExceeded)?;
            let mut total = CnfOrdinal::zero();
            for i in 0..=stall_cap.max(explicit.len()) {
                let c = contribution(i)?;
                if !c.is_zero() && i > state.phase {
                    // A positive contribution that the true stall might
                    // exclude: undecidable here.
                    return Err(Error::HorizonExceeded);
                }
                total = hessenberg_sum(&total, &c);
            }
            Ok(total)
        }
    }
}

fn split_pair_input(input: &SymbolicInput) -> Result<(SymbolicInput, SymbolicInput)> {
    match input {
        SymbolicInput::Designated => Ok((SymbolicInput::Designated, SymbolicInput::Designated)),
        SymbolicInput::Pair(a, b) => Ok(((**a).clone(), (**b).clone())),
        SymbolicInput::Leaf(stream) => Ok((
            SymbolicInput::Leaf(crate::streams::restrict(stream.clone(), IndexFamily::Evens)),
            SymbolicInput::Leaf(crate::streams::restrict(stream.clone(), IndexFamily::Odds)),
        )),
        SymbolicInput::Components { .. } => Err(Error::InputShape),
    }
}

fn component_input(input: &SymbolicInput, i: usize) -> Result<SymbolicInput> {
    match input {
        SymbolicInput::Designated => Ok(SymbolicInput::Designated),
        SymbolicInput::Components { explicit, rest } => {
            Ok(explicit.get(i).cloned().unwrap_or(match rest {
                RestKind::Designated => SymbolicInput::Designated,
                RestKind::Zeros => SymbolicInput::zeros(),
            }))
        }
        SymbolicInput::Leaf(stream) => Ok(SymbolicInput::Leaf(crate::streams::restrict(
            stream.clone(),
            IndexFamily::I(i),
        ))),
        SymbolicInput::Pair(..) => Err(Error::InputShape),
    }
}

// ---------------------------------------------------------------------------
// Decomposition rank (the decoder route)
// ---------------------------------------------------------------------------

struct Replay {
    boundaries: Vec<usize>,
    consumed_at_boundary: Vec<Vec<usize>>,
    phase: usize,
}

/// Re-runs the phase machine using the output itself as the bit source: the
/// machine's evolution is a function of the copied bits, so boundaries and
/// the stalled phase are recoverable from the output alone.
fn replay_phases(bits: &[bool]) -> Replay {
    let mut consumed = alloc::vec![0usize];
    let mut zeros = alloc::vec![0usize];
    let mut boundaries = Vec::new();
    let mut consumed_at_boundary = Vec::new();
    let mut phase = 0usize;
    for (pos, &bit) in bits.iter().enumerate() {
        let (k, _) = infinite_join_component(pos);
        let src = k.min(phase);
        consumed[src] += 1;
        if !bit {
            zeros[src] += 1;
        }
        if zeros.iter().take(phase + 1).all(|&z| z >= 1) {
            boundaries.push(pos + 1);
            consumed_at_boundary.push(consumed.clone());
            phase += 1;
            for z in zeros.iter_mut() {
                *z = 0;
            }
            consumed.push(0);
            zeros.push(0);
        }
    }
    Replay {
        boundaries,
        consumed_at_boundary,
        phase,
    }
}

fn designated_image(class: &ClassDescriptor, cap: usize, horizon: usize) -> Result<Vec<bool>> {
    Ok(eval_symbolic(&class.functional(), &SymbolicInput::Designated, cap, horizon)?.bits)
}

/// Rank of a point recovered from its output bits alone: block images are
/// compared against the designated image, products are split positionally,
/// and dynamic joins are decomposed through the recovery offsets, each
/// component's recovered tail being matched against its designated image.
pub fn decomposition_rank(
    class: &ClassDescriptor,
    bits: &[bool],
    horizon: usize,
) -> Result<CnfOrdinal> {
    match class.reduce()? {
        Reduced::Singleton => Ok(CnfOrdinal::zero()),
        Reduced::Rank1(script) => {
            let image = designated_image(
                &ClassDescriptor::Rank1 { script },
                bits.len(),
                horizon,
            )?;
            let window = image.len().min(bits.len());
            if window < 32 {
                return Err(Error::HorizonExceeded);
            }
            if image[..window] == bits[..window] {
                Ok(CnfOrdinal::finite(1))
            } else {
                Ok(CnfOrdinal::zero())
            }
        }
        Reduced::Product(l, r) => {
            let evens: Vec<bool> = bits.iter().copied().step_by(2).collect();
            let odds: Vec<bool> = bits.iter().copied().skip(1).step_by(2).collect();
            Ok(hessenberg_sum(
                &decomposition_rank(&l, &evens, horizon)?,
                &decomposition_rank(&r, &odds, horizon)?,
            ))
        }
        Reduced::DynJoin { master, kind } => {
            let replay = replay_phases(bits);
            let mut total = CnfOrdinal::zero();
            let mut all_matched = true;
            for i in 0..=replay.phase {
                let comp_class = dyn_component_class(&master, &kind, i)?;
                let comp_cap = (bits.len() >> i) + 8;
                let image = match designated_image(&comp_class, comp_cap, horizon) {
                    Ok(image) => image,
                    Err(e) if skippable(&e) => {
                        all_matched = false;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let check = if i < replay.boundaries.len() {
                    let c = replay.consumed_at_boundary[i][i];
                    let d = rank_at_or_after(&IndexFamily::I(i), replay.boundaries[i]);
                    verify_eq1(bits, &image, i, c, d, bits.len())
                } else {
                    let from = replay.boundaries.last().copied().unwrap_or(0);
                    let d = rank_at_or_after(&IndexFamily::J(i), from);
                    verify_eq2(bits, &image, i, d, bits.len())
                };
                if check.holds && check.verified >= 1 {
                    total = hessenberg_sum(&total, &dyn_gamma(&kind, i)?);
                } else {
                    all_matched = false;
                }
            }
            if all_matched {
                // Every activated component decodes to its designated image
                // and no stall was observed: the point is the class limit.
                ClassDescriptor::DynJoin { master, kind }.limit_rank()
            } else {
                Ok(total)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Rank-faithfulness report
// ---------------------------------------------------------------------------

/// One row of the faithfulness report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaithfulEntry {
    pub point_id: String,
    pub prefix: String,
    pub structural: CnfOrdinal,
    pub decomposition: CnfOrdinal,
    pub brute: Option<usize>,
    pub faithful: bool,
}

/// For every enumerated point, computes the structural rank and the
/// decomposition-route rank and reports their equality, together with the
/// derivative removal round where the enumeration is witness-closed.
pub fn rank_faithful_check(
    class: &ClassDescriptor,
    bound: usize,
    depth: usize,
    horizon: usize,
) -> Result<Vec<FaithfulEntry>> {
    let points = enumerate_points(class, bound, horizon)?;
    let rounds = derivative_rounds(&points, depth)?;
    let mut entries = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let structural = structural_rank(class, &p.input, horizon)?;
        let decomposition = decomposition_rank(class, &p.bits, horizon)?;
        let brute = if p.witness_closed { rounds[i] } else { None };
        let faithful = structural == decomposition;
        entries.push(FaithfulEntry {
            point_id: p.id.clone(),
            prefix: bits_string(&p.bits[..depth.min(p.bits.len())]),
            structural,
            decomposition,
            brute,
            faithful,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn derivative_keeps_the_accumulated_point() {
        // {0^w} plus the branch points 0^n 1^w for n <= 8.
        let mut points = alloc::vec![SymbolicPoint::limit("zeros", alloc::vec![false; 64])];
        for n in 0..=8usize {
            points.push(SymbolicPoint::eventually_one(alloc::vec![false; n]));
        }
        let d = cb_derivative(&points, 16).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].id, "zeros");
        // A second application empties the set.
        let dd = cb_derivative(&d, 16).unwrap();
        assert!(dd.is_empty());
    }

    #[test]
    fn derivative_of_singleton_and_empty() {
        let single = alloc::vec![SymbolicPoint::eventually_one(bits("0010"))];
        assert!(cb_derivative(&single, 16).unwrap().is_empty());
        assert!(cb_derivative(&[], 16).unwrap().is_empty());
        let lonely_limit = alloc::vec![SymbolicPoint::limit("L", alloc::vec![false; 32])];
        assert!(cb_derivative(&lonely_limit, 16).unwrap().is_empty());
    }

    #[test]
    fn eventually_one_normalization() {
        let p = SymbolicPoint::eventually_one(bits("0111"));
        match &p.form {
            PointForm::EventuallyOne { prefix } => assert_eq!(prefix, &bits("0")),
            _ => panic!("expected eventually-one form"),
        }
        assert_eq!(p.bit(0), Some(false));
        assert_eq!(p.bit(1000), Some(true));
    }

    #[test]
    fn rank1_enumeration_and_ranks() {
        let script = crate::corpus::rank1_scripts()[0].clone();
        let class = ClassDescriptor::rank1(script);
        let points = enumerate_points(&class, 16, 2048).unwrap();
        assert!(points.len() >= 4, "got {}", points.len());
        assert_eq!(points.iter().filter(|p| p.is_limit_form()).count(), 1);
        let rounds = derivative_rounds(&points, 64).unwrap();
        for (p, round) in points.iter().zip(&rounds) {
            let expected = if p.is_limit_form() { Some(1) } else { Some(0) };
            assert_eq!(*round, expected, "point {}", p.id);
        }
    }

    #[test]
    fn rank1_structural_matches_brute() {
        let script = crate::corpus::rank1_scripts()[1].clone();
        let class = ClassDescriptor::rank1(script);
        let points = enumerate_points(&class, 16, 2048).unwrap();
        for p in &points {
            let s = structural_rank(&class, &p.input, 2048).unwrap();
            let b = brute_rank(&class, p, 16, 64, 2048).unwrap();
            assert_eq!(b.map(CnfOrdinal::finite_usize), Some(s.clone()), "{}", p.id);
            let d = decomposition_rank(&class, &p.bits, 2048).unwrap();
            assert_eq!(d, s, "{}", p.id);
        }
    }

    #[test]
    fn product_limit_point_has_rank_two() {
        let scripts = crate::corpus::rank1_scripts();
        let class = ClassDescriptor::product(
            ClassDescriptor::rank1(scripts[0].clone()),
            ClassDescriptor::rank1(scripts[1].clone()),
        );
        let points = enumerate_points(&class, 16, 2048).unwrap();
        let rounds = derivative_rounds(&points, 64).unwrap();
        let mut seen_two = false;
        for (p, round) in points.iter().zip(&rounds) {
            let s = structural_rank(&class, &p.input, 2048).unwrap();
            assert_eq!(
                round.map(CnfOrdinal::finite_usize),
                Some(s.clone()),
                "{}",
                p.id
            );
            if s == CnfOrdinal::finite(2) {
                seen_two = true;
                assert!(p.input.is_designated());
            }
        }
        assert!(seen_two);
    }
}
