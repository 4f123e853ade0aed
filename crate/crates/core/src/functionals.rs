//! Prefix-monotone functionals on Cantor space.
//!
//! The block encoder `Phi` turns a stage approximation into a total
//! functional whose designated image is a limit point and whose other images
//! are eventually constant. Finite products interleave block encoders over
//! the left-nested join; the dynamic join interleaves a whole family in
//! phases, activating one component per completed phase; the transfinite
//! driver composes all of these along an ordinal notation.
//!
//! Every evaluation takes an explicit output cap and returns exactly the
//! output prefix determined by its input prefix (with the eventually-one
//! tails materialized up to the cap when they are decided).

use crate::error::{Error, Result};
use crate::ordinals::{fundamental_at, OrdinalNotation};
use crate::streams::{infinite_join_component, nfold_position, BitStream, Delta02Script, IndexFamily};
use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

/// What is known about an output past its materialized bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroSupply {
    /// All later bits are ones.
    NoMore,
    /// Infinitely many zeros remain.
    Infinite,
    /// Nothing is known past the materialized prefix.
    Unknown,
}

/// A materialized output prefix together with exact tail knowledge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOut {
    pub bits: Vec<bool>,
    pub zeros_beyond: ZeroSupply,
}

impl EvalOut {
    fn unknown(bits: Vec<bool>) -> Self {
        EvalOut {
            bits,
            zeros_beyond: ZeroSupply::Unknown,
        }
    }

    /// True when the sequence is exactly `bits` padded with ones.
    pub fn eventually_one(&self) -> bool {
        self.zeros_beyond == ZeroSupply::NoMore
    }
}

/// A prefix-monotone functional descriptor. Descriptors are immutable and
/// evaluation is pure given `(descriptor, input, cap)`.
#[derive(Debug, Clone)]
pub enum PrefixFunctional {
    /// The block encoder built from a stage approximation.
    Phi(Arc<Delta02Script>),
    /// The n-fold product of block encoders over the left-nested join.
    Psi(Vec<Arc<Delta02Script>>),
    /// A pairwise join of two functionals over the two-fold join layout.
    PairJoin(Box<PrefixFunctional>, Box<PrefixFunctional>),
    /// The phase-based dynamic join of a component family.
    DynJoin(ComponentFamily),
    /// The transfinite driver at an ordinal notation.
    Theta {
        script: Arc<Delta02Script>,
        notation: OrdinalNotation,
    },
    /// Emits a fixed stream regardless of input.
    Constant(BitStream),
}

/// The component family of a dynamic join.
#[derive(Debug, Clone)]
pub enum ComponentFamily {
    /// A finite explicit list; activating past the end is a component stall.
    List(Vec<PrefixFunctional>),
    /// Component `i` is the block encoder of the `i`-th component script of
    /// a master approximation.
    PhiComponents { master: Arc<Delta02Script> },
    /// Component `i` is the transfinite driver at the `i`-th notation of a
    /// limit's fundamental sequence.
    ThetaComponents {
        master: Arc<Delta02Script>,
        limit: OrdinalNotation,
    },
}

impl ComponentFamily {
    pub fn component(&self, i: usize) -> Result<PrefixFunctional> {
        match self {
            ComponentFamily::List(list) => list
                .get(i)
                .cloned()
                .ok_or(Error::ComponentStall { component: i }),
            ComponentFamily::PhiComponents { master } => {
                Ok(PrefixFunctional::Phi(Arc::new(component_script(master, i))))
            }
            ComponentFamily::ThetaComponents { master, limit } => Ok(PrefixFunctional::Theta {
                script: Arc::new(component_script(master, i)),
                notation: fundamental_at(limit, i)?,
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Block encoder
// ---------------------------------------------------------------------------

/// The least stage `s` (past the previous block's stage) at which the stage
/// set agrees with `x` on its first `n` bits, or `None` when no such stage
/// exists. The search is bounded by the stabilization stage, which makes the
/// failure decidable.
pub fn s_index(script: &Delta02Script, x: &[bool], n: usize) -> Result<Option<usize>> {
    if n > x.len() {
        return Err(Error::PrefixTooShort {
            needed: n,
            got: x.len(),
        });
    }
    let mut prev = None;
    for m in 1..=n {
        match s_index_step(script, x, m, prev)? {
            Some(s) => prev = Some(s),
            None => return Ok(None),
        }
    }
    Ok(prev)
}

fn s_index_step(
    script: &Delta02Script,
    x: &[bool],
    n: usize,
    prev: Option<usize>,
) -> Result<Option<usize>> {
    let start = prev.map_or(0, |p| p + 1);
    let hi = start.max(script.stabilization_stage(n)?);
    for s in start..=hi {
        if script.stage_prefix(s, n)? == x[..n] {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// The stabilization-implied bound on the `n`-th block's stage.
fn block_bound(script: &Delta02Script, n: usize, prev: Option<usize>) -> Result<usize> {
    Ok(prev.map_or(0, |p| p + 1).max(script.stabilization_stage(n)?))
}

fn phi_eval_tailed(script: &Delta02Script, x: &[bool], cap: usize) -> Result<EvalOut> {
    if x.len() > script.depth() {
        return Err(Error::DepthExceeded {
            index: x.len(),
            depth: script.depth(),
        });
    }
    let mut bits: Vec<bool> = Vec::new();
    let mut prev = None;
    for n in 1..=x.len() {
        if bits.len() >= cap {
            break;
        }
        match s_index_step(script, x, n, prev)? {
            Some(s) => {
                bits.extend(core::iter::repeat(true).take(s));
                bits.push(false);
                prev = Some(s);
            }
            None => {
                // The remaining blocks are undefined: the tail is all ones.
                bits.resize(cap, true);
                return Ok(EvalOut {
                    bits,
                    zeros_beyond: ZeroSupply::NoMore,
                });
            }
        }
    }
    bits.truncate(cap);
    Ok(EvalOut::unknown(bits))
}

/// Emits the block image `1^{s_1} 0 1^{s_2} 0 ...` of an input prefix,
/// padding with ones once a block is (decidably) undefined; the output is
/// truncated at `cap`.
pub fn phi_eval(script: &Delta02Script, x: &[bool], cap: usize) -> Result<Vec<bool>> {
    phi_eval_tailed(script, x, cap).map(|o| o.bits)
}

/// Parses a block image back into stages and returns the stage set of the
/// last complete block: the input prefix the image determines.
pub fn phi_decode(script: &Delta02Script, out: &[bool]) -> Result<Vec<bool>> {
    let mut recovered: Vec<bool> = Vec::new();
    let mut prev = None;
    let mut i = 0;
    let mut n = 1;
    while n <= script.depth() {
        let bound = block_bound(script, n, prev)?;
        let mut run = 0;
        while i + run < out.len() && out[i + run] {
            run += 1;
        }
        if run > bound {
            return Err(Error::MalformedOutput);
        }
        if i + run >= out.len() {
            break;
        }
        let s = run;
        if prev.is_some_and(|p| s <= p) {
            return Err(Error::MalformedOutput);
        }
        recovered = script.stage_prefix(s, n)?;
        prev = Some(s);
        i += run + 1;
        n += 1;
    }
    Ok(recovered)
}

// ---------------------------------------------------------------------------
// Script splitting
// ---------------------------------------------------------------------------

fn remap_changes(
    source: &Delta02Script,
    pick: impl Fn(usize) -> usize,
    new_depth: usize,
) -> Delta02Script {
    let mut changes: Vec<Vec<(usize, bool)>> = Vec::with_capacity(new_depth);
    for m in 0..new_depth {
        let mut list: Vec<(usize, bool)> = Vec::new();
        let mut prev_stage = m; // stages must stay above the bit index
        for &(s, v) in source.changes_of(pick(m)) {
            let stage = s.max(prev_stage + 1);
            list.push((stage, v));
            prev_stage = stage;
        }
        changes.push(list);
    }
    Delta02Script::from_parts(new_depth, changes)
}

/// The script of the even (`false`) or odd (`true`) bit positions, with
/// stages re-indexed so the stage discipline is preserved.
pub fn split_script(script: &Delta02Script, half: bool) -> Delta02Script {
    let depth = script.depth();
    let new_depth = if half { depth / 2 } else { depth.div_ceil(2) };
    remap_changes(script, |m| 2 * m + usize::from(half), new_depth)
}

/// The script of the bits on the index set `I_k` under the infinite-join
/// layout.
pub fn component_script(script: &Delta02Script, k: usize) -> Delta02Script {
    let family = IndexFamily::I(k);
    let depth = script.depth();
    let mut new_depth = 0;
    while family.principal(new_depth).map(|p| p < depth) == Ok(true) {
        new_depth += 1;
    }
    remap_changes(script, |m| family.principal(m).unwrap(), new_depth)
}

// ---------------------------------------------------------------------------
// Interleaved assembly
// ---------------------------------------------------------------------------

fn combine_supply(children: &[&EvalOut]) -> ZeroSupply {
    if children
        .iter()
        .any(|c| c.zeros_beyond == ZeroSupply::Infinite)
    {
        ZeroSupply::Infinite
    } else if children
        .iter()
        .all(|c| c.zeros_beyond == ZeroSupply::NoMore)
    {
        ZeroSupply::NoMore
    } else {
        ZeroSupply::Unknown
    }
}

fn assemble(children: &[EvalOut], component_of: impl Fn(usize) -> (usize, usize), cap: usize) -> EvalOut {
    // When every child is exactly eventually-one, keep interleaving past the
    // cap until all their zeros are consumed, so the assembled tail is exact
    // as well.
    let all_exact = children.iter().all(|c| c.eventually_one());
    let last_zero: Vec<Option<usize>> = children
        .iter()
        .map(|c| c.bits.iter().rposition(|&b| !b))
        .collect();
    let budget = cap.saturating_mul(64).max(1 << 16);
    let mut used = alloc::vec![0usize; children.len()];
    let mut bits = Vec::new();
    let mut p = 0;
    loop {
        if bits.len() >= cap {
            let zeros_pending = all_exact
                && (0..children.len())
                    .any(|i| last_zero[i].is_some_and(|z| used[i] <= z));
            if !zeros_pending {
                break;
            }
            if bits.len() >= budget {
                bits.truncate(cap);
                return EvalOut::unknown(bits);
            }
        }
        let (comp, idx) = component_of(p);
        match children[comp].bits.get(idx) {
            Some(&b) => bits.push(b),
            None => {
                if children[comp].eventually_one() {
                    bits.push(true);
                } else {
                    return EvalOut::unknown(bits);
                }
            }
        }
        used[comp] = used[comp].max(idx + 1);
        p += 1;
    }
    EvalOut {
        bits,
        zeros_beyond: combine_supply(&children.iter().collect::<Vec<_>>()),
    }
}

fn even_bits(x: &[bool]) -> Vec<bool> {
    x.iter().copied().step_by(2).collect()
}

fn odd_bits(x: &[bool]) -> Vec<bool> {
    x.iter().copied().skip(1).step_by(2).collect()
}

fn nfold_input(x: &[bool], n: usize, i: usize) -> Vec<bool> {
    let mut out = Vec::new();
    let mut m = 0;
    loop {
        let p = nfold_position(n, i, m);
        if p >= x.len() {
            return out;
        }
        out.push(x[p]);
        m += 1;
    }
}

fn restrict_input(x: &[bool], family: &IndexFamily) -> Vec<bool> {
    let mut out = Vec::new();
    let mut m = 0;
    while let Ok(p) = family.principal(m) {
        if p >= x.len() {
            break;
        }
        out.push(x[p]);
        m += 1;
    }
    out
}

/// Evaluates the n-fold product of block encoders: the input is split by the
/// left-nested join layout, each component is encoded, and the outputs are
/// recombined on the same layout.
pub fn psi_eval(scripts: &[Arc<Delta02Script>], x: &[bool], cap: usize) -> Result<Vec<bool>> {
    psi_eval_tailed(scripts, x, cap).map(|o| o.bits)
}

fn psi_eval_tailed(scripts: &[Arc<Delta02Script>], x: &[bool], cap: usize) -> Result<EvalOut> {
    let n = scripts.len();
    if n == 0 {
        return Err(Error::EmptyList);
    }
    if n == 1 {
        return phi_eval_tailed(&scripts[0], x, cap);
    }
    let children: Vec<EvalOut> = (0..n)
        .map(|i| phi_eval_tailed(&scripts[i], &nfold_input(x, n, i), cap))
        .collect::<Result<_>>()?;
    Ok(assemble(&children, |p| crate::streams::nfold_component(n, p), cap))
}

// ---------------------------------------------------------------------------
// Dynamic join
// ---------------------------------------------------------------------------

/// Per-component progress of a dynamic-join run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentProgress {
    pub bits_consumed: usize,
    pub zeros_this_phase: usize,
    pub activated: bool,
}

/// The bookkeeping of a dynamic-join run: the current phase, the exclusive
/// ends of the completed phase outputs, and per-component progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseState {
    /// The phase that was running when the output ended.
    pub phase: usize,
    pub next_output_pos: usize,
    pub per_component: Vec<ComponentProgress>,
    /// Cumulative output lengths at which phases 0, 1, ... completed.
    pub completed_boundaries: Vec<usize>,
    /// Snapshot of per-component consumption at each completed boundary.
    pub consumed_at_boundary: Vec<Vec<usize>>,
    /// `Some(true)` when the final phase provably never completes,
    /// `Some(false)` when it would complete past the cap, `None` when the
    /// available bits do not decide it.
    pub stalled: Option<bool>,
}

struct MachineComponent {
    out: EvalOut,
    zero_positions: Vec<usize>,
    next_zero: usize,
    consumed: usize,
    zeros_this_phase: usize,
}

impl MachineComponent {
    fn new(out: EvalOut) -> Self {
        let zero_positions = out
            .bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (!b).then_some(i))
            .collect();
        MachineComponent {
            out,
            zero_positions,
            next_zero: 0,
            consumed: 0,
            zeros_this_phase: 0,
        }
    }

    fn bit(&self, i: usize) -> Option<bool> {
        match self.out.bits.get(i) {
            Some(&b) => Some(b),
            None if self.out.eventually_one() => Some(true),
            None => None,
        }
    }

    /// Whether a zero remains at or after the consumption point:
    /// `Some(false)` is an exact "never again".
    fn zero_available(&mut self) -> Option<bool> {
        while self
            .zero_positions
            .get(self.next_zero)
            .is_some_and(|&p| p < self.consumed)
        {
            self.next_zero += 1;
        }
        if self.next_zero < self.zero_positions.len() {
            return Some(true);
        }
        match self.out.zeros_beyond {
            ZeroSupply::NoMore => Some(false),
            ZeroSupply::Infinite => Some(true),
            ZeroSupply::Unknown => None,
        }
    }
}

fn run_phase_machine(
    mut activate: impl FnMut(usize) -> Result<EvalOut>,
    cap: usize,
) -> Result<(Vec<bool>, PhaseState, ZeroSupply)> {
    let mut comps: Vec<MachineComponent> = vec![MachineComponent::new(activate(0)?)];
    let mut out: Vec<bool> = Vec::new();
    let mut boundaries: Vec<usize> = Vec::new();
    let mut consumed_at_boundary: Vec<Vec<usize>> = Vec::new();
    let mut phase = 0usize;
    let mut stalled: Option<bool> = None;
    let mut pos = 0usize;
    let mut exhausted = false;
    // Once a stall is certain the output tail is exact, provided every
    // active component's remaining zeros get materialized; run past the cap
    // until they are (they are finitely many), within a hard budget.
    let budget = cap.saturating_mul(64).max(1 << 16);
    loop {
        if out.len() >= cap {
            let extend = stalled == Some(true)
                && out.len() < budget
                && comps.iter_mut().any(|c| c.zero_available() == Some(true));
            if !extend {
                break;
            }
        }
        let (k, _) = infinite_join_component(pos);
        let src = k.min(phase);
        let Some(bit) = comps[src].bit(comps[src].consumed) else {
            exhausted = true;
            break;
        };
        out.push(bit);
        comps[src].consumed += 1;
        if !bit {
            comps[src].zeros_this_phase += 1;
        }
        if comps.iter().take(phase + 1).all(|c| c.zeros_this_phase >= 1) {
            boundaries.push(out.len());
            consumed_at_boundary.push(comps.iter().map(|c| c.consumed).collect());
            phase += 1;
            for c in comps.iter_mut() {
                c.zeros_this_phase = 0;
            }
            comps.push(MachineComponent::new(activate(phase)?));
        } else if stalled.is_none() {
            // A needed component that provably never emits another zero
            // pins this phase open forever.
            for i in 0..=phase {
                if comps[i].zeros_this_phase == 0 && comps[i].zero_available() == Some(false) {
                    stalled = Some(true);
                    break;
                }
            }
        }
        pos += 1;
    }
    if stalled.is_none() {
        let mut all_available = true;
        for i in 0..=phase {
            if comps[i].zeros_this_phase == 0 {
                match comps[i].zero_available() {
                    Some(true) => {}
                    Some(false) => {
                        stalled = Some(true);
                        all_available = false;
                        break;
                    }
                    None => all_available = false,
                }
            }
        }
        if stalled.is_none() && all_available && !exhausted {
            stalled = Some(false);
        }
    }
    // Tail knowledge of the whole output: active components keep writing
    // into their index sets forever.
    let supply = if comps
        .iter()
        .any(|c| c.out.zeros_beyond == ZeroSupply::Infinite)
    {
        ZeroSupply::Infinite
    } else if stalled == Some(true)
        && !exhausted
        && comps.iter_mut().all(|c| {
            c.out.zeros_beyond == ZeroSupply::NoMore && c.zero_available() == Some(false)
        }) {
        ZeroSupply::NoMore
    } else {
        ZeroSupply::Unknown
    };
    let state = PhaseState {
        phase,
        next_output_pos: pos,
        per_component: comps
            .iter()
            .enumerate()
            .map(|(i, c)| ComponentProgress {
                bits_consumed: c.consumed,
                zeros_this_phase: c.zeros_this_phase,
                activated: i <= phase,
            })
            .collect(),
        completed_boundaries: boundaries,
        consumed_at_boundary,
        stalled,
    };
    Ok((out, state, supply))
}

fn component_cap(cap: usize, i: usize) -> usize {
    (cap >> i) + 4
}

fn dyn_join_eval_tailed(
    family: &ComponentFamily,
    x: &[bool],
    cap: usize,
) -> Result<(EvalOut, PhaseState)> {
    let (out, state, supply) = run_phase_machine(
        |i| {
            let input = restrict_input(x, &IndexFamily::I(i));
            family.component(i)?.eval_tailed(&input, component_cap(cap, i))
        },
        cap,
    )?;
    Ok((
        EvalOut {
            bits: out,
            zeros_beyond: supply,
        },
        state,
    ))
}

/// Runs the dynamic join of a component family on an input prefix: output
/// positions are filled in increasing order, position `p` in phase `n`
/// receiving the next bit of component `min(k, n)` where `p` is in `I_k`; a
/// phase completes at the earliest position after which every active
/// component has emitted a fresh zero this phase.
pub fn dyn_join_eval(
    family: &ComponentFamily,
    x: &[bool],
    cap: usize,
) -> Result<(Vec<bool>, PhaseState)> {
    let (out, state) = dyn_join_eval_tailed(family, x, cap)?;
    Ok((out.bits, state))
}

/// The recovery offsets of equation (1): `c_k` bits of component `k` were
/// consumed during phase `k`, and its next bit lands at rank `d_k` of `I_k`.
pub fn eq1_offsets(state: &PhaseState, k: usize) -> Result<(usize, usize)> {
    if k >= state.completed_boundaries.len() {
        return Err(Error::PhaseIncomplete { phase: k });
    }
    let c_k = state.consumed_at_boundary[k][k];
    let boundary = state.completed_boundaries[k];
    Ok((c_k, rank_at_or_after(&IndexFamily::I(k), boundary)))
}

/// The recovery offset of equation (2) for a stalled run: the stalled
/// component's first bit lands at rank `d` of `J_{n+1}`.
pub fn eq2_offset(state: &PhaseState) -> Result<(usize, usize)> {
    if state.stalled != Some(true) {
        return Err(Error::NotStalled);
    }
    let stalled_phase = state.phase;
    let boundary = state.completed_boundaries.last().copied().unwrap_or(0);
    Ok((
        stalled_phase,
        rank_at_or_after(&IndexFamily::J(stalled_phase), boundary),
    ))
}

/// The rank within the family of the first member position `>= from`.
pub fn rank_at_or_after(family: &IndexFamily, from: usize) -> usize {
    let mut m = 0;
    while family.principal(m).unwrap() < from {
        m += 1;
    }
    m
}

/// Outcome of checking a recovery identity bit by bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryCheck {
    /// Number of leading indices at which both sides were available.
    pub verified: usize,
    /// True when every verifiable index agreed.
    pub holds: bool,
}

/// Checks `component(i + c) = out restricted to I_k at (i + d)` for
/// `i < max_i`, stopping where either side is unavailable.
pub fn verify_eq1(
    out: &[bool],
    component: &[bool],
    k: usize,
    c: usize,
    d: usize,
    max_i: usize,
) -> RecoveryCheck {
    verify_recovery(out, component, &IndexFamily::I(k), c, d, max_i)
}

/// Checks `component(i) = out restricted to J_n at (i + d)` for `i < max_i`.
pub fn verify_eq2(
    out: &[bool],
    component: &[bool],
    n: usize,
    d: usize,
    max_i: usize,
) -> RecoveryCheck {
    verify_recovery(out, component, &IndexFamily::J(n), 0, d, max_i)
}

fn verify_recovery(
    out: &[bool],
    component: &[bool],
    family: &IndexFamily,
    c: usize,
    d: usize,
    max_i: usize,
) -> RecoveryCheck {
    let mut verified = 0;
    for i in 0..max_i {
        let lhs = component.get(i + c);
        let rhs = family.principal(i + d).ok().and_then(|p| out.get(p));
        match (lhs, rhs) {
            (Some(a), Some(b)) => {
                if a != b {
                    return RecoveryCheck {
                        verified,
                        holds: false,
                    };
                }
                verified += 1;
            }
            _ => break,
        }
    }
    RecoveryCheck {
        verified,
        holds: true,
    }
}

// ---------------------------------------------------------------------------
// Transfinite driver
// ---------------------------------------------------------------------------

fn theta_eval_tailed(
    script: &Arc<Delta02Script>,
    notation: &OrdinalNotation,
    x: &[bool],
    cap: usize,
) -> Result<EvalOut> {
    match notation {
        OrdinalNotation::One => Ok(EvalOut {
            bits: vec![false; cap],
            zeros_beyond: ZeroSupply::Infinite,
        }),
        OrdinalNotation::Succ(b) if **b == OrdinalNotation::One => {
            phi_eval_tailed(script, x, cap)
        }
        OrdinalNotation::Succ(b) => {
            let left = PrefixFunctional::Theta {
                script: Arc::new(split_script(script, false)),
                notation: (**b).clone(),
            };
            let right = PrefixFunctional::Phi(Arc::new(split_script(script, true)));
            let children = [
                left.eval_tailed(&even_bits(x), cap)?,
                right.eval_tailed(&odd_bits(x), cap)?,
            ];
            Ok(assemble(&children, |p| (p % 2, p / 2), cap))
        }
        OrdinalNotation::Lim { .. } => {
            let family = ComponentFamily::ThetaComponents {
                master: script.clone(),
                limit: notation.clone(),
            };
            dyn_join_eval_tailed(&family, x, cap).map(|(o, _)| o)
        }
    }
}

/// Evaluates the transfinite driver: the block encoder at notation one, a
/// pairwise join of the predecessor driver and a block encoder at
/// successors, and the dynamic join of the fundamental-sequence drivers at
/// limits.
pub fn theta_eval(
    script: &Arc<Delta02Script>,
    notation: &OrdinalNotation,
    x: &[bool],
    cap: usize,
) -> Result<Vec<bool>> {
    theta_eval_tailed(script, notation, x, cap).map(|o| o.bits)
}

impl PrefixFunctional {
    /// The output prefix determined by an input prefix, truncated at `cap`.
    pub fn eval(&self, x: &[bool], cap: usize) -> Result<Vec<bool>> {
        self.eval_tailed(x, cap).map(|o| o.bits)
    }

    /// Like [`eval`](Self::eval) but keeping exact tail knowledge.
    pub fn eval_tailed(&self, x: &[bool], cap: usize) -> Result<EvalOut> {
        match self {
            PrefixFunctional::Phi(script) => phi_eval_tailed(script, x, cap),
            PrefixFunctional::Psi(scripts) => psi_eval_tailed(scripts, x, cap),
            PrefixFunctional::PairJoin(f, g) => {
                let children = [
                    f.eval_tailed(&even_bits(x), cap)?,
                    g.eval_tailed(&odd_bits(x), cap)?,
                ];
                Ok(assemble(&children, |p| (p % 2, p / 2), cap))
            }
            PrefixFunctional::DynJoin(family) => {
                dyn_join_eval_tailed(family, x, cap).map(|(o, _)| o)
            }
            PrefixFunctional::Theta { script, notation } => {
                theta_eval_tailed(script, notation, x, cap)
            }
            PrefixFunctional::Constant(stream) => constant_tailed(stream, cap),
        }
    }
}

fn constant_tailed(stream: &BitStream, cap: usize) -> Result<EvalOut> {
    let mut bits = Vec::with_capacity(cap);
    for i in 0..cap {
        match stream.bit_at(i, cap.max(crate::DEFAULT_HORIZON)) {
            Ok(b) => bits.push(b),
            Err(Error::DepthExceeded { .. })
            | Err(Error::IndexSetExhausted)
            | Err(Error::HorizonExceeded) => break,
            Err(e) => return Err(e),
        }
    }
    let zeros_beyond = match stream {
        BitStream::EventuallyConstant { tail, .. } if bits.len() == cap => {
            if *tail {
                ZeroSupply::NoMore
            } else {
                ZeroSupply::Infinite
            }
        }
        _ => ZeroSupply::Unknown,
    };
    Ok(EvalOut { bits, zeros_beyond })
}

// ---------------------------------------------------------------------------
// Symbolic inputs
// ---------------------------------------------------------------------------

/// What the tail components of a per-component assignment are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestKind {
    Designated,
    Zeros,
}

/// A finitely described input: either the designated sequence of whatever
/// functional consumes it, a concrete (typically eventually constant)
/// stream, or a shaped assignment of sub-inputs.
#[derive(Debug, Clone)]
pub enum SymbolicInput {
    Designated,
    Leaf(BitStream),
    Pair(Box<SymbolicInput>, Box<SymbolicInput>),
    Components {
        explicit: Vec<SymbolicInput>,
        rest: RestKind,
    },
}

impl SymbolicInput {
    pub fn zeros() -> Self {
        SymbolicInput::Leaf(BitStream::zeros())
    }

    pub fn is_designated(&self) -> bool {
        match self {
            SymbolicInput::Designated => true,
            SymbolicInput::Pair(a, b) => a.is_designated() && b.is_designated(),
            SymbolicInput::Components { explicit, rest } => {
                *rest == RestKind::Designated && explicit.iter().all(|c| c.is_designated())
            }
            SymbolicInput::Leaf(_) => false,
        }
    }

    fn split_pair(&self) -> Result<(SymbolicInput, SymbolicInput)> {
        match self {
            SymbolicInput::Designated => {
                Ok((SymbolicInput::Designated, SymbolicInput::Designated))
            }
            SymbolicInput::Pair(a, b) => Ok(((**a).clone(), (**b).clone())),
            SymbolicInput::Leaf(stream) => Ok((
                SymbolicInput::Leaf(crate::streams::restrict(
                    stream.clone(),
                    IndexFamily::Evens,
                )),
                SymbolicInput::Leaf(crate::streams::restrict(stream.clone(), IndexFamily::Odds)),
            )),
            SymbolicInput::Components { .. } => Err(Error::InputShape),
        }
    }

    fn component(&self, i: usize) -> Result<SymbolicInput> {
        match self {
            SymbolicInput::Designated => Ok(SymbolicInput::Designated),
            SymbolicInput::Components { explicit, rest } => Ok(explicit
                .get(i)
                .cloned()
                .unwrap_or(match rest {
                    RestKind::Designated => SymbolicInput::Designated,
                    RestKind::Zeros => SymbolicInput::zeros(),
                })),
            SymbolicInput::Leaf(stream) => Ok(SymbolicInput::Leaf(crate::streams::restrict(
                stream.clone(),
                IndexFamily::I(i),
            ))),
            SymbolicInput::Pair(..) => Err(Error::InputShape),
        }
    }
}

/// Evaluates a functional on a symbolic input, which makes the undefined
/// searches decidable: the designated path enumerates blocks directly from
/// the stage approximation, and eventually constant leaves decide their
/// deviation below the script depth.
pub fn eval_symbolic(
    functional: &PrefixFunctional,
    input: &SymbolicInput,
    cap: usize,
    horizon: usize,
) -> Result<EvalOut> {
    match functional {
        PrefixFunctional::Phi(script) => phi_symbolic(script, input, cap, horizon),
        PrefixFunctional::Psi(scripts) => {
            let n = scripts.len();
            if n == 0 {
                return Err(Error::EmptyList);
            }
            let children: Vec<EvalOut> = (0..n)
                .map(|i| {
                    let sub = psi_component_input(input, n, i)?;
                    phi_symbolic(&scripts[i], &sub, cap, horizon)
                })
                .collect::<Result<_>>()?;
            Ok(assemble(&children, |p| crate::streams::nfold_component(n, p), cap))
        }
        PrefixFunctional::PairJoin(f, g) => {
            let (a, b) = input.split_pair()?;
            let children = [
                eval_symbolic(f, &a, cap, horizon)?,
                eval_symbolic(g, &b, cap, horizon)?,
            ];
            Ok(assemble(&children, |p| (p % 2, p / 2), cap))
        }
        PrefixFunctional::DynJoin(family) => {
            dyn_join_symbolic(family, input, cap, horizon).map(|(o, _)| o)
        }
        PrefixFunctional::Theta { script, notation } => {
            theta_symbolic(script, notation, input, cap, horizon)
        }
        PrefixFunctional::Constant(stream) => constant_tailed(stream, cap),
    }
}

fn psi_component_input(input: &SymbolicInput, n: usize, i: usize) -> Result<SymbolicInput> {
    match input {
        SymbolicInput::Designated => Ok(SymbolicInput::Designated),
        SymbolicInput::Components { explicit, rest } => {
            if i < n {
                Ok(explicit.get(i).cloned().unwrap_or(match rest {
                    RestKind::Designated => SymbolicInput::Designated,
                    RestKind::Zeros => SymbolicInput::zeros(),
                }))
            } else {
                Err(Error::InputShape)
            }
        }
        _ => Err(Error::InputShape),
    }
}

fn phi_symbolic(
    script: &Delta02Script,
    input: &SymbolicInput,
    cap: usize,
    horizon: usize,
) -> Result<EvalOut> {
    match input {
        SymbolicInput::Designated => {
            let mut bits = Vec::new();
            let mut prev = None;
            let mut n = 1;
            while n <= script.depth() && bits.len() < cap {
                let x = script.limit_prefix(n)?;
                let s = s_index_step(script, &x, n, prev)?
                    .expect("designated path always matches at the stabilization stage");
                bits.extend(core::iter::repeat(true).take(s));
                bits.push(false);
                prev = Some(s);
                n += 1;
            }
            bits.truncate(cap);
            Ok(EvalOut {
                bits,
                zeros_beyond: ZeroSupply::Infinite,
            })
        }
        SymbolicInput::Leaf(stream) => {
            let mut bits = Vec::new();
            let mut prev = None;
            let mut x: Vec<bool> = Vec::new();
            let mut deviates = false;
            for n in 1..=script.depth() {
                let b = stream.bit_at(n - 1, horizon)?;
                deviates = deviates || b != script.limit_bit(n - 1)?;
                x.push(b);
                match s_index_step(script, &x, n, prev)? {
                    Some(s) => {
                        bits.extend(core::iter::repeat(true).take(s));
                        bits.push(false);
                        prev = Some(s);
                    }
                    None => {
                        bits.resize(cap, true);
                        bits.truncate(cap);
                        return Ok(EvalOut {
                            bits,
                            zeros_beyond: ZeroSupply::NoMore,
                        });
                    }
                }
            }
            if deviates {
                // The input provably differs from the designated sequence,
                // but its blocks stay defined as far as the script reaches;
                // the image past them is unresolved.
                bits.truncate(cap);
                Ok(EvalOut::unknown(bits))
            } else {
                // Equality with the designated sequence is undecided below
                // the script depth.
                Err(Error::UndecidableEquality)
            }
        }
        _ => Err(Error::InputShape),
    }
}

fn theta_symbolic(
    script: &Arc<Delta02Script>,
    notation: &OrdinalNotation,
    input: &SymbolicInput,
    cap: usize,
    horizon: usize,
) -> Result<EvalOut> {
    match notation {
        OrdinalNotation::One => Ok(EvalOut {
            bits: vec![false; cap],
            zeros_beyond: ZeroSupply::Infinite,
        }),
        OrdinalNotation::Succ(b) if **b == OrdinalNotation::One => {
            phi_symbolic(script, input, cap, horizon)
        }
        OrdinalNotation::Succ(b) => {
            let (ia, ib) = input.split_pair()?;
            let left = PrefixFunctional::Theta {
                script: Arc::new(split_script(script, false)),
                notation: (**b).clone(),
            };
            let right = PrefixFunctional::Phi(Arc::new(split_script(script, true)));
            let children = [
                eval_symbolic(&left, &ia, cap, horizon)?,
                eval_symbolic(&right, &ib, cap, horizon)?,
            ];
            Ok(assemble(&children, |p| (p % 2, p / 2), cap))
        }
        OrdinalNotation::Lim { .. } => {
            let family = ComponentFamily::ThetaComponents {
                master: script.clone(),
                limit: notation.clone(),
            };
            dyn_join_symbolic(&family, input, cap, horizon).map(|(o, _)| o)
        }
    }
}

/// Runs the dynamic join on a symbolic input. Stall detection is exact
/// because component tails are exact on symbolic inputs. A component whose
/// symbolic evaluation is unresolvable at the desk scale contributes no
/// bits, which truncates the output at its first needed position.
pub fn dyn_join_symbolic(
    family: &ComponentFamily,
    input: &SymbolicInput,
    cap: usize,
    horizon: usize,
) -> Result<(EvalOut, PhaseState)> {
    let (out, state, supply) = run_phase_machine(
        |i| {
            let sub = input.component(i)?;
            match eval_symbolic(&family.component(i)?, &sub, component_cap(cap, i), horizon) {
                Ok(o) => Ok(o),
                Err(
                    Error::UndecidableEquality
                    | Error::DepthExceeded { .. }
                    | Error::ComponentStall { .. }
                    | Error::Ordinal(crate::ordinals::OrdinalError::OutOfBound { .. }),
                ) => Ok(EvalOut::unknown(Vec::new())),
                Err(e) => Err(e),
            }
        },
        cap,
    )?;
    Ok((
        EvalOut {
            bits: out,
            zeros_beyond: supply,
        },
        state,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::Delta02Script;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    /// The two-change script: bit 0 flips at stage 1, bit 1 at stage 2, so
    /// the approximation runs {}, {0}, {0,1}, {0,1}, ...
    fn example_script() -> Arc<Delta02Script> {
        Arc::new(Delta02Script::from_changes(8, &[(0, 1, true), (1, 2, true)]).unwrap())
    }

    #[test]
    fn s_index_examples() {
        let s = example_script();
        assert_eq!(s_index(&s, &bits("1"), 1), Ok(Some(1)));
        assert_eq!(s_index(&s, &bits("0"), 1), Ok(Some(0)));
        assert_eq!(s_index(&s, &bits("10"), 2), Ok(None));
        assert!(s_index(&s, &bits("1"), 2).is_err());
    }

    #[test]
    fn phi_eval_examples() {
        let s = example_script();
        assert_eq!(phi_eval(&s, &bits("11"), 8).unwrap(), bits("10110"));
        assert_eq!(phi_eval(&s, &bits("0"), 8).unwrap(), bits("0"));
        assert_eq!(phi_eval(&s, &bits("10"), 8).unwrap(), bits("10111111"));
    }

    #[test]
    fn phi_decode_examples() {
        let s = example_script();
        assert_eq!(phi_decode(&s, &bits("10110")).unwrap(), bits("11"));
        assert_eq!(phi_decode(&s, &bits("0")).unwrap(), bits("0"));
        assert_eq!(phi_decode(&s, &bits("11111111")), Err(Error::MalformedOutput));
    }

    #[test]
    fn phi_monotone_on_script() {
        let s = example_script();
        let long = phi_eval(&s, &bits("1101"), 32).unwrap();
        let short = phi_eval(&s, &bits("11"), 32).unwrap();
        assert!(long.starts_with(&short));
    }

    #[test]
    fn psi_degenerate_and_pair() {
        let s = example_script();
        let one = psi_eval(&[s.clone()], &bits("11"), 8).unwrap();
        assert_eq!(one, bits("10110"));

        // Two components: even input bits feed the left encoder.
        let two = psi_eval(&[s.clone(), s.clone()], &bits("1010"), 8).unwrap();
        // X0 = "11" -> "10110", X1 = "00" -> ?
        let x1_out = phi_eval(&s, &bits("00"), 8).unwrap();
        assert_eq!(two[0], true);
        assert_eq!(two[1], x1_out[0]);
        assert_eq!(two[2], false);
    }

    #[test]
    fn split_script_limits_cohere() {
        let s = example_script();
        let even = split_script(&s, false);
        let odd = split_script(&s, true);
        for m in 0..even.depth() {
            assert_eq!(even.limit_bit(m), s.limit_bit(2 * m));
        }
        for m in 0..odd.depth() {
            assert_eq!(odd.limit_bit(m), s.limit_bit(2 * m + 1));
        }
    }

    #[test]
    fn component_script_limits_cohere() {
        let s = Arc::new(
            Delta02Script::from_changes(32, &[(1, 3, true), (5, 7, true), (6, 8, true)]).unwrap(),
        );
        for k in 0..3 {
            let comp = component_script(&s, k);
            let family = IndexFamily::I(k);
            for m in 0..comp.depth() {
                assert_eq!(comp.limit_bit(m), s.limit_bit(family.principal(m).unwrap()));
            }
        }
    }

    #[test]
    fn split_script_preserves_stage_discipline() {
        let s = Arc::new(Delta02Script::from_changes(16, &[(2, 3, true), (3, 4, true)]).unwrap());
        let even = split_script(&s, false);
        // Old bit 2 becomes new bit 1; a change at stage 3 stays legal.
        assert_eq!(even.limit_bit(1), Ok(true));
        let comp2 = component_script(&s, 2);
        // Old bit 3 (first element of I_2) becomes new bit 0.
        assert_eq!(comp2.limit_bit(0), Ok(true));
    }

    fn constant_family(streams: Vec<BitStream>) -> ComponentFamily {
        ComponentFamily::List(streams.into_iter().map(PrefixFunctional::Constant).collect())
    }

    #[test]
    fn dyn_join_all_zero_components() {
        let family = constant_family(alloc::vec![BitStream::zeros(); 8]);
        let (out, state) = dyn_join_eval(&family, &bits(""), 8).unwrap();
        assert_eq!(out, bits("00000000"));
        // Phase boundaries as cumulative lengths: phases 0..3 end after
        // outputs of length 1, 3, 6, 12.
        assert_eq!(&state.completed_boundaries[..3], &[1, 3, 6]);
        assert_eq!(state.stalled, Some(false));
    }

    #[test]
    fn dyn_join_all_ones_never_completes() {
        let family = constant_family(alloc::vec![BitStream::ones(); 4]);
        let (out, state) = dyn_join_eval(&family, &bits(""), 8).unwrap();
        assert_eq!(out, bits("11111111"));
        assert!(state.completed_boundaries.is_empty());
        assert_eq!(state.stalled, Some(true));
        assert_eq!(state.phase, 0);
    }

    #[test]
    fn eq1_offsets_all_zero_example() {
        let family = constant_family(alloc::vec![BitStream::zeros(); 8]);
        let (out, state) = dyn_join_eval(&family, &bits(""), 64).unwrap();
        let (c0, d0) = eq1_offsets(&state, 0).unwrap();
        assert_eq!((c0, d0), (1, 1));
        let comp = bits("0000000000000000");
        let check = verify_eq1(&out, &comp, 0, c0, d0, 16);
        assert!(check.holds && check.verified >= 8);
        let (c1, d1) = eq1_offsets(&state, 1).unwrap();
        assert_eq!(c1, 1);
        assert_eq!(d1, 1);
    }

    #[test]
    fn eq2_offset_stalled_component() {
        // Component 1 emits no zeros, so phase 1 stalls and component 1's
        // bits land on J_1 from its first bit on.
        let family = constant_family(alloc::vec![
            BitStream::zeros(),
            BitStream::ones(),
            BitStream::zeros(),
        ]);
        let (out, state) = dyn_join_eval(&family, &bits(""), 32).unwrap();
        assert_eq!(state.stalled, Some(true));
        assert_eq!(state.phase, 1);
        let (n, d) = eq2_offset(&state).unwrap();
        assert_eq!(n, 1);
        let ones = alloc::vec![true; 32];
        let check = verify_eq2(&out, &ones, n, d, 8);
        assert!(check.holds && check.verified >= 8);
    }

    #[test]
    fn eq2_not_stalled() {
        let family = constant_family(alloc::vec![BitStream::zeros(); 8]);
        let (_, state) = dyn_join_eval(&family, &bits(""), 16).unwrap();
        assert_eq!(eq2_offset(&state), Err(Error::NotStalled));
    }

    #[test]
    fn theta_cases_small() {
        let s = example_script();
        // Notation one is the block encoder itself.
        let one = OrdinalNotation::of_finite(1);
        assert_eq!(
            theta_eval(&s, &one, &bits("11"), 8).unwrap(),
            phi_eval(&s, &bits("11"), 8).unwrap()
        );
        // Notation zero is the constant-zero functional.
        assert_eq!(
            theta_eval(&s, &OrdinalNotation::One, &bits("1"), 4).unwrap(),
            bits("0000")
        );
    }

    #[test]
    fn theta_succ_is_pairwise_join() {
        let s = Arc::new(
            Delta02Script::from_changes(
                16,
                &[(0, 1, true), (1, 4, true), (2, 5, true), (3, 6, true)],
            )
            .unwrap(),
        );
        let two = OrdinalNotation::of_finite(2);
        let x = bits("10110100");
        let joint = theta_eval(&s, &two, &x, 32).unwrap();
        let left = theta_eval(
            &Arc::new(split_script(&s, false)),
            &OrdinalNotation::of_finite(1),
            &even_bits(&x),
            32,
        )
        .unwrap();
        let right = phi_eval(&split_script(&s, true), &odd_bits(&x), 32).unwrap();
        for (p, &b) in joint.iter().enumerate() {
            let side = if p % 2 == 0 { &left } else { &right };
            assert_eq!(side[p / 2], b);
        }
    }

    #[test]
    fn symbolic_designated_phi_has_infinite_zeros() {
        let s = example_script();
        let out = eval_symbolic(
            &PrefixFunctional::Phi(s.clone()),
            &SymbolicInput::Designated,
            32,
            64,
        )
        .unwrap();
        assert_eq!(out.zeros_beyond, ZeroSupply::Infinite);
        assert!(out.bits.starts_with(&bits("10110")));
    }

    #[test]
    fn symbolic_deviant_phi_is_eventually_one() {
        let s = example_script();
        let dev = SymbolicInput::Leaf(BitStream::EventuallyConstant {
            prefix: bits("10"),
            tail: false,
        });
        let out = eval_symbolic(&PrefixFunctional::Phi(s), &dev, 16, 64).unwrap();
        assert!(out.eventually_one());
        assert!(out.bits.starts_with(&bits("10")));
    }
}
