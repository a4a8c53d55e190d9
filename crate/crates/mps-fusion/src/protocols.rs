//! Constant-depth preparation protocols built from segment growth, fusion
//! measurements, and classically resolved defect corrections.
//!
//! The normal-tensor protocol ([`protocol1`]) grows `n` independent segments
//! of `q` sites by Stinespring dilation, fuses neighbouring segments by a
//! defect-basis measurement on the adjoining bond pair, and undoes the
//! measured defects with physical-site unitaries computed from a pushing
//! table ([`resolve_defects`]). The non-normal variant ([`protocol2`]) runs
//! the same circuit controlled on a GHZ register of block indices and removes
//! the block register afterwards ([`disentangle_blocks`]).
//!
//! Every run is verified against the dense matrix-product state it is meant
//! to prepare, and a [`ProtocolReport`] records outcomes, corrections,
//! probabilities, and fidelities per measurement branch.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::groups::{named_defect_basis, BasisSpec, ProjectiveRep};
use crate::linalg::{cr, dagger, identity, kron, vec_r, zeros, CMat, CVec};
use crate::pushing::{build_block_pushing_table, build_pushing_table, PushingTable};
use crate::sim::{
    fidelity, fusion_basis_unitary, haar_random_unitary, stinespring_dilation, PureState,
    QuditRegister, WireLabel,
};
use crate::tensor::{
    block_tensor, dense_state, dense_state_chain, inflate_blocks, BlockStructure, BlockedTensor,
    BoundarySpec, MpsTensor,
};
use crate::{Error, Result, DEFAULT_BUDGET, DEFAULT_TOL};

/// Branches with probability below this floor are dropped from enumeration.
const PROB_FLOOR: f64 = 1e-12;

/// Seed of the trailing bond wire during segment growth.
#[derive(Debug, Clone)]
pub enum SegmentSeed {
    /// Keep a dangling entangled bond pair (one wire on each edge).
    Entangled,
    /// Start the growth from a fixed right edge vector (no right wire).
    FixedRight(CVec),
}

/// How measurement outcomes are chosen during a protocol run.
#[derive(Debug, Clone)]
pub enum RunMode {
    /// Born-rule sampling with a deterministic seed.
    Sample(u64),
    /// Postselect one explicit outcome tuple.
    Branch(Vec<usize>),
    /// Enumerate every outcome tuple with nonzero probability.
    AllBranches,
}

/// Configuration shared by both preparation protocols.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    /// Sites grouped into one segment.
    pub q: usize,
    /// Number of segments; the chain has `n * q` sites.
    pub n: usize,
    /// Boundary closure of the target state.
    pub boundary: BoundarySpec,
    /// Outcome selection mode.
    pub mode: RunMode,
    /// Grow the rightmost segment from a fixed edge vector and project only
    /// the left edge. Requires an open boundary.
    pub open_bc_optimization: bool,
    /// Maximum dense amplitude count.
    pub budget: usize,
    /// Maximum number of enumerated branches.
    pub branch_cap: usize,
    /// Fidelity tolerance recorded with the report.
    pub tol: f64,
}

impl ProtocolConfig {
    /// Entangled-boundary all-branch configuration with default limits.
    pub fn new(q: usize, n: usize) -> Self {
        ProtocolConfig {
            q,
            n,
            boundary: BoundarySpec::Entangled,
            mode: RunMode::AllBranches,
            open_bc_optimization: false,
            budget: DEFAULT_BUDGET,
            branch_cap: 1 << 20,
            tol: DEFAULT_TOL,
        }
    }
}

/// Classical resolution of a tuple of fusion outcomes into local corrections.
#[derive(Debug, Clone)]
pub struct DefectResolution {
    /// Physical correction per segment on the full `d^q` block space; the
    /// rightmost segment is never corrected.
    pub site_corrections: Vec<CMat>,
    /// Unitary on the left dangling bond wire, including the accumulated
    /// phase compensation.
    pub edge_correction: CMat,
    /// Total phase picked up while recombining defects.
    pub phase: Complex64,
    /// Effective defect index resolved at each junction (right to left the
    /// raw outcome merged with the carried partner).
    pub effective_defects: Vec<usize>,
    /// Partner defect emitted to the left by each junction's correction.
    pub partners: Vec<usize>,
}

/// Report of one measurement branch of a protocol run.
#[derive(Debug, Clone)]
pub struct BranchReport {
    /// Fusion outcome per junction, left to right.
    pub fusion_outcomes: Vec<usize>,
    /// Block-register outcomes of the disentangling round (protocol 2).
    pub block_outcomes: Vec<usize>,
    /// Boundary measurement outcome, when a boundary was projected.
    pub boundary_outcome: Option<usize>,
    /// Probability of the boundary projection.
    pub boundary_probability: Option<f64>,
    /// Total probability of this branch.
    pub probability: f64,
    /// Fidelity of the corrected state against the dense target.
    pub fidelity: f64,
    /// Applied per-segment physical corrections.
    pub site_corrections: Vec<CMat>,
    /// Applied edge correction.
    pub edge_correction: CMat,
}

/// Deterministic summary of a protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolReport {
    /// Number of segments.
    pub n: usize,
    /// Sites per segment.
    pub q: usize,
    /// Defect basis size.
    pub eta: usize,
    /// All evaluated branches.
    pub branches: Vec<BranchReport>,
    /// Number of evaluated branches.
    pub branch_count: usize,
    /// Worst branch fidelity.
    pub min_fidelity: f64,
    /// Summed branch probability.
    pub total_probability: f64,
    /// Sampling seed when the run sampled outcomes.
    pub seed: Option<u64>,
    /// Wall-clock duration of the run in milliseconds.
    pub wall_time_ms: u128,
}

fn summarize(
    n: usize,
    q: usize,
    eta: usize,
    branches: Vec<BranchReport>,
    seed: Option<u64>,
    start: Instant,
) -> Result<ProtocolReport> {
    if branches.is_empty() {
        return Err(Error::ZeroProbability);
    }
    let min_fidelity = branches.iter().map(|b| b.fidelity).fold(f64::INFINITY, f64::min);
    let total_probability = branches.iter().map(|b| b.probability).sum();
    Ok(ProtocolReport {
        n,
        q,
        eta,
        branch_count: branches.len(),
        branches,
        min_fidelity,
        total_probability,
        seed,
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Grows `q_sites` sites of the tensor `a` by repeated Stinespring dilation.
///
/// Starting from a maximally entangled bond pair (or a fixed right edge
/// vector), one dilation per site is applied to the evolving bond wire and a
/// fresh physical wire. The returned wire order is `[site 1 .. site q, left
/// bond (, right bond)]`, matching [`dense_state`] with an entangled
/// boundary.
pub fn sequential_prepare(
    a: &MpsTensor,
    q_sites: usize,
    seed: &SegmentSeed,
    budget: usize,
) -> Result<PureState> {
    if q_sites == 0 {
        return Err(Error::InvalidInput("segment must contain at least one site".into()));
    }
    let d = a.d;
    let dim = a.dim;
    let u = stinespring_dilation(a)?;
    let phys = d
        .checked_pow(q_sites as u32)
        .ok_or(Error::BudgetExceeded { needed: usize::MAX, budget })?;
    let entangled = matches!(seed, SegmentSeed::Entangled);
    let needed = phys * dim * if entangled { dim } else { 1 };
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut dims = vec![dim];
    let mut labels = vec![WireLabel::Bond];
    dims.extend(std::iter::repeat(d).take(q_sites));
    labels.extend(std::iter::repeat(WireLabel::Physical).take(q_sites));
    if entangled {
        dims.push(dim);
        labels.push(WireLabel::Bond);
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); needed];
    match seed {
        SegmentSeed::Entangled => {
            let scale = cr(1.0 / (dim as f64).sqrt());
            for j in 0..dim {
                amps[j * phys * dim + j] = scale;
            }
        }
        SegmentSeed::FixedRight(r) => {
            if r.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "edge vector has length {}, bond dimension is {dim}",
                    r.len()
                )));
            }
            for j in 0..dim {
                amps[j * phys] = r[j];
            }
        }
    }
    let reg = QuditRegister::new(dims, labels)?;
    let mut state = PureState::from_amplitudes(reg, amps)?;
    state.normalize()?;
    for s in (1..=q_sites).rev() {
        state.apply_unitary(&u, &[0, s])?;
    }
    let mut perm: Vec<usize> = (1..=q_sites).collect();
    perm.push(0);
    if entangled {
        perm.push(q_sites + 1);
    }
    state.permute(&perm)
}

/// Resolves a left-to-right tuple of fusion outcomes into one physical
/// correction per segment plus an edge correction.
///
/// Junctions are processed right to left. At each junction the raw defect is
/// merged with the partner carried out of the previous correction, the
/// pushing table supplies the physical unitary that cancels the merged
/// defect, and the new partner is carried further left. The final leftover
/// lands on the left dangling bond and is undone by the edge correction.
pub fn resolve_defects(
    outcomes: &[usize],
    table: &PushingTable,
    blocked: &BlockedTensor,
) -> Result<DefectResolution> {
    if !table.complete {
        let missing = table.entries.iter().filter(|e| e.is_none()).count();
        return Err(Error::IncompleteTable(missing));
    }
    let rep = &table.basis;
    let grp = &rep.group;
    let n = outcomes.len() + 1;
    let dq = blocked
        .base
        .d
        .checked_pow(blocked.q as u32)
        .ok_or(Error::InvalidInput("blocked physical dimension overflows".into()))?;
    let mut site_corrections = vec![identity(dq); n];
    let mut effective_defects = vec![0usize; outcomes.len()];
    let mut partners = vec![0usize; outcomes.len()];
    let mut carry_idx = grp.id;
    let mut carry_phase = cr(1.0);
    let mut gamma = cr(1.0);
    let mut last_h = grp.id;
    for j in (0..outcomes.len()).rev() {
        let g = outcomes[j];
        if g >= rep.mats.len() {
            return Err(Error::InvalidInput(format!(
                "outcome {g} exceeds the defect basis size {}",
                rep.mats.len()
            )));
        }
        let merged = grp.mul(g, carry_idx);
        let c = carry_phase * rep.cocycle[g][carry_idx];
        let entry = table.entry(merged)?;
        site_corrections[j] = blocked.lift_physical(&dagger(&entry.o_phys));
        gamma *= c * entry.phase.conj();
        effective_defects[j] = merged;
        partners[j] = entry.partner;
        last_h = entry.partner;
        let hin = grp.inv[entry.partner];
        carry_idx = hin;
        carry_phase = cr(1.0) / rep.cocycle[entry.partner][hin];
    }
    let edge_correction = rep.mats[last_h].mapv(|z| z * gamma.conj());
    Ok(DefectResolution { site_corrections, edge_correction, phase: gamma, effective_defects, partners })
}

/// Projects the dangling bond wires of a prepared chain onto the requested
/// boundary and removes them; returns the closed state and the projection
/// probability.
///
/// `right` is `None` only for the open-boundary shortcut, where the rightmost
/// segment was grown from the fixed right edge vector and only the left edge
/// remains to be projected.
pub fn project_boundary(
    state: &PureState,
    left: usize,
    right: Option<usize>,
    boundary: &BoundarySpec,
) -> Result<(PureState, f64)> {
    match boundary {
        BoundarySpec::Entangled => Ok((state.clone(), 1.0)),
        BoundarySpec::Matrix(x) => {
            let rw = right.ok_or_else(|| {
                Error::InvalidInput("trace boundary needs both edge wires".into())
            })?;
            let v = vec_r(&dagger(x));
            state.project_remove(&[left, rw], &v)
        }
        BoundarySpec::OpenEdges(l, r) => match right {
            Some(rw) => {
                let dim = l.len();
                let mut v: CVec = CVec::zeros(dim * r.len());
                for i in 0..dim {
                    for j in 0..r.len() {
                        v[i * r.len() + j] = l[i] * r[j].conj();
                    }
                }
                state.project_remove(&[left, rw], &v)
            }
            None => state.project_remove(&[left], l),
        },
    }
}

/// The trivial defect basis on a one-dimensional bond space.
pub fn trivial_defect_basis() -> Result<ProjectiveRep> {
    let group = crate::groups::build_group(&crate::groups::GroupSpec::Cyclic(1))?;
    Ok(ProjectiveRep { group, dim: 1, mats: vec![identity(1)], cocycle: vec![vec![cr(1.0)]] })
}

/// Walsh (discrete Fourier) rotation used to disentangle the block register.
pub fn walsh_matrix(k: usize) -> CMat {
    let mut w = zeros(k, k);
    let scale = 1.0 / (k as f64).sqrt();
    for r in 0..k {
        for c in 0..k {
            let ang = -2.0 * std::f64::consts::PI * (r as f64) * (c as f64) / (k as f64);
            w[[r, c]] = Complex64::from_polar(scale, ang);
        }
    }
    w
}

/// Removes the bulk block-index wires of a GHZ-correlated register.
///
/// Each bulk wire is rotated by the Walsh matrix and projected onto the given
/// computational outcome; the resulting relative phases between block sectors
/// are undone by a diagonal phase gate on the edge wire. Returns the reduced
/// state and the projection probability.
pub fn disentangle_blocks(
    state: &PureState,
    bulk: &[usize],
    edge: usize,
    outcomes: &[usize],
) -> Result<(PureState, f64)> {
    if bulk.is_empty() {
        return Ok((state.clone(), 1.0));
    }
    if outcomes.len() != bulk.len() {
        return Err(Error::ShapeMismatch("one outcome per bulk wire required".into()));
    }
    let k = state.reg.dims[bulk[0]];
    let w = walsh_matrix(k);
    let mut rotated = state.clone();
    for &wire in bulk {
        if state.reg.dims[wire] != k {
            return Err(Error::ShapeMismatch("bulk block wires must share one dimension".into()));
        }
        rotated.apply_unitary(&w, &[wire])?;
    }
    let (mut reduced, prob) = rotated.project_remove_outcome(bulk, outcomes)?;
    let shift = bulk.iter().filter(|&&w| w < edge).count();
    let edge_after = edge - shift;
    let total: usize = outcomes.iter().sum();
    let mut phase = zeros(k, k);
    for alpha in 0..k {
        let ang = 2.0 * std::f64::consts::PI * (alpha as f64) * (total as f64) / (k as f64);
        phase[[alpha, alpha]] = Complex64::from_polar(1.0, ang);
    }
    reduced.apply_unitary(&phase, &[edge_after])?;
    Ok((reduced, prob))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tag {
    Phys(usize, usize),
    BondL(usize),
    BondR(usize),
    Blk(usize),
    BlkEdgeL,
    BlkEdgeR,
    Anc(usize),
}

#[derive(Debug, Clone)]
struct TaggedState {
    st: PureState,
    tags: Vec<Tag>,
}

impl TaggedState {
    fn pos(&self, t: &Tag) -> Result<usize> {
        self.tags
            .iter()
            .position(|x| x == t)
            .ok_or_else(|| Error::InvalidInput(format!("wire {t:?} not present")))
    }

    fn positions(&self, ts: &[Tag]) -> Result<Vec<usize>> {
        ts.iter().map(|t| self.pos(t)).collect()
    }

    fn tensor(&self, other: &TaggedState) -> TaggedState {
        let mut tags = self.tags.clone();
        tags.extend(other.tags.iter().cloned());
        TaggedState { st: self.st.tensor(&other.st), tags }
    }

    fn apply(&mut self, u: &CMat, ts: &[Tag]) -> Result<()> {
        let wires = self.positions(ts)?;
        self.st.apply_unitary(u, &wires)
    }

    fn project_remove_outcome(&self, ts: &[Tag], digits: &[usize]) -> Result<(TaggedState, f64)> {
        let wires = self.positions(ts)?;
        let (st, prob) = self.st.project_remove_outcome(&wires, digits)?;
        let tags = self
            .tags
            .iter()
            .enumerate()
            .filter(|(i, _)| !wires.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        Ok((TaggedState { st, tags }, prob))
    }

    fn project_remove(&self, ts: &[Tag], v: &CVec) -> Result<(TaggedState, f64)> {
        let wires = self.positions(ts)?;
        let (st, prob) = self.st.project_remove(&wires, v)?;
        let tags = self
            .tags
            .iter()
            .enumerate()
            .filter(|(i, _)| !wires.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        Ok((TaggedState { st, tags }, prob))
    }

    fn permute_to(&self, order: &[Tag]) -> Result<PureState> {
        let perm = self.positions(order)?;
        self.st.permute(&perm)
    }
}

fn digits_of(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

fn block_diag(mats: &[CMat]) -> CMat {
    let dim: usize = mats.iter().map(|m| m.nrows()).sum();
    let mut out = zeros(dim, dim);
    let mut off = 0usize;
    for m in mats {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[[off + i, off + j]] = m[[i, j]];
            }
        }
        off += m.nrows();
    }
    out
}

fn controlled(blocks: &[CMat]) -> CMat {
    block_diag(blocks)
}

struct P1Ctx<'a> {
    segments: Vec<TaggedState>,
    vfuse: CMat,
    anc: usize,
    eta: usize,
    bond: usize,
    n: usize,
    q: usize,
    table: PushingTable,
    blocked: BlockedTensor,
    target: PureState,
    final_order: Vec<Tag>,
    cfg: &'a ProtocolConfig,
}

fn fuse_dims(ctx_bond: usize, anc: usize) -> Vec<usize> {
    if anc > 1 {
        vec![ctx_bond, ctx_bond, anc]
    } else {
        vec![ctx_bond, ctx_bond]
    }
}

fn fuse_apply(
    state: &TaggedState,
    j: usize,
    anc: usize,
    vfuse: &CMat,
    ctrl: Option<&Tag>,
) -> Result<(TaggedState, Vec<Tag>)> {
    let mut ts = state.clone();
    let mut tags = vec![Tag::BondR(j), Tag::BondL(j + 1)];
    if anc > 1 {
        let reg = QuditRegister::new(vec![anc], vec![WireLabel::Ancilla])?;
        let anc_state = PureState::basis_state(reg, &[0])?;
        ts = ts.tensor(&TaggedState { st: anc_state, tags: vec![Tag::Anc(j)] });
        tags.push(Tag::Anc(j));
    }
    match ctrl {
        Some(c) => {
            let mut full = vec![c.clone()];
            full.extend(tags.iter().cloned());
            ts.apply(vfuse, &full)?;
        }
        None => ts.apply(vfuse, &tags)?,
    }
    Ok((ts, tags))
}

fn p1_finish(
    ctx: &P1Ctx,
    state: &TaggedState,
    outs: &[usize],
    prob: f64,
    reports: &mut Vec<BranchReport>,
) -> Result<()> {
    let res = resolve_defects(outs, &ctx.table, &ctx.blocked)?;
    let mut st = state.clone();
    for s in 0..ctx.n {
        let tags: Vec<Tag> = (0..ctx.q).map(|k| Tag::Phys(s, k)).collect();
        st.apply(&res.site_corrections[s], &tags)?;
    }
    st.apply(&res.edge_correction, &[Tag::BondL(0)])?;
    let (final_state, b_prob, b_out) = match &ctx.cfg.boundary {
        BoundarySpec::Entangled => (st.permute_to(&ctx.final_order)?, None, None),
        _ => {
            let left = st.pos(&Tag::BondL(0))?;
            let right = if ctx.cfg.open_bc_optimization {
                None
            } else {
                Some(st.pos(&Tag::BondR(ctx.n - 1))?)
            };
            match project_boundary(&st.st, left, right, &ctx.cfg.boundary) {
                Ok((ps, pb)) => (ps, Some(pb), Some(0)),
                Err(Error::ZeroProbability) => return Ok(()),
                Err(e) => return Err(e),
            }
        }
    };
    let fid = fidelity(&final_state, &ctx.target)?;
    reports.push(BranchReport {
        fusion_outcomes: outs.to_vec(),
        block_outcomes: Vec::new(),
        boundary_outcome: b_out,
        boundary_probability: b_prob,
        probability: prob * b_prob.unwrap_or(1.0),
        fidelity: fid,
        site_corrections: res.site_corrections,
        edge_correction: res.edge_correction,
    });
    Ok(())
}

fn p1_recurse(
    ctx: &P1Ctx,
    state: &TaggedState,
    j: usize,
    outs: &mut Vec<usize>,
    prob: f64,
    reports: &mut Vec<BranchReport>,
) -> Result<()> {
    if j + 1 == ctx.n {
        return p1_finish(ctx, state, outs, prob, reports);
    }
    let joined = state.tensor(&ctx.segments[j + 1]);
    let (applied, tags) = fuse_apply(&joined, j, ctx.anc, &ctx.vfuse, None)?;
    let dims = fuse_dims(ctx.bond, ctx.anc);
    for k in 0..ctx.eta {
        let digits = digits_of(k, &dims);
        match applied.project_remove_outcome(&tags, &digits) {
            Ok((next, pk)) if prob * pk > PROB_FLOOR => {
                outs.push(k);
                p1_recurse(ctx, &next, j + 1, outs, prob * pk, reports)?;
                outs.pop();
            }
            Ok(_) => {}
            Err(Error::ZeroProbability) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn p1_sample(
    ctx: &P1Ctx,
    seed: u64,
    reports: &mut Vec<BranchReport>,
) -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut state = ctx.segments[0].clone();
    let mut outs = Vec::new();
    let mut prob = 1.0_f64;
    for j in 0..ctx.n - 1 {
        let joined = state.tensor(&ctx.segments[j + 1]);
        let (applied, tags) = fuse_apply(&joined, j, ctx.anc, &ctx.vfuse, None)?;
        let wires = applied.positions(&tags)?;
        let probs = applied.st.outcome_distribution(&wires)?;
        let total: f64 = probs.iter().take(ctx.eta).sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut k = ctx.eta - 1;
        for (cand, &p) in probs.iter().take(ctx.eta).enumerate() {
            if draw < p {
                k = cand;
                break;
            }
            draw -= p;
        }
        let dims = fuse_dims(ctx.bond, ctx.anc);
        let (next, pk) = applied.project_remove_outcome(&tags, &digits_of(k, &dims))?;
        outs.push(k);
        prob *= pk;
        state = next;
    }
    p1_finish(ctx, &state, &outs, prob, reports)
}

/// Runs the normal-tensor preparation protocol and verifies every evaluated
/// branch against the dense target state.
///
/// Segments are grown independently, neighbouring bond pairs are measured in
/// the fusion basis of `basis`, outcomes are resolved into physical
/// corrections through the pushing table of the `q`-site blocked tensor, and
/// the boundary is closed as configured. Boundary projections are treated as
/// postselections with their probability recorded.
pub fn protocol1(a: &MpsTensor, basis: &ProjectiveRep, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    let start = Instant::now();
    if cfg.n == 0 {
        return Err(Error::InvalidInput("at least one segment required".into()));
    }
    if basis.dim != a.dim {
        return Err(Error::ShapeMismatch(format!(
            "defect basis dimension {} does not match bond dimension {}",
            basis.dim, a.dim
        )));
    }
    if cfg.open_bc_optimization && !matches!(cfg.boundary, BoundarySpec::OpenEdges(..)) {
        return Err(Error::InvalidInput(
            "the open-boundary shortcut requires open edge vectors".into(),
        ));
    }
    let nsites = cfg
        .n
        .checked_mul(cfg.q)
        .ok_or(Error::BudgetExceeded { needed: usize::MAX, budget: cfg.budget })?;
    let blocked = block_tensor(a, cfg.q)?;
    let table = build_pushing_table(&blocked, basis)?;
    if !table.complete {
        let missing = table.entries.iter().filter(|e| e.is_none()).count();
        return Err(Error::IncompleteTable(missing));
    }
    let (vfuse, anc) = fusion_basis_unitary(basis)?;
    let eta = basis.mats.len();
    let peak = (a.d as u128).pow(nsites as u32)
        * (a.dim as u128).pow(4)
        * anc as u128;
    if peak > cfg.budget as u128 {
        return Err(Error::BudgetExceeded { needed: usize::MAX, budget: cfg.budget });
    }
    let seg = sequential_prepare(a, cfg.q, &SegmentSeed::Entangled, cfg.budget)?;
    let mut segments = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let mut tags: Vec<Tag> = (0..cfg.q).map(|k| Tag::Phys(i, k)).collect();
        tags.push(Tag::BondL(i));
        if cfg.open_bc_optimization && i == cfg.n - 1 {
            let r = match &cfg.boundary {
                BoundarySpec::OpenEdges(_, r) => r.clone(),
                _ => unreachable!(),
            };
            let st = sequential_prepare(a, cfg.q, &SegmentSeed::FixedRight(r), cfg.budget)?;
            segments.push(TaggedState { st, tags });
        } else {
            tags.push(Tag::BondR(i));
            segments.push(TaggedState { st: seg.clone(), tags });
        }
    }
    let target = dense_state(a, &cfg.boundary, nsites, cfg.budget)?;
    let mut final_order: Vec<Tag> = Vec::new();
    for s in 0..cfg.n {
        for k in 0..cfg.q {
            final_order.push(Tag::Phys(s, k));
        }
    }
    final_order.push(Tag::BondL(0));
    final_order.push(Tag::BondR(cfg.n - 1));
    let ctx = P1Ctx {
        segments,
        vfuse,
        anc,
        eta,
        bond: a.dim,
        n: cfg.n,
        q: cfg.q,
        table,
        blocked,
        target,
        final_order,
        cfg,
    };
    let mut reports = Vec::new();
    let mut seed_used = None;
    match &cfg.mode {
        RunMode::AllBranches => {
            let count = (eta as u128).checked_pow(cfg.n as u32 - 1).unwrap_or(u128::MAX);
            if count > cfg.branch_cap as u128 {
                return Err(Error::BudgetExceeded {
                    needed: count.min(usize::MAX as u128) as usize,
                    budget: cfg.branch_cap,
                });
            }
            let mut outs = Vec::new();
            p1_recurse(&ctx, &ctx.segments[0], 0, &mut outs, 1.0, &mut reports)?;
        }
        RunMode::Branch(outcomes) => {
            if outcomes.len() != cfg.n - 1 {
                return Err(Error::InvalidInput(format!(
                    "expected {} fusion outcomes, got {}",
                    cfg.n - 1,
                    outcomes.len()
                )));
            }
            let mut state = ctx.segments[0].clone();
            let mut prob = 1.0_f64;
            for (j, &k) in outcomes.iter().enumerate() {
                if k >= eta {
                    return Err(Error::InvalidInput(format!("outcome {k} out of range")));
                }
                let joined = state.tensor(&ctx.segments[j + 1]);
                let (applied, tags) = fuse_apply(&joined, j, ctx.anc, &ctx.vfuse, None)?;
                let dims = fuse_dims(ctx.bond, ctx.anc);
                let (next, pk) = applied.project_remove_outcome(&tags, &digits_of(k, &dims))?;
                prob *= pk;
                state = next;
            }
            p1_finish(&ctx, &state, outcomes, prob, &mut reports)?;
        }
        RunMode::Sample(seed) => {
            seed_used = Some(*seed);
            p1_sample(&ctx, *seed, &mut reports)?;
        }
    }
    summarize(cfg.n, cfg.q, eta, reports, seed_used, start)
}

struct P2Ctx<'a> {
    n: usize,
    q: usize,
    k: usize,
    dbar: usize,
    eta: usize,
    anc: usize,
    fusers: Vec<CMat>,
    shared_basis: bool,
    tables: &'a crate::pushing::BlockPushingTable,
    blocked: Vec<BlockedTensor>,
    mus: Vec<Complex64>,
    nsites: usize,
    target: PureState,
    final_order: Vec<Tag>,
    bulk_tags: Vec<Tag>,
    cfg: &'a ProtocolConfig,
}

fn p2_fuse(
    ctx: &P2Ctx,
    state: &TaggedState,
    j: usize,
    k_out: usize,
) -> Result<Option<(TaggedState, f64)>> {
    let (applied, tags) = p2_fuse_apply(ctx, state, j)?;
    let dims = fuse_dims(ctx.dbar, ctx.anc);
    match applied.project_remove_outcome(&tags, &digits_of(k_out, &dims)) {
        Ok((next, pk)) if pk > PROB_FLOOR => Ok(Some((next, pk))),
        Ok(_) => Ok(None),
        Err(Error::ZeroProbability) => Ok(None),
        Err(e) => Err(e),
    }
}

fn p2_fuse_apply(ctx: &P2Ctx, state: &TaggedState, j: usize) -> Result<(TaggedState, Vec<Tag>)> {
    if ctx.shared_basis {
        fuse_apply(state, j, ctx.anc, &ctx.fusers[0], None)
    } else {
        let ctrl = controlled(&ctx.fusers);
        let mut ts = state.clone();
        let mut tags = vec![Tag::BondR(j), Tag::BondL(j + 1)];
        if ctx.anc > 1 {
            let reg = QuditRegister::new(vec![ctx.anc], vec![WireLabel::Ancilla])?;
            let anc_state = PureState::basis_state(reg, &[0])?;
            ts = ts.tensor(&TaggedState { st: anc_state, tags: vec![Tag::Anc(j)] });
            tags.push(Tag::Anc(j));
        }
        let mut full = vec![Tag::Blk(j + 1)];
        full.extend(tags.iter().cloned());
        ts.apply(&ctrl, &full)?;
        Ok((ts, tags))
    }
}

fn p2_finish(
    ctx: &P2Ctx,
    state: &TaggedState,
    outs: &[usize],
    prob: f64,
    walsh_pick: Option<&[usize]>,
    rng: Option<&mut ChaCha20Rng>,
    reports: &mut Vec<BranchReport>,
) -> Result<()> {
    let mut st = state.clone();
    let mut site_corrections: Vec<Vec<CMat>> = vec![Vec::new(); ctx.n];
    let mut edge_blocks: Vec<CMat> = Vec::new();
    for alpha in 0..ctx.k {
        let res = resolve_defects(outs, &ctx.tables.tables[alpha], &ctx.blocked[alpha])?;
        for s in 0..ctx.n {
            site_corrections[s].push(res.site_corrections[s].clone());
        }
        edge_blocks.push(res.edge_correction);
    }
    for s in 0..ctx.n {
        let ctrl = controlled(&site_corrections[s]);
        let mut tags = vec![Tag::Blk(s)];
        tags.extend((0..ctx.q).map(|k| Tag::Phys(s, k)));
        st.apply(&ctrl, &tags)?;
    }
    let edge_ctrl = controlled(&edge_blocks);
    st.apply(&edge_ctrl, &[Tag::BlkEdgeL, Tag::BondL(0)])?;
    let w = walsh_matrix(ctx.k);
    for t in &ctx.bulk_tags {
        st.apply(&w, std::slice::from_ref(t))?;
    }
    let walsh_sets: Vec<Vec<usize>> = match (walsh_pick, rng) {
        (Some(pick), _) => vec![pick.to_vec()],
        (None, Some(rng)) => {
            let wires = st.positions(&ctx.bulk_tags)?;
            let probs = st.st.outcome_distribution(&wires)?;
            let total: f64 = probs.iter().sum();
            let mut draw = rng.gen::<f64>() * total;
            let mut pick = probs.len() - 1;
            for (cand, &p) in probs.iter().enumerate() {
                if draw < p {
                    pick = cand;
                    break;
                }
                draw -= p;
            }
            vec![digits_of(pick, &vec![ctx.k; ctx.n])]
        }
        (None, None) => {
            let total = (ctx.k as u128).pow(ctx.n as u32);
            (0..total as usize).map(|i| digits_of(i, &vec![ctx.k; ctx.n])).collect()
        }
    };
    for digits in walsh_sets {
        let (mut reduced, pw) = match st.project_remove_outcome(&ctx.bulk_tags, &digits) {
            Ok(x) => x,
            Err(Error::ZeroProbability) => continue,
            Err(e) => return Err(e),
        };
        let total: usize = digits.iter().sum();
        let mut phase = zeros(ctx.k, ctx.k);
        for alpha in 0..ctx.k {
            let ang = 2.0 * std::f64::consts::PI * (alpha as f64) * (total as f64) / (ctx.k as f64);
            phase[[alpha, alpha]] = Complex64::from_polar(1.0, ang);
        }
        reduced.apply(&phase, &[Tag::BlkEdgeL])?;
        let (final_state, b_prob, b_out) = match &ctx.cfg.boundary {
            BoundarySpec::Entangled => {
                let permuted = reduced.permute_to(&ctx.final_order)?;
                let phys = ctx.n * ctx.q;
                let merged = permuted
                    .merge_wires(phys, 2, WireLabel::Bond)?
                    .merge_wires(phys + 1, 2, WireLabel::Bond)?;
                (merged, None, None)
            }
            BoundarySpec::Matrix(x) => {
                let dtot = ctx.k * ctx.dbar;
                let mut xt = zeros(dtot, dtot);
                for alpha in 0..ctx.k {
                    let mu = ctx.mus[alpha].powu(ctx.nsites as u32);
                    for i in 0..ctx.dbar {
                        for j in 0..ctx.dbar {
                            xt[[alpha * ctx.dbar + i, alpha * ctx.dbar + j]] =
                                mu * x[[alpha * ctx.dbar + i, alpha * ctx.dbar + j]];
                        }
                    }
                }
                let v = vec_r(&dagger(&xt));
                let tags = vec![Tag::BlkEdgeL, Tag::BondL(0), Tag::BlkEdgeR, Tag::BondR(ctx.n - 1)];
                match reduced.project_remove(&tags, &v) {
                    Ok((ps, pb)) => (ps.st, Some(pb), Some(0)),
                    Err(Error::ZeroProbability) => continue,
                    Err(e) => return Err(e),
                }
            }
            BoundarySpec::OpenEdges(..) => {
                return Err(Error::Unsupported(
                    "open edges are not implemented for the block protocol".into(),
                ))
            }
        };
        let fid = fidelity(&final_state, &ctx.target)?;
        reports.push(BranchReport {
            fusion_outcomes: outs.to_vec(),
            block_outcomes: digits.clone(),
            boundary_outcome: b_out,
            boundary_probability: b_prob,
            probability: prob * pw * b_prob.unwrap_or(1.0),
            fidelity: fid,
            site_corrections: Vec::new(),
            edge_correction: edge_ctrl.clone(),
        });
    }
    Ok(())
}

fn p2_recurse(
    ctx: &P2Ctx,
    state: &TaggedState,
    j: usize,
    outs: &mut Vec<usize>,
    prob: f64,
    reports: &mut Vec<BranchReport>,
) -> Result<()> {
    if j + 1 == ctx.n {
        return p2_finish(ctx, state, outs, prob, None, None, reports);
    }
    let (applied, tags) = p2_fuse_apply(ctx, state, j)?;
    let dims = fuse_dims(ctx.dbar, ctx.anc);
    for k in 0..ctx.eta {
        let digits = digits_of(k, &dims);
        match applied.project_remove_outcome(&tags, &digits) {
            Ok((next, pk)) if prob * pk > PROB_FLOOR => {
                outs.push(k);
                p2_recurse(ctx, &next, j + 1, outs, prob * pk, reports)?;
                outs.pop();
            }
            Ok(_) => {}
            Err(Error::ZeroProbability) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Runs the non-normal (block-structured) preparation protocol.
///
/// A GHZ register of block indices controls every growth dilation, the
/// fusion measurements are resolved per block, corrections are applied as
/// block-controlled unitaries, and the block register is removed by a Walsh
/// measurement with a phase correction on the edge block wire. The two edge
/// block wires merge with the dangling bonds into composite edges of the
/// direct-sum tensor.
pub fn protocol2(
    bs: &BlockStructure,
    reps: &[ProjectiveRep],
    cfg: &ProtocolConfig,
) -> Result<ProtocolReport> {
    let start = Instant::now();
    if cfg.n == 0 {
        return Err(Error::InvalidInput("at least one segment required".into()));
    }
    let bsi = if bs.is_inflated() { bs.clone() } else { inflate_blocks(bs)? };
    let k = bsi.k;
    let dbar = bsi.dbar;
    let d = bsi.blocks[0].a.d;
    let nsites = cfg.n * cfg.q;
    let tables = build_block_pushing_table(&bsi, cfg.q, reps, None)?;
    let eta = tables.tables[0].basis.mats.len();
    for t in &tables.tables {
        if t.basis.mats.len() != eta || t.basis.dim != dbar {
            return Err(Error::ShapeMismatch(
                "all block defect bases must share size and dimension".into(),
            ));
        }
    }
    let shared_basis = reps.len() == 1;
    let mut fusers = Vec::new();
    let mut anc = 1usize;
    for t in &tables.tables {
        let (v, p) = fusion_basis_unitary(&t.basis)?;
        anc = p;
        fusers.push(v);
        if shared_basis {
            break;
        }
    }
    let mut blocked = Vec::with_capacity(k);
    let mut dilations = Vec::with_capacity(k);
    let mut mus = Vec::with_capacity(k);
    for b in &bsi.blocks {
        blocked.push(block_tensor(&b.a, cfg.q)?);
        dilations.push(stinespring_dilation(&b.a)?);
        mus.push(b.mu);
    }
    let full = bsi.full_tensor()?;
    if matches!(cfg.boundary, BoundarySpec::Entangled) {
        for mu in &mus {
            if (mu - cr(1.0)).norm() > 1e-8 {
                return Err(Error::Unsupported(
                    "entangled boundaries require unit block amplitudes".into(),
                ));
            }
        }
    }
    let target = dense_state(&full, &cfg.boundary, nsites, cfg.budget)?;
    let peak = (k as u128).pow(cfg.n as u32 + 2)
        * ((dbar as u128) * (dbar as u128) * (d as u128).pow(cfg.q as u32)).pow(cfg.n as u32)
        * anc as u128;
    if peak > cfg.budget as u128 {
        return Err(Error::BudgetExceeded { needed: usize::MAX, budget: cfg.budget });
    }

    let mut ghz_tags = vec![Tag::BlkEdgeL];
    ghz_tags.extend((0..cfg.n).map(Tag::Blk));
    ghz_tags.push(Tag::BlkEdgeR);
    let ghz_wires = cfg.n + 2;
    let reg = QuditRegister::new(vec![k; ghz_wires], vec![WireLabel::Block; ghz_wires])?;
    let mut amps = vec![Complex64::new(0.0, 0.0); k.pow(ghz_wires as u32)];
    let scale = cr(1.0 / (k as f64).sqrt());
    for alpha in 0..k {
        let mut idx = 0usize;
        for _ in 0..ghz_wires {
            idx = idx * k + alpha;
        }
        amps[idx] = scale;
    }
    let ghz = TaggedState { st: PureState::from_amplitudes(reg, amps)?, tags: ghz_tags };

    let mut state = ghz;
    for i in 0..cfg.n {
        let phys = d.pow(cfg.q as u32);
        let mut dims = vec![dbar];
        let mut labels = vec![WireLabel::Bond];
        dims.extend(std::iter::repeat(d).take(cfg.q));
        labels.extend(std::iter::repeat(WireLabel::Physical).take(cfg.q));
        dims.push(dbar);
        labels.push(WireLabel::Bond);
        let mut amps = vec![Complex64::new(0.0, 0.0); phys * dbar * dbar];
        let scale = cr(1.0 / (dbar as f64).sqrt());
        for j in 0..dbar {
            amps[j * phys * dbar + j] = scale;
        }
        let reg = QuditRegister::new(dims, labels)?;
        let mut tags = vec![Tag::BondL(i)];
        tags.extend((0..cfg.q).map(|s| Tag::Phys(i, s)));
        tags.push(Tag::BondR(i));
        let seg = TaggedState { st: PureState::from_amplitudes(reg, amps)?, tags };
        state = state.tensor(&seg);
    }
    let ctrl_dil = controlled(&dilations);
    for i in 0..cfg.n {
        for s in (0..cfg.q).rev() {
            state.apply(&ctrl_dil, &[Tag::Blk(i), Tag::BondL(i), Tag::Phys(i, s)])?;
        }
    }

    let mut final_order: Vec<Tag> = Vec::new();
    for s in 0..cfg.n {
        for kk in 0..cfg.q {
            final_order.push(Tag::Phys(s, kk));
        }
    }
    final_order.push(Tag::BlkEdgeL);
    final_order.push(Tag::BondL(0));
    final_order.push(Tag::BlkEdgeR);
    final_order.push(Tag::BondR(cfg.n - 1));
    let bulk_tags: Vec<Tag> = (0..cfg.n).map(Tag::Blk).collect();

    let ctx = P2Ctx {
        n: cfg.n,
        q: cfg.q,
        k,
        dbar,
        eta,
        anc,
        fusers,
        shared_basis,
        tables: &tables,
        blocked,
        mus,
        nsites,
        target,
        final_order,
        bulk_tags,
        cfg,
    };
    let mut reports = Vec::new();
    let mut seed_used = None;
    match &cfg.mode {
        RunMode::AllBranches => {
            let count = (eta as u128).checked_pow(cfg.n as u32 - 1).unwrap_or(u128::MAX)
                * (k as u128).pow(cfg.n as u32);
            if count > cfg.branch_cap as u128 {
                return Err(Error::BudgetExceeded {
                    needed: count.min(usize::MAX as u128) as usize,
                    budget: cfg.branch_cap,
                });
            }
            let mut outs = Vec::new();
            p2_recurse(&ctx, &state, 0, &mut outs, 1.0, &mut reports)?;
        }
        RunMode::Branch(outcomes) => {
            let nfuse = cfg.n - 1;
            if outcomes.len() != nfuse + cfg.n {
                return Err(Error::InvalidInput(format!(
                    "expected {} fusion plus {} block outcomes, got {}",
                    nfuse,
                    cfg.n,
                    outcomes.len()
                )));
            }
            let mut st = state;
            let mut prob = 1.0_f64;
            for (j, &kk) in outcomes[..nfuse].iter().enumerate() {
                match p2_fuse(&ctx, &st, j, kk)? {
                    Some((next, pk)) => {
                        st = next;
                        prob *= pk;
                    }
                    None => return Err(Error::ZeroProbability),
                }
            }
            p2_finish(&ctx, &st, &outcomes[..nfuse], prob, Some(&outcomes[nfuse..]), None, &mut reports)?;
        }
        RunMode::Sample(seed) => {
            seed_used = Some(*seed);
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let mut st = state;
            let mut outs = Vec::new();
            let mut prob = 1.0_f64;
            for j in 0..cfg.n - 1 {
                let (applied, tags) = p2_fuse_apply(&ctx, &st, j)?;
                let wires = applied.positions(&tags)?;
                let probs = applied.st.outcome_distribution(&wires)?;
                let total: f64 = probs.iter().take(eta).sum();
                let mut draw = rng.gen::<f64>() * total;
                let mut kk = eta - 1;
                for (cand, &p) in probs.iter().take(eta).enumerate() {
                    if draw < p {
                        kk = cand;
                        break;
                    }
                    draw -= p;
                }
                let dims = fuse_dims(dbar, anc);
                let (next, pk) = applied.project_remove_outcome(&tags, &digits_of(kk, &dims))?;
                outs.push(kk);
                prob *= pk;
                st = next;
            }
            p2_finish(&ctx, &st, &outs, prob, None, Some(&mut rng), &mut reports)?;
        }
    }
    summarize(cfg.n, cfg.q, eta, reports, seed_used, start)
}

/// A seeded random-chain preparation run together with its classical record.
#[derive(Debug, Clone)]
pub struct SampledChain {
    /// Recorded site tensors with measured defects absorbed on their right.
    pub tensors: Vec<MpsTensor>,
    /// Fusion outcome per junction.
    pub fusion_outcomes: Vec<usize>,
    /// Defect-basis outcome of the edge-pair measurement.
    pub boundary_outcome: usize,
    /// Final physical state.
    pub state: PureState,
    /// Fidelity against the dense state of the recorded chain.
    pub fidelity: f64,
}

/// Prepares a Haar-random matrix product state without applying any
/// corrections: measured defects are absorbed into the classical record
/// instead, and the run is verified against the dense state of the recorded
/// chain.
pub fn sample_random_mps(
    d: usize,
    dim: usize,
    n: usize,
    seed: u64,
    budget: usize,
) -> Result<SampledChain> {
    if d == 0 || dim == 0 || n == 0 {
        return Err(Error::InvalidInput("dimensions and length must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let u = haar_random_unitary(d * dim, &mut rng);
        let mut mats = vec![zeros(dim, dim); d];
        for m in 0..d {
            for i in 0..dim {
                for j in 0..dim {
                    mats[m][[i, j]] = u[[i * d + m, j * d]];
                }
            }
        }
        tensors.push(MpsTensor::new(mats)?);
    }
    let rep = if dim == 1 {
        trivial_defect_basis()?
    } else {
        named_defect_basis(&BasisSpec::QuditPauli(dim))?
    };
    let (vfuse, anc) = fusion_basis_unitary(&rep)?;
    let eta = rep.mats.len();
    let mut state = {
        let st = sequential_prepare(&tensors[0], 1, &SegmentSeed::Entangled, budget)?;
        TaggedState { st, tags: vec![Tag::Phys(0, 0), Tag::BondL(0), Tag::BondR(0)] }
    };
    let mut fusion_outcomes = Vec::new();
    for j in 0..n - 1 {
        let st = sequential_prepare(&tensors[j + 1], 1, &SegmentSeed::Entangled, budget)?;
        let seg = TaggedState {
            st,
            tags: vec![Tag::Phys(j + 1, 0), Tag::BondL(j + 1), Tag::BondR(j + 1)],
        };
        let joined = state.tensor(&seg);
        let (applied, tags) = fuse_apply(&joined, j, anc, &vfuse, None)?;
        let wires = applied.positions(&tags)?;
        let probs = applied.st.outcome_distribution(&wires)?;
        let total: f64 = probs.iter().take(eta).sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut k = eta - 1;
        for (cand, &p) in probs.iter().take(eta).enumerate() {
            if draw < p {
                k = cand;
                break;
            }
            draw -= p;
        }
        let dims = fuse_dims(dim, anc);
        let (next, _) = applied.project_remove_outcome(&tags, &digits_of(k, &dims))?;
        fusion_outcomes.push(k);
        state = next;
        let defect = &rep.mats[k];
        let absorbed: Vec<CMat> = tensors[j].mats.iter().map(|m| m.dot(defect)).collect();
        tensors[j] = MpsTensor::new(absorbed)?;
    }
    let mut edged = state.clone();
    edged.apply(&vfuse, &[Tag::BondL(0), Tag::BondR(n - 1)])?;
    let wires = edged.positions(&[Tag::BondL(0), Tag::BondR(n - 1)])?;
    let probs = edged.st.outcome_distribution(&wires)?;
    let total: f64 = probs.iter().take(eta).sum();
    let mut draw = rng.gen::<f64>() * total;
    let mut b = eta - 1;
    for (cand, &p) in probs.iter().take(eta).enumerate() {
        if draw < p {
            b = cand;
            break;
        }
        draw -= p;
    }
    let dims = vec![dim, dim];
    let (final_ts, _) = edged.project_remove_outcome(
        &[Tag::BondL(0), Tag::BondR(n - 1)],
        &digits_of(b, &dims),
    )?;
    let x = rep.mats[b].t().to_owned();
    let refs: Vec<&MpsTensor> = tensors.iter().collect();
    let target = dense_state_chain(&refs, &BoundarySpec::Matrix(x), budget)?;
    let fid = fidelity(&final_ts.st, &target)?;
    Ok(SampledChain {
        tensors,
        fusion_outcomes,
        boundary_outcome: b,
        state: final_ts.st,
        fidelity: fid,
    })
}

/// A sampled symmetry-protected run with a junk tensor factor.
#[derive(Debug, Clone)]
pub struct SptSample {
    /// Recorded full site tensors.
    pub tensors: Vec<MpsTensor>,
    /// Worst-case deviation of the protected factor from the reference
    /// tensor across all recorded sites.
    pub protected_residual: f64,
    /// Fidelity against the dense state of the recorded chain.
    pub fidelity: f64,
    /// Combined fusion outcome per junction.
    pub fusion_outcomes: Vec<usize>,
    /// Final physical state.
    pub state: PureState,
}

/// Prepares a spin-1 chain whose site tensors factor into the protected
/// reference tensor and independent Haar-random junk factors.
///
/// Fusion outcomes split into a protected part, which is corrected through
/// the reference pushing table, and a junk part, which is absorbed into the
/// classical record. The run verifies that the state matches the recorded
/// chain and that every recorded tensor still factorizes with the protected
/// part exactly equal to the reference tensor.
pub fn sample_spt_phase(n: usize, junk_dim: usize, seed: u64, budget: usize) -> Result<SptSample> {
    if n < 2 || junk_dim == 0 {
        return Err(Error::InvalidInput("need at least two sites and a positive junk dimension".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (gt, _) = crate::gallery::gallery_tensor("aklt", &[])?;
    let aklt = gt.normal()?;
    let dj = junk_dim;
    let dim = 2 * dj;
    let mut site_tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let mut mats = Vec::with_capacity(3);
        for m in 0..3 {
            let u = haar_random_unitary(dj, &mut rng);
            mats.push(kron(&aklt.mats[m], &u));
        }
        site_tensors.push(MpsTensor::new(mats)?);
    }
    let p2 = named_defect_basis(&BasisSpec::QuditPauli(2))?;
    let rep = if dj == 1 {
        p2.clone()
    } else {
        let pj = named_defect_basis(&BasisSpec::QuditPauli(dj))?;
        let group =
            crate::groups::build_group(&crate::groups::GroupSpec::Product(vec![2, 2, dj, dj]))?;
        let mut mats = Vec::with_capacity(4 * dj * dj);
        for g in 0..4 {
            for jk in 0..dj * dj {
                mats.push(kron(&p2.mats[g], &pj.mats[jk]));
            }
        }
        let mut combined = ProjectiveRep { group, dim, mats, cocycle: Vec::new() };
        let (cocycle, residual) = crate::groups::verify_projective_rep(&combined)?;
        if residual > 1e-9 {
            return Err(Error::VerificationFailed(format!(
                "combined defect basis is not projective (residual {residual:.3e})"
            )));
        }
        combined.cocycle = cocycle;
        combined
    };
    let (vfuse, anc) = fusion_basis_unitary(&rep)?;
    let eta = rep.mats.len();
    let blocked = block_tensor(&aklt, 1)?;
    let table = build_pushing_table(&blocked, &p2)?;

    let mut state = {
        let st = sequential_prepare(&site_tensors[0], 1, &SegmentSeed::Entangled, budget)?;
        TaggedState { st, tags: vec![Tag::Phys(0, 0), Tag::BondL(0), Tag::BondR(0)] }
    };
    let mut fusion_outcomes = Vec::new();
    for j in 0..n - 1 {
        let st = sequential_prepare(&site_tensors[j + 1], 1, &SegmentSeed::Entangled, budget)?;
        let seg = TaggedState {
            st,
            tags: vec![Tag::Phys(j + 1, 0), Tag::BondL(j + 1), Tag::BondR(j + 1)],
        };
        let joined = state.tensor(&seg);
        let (applied, tags) = fuse_apply(&joined, j, anc, &vfuse, None)?;
        let wires = applied.positions(&tags)?;
        let probs = applied.st.outcome_distribution(&wires)?;
        let total: f64 = probs.iter().take(eta).sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut k = eta - 1;
        for (cand, &p) in probs.iter().take(eta).enumerate() {
            if draw < p {
                k = cand;
                break;
            }
            draw -= p;
        }
        let dims = fuse_dims(dim, anc);
        let (next, _) = applied.project_remove_outcome(&tags, &digits_of(k, &dims))?;
        fusion_outcomes.push(k);
        state = next;
    }
    let protected: Vec<usize> = fusion_outcomes.iter().map(|&k| k / (dj * dj)).collect();
    let res = resolve_defects(&protected, &table, &blocked)?;
    for s in 0..n {
        state.apply(&res.site_corrections[s], &[Tag::Phys(s, 0)])?;
    }
    let edge_full = kron(&res.edge_correction, &identity(dj));
    state.apply(&edge_full, &[Tag::BondL(0)])?;

    let mut recorded = site_tensors.clone();
    for j in 0..n {
        let mut mats = recorded[j].mats.clone();
        if j + 1 < n {
            let corr = &res.site_corrections[j];
            let mut corrected = vec![zeros(dim, dim); 3];
            for m in 0..3 {
                for nn in 0..3 {
                    let c = corr[[m, nn]];
                    if c.norm() > 0.0 {
                        corrected[m] = &corrected[m] + &mats[nn].mapv(|z| z * c);
                    }
                }
            }
            mats = corrected;
            let defect = &rep.mats[fusion_outcomes[j]];
            for m in &mut mats {
                *m = m.dot(defect);
            }
            if j + 2 < n {
                let emitted = kron(&p2.mats[res.partners[j + 1]], &identity(dj));
                let emdag = dagger(&emitted);
                for m in &mut mats {
                    *m = m.dot(&emdag);
                }
            }
            let strip = kron(&p2.mats[res.partners[j]], &identity(dj));
            for m in &mut mats {
                *m = strip.dot(m);
            }
        }
        recorded[j] = MpsTensor::new(mats)?;
    }

    let mut edged = state.clone();
    edged.apply(&vfuse, &[Tag::BondL(0), Tag::BondR(n - 1)])?;
    let wires = edged.positions(&[Tag::BondL(0), Tag::BondR(n - 1)])?;
    let probs = edged.st.outcome_distribution(&wires)?;
    let total: f64 = probs.iter().take(eta).sum();
    let mut draw = rng.gen::<f64>() * total;
    let mut b = eta - 1;
    for (cand, &p) in probs.iter().take(eta).enumerate() {
        if draw < p {
            b = cand;
            break;
        }
        draw -= p;
    }
    let (final_ts, _) = edged.project_remove_outcome(
        &[Tag::BondL(0), Tag::BondR(n - 1)],
        &digits_of(b, &[dim, dim]),
    )?;
    let x = rep.mats[b].t().to_owned();
    let refs: Vec<&MpsTensor> = recorded.iter().collect();
    let target = dense_state_chain(&refs, &BoundarySpec::Matrix(x), budget)?;
    let fid = fidelity(&final_ts.st, &target)?;

    let mut protected_residual = 0.0_f64;
    for t in &recorded {
        for m in 0..3 {
            let amat = &aklt.mats[m];
            let mut best = (0usize, 0usize);
            let mut bestval = 0.0;
            for a in 0..2 {
                for bcol in 0..2 {
                    if amat[[a, bcol]].norm() > bestval {
                        bestval = amat[[a, bcol]].norm();
                        best = (a, bcol);
                    }
                }
            }
            let (a, bcol) = best;
            let mut junk = zeros(dj, dj);
            for i in 0..dj {
                for jcol in 0..dj {
                    junk[[i, jcol]] = t.mats[m][[a * dj + i, bcol * dj + jcol]] / amat[[a, bcol]];
                }
            }
            let rebuilt = kron(amat, &junk);
            let diff = &t.mats[m] - &rebuilt;
            let dev = diff.iter().map(|z| z.norm()).fold(0.0, f64::max);
            protected_residual = protected_residual.max(dev);
        }
    }

    Ok(SptSample {
        tensors: recorded,
        protected_residual,
        fidelity: fid,
        fusion_outcomes,
        state: final_ts.st,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::linalg::max_abs;
    use crate::sim::inner;
    use crate::tensor::Block;
    use approx::assert_abs_diff_eq;

    fn tensor(name: &str, params: &[(&str, f64)]) -> MpsTensor {
        gallery::gallery_tensor(name, params).unwrap().0.normal().unwrap()
    }

    fn aklt_table() -> (BlockedTensor, PushingTable, ProjectiveRep) {
        let a = tensor("aklt", &[]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let blocked = block_tensor(&a, 1).unwrap();
        let table = build_pushing_table(&blocked, &rep).unwrap();
        (blocked, table, rep)
    }

    #[test]
    fn sequential_matches_dense_entangled() {
        for (name, q) in [("aklt", 3usize), ("z2_family", 2), ("su3", 2)] {
            let a = tensor(name, &[]);
            let st = sequential_prepare(&a, q, &SegmentSeed::Entangled, DEFAULT_BUDGET).unwrap();
            let target = dense_state(&a, &BoundarySpec::Entangled, q, DEFAULT_BUDGET).unwrap();
            let f = fidelity(&st, &target).unwrap();
            assert_abs_diff_eq!(f, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn sequential_fixed_right_edge() {
        let a = tensor("z2_family", &[("g", -0.5)]);
        let mut r: CVec = CVec::zeros(2);
        r[0] = cr(1.0);
        let st = sequential_prepare(&a, 2, &SegmentSeed::FixedRight(r.clone()), DEFAULT_BUDGET)
            .unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for m1 in 0..2 {
            for m2 in 0..2 {
                let prod = a.mats[m1].dot(&a.mats[m2]);
                for i in 0..2 {
                    amps[(m1 * 2 + m2) * 2 + i] = prod[[i, 0]];
                }
            }
        }
        let reg = QuditRegister::new(
            vec![2, 2, 2],
            vec![WireLabel::Physical, WireLabel::Physical, WireLabel::Bond],
        )
        .unwrap();
        let mut expect = PureState::from_amplitudes(reg, amps).unwrap();
        expect.normalize().unwrap();
        assert_abs_diff_eq!(fidelity(&st, &expect).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn resolve_identity_outcomes() {
        let (blocked, table, _) = aklt_table();
        let res = resolve_defects(&[0, 0], &table, &blocked).unwrap();
        for c in &res.site_corrections {
            assert!(max_abs(&(c - &identity(3))) < 1e-9);
        }
        assert!(max_abs(&(&res.edge_correction - &identity(2))) < 1e-9);
        assert_abs_diff_eq!((res.phase - cr(1.0)).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn resolve_single_rightmost_defect() {
        let (blocked, table, rep) = aklt_table();
        let g = 2usize;
        let res = resolve_defects(&[0, 0, g], &table, &blocked).unwrap();
        let expected = blocked.lift_physical(&dagger(&table.entry(g).unwrap().o_phys));
        for s in 0..3 {
            assert!(max_abs(&(&res.site_corrections[s] - &expected)) < 1e-9);
        }
        assert!(max_abs(&(&res.site_corrections[3] - &identity(3))) < 1e-9);
        let dev = crate::linalg::phase_fit(&rep.mats[g], &res.edge_correction).norm();
        assert_abs_diff_eq!(dev, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn resolve_cancelling_pair() {
        let (blocked, table, _) = aklt_table();
        let g = 2usize;
        let res = resolve_defects(&[g, g], &table, &blocked).unwrap();
        let c0 = &res.site_corrections[0];
        let fit = crate::linalg::phase_fit(&identity(3), c0);
        assert!(max_abs(&(c0 - &identity(3).mapv(|z| z * fit))) < 1e-8);
        let efit = crate::linalg::phase_fit(&identity(2), &res.edge_correction);
        assert!(max_abs(&(&res.edge_correction - &identity(2).mapv(|z| z * efit))) < 1e-8);
    }

    #[test]
    fn protocol1_z2_all_branches() {
        let a = tensor("z2_family", &[("g", -0.5)]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 3);
        let rpt = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(rpt.branch_count, 16);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
        assert_abs_diff_eq!(rpt.total_probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn protocol1_aklt_all_branches() {
        let a = tensor("aklt", &[]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 3);
        let rpt = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(rpt.branch_count, 16);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9);
    }

    #[test]
    fn protocol1_ghz_qutrit() {
        let a = tensor("ghz", &[("d", 3.0)]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(3)).unwrap();
        let cfg = ProtocolConfig::new(1, 3);
        let rpt = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(rpt.branch_count, 81);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9);
        assert_abs_diff_eq!(rpt.total_probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn protocol1_su3_blocked_pairs() {
        let a = tensor("su3", &[]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(3)).unwrap();
        let cfg = ProtocolConfig::new(2, 2);
        let rpt = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(rpt.branch_count, 9);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
    }

    #[test]
    fn protocol1_branch_matches_enumeration() {
        let a = tensor("z2_family", &[("g", -0.5)]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let all = protocol1(&a, &rep, &ProtocolConfig::new(1, 3)).unwrap();
        let pick = all.branches.iter().find(|b| b.fusion_outcomes == vec![1, 2]).unwrap();
        let mut cfg = ProtocolConfig::new(1, 3);
        cfg.mode = RunMode::Branch(vec![1, 2]);
        let one = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(one.branch_count, 1);
        assert_abs_diff_eq!(one.branches[0].probability, pick.probability, epsilon = 1e-10);
        assert_abs_diff_eq!(one.branches[0].fidelity, pick.fidelity, epsilon = 1e-10);
    }

    #[test]
    fn protocol1_sampling_is_deterministic() {
        let a = tensor("aklt", &[]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let mut cfg = ProtocolConfig::new(1, 4);
        cfg.mode = RunMode::Sample(7);
        let r1 = protocol1(&a, &rep, &cfg).unwrap();
        let r2 = protocol1(&a, &rep, &cfg).unwrap();
        assert_eq!(r1.branches[0].fusion_outcomes, r2.branches[0].fusion_outcomes);
        assert!(r1.min_fidelity >= 1.0 - 1e-9);
        assert_eq!(r1.seed, Some(7));
    }

    #[test]
    fn protocol1_trace_boundary() {
        let a = tensor("aklt", &[]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let mut cfg = ProtocolConfig::new(1, 2);
        cfg.boundary = BoundarySpec::Matrix(identity(2));
        let rpt = protocol1(&a, &rep, &cfg).unwrap();
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
        for b in &rpt.branches {
            assert!(b.boundary_probability.unwrap() > 0.0);
        }
    }

    #[test]
    fn protocol1_open_boundary_both_paths() {
        let a = tensor("z2_family", &[("g", -0.5)]);
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let mut l: CVec = CVec::zeros(2);
        l[0] = cr(1.0);
        let mut r: CVec = CVec::zeros(2);
        r[1] = cr(1.0);
        for opt in [false, true] {
            let mut cfg = ProtocolConfig::new(1, 2);
            cfg.boundary = BoundarySpec::OpenEdges(l.clone(), r.clone());
            cfg.open_bc_optimization = opt;
            let rpt = protocol1(&a, &rep, &cfg).unwrap();
            assert!(rpt.min_fidelity >= 1.0 - 1e-9, "opt={opt} fid {}", rpt.min_fidelity);
        }
    }

    #[test]
    fn boundary_projection_probabilities() {
        let a = tensor("aklt", &[]);
        let st = dense_state(&a, &BoundarySpec::Entangled, 8, DEFAULT_BUDGET).unwrap();
        let left = 8;
        let right = 9;
        let (_, p) = project_boundary(&st, left, Some(right), &BoundarySpec::Matrix(identity(2)))
            .unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-3);
        let mut r: CVec = CVec::zeros(2);
        r[0] = cr(1.0);
        let open = sequential_prepare(&a, 8, &SegmentSeed::FixedRight(r.clone()), DEFAULT_BUDGET)
            .unwrap();
        let (_, po) = open.project_remove(&[8], &r).unwrap();
        assert_abs_diff_eq!(po, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn walsh_matrix_is_unitary() {
        for k in 1..=4 {
            let w = walsh_matrix(k);
            assert!(crate::linalg::unitarity_residual(&w) < 1e-12);
        }
    }

    #[test]
    fn protocol2_majumdar_ghosh() {
        let (gt, _) = gallery::gallery_tensor("majumdar_ghosh", &[]).unwrap();
        let bs = gt.blocked().unwrap();
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 2);
        let rpt = protocol2(&bs, &[rep], &cfg).unwrap();
        assert_eq!(rpt.branch_count, 16);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
        assert_abs_diff_eq!(rpt.total_probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn protocol2_z4xz2() {
        let (gt, _) = gallery::gallery_tensor("z4xz2", &[]).unwrap();
        let bs = gt.blocked().unwrap();
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 2);
        let rpt = protocol2(&bs, &[rep], &cfg).unwrap();
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
        assert_abs_diff_eq!(rpt.total_probability, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn protocol2_single_block_reduces_to_protocol1_target() {
        let a = tensor("aklt", &[]);
        let bs = BlockStructure::new(vec![Block { a: a.clone(), mu: cr(1.0) }]).unwrap();
        let rep = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 2);
        let rpt = protocol2(&bs, &[rep], &cfg).unwrap();
        assert_eq!(rpt.branch_count, 4);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9);
    }

    #[test]
    fn protocol2_ghz_three_blocks() {
        let mk = |alpha: usize| {
            let mats: Vec<CMat> = (0..3)
                .map(|m| {
                    let mut z = zeros(1, 1);
                    if m == alpha {
                        z[[0, 0]] = cr(1.0);
                    }
                    z
                })
                .collect();
            Block { a: MpsTensor::new(mats).unwrap(), mu: cr(1.0) }
        };
        let bs = BlockStructure::new(vec![mk(0), mk(1), mk(2)]).unwrap();
        let rep = trivial_defect_basis().unwrap();
        let cfg = ProtocolConfig::new(1, 2);
        let rpt = protocol2(&bs, &[rep], &cfg).unwrap();
        assert_eq!(rpt.branch_count, 9);
        assert!(rpt.min_fidelity >= 1.0 - 1e-9, "min fidelity {}", rpt.min_fidelity);
    }

    #[test]
    fn disentangle_outcome_independence() {
        let k = 2usize;
        let wires = 4usize;
        let reg = QuditRegister::new(vec![k; wires], vec![WireLabel::Block; wires]).unwrap();
        let mut amps = vec![Complex64::new(0.0, 0.0); k.pow(wires as u32)];
        for alpha in 0..k {
            let mut idx = 0;
            for _ in 0..wires {
                idx = idx * k + alpha;
            }
            amps[idx] = cr(1.0 / (k as f64).sqrt());
        }
        let ghz = PureState::from_amplitudes(reg, amps).unwrap();
        let mut reference: Option<PureState> = None;
        for o1 in 0..k {
            for o2 in 0..k {
                for o3 in 0..k {
                    let (red, _) = disentangle_blocks(&ghz, &[1, 2, 3], 0, &[o1, o2, o3]).unwrap();
                    match &reference {
                        None => reference = Some(red),
                        Some(r) => {
                            let ov = inner(r, &red).unwrap();
                            assert_abs_diff_eq!(ov.norm(), 1.0, epsilon = 1e-10);
                            assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-10);
                            assert!(ov.re > 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn random_chain_matches_record() {
        let run = sample_random_mps(2, 2, 3, 11, DEFAULT_BUDGET).unwrap();
        assert!(run.fidelity >= 1.0 - 1e-9, "fidelity {}", run.fidelity);
        let rerun = sample_random_mps(2, 2, 3, 11, DEFAULT_BUDGET).unwrap();
        assert_eq!(run.fusion_outcomes, rerun.fusion_outcomes);
        assert_eq!(run.boundary_outcome, rerun.boundary_outcome);
    }

    #[test]
    fn random_chain_bond_dimension_one() {
        let run = sample_random_mps(2, 1, 3, 5, DEFAULT_BUDGET).unwrap();
        assert!(run.fidelity >= 1.0 - 1e-9, "fidelity {}", run.fidelity);
    }

    #[test]
    fn spt_sampling_trivial_junk() {
        let run = sample_spt_phase(3, 1, 13, DEFAULT_BUDGET).unwrap();
        assert!(run.fidelity >= 1.0 - 1e-9, "fidelity {}", run.fidelity);
        assert!(run.protected_residual < 1e-8, "residual {}", run.protected_residual);
    }

    #[test]
    fn spt_sampling_junk_factor() {
        let run = sample_spt_phase(3, 2, 17, DEFAULT_BUDGET).unwrap();
        assert!(run.fidelity >= 1.0 - 1e-9, "fidelity {}", run.fidelity);
        assert!(run.protected_residual < 1e-8, "residual {}", run.protected_residual);
    }
}
