//! Operator pushing: moving virtual-leg operators onto the physical leg.
//!
//! For a (blocked) site tensor with virtual-to-physical map `Abar`, a pair of
//! bond operators `(O_l, O_r)` can be replaced by a physical operator `O_p`
//! exactly when
//!
//! ```text
//! O_p Abar = Abar (O_l^T (x) O_r)
//! ```
//!
//! has a solution, equivalently `sum_n (O_p)_{mn} A^n = O_l A^m O_r`. The
//! existence test is a commutator with the rowspace projector; the stronger
//! unitarity test is a commutator with the Gram matrix `Abar^dag Abar`, and
//! when it passes the solution `O_p = Abar O Abar_R^{-1}` is unitary.
//!
//! A pushing table records, for every defect `B^g` of a projective basis, a
//! partner defect `B^h` and the unitary physical correction that transports
//! the defect one blocked site leftward. Completeness of the table is what
//! makes measurement-based preparation with feedforward possible.

use num_complex::Complex64;

use crate::groups::{verify_povm_completeness, CosetData, ProjectiveRep};
use crate::linalg::{
    self, commutator_norm, cr, dagger, identity, inverse, kron, max_abs, phase_fit, require_unitary,
    unitarity_residual, CMat,
};
use crate::tensor::{block_tensor, BlockStructure, BlockedTensor, VirtualToPhysicalMap};
use crate::{Error, Result, COMMUTATOR_TOL};

/// A verified single-site pushing relation.
#[derive(Debug, Clone)]
pub struct PushingRelation {
    /// Bond operator acting from the left.
    pub o_left: CMat,
    /// Bond operator acting from the right.
    pub o_right: CMat,
    /// Physical unitary on the effective blocked space.
    pub o_phys: CMat,
    /// Blocking parameter of the map the relation was solved on.
    pub q: usize,
    /// Max-norm residual of the defining relation.
    pub residual: f64,
}

/// One row of a pushing table.
#[derive(Debug, Clone)]
pub struct PushingEntry {
    /// Index of the partner defect `h` the defect `g` is transported to.
    pub partner: usize,
    /// Physical correction unitary on the effective blocked space.
    pub o_phys: CMat,
    /// Phase freedom of the entry; the solved relation itself is exact, so
    /// this is the identity for normal tensors and is kept for the
    /// block-conditional case.
    pub phase: Complex64,
    /// Residual of the verified relation.
    pub residual: f64,
}

/// Defect-transport table for one defect basis on one blocked tensor.
#[derive(Debug, Clone)]
pub struct PushingTable {
    /// The defect basis the table is indexed by.
    pub basis: ProjectiveRep,
    /// Blocking parameter.
    pub q: usize,
    /// One entry per defect, `None` where the search failed.
    pub entries: Vec<Option<PushingEntry>>,
    /// Set when every defect has an entry.
    pub complete: bool,
}

impl PushingTable {
    /// Entry for defect `g`, or an error naming the missing defect.
    pub fn entry(&self, g: usize) -> Result<&PushingEntry> {
        self.entries[g].as_ref().ok_or(Error::IncompleteTable(g))
    }
}

/// Per-block pushing tables for a non-normal tensor, with relative phases.
#[derive(Debug, Clone)]
pub struct BlockPushingTable {
    /// One complete table per block, all indexed by the same defect group.
    pub tables: Vec<PushingTable>,
    /// `phases[g][alpha]`: phase of block `alpha`'s correction relative to
    /// block 0 when the corrections are proportional.
    pub phases: Vec<Vec<Complex64>>,
    /// Set when every block's correction for every defect is the block-0
    /// correction times a phase, so corrections need not be conditioned.
    pub uniform: bool,
    /// Optional symmetry-broken coset bookkeeping carried through for the
    /// protocols.
    pub cosets: Option<CosetData>,
}

/// Right inverse `Abar_R^{-1} = Abar^dag (Abar Abar^dag)^{-1}` of a
/// surjective virtual-to-physical map.
pub fn right_inverse(map: &VirtualToPhysicalMap) -> Result<CMat> {
    let rows = map.mat.nrows();
    if map.rank < rows {
        return Err(Error::RankDeficient);
    }
    let gram = map.mat.dot(&dagger(&map.mat));
    let right = dagger(&map.mat).dot(&inverse(&gram)?);
    let check = map.mat.dot(&right);
    let residual = max_abs(&(&check - &identity(rows)));
    if residual > 1e-8 {
        return Err(Error::VerificationFailed(format!(
            "right inverse product residual {residual:.3e}"
        )));
    }
    Ok(right)
}

fn virtual_operator(o_left: &CMat, o_right: &CMat) -> CMat {
    kron(&o_left.t().to_owned(), o_right)
}

/// Tests whether `(O_l, O_r)` can be pushed to some (not necessarily
/// unitary) physical operator: the virtual operator must commute with the
/// projector onto the rowspace of the map. A second, equivalent residual
/// `(1 - P) O P` is evaluated as a cross-check and folded into the result.
pub fn existence_check(o_left: &CMat, o_right: &CMat, map: &VirtualToPhysicalMap) -> Result<(bool, f64)> {
    require_unitary(o_left, 1e-8)?;
    require_unitary(o_right, 1e-8)?;
    let o = virtual_operator(o_left, o_right);
    let right = right_inverse(map)?;
    let proj = right.dot(&map.mat);
    let r_comm = commutator_norm(&o, &proj);
    let dsq = proj.nrows();
    let off = (&identity(dsq) - &proj).dot(&o).dot(&proj);
    let r_cross = max_abs(&off);
    let residual = r_comm.max(r_cross);
    Ok((residual <= COMMUTATOR_TOL, residual))
}

/// Tests whether `(O_l, O_r)` can be pushed to a *unitary* physical
/// operator: the virtual operator must commute with the Gram matrix
/// `Abar^dag Abar`. Passing implies [`existence_check`] passes.
pub fn unitarity_check(o_left: &CMat, o_right: &CMat, map: &VirtualToPhysicalMap) -> Result<(bool, f64)> {
    require_unitary(o_left, 1e-8)?;
    require_unitary(o_right, 1e-8)?;
    let o = virtual_operator(o_left, o_right);
    let gram = dagger(&map.mat).dot(&map.mat);
    let residual = commutator_norm(&o, &gram);
    Ok((residual <= COMMUTATOR_TOL, residual))
}

/// Residual of the singular-value block form of the unitarity condition:
/// with `Abar = U Sigma V^dag`, a pushable pair must leave each equal
/// singular value subspace invariant, i.e. `[V^dag O V, Sigma^dag Sigma]`
/// must vanish.
pub fn singular_block_residual(o_left: &CMat, o_right: &CMat, blocked: &BlockedTensor) -> f64 {
    let o = virtual_operator(o_left, o_right);
    let d_eff = blocked.d_eff();
    let dsq = blocked.map.mat.ncols();
    let mut vt = linalg::zeros(d_eff, dsq);
    let mut sigma2 = linalg::zeros(d_eff, d_eff);
    for r in 0..d_eff {
        let norm = (0..dsq).map(|k| blocked.map.mat[[r, k]].norm_sqr()).sum::<f64>().sqrt();
        for k in 0..dsq {
            vt[[r, k]] = blocked.map.mat[[r, k]] / cr(norm);
        }
        sigma2[[r, r]] = cr(norm * norm);
    }
    let rotated = vt.dot(&o).dot(&dagger(&vt));
    commutator_norm(&rotated, &sigma2)
}

/// Solves for the unitary physical operator realizing a pushable pair.
pub fn solve_physical(o_left: &CMat, o_right: &CMat, blocked: &BlockedTensor) -> Result<PushingRelation> {
    let (ok, residual) = unitarity_check(o_left, o_right, &blocked.map)?;
    if !ok {
        return Err(Error::VerificationFailed(format!(
            "pair is not pushable to a unitary (residual {residual:.3e})"
        )));
    }
    let o = virtual_operator(o_left, o_right);
    let right = right_inverse(&blocked.map)?;
    let o_phys = blocked.map.mat.dot(&o).dot(&right);
    let relation_residual = max_abs(&(&o_phys.dot(&blocked.map.mat) - &blocked.map.mat.dot(&o)));
    if relation_residual > COMMUTATOR_TOL {
        return Err(Error::VerificationFailed(format!(
            "solved operator violates the pushing relation ({relation_residual:.3e})"
        )));
    }
    let ures = unitarity_residual(&o_phys);
    if ures > 1e-8 {
        return Err(Error::NotUnitary(ures));
    }
    Ok(PushingRelation {
        o_left: o_left.clone(),
        o_right: o_right.clone(),
        o_phys,
        q: blocked.q,
        residual: relation_residual,
    })
}

/// Searches, for every defect `g`, a partner `h` such that `(B^h, B^g)` is
/// pushable to a unitary, preferring `h = identity` (local removal) and
/// otherwise the first passing group element.
///
/// Incompleteness is reported through the `complete` flag, not an error.
pub fn build_pushing_table(map_q: &BlockedTensor, basis: &ProjectiveRep) -> Result<PushingTable> {
    let (pov_ok, pov_res) = verify_povm_completeness(basis);
    if !pov_ok {
        return Err(Error::VerificationFailed(format!(
            "defect basis fails POVM completeness (residual {pov_res:.3e})"
        )));
    }
    if basis.dim != map_q.base.dim {
        return Err(Error::ShapeMismatch(format!(
            "defect dimension {} does not match bond dimension {}",
            basis.dim, map_q.base.dim
        )));
    }
    let eta = basis.eta();
    let id = basis.group.id;
    let mut entries: Vec<Option<PushingEntry>> = vec![None; eta];
    for g in 0..eta {
        let mut order: Vec<usize> = vec![id];
        order.extend((0..eta).filter(|&h| h != id));
        for h in order {
            let (ok, _) = unitarity_check(&basis.mats[h], &basis.mats[g], &map_q.map)?;
            if ok {
                let rel = solve_physical(&basis.mats[h], &basis.mats[g], map_q)?;
                entries[g] = Some(PushingEntry {
                    partner: h,
                    o_phys: rel.o_phys,
                    phase: cr(1.0),
                    residual: rel.residual,
                });
                break;
            }
        }
    }
    let complete = entries.iter().all(|e| e.is_some());
    Ok(PushingTable { basis: basis.clone(), q: map_q.q, entries, complete })
}

/// Builds per-block pushing tables for a non-normal tensor and checks
/// whether the physical corrections can be applied unconditionally.
///
/// `reps` supplies the defect basis per block; a single entry is shared by
/// all blocks. The relative phases are extracted by lifting each block's
/// correction to the full physical space of the `q`-site block and fitting
/// it against block 0's.
pub fn build_block_pushing_table(
    blocks: &BlockStructure,
    q: usize,
    reps: &[ProjectiveRep],
    cosets: Option<CosetData>,
) -> Result<BlockPushingTable> {
    if reps.is_empty() {
        return Err(Error::InvalidInput("at least one defect basis required".into()));
    }
    if reps.len() != 1 && reps.len() != blocks.k {
        return Err(Error::ShapeMismatch(format!(
            "{} bases supplied for {} blocks",
            reps.len(),
            blocks.k
        )));
    }
    let eta = reps[0].eta();
    for r in reps {
        if r.eta() != eta {
            return Err(Error::ShapeMismatch("block bases must share the defect group".into()));
        }
    }
    let mut tables = Vec::with_capacity(blocks.k);
    let mut lifted: Vec<Vec<CMat>> = Vec::with_capacity(blocks.k);
    for (alpha, block) in blocks.blocks.iter().enumerate() {
        let rep = if reps.len() == 1 { &reps[0] } else { &reps[alpha] };
        let blocked = block_tensor(&block.a, q)?;
        let table = build_pushing_table(&blocked, rep)?;
        if !table.complete {
            let missing = table.entries.iter().position(|e| e.is_none()).unwrap_or(0);
            return Err(Error::IncompleteTable(missing));
        }
        let lifts = table
            .entries
            .iter()
            .map(|e| blocked.lift_physical(&e.as_ref().unwrap().o_phys))
            .collect();
        tables.push(table);
        lifted.push(lifts);
    }
    let mut phases = vec![vec![cr(1.0); blocks.k]; eta];
    let mut uniform = true;
    for g in 0..eta {
        let h0 = tables[0].entries[g].as_ref().unwrap().partner;
        for alpha in 1..blocks.k {
            let ha = tables[alpha].entries[g].as_ref().unwrap().partner;
            if ha != h0 {
                uniform = false;
                continue;
            }
            let fit = phase_fit(&lifted[0][g], &lifted[alpha][g]);
            let deviation = max_abs(&(&lifted[alpha][g] - &lifted[0][g].mapv(|z| z * fit)));
            if (fit.norm() - 1.0).abs() < 1e-8 && deviation < 1e-8 {
                phases[g][alpha] = fit;
            } else {
                uniform = false;
            }
        }
    }
    if !uniform {
        for row in phases.iter_mut() {
            for p in row.iter_mut() {
                *p = cr(1.0);
            }
        }
    }
    Ok(BlockPushingTable { tables, phases, uniform, cosets })
}
