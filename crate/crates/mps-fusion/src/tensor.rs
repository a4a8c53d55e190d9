//! MPS site tensors, canonical forms, blocking, transfer-matrix analysis,
//! and the dense-state oracle.
//!
//! A site tensor is a family of `d` complex `D x D` matrices `A^m`. The
//! associated state on `N` sites is
//!
//! ```text
//! |Psi> = sum_{m_1..m_N} tr(A^{m_1} ... A^{m_N} X) |m_1 .. m_N>
//! ```
//!
//! for a boundary matrix `X`, or, with entangled boundary conditions, the
//! state carrying two dangling bond qudits with amplitudes
//! `<i| A^{m_1} ... A^{m_N} |j> / sqrt(D)`.
//!
//! The dense constructors in this module are the trusted oracle against
//! which the measurement-based protocols are verified: they evaluate the
//! matrix products literally, site by site, with no shared code path with
//! the circuit simulator.

use num_complex::Complex64;
use num_integer::Integer;

use crate::linalg::{
    self, cholesky_lower, cr, dagger, identity, inverse, kron, max_abs, svd_thin, unvec_r, vec_r,
    CMat, CVec,
};
use crate::sim::{PureState, QuditRegister, WireLabel};
use crate::{Error, Result, DEFAULT_TOL, SVD_CUTOFF_REL};

/// Rank-3 MPS site tensor: `d` matrices of shape `D x D`.
#[derive(Debug, Clone)]
pub struct MpsTensor {
    /// Physical dimension `d`.
    pub d: usize,
    /// Bond dimension `D`.
    pub dim: usize,
    /// The matrices `A^m`, indexed by the physical label `m`.
    pub mats: Vec<CMat>,
    /// Set when left-canonical form has been verified.
    pub canonical: bool,
}

impl MpsTensor {
    /// Builds a tensor from its matrices, verifying shapes and finiteness.
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        if mats.is_empty() {
            return Err(Error::InvalidInput("tensor needs at least one matrix".into()));
        }
        let dim = mats[0].nrows();
        for (m, a) in mats.iter().enumerate() {
            if a.nrows() != dim || a.ncols() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "matrix {m} is {}x{}, expected {dim}x{dim}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("matrix {m} has non-finite entries")));
            }
        }
        let d = mats.len();
        let mut t = MpsTensor { d, dim, mats, canonical: false };
        t.canonical = t.canonical_residual() <= DEFAULT_TOL;
        Ok(t)
    }

    /// `max |(sum_m (A^m)^dag A^m - 1)_{ij}|`.
    pub fn canonical_residual(&self) -> f64 {
        let mut acc = linalg::zeros(self.dim, self.dim);
        for a in &self.mats {
            acc = acc + dagger(a).dot(a);
        }
        max_abs(&(&acc - &identity(self.dim)))
    }

    /// Product `A^{m_1} ... A^{m_q}` for a word of physical labels.
    pub fn word_product(&self, word: &[usize]) -> CMat {
        let mut m = identity(self.dim);
        for &s in word {
            m = m.dot(&self.mats[s]);
        }
        m
    }

    /// Applies the same invertible gauge `A^m -> V^{-1} A^m V` to all matrices.
    pub fn gauge_transform(&self, v: &CMat) -> Result<MpsTensor> {
        let vinv = inverse(v)?;
        let mats = self.mats.iter().map(|a| vinv.dot(a).dot(v)).collect();
        MpsTensor::new(mats)
    }

    /// Scales every matrix by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> MpsTensor {
        let mats = self.mats.iter().map(|a| a.mapv(|z| z * factor)).collect();
        MpsTensor::new(mats).expect("scaling preserves shape")
    }
}

/// The `d x D^2` matrix whose row `m` is the row-major flattening of `A^m`.
#[derive(Debug, Clone)]
pub struct VirtualToPhysicalMap {
    /// Matrix `Abar` with `Abar[m, i*D+j] = A^m_{ij}`.
    pub mat: CMat,
    /// Numerical row rank.
    pub rank: usize,
}

/// Flattens a tensor into its virtual-to-physical map.
pub fn virtual_to_physical_map(a: &MpsTensor) -> VirtualToPhysicalMap {
    let dsq = a.dim * a.dim;
    let mut mat = linalg::zeros(a.d, dsq);
    for (m, am) in a.mats.iter().enumerate() {
        let row = vec_r(am);
        for k in 0..dsq {
            mat[[m, k]] = row[k];
        }
    }
    let rank = numerical_rank(&mat);
    VirtualToPhysicalMap { mat, rank }
}

fn numerical_rank(m: &CMat) -> usize {
    let (_, s, _) = svd_thin(m).expect("svd failure on finite matrix");
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > SVD_CUTOFF_REL * smax).count()
}

/// A blocked tensor: `q` sites grouped, with the physical isometry split off.
///
/// `map` holds the surviving `d_eff` rows (scaled left singular directions of
/// the flattened `q`-site products) and `basis` holds the retained physical
/// basis vectors as rows, so that `basis^dag . map` reconstructs the full
/// `d^q x D^2` product matrix.
#[derive(Debug, Clone)]
pub struct BlockedTensor {
    /// Blocking parameter.
    pub q: usize,
    /// The unblocked site tensor.
    pub base: MpsTensor,
    /// Surjective `d_eff x D^2` virtual-to-physical map.
    pub map: VirtualToPhysicalMap,
    /// `d_eff x d^q` isometry; rows are the retained physical basis vectors.
    pub basis: CMat,
}

impl BlockedTensor {
    /// Effective physical dimension after discarding the isometry.
    pub fn d_eff(&self) -> usize {
        self.map.mat.nrows()
    }

    /// Reconstructs the flattened `q`-site product matrix.
    pub fn reconstruct(&self) -> CMat {
        dagger(&self.basis).dot(&self.map.mat)
    }

    /// Lifts an operator on the effective physical space to the full `d^q`
    /// dimensional physical space of the block, acting as the identity on the
    /// discarded complement.
    pub fn lift_physical(&self, op_eff: &CMat) -> CMat {
        let u = dagger(&self.basis);
        let proj = u.dot(&self.basis);
        let dq = u.nrows();
        let lifted = u.dot(op_eff).dot(&self.basis);
        &lifted + &(&identity(dq) - &proj)
    }
}

/// Groups `q` consecutive sites and discards the local physical isometry.
pub fn block_tensor(a: &MpsTensor, q: usize) -> Result<BlockedTensor> {
    if q < 1 {
        return Err(Error::InvalidInput("blocking parameter must be at least 1".into()));
    }
    let dq = a.d.pow(q as u32);
    let dsq = a.dim * a.dim;
    let mut products = linalg::zeros(dq, dsq);
    let mut word = vec![0usize; q];
    for row in 0..dq {
        let mut rem = row;
        for s in (0..q).rev() {
            word[s] = rem % a.d;
            rem /= a.d;
        }
        let flat = vec_r(&a.word_product(&word));
        for k in 0..dsq {
            products[[row, k]] = flat[k];
        }
    }
    let (u, s, vt) = svd_thin(&products)?;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return Err(Error::InvalidInput("blocked tensor is identically zero".into()));
    }
    let d_eff = s.iter().filter(|&&x| x > SVD_CUTOFF_REL * smax).count();
    let mut map = linalg::zeros(d_eff, dsq);
    for r in 0..d_eff {
        for k in 0..dsq {
            map[[r, k]] = cr(s[r]) * vt[[r, k]];
        }
    }
    let mut basis = linalg::zeros(d_eff, dq);
    for r in 0..d_eff {
        for k in 0..dq {
            basis[[r, k]] = u[[k, r]].conj();
        }
    }
    Ok(BlockedTensor {
        q,
        base: a.clone(),
        map: VirtualToPhysicalMap { rank: d_eff, mat: map },
        basis,
    })
}

/// Gauge-fixes a tensor into left-canonical form.
///
/// Finds the positive-definite fixed point `M` of the map
/// `rho -> sum_m (A^m)^dag rho A^m` by dense eigendecomposition, factors
/// `M = L L^dag`, and returns `A'^m = L^dag A^m L^{-dag} / sqrt(lambda)`.
pub fn left_canonicalize(a: &MpsTensor) -> Result<MpsTensor> {
    if a.canonical_residual() <= DEFAULT_TOL {
        let mut out = a.clone();
        out.canonical = true;
        return Ok(out);
    }
    let dsq = a.dim * a.dim;
    let mut t = linalg::zeros(dsq, dsq);
    for am in &a.mats {
        t = t + kron(&dagger(am), &am.t().to_owned());
    }
    let (vals, vecs) = linalg::eig_sorted(&t)?;
    let lambda = vals[0];
    if lambda.norm() == 0.0 {
        return Err(Error::Degenerate);
    }
    if (lambda.im / lambda.norm()).abs() > 1e-8 {
        return Err(Error::Degenerate);
    }
    let mut m = unvec_r(&vecs[0], a.dim, a.dim);
    m = m.mapv(|z| z * 0.5) + dagger(&m).mapv(|z| z * 0.5);
    let trace: Complex64 = (0..a.dim).map(|i| m[[i, i]]).sum();
    if trace.re < 0.0 {
        m = m.mapv(|z| -z);
    }
    let evals = linalg::eigenvalues_sorted(&m)?;
    let emax = evals[0].re;
    let emin = evals.last().unwrap().re;
    if emin <= 1e-12 * emax {
        return Err(Error::Degenerate);
    }
    let l = cholesky_lower(&m)?;
    let ldag = dagger(&l);
    let ldag_inv = inverse(&ldag)?;
    let scale = cr(1.0 / lambda.re.sqrt());
    let mats = a
        .mats
        .iter()
        .map(|am| ldag.dot(am).dot(&ldag_inv).mapv(|z| z * scale))
        .collect();
    let out = MpsTensor::new(mats)?;
    let res = out.canonical_residual();
    if res > DEFAULT_TOL {
        return Err(Error::NotCanonical(res));
    }
    Ok(out)
}

/// The transfer matrix `E = sum_m A^m (x) (A^m)*`.
pub fn transfer_matrix(a: &MpsTensor) -> CMat {
    let dsq = a.dim * a.dim;
    let mut e = linalg::zeros(dsq, dsq);
    for am in &a.mats {
        e = e + kron(am, &am.mapv(|z| z.conj()));
    }
    e
}

/// Transfer-matrix eigenvalues sorted by decreasing modulus.
pub fn transfer_spectrum(a: &MpsTensor) -> Result<Vec<Complex64>> {
    linalg::eigenvalues_sorted(&transfer_matrix(a))
}

/// Correlation length of a tensor; a tagged value so that degenerate spectra
/// are representable without float sentinels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationLength {
    /// `xi = -1 / ln |lambda_2 / lambda_1|`; zero when `lambda_2` vanishes.
    Finite(f64),
    /// Degenerate leading eigenvalues (GHZ-like states).
    Infinite,
}

/// Correlation length from the transfer spectrum.
pub fn correlation_length(a: &MpsTensor) -> Result<CorrelationLength> {
    correlation_length_with_tol(a, DEFAULT_TOL)
}

/// [`correlation_length`] with an explicit tolerance.
pub fn correlation_length_with_tol(a: &MpsTensor, tol: f64) -> Result<CorrelationLength> {
    let spec = transfer_spectrum(a)?;
    if spec.len() < 2 {
        return Ok(CorrelationLength::Finite(0.0));
    }
    let l1 = spec[0].norm();
    let l2 = spec[1].norm();
    if l2 <= tol {
        return Ok(CorrelationLength::Finite(0.0));
    }
    let ratio = l2 / l1;
    if ratio >= 1.0 - tol {
        return Ok(CorrelationLength::Infinite);
    }
    Ok(CorrelationLength::Finite(-1.0 / ratio.ln()))
}

/// Boundary conditions for dense-state construction.
#[derive(Debug, Clone)]
pub enum BoundarySpec {
    /// Two dangling bond qudits in the maximally entangled configuration.
    Entangled,
    /// Trace closure against the matrix `X`.
    Matrix(CMat),
    /// Open boundary with fixed edge vectors, `X = |R><L|`.
    OpenEdges(CVec, CVec),
}

/// Dense state of a uniform chain of `n` copies of `a`.
pub fn dense_state(a: &MpsTensor, boundary: &BoundarySpec, n: usize, budget: usize) -> Result<PureState> {
    let tensors: Vec<&MpsTensor> = std::iter::repeat(a).take(n).collect();
    dense_state_chain(&tensors, boundary, budget)
}

/// Dense state of an inhomogeneous chain of site tensors sharing one bond
/// dimension. This is the verification oracle for all protocol runs.
pub fn dense_state_chain(tensors: &[&MpsTensor], boundary: &BoundarySpec, budget: usize) -> Result<PureState> {
    if tensors.is_empty() {
        return Err(Error::InvalidInput("empty tensor chain".into()));
    }
    let dim = tensors[0].dim;
    for t in tensors {
        if t.dim != dim {
            return Err(Error::ShapeMismatch("bond dimensions differ along the chain".into()));
        }
    }
    let phys: usize = tensors.iter().map(|t| t.d).product();
    let (extra, edge_wires) = match boundary {
        BoundarySpec::Entangled => (dim * dim, 2),
        _ => (1, 0),
    };
    let needed = phys.checked_mul(extra).ok_or(Error::BudgetExceeded { needed: usize::MAX, budget })?;
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut dims: Vec<usize> = tensors.iter().map(|t| t.d).collect();
    let mut labels = vec![WireLabel::Physical; tensors.len()];
    if edge_wires == 2 {
        dims.push(dim);
        dims.push(dim);
        labels.push(WireLabel::Bond);
        labels.push(WireLabel::Bond);
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); needed];
    fill_chain(tensors, 0, &identity(dim), 0, extra, boundary, &mut amps);
    let reg = QuditRegister::new(dims, labels)?;
    let mut state = PureState::from_amplitudes(reg, amps)?;
    state.normalize()?;
    Ok(state)
}

fn fill_chain(
    tensors: &[&MpsTensor],
    site: usize,
    prefix: &CMat,
    offset: usize,
    extra: usize,
    boundary: &BoundarySpec,
    amps: &mut [Complex64],
) {
    if site == tensors.len() {
        match boundary {
            BoundarySpec::Entangled => {
                let dim = prefix.nrows();
                for i in 0..dim {
                    for j in 0..dim {
                        amps[offset * extra + i * dim + j] = prefix[[i, j]];
                    }
                }
            }
            BoundarySpec::Matrix(x) => {
                let prod = prefix.dot(x);
                let tr: Complex64 = (0..prod.nrows()).map(|i| prod[[i, i]]).sum();
                amps[offset] = tr;
            }
            BoundarySpec::OpenEdges(l, r) => {
                let mut amp = Complex64::new(0.0, 0.0);
                for i in 0..prefix.nrows() {
                    for j in 0..prefix.ncols() {
                        amp += l[i].conj() * prefix[[i, j]] * r[j];
                    }
                }
                amps[offset] = amp;
            }
        }
        return;
    }
    let t = tensors[site];
    for m in 0..t.d {
        let next = prefix.dot(&t.mats[m]);
        fill_chain(tensors, site + 1, &next, offset * t.d + m, extra, boundary, amps);
    }
}

/// One block of a non-normal tensor together with its amplitude.
#[derive(Debug, Clone)]
pub struct Block {
    /// The normal tensor of this block.
    pub a: MpsTensor,
    /// Relative amplitude `mu` of the block.
    pub mu: Complex64,
}

/// Block-diagonal structure of a non-normal tensor.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    /// The composing blocks with their amplitudes.
    pub blocks: Vec<Block>,
    /// Number of blocks `K`.
    pub k: usize,
    /// Common block dimension after inflation.
    pub dbar: usize,
}

impl BlockStructure {
    /// Builds a structure, recording the common dimension if already shared.
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("block structure needs at least one block".into()));
        }
        let d = blocks[0].a.d;
        for b in &blocks {
            if b.a.d != d {
                return Err(Error::ShapeMismatch("blocks must share the physical dimension".into()));
            }
        }
        let k = blocks.len();
        let dbar = blocks.iter().map(|b| b.a.dim).max().unwrap();
        Ok(BlockStructure { blocks, k, dbar })
    }

    /// True when every block already has bond dimension [`Self::dbar`].
    pub fn is_inflated(&self) -> bool {
        self.blocks.iter().all(|b| b.a.dim == self.dbar)
    }

    /// The full direct-sum tensor `A^m = (+)_alpha mu_alpha A_alpha^m`.
    pub fn full_tensor(&self) -> Result<MpsTensor> {
        let d = self.blocks[0].a.d;
        let total: usize = self.blocks.iter().map(|b| b.a.dim).sum();
        let mut mats = Vec::with_capacity(d);
        for m in 0..d {
            let mut big = linalg::zeros(total, total);
            let mut off = 0;
            for b in &self.blocks {
                let dim = b.a.dim;
                for i in 0..dim {
                    for j in 0..dim {
                        big[[off + i, off + j]] = b.mu * b.a.mats[m][[i, j]];
                    }
                }
                off += dim;
            }
            mats.push(big);
        }
        MpsTensor::new(mats)
    }
}

/// Pads every block with an identity degeneracy factor so all blocks share
/// the least-common-multiple bond dimension.
pub fn inflate_blocks(bs: &BlockStructure) -> Result<BlockStructure> {
    let lcm = bs.blocks.iter().fold(1usize, |acc, b| acc.lcm(&b.a.dim));
    let mut blocks = Vec::with_capacity(bs.blocks.len());
    for b in &bs.blocks {
        let r = lcm / b.a.dim;
        if r == 1 {
            blocks.push(b.clone());
            continue;
        }
        let pad = identity(r);
        let mats = b.a.mats.iter().map(|am| kron(am, &pad)).collect();
        blocks.push(Block { a: MpsTensor::new(mats)?, mu: b.mu });
    }
    let mut out = BlockStructure::new(blocks)?;
    out.dbar = lcm;
    Ok(out)
}

/// Fidelity between two pure states; re-exported here because dense-state
/// comparisons are the primary use.
pub use crate::sim::fidelity;
