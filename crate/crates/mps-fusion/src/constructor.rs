//! Manufacture families of G-symmetric MPS tensors from a group
//! representation.
//!
//! Given a unitary projective representation `V_g` of a finite group `G` on
//! the bond space, the tensor square `Vbar_g = V_g (x) V_g^*` is an ordinary
//! linear representation on the `D^2`-dimensional space of bond operators.
//! Decomposing `Vbar` into irreducible blocks,
//!
//! ```text
//! Vbar_g = W Ubar_g W^dag,     Ubar_g = (+)_J  1_{n_J} (x) u^J_g,
//! ```
//!
//! yields a unitary intertwiner `W` whose residual freedom is one `n_J x n_J`
//! unitary per isotypic component. Selecting a subset of irrep copies through
//! an isometry `P` and reshaping the columns of `W P` produces a site tensor
//! `A` that is symmetric by construction:
//!
//! ```text
//! sum_n (U_g^T)_{mn} A^n = V_g A^m V_g^dag,
//! ```
//!
//! where `U_g` is the selected block of `Ubar_g` acting on the physical
//! index. Every choice of isotypic unitaries and selection therefore sweeps
//! a parameterized family of symmetric MPS; the machinery below builds the
//! decomposition, samples intertwiners (canonically, from explicit
//! parameters, or Haar-randomly), and certifies the symmetry of the
//! constructed tensors numerically.
//!
//! Irreducible representations are stored as explicit matrices for the
//! built-in group families: products of cyclic groups (characters), the
//! alternating group `A_4` (three characters through the quotient by its
//! Klein four-subgroup, plus the rotation triplet), and the dihedral groups
//! (characters plus the standard two-dimensional series).

use ndarray::Array1;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::groups::{
    build_group, named_defect_basis, BasisSpec, FiniteGroup, GroupSpec, ProjectiveRep,
};
use crate::linalg::{
    cr, dagger, identity, kron, max_abs, orthonormalize, phase_fit, require_unitary,
    unvec_r, zeros, CMat, CVec,
};
use crate::sim::haar_random_unitary;
use crate::tensor::{left_canonicalize, transfer_spectrum, MpsTensor};
use crate::{Error, Result};

/// Residual tolerance for representation-theoretic identities.
const REP_TOL: f64 = 1e-9;

/// An explicit matrix irreducible representation of a finite group.
#[derive(Debug, Clone)]
pub struct Irrep {
    /// Human-readable label.
    pub label: String,
    /// Dimension `d_J`.
    pub dim: usize,
    /// One unitary matrix per group element, in group element order.
    pub mats: Vec<CMat>,
}

impl Irrep {
    /// Character `chi_J(g) = tr u^J_g`.
    pub fn character(&self, g: usize) -> Complex64 {
        (0..self.dim).map(|i| self.mats[g][[i, i]]).sum()
    }
}

fn scalar_irrep(label: String, chars: Vec<Complex64>) -> Irrep {
    let mats = chars.iter().map(|&x| CMat::from_elem((1, 1), x)).collect();
    Irrep { label, dim: 1, mats }
}

fn verify_irreps(group: &FiniteGroup, irreps: &[Irrep]) -> Result<()> {
    let sum_sq: usize = irreps.iter().map(|j| j.dim * j.dim).sum();
    if sum_sq != group.order {
        return Err(Error::VerificationFailed(format!(
            "irrep dimension squares sum to {sum_sq}, expected group order {}",
            group.order
        )));
    }
    for irr in irreps {
        for g in 0..group.order {
            for h in 0..group.order {
                let prod = irr.mats[g].dot(&irr.mats[h]);
                let res = max_abs(&(&prod - &irr.mats[group.mul(g, h)]));
                if res > REP_TOL {
                    return Err(Error::VerificationFailed(format!(
                        "irrep {} is not a homomorphism at ({g},{h}): residual {res:.3e}",
                        irr.label
                    )));
                }
            }
        }
    }
    Ok(())
}

fn product_irreps(ns: &[usize]) -> Result<(FiniteGroup, Vec<Irrep>)> {
    let group = build_group(&GroupSpec::Product(ns.to_vec()))?;
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0usize; ns.len()];
        for k in (0..ns.len()).rev() {
            d[k] = idx % ns[k];
            idx /= ns[k];
        }
        d
    };
    let mut irreps = Vec::with_capacity(group.order);
    for k in 0..group.order {
        let dk = digits(k);
        let mut chars = Vec::with_capacity(group.order);
        for g in 0..group.order {
            let dg = digits(g);
            let mut phase = 0.0_f64;
            for ((&ki, &gi), &ni) in dk.iter().zip(dg.iter()).zip(ns.iter()) {
                phase += 2.0 * std::f64::consts::PI * (ki * gi) as f64 / ni as f64;
            }
            chars.push(Complex64::new(phase.cos(), phase.sin()));
        }
        let label = format!(
            "chi({})",
            dk.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        );
        irreps.push(scalar_irrep(label, chars));
    }
    Ok((group, irreps))
}

fn a4_irreps() -> Result<(FiniteGroup, Vec<Irrep>)> {
    let triplet = named_defect_basis(&BasisSpec::A4Triplet)?;
    let group = triplet.group.clone();
    let klein: Vec<usize> = (0..group.order).filter(|&g| group.element_order(g) <= 2).collect();
    if klein.len() != 4 {
        return Err(Error::VerificationFailed(format!(
            "A4 Klein subgroup has {} elements, expected 4",
            klein.len()
        )));
    }
    let t = (0..group.order)
        .find(|&g| group.element_order(g) == 3)
        .ok_or_else(|| Error::VerificationFailed("A4 lacks an order-3 element".into()))?;
    let t2 = group.mul(t, t);
    let coset = |g: usize| -> Result<usize> {
        for (j, &rep) in [group.id, t, t2].iter().enumerate() {
            if klein.contains(&group.mul(g, group.inv[rep])) {
                return Ok(j);
            }
        }
        Err(Error::VerificationFailed(format!("A4 element {g} lies in no Klein coset")))
    };
    let omega = Complex64::new(-0.5, 0.75_f64.sqrt());
    let mut chars1 = Vec::with_capacity(group.order);
    let mut chars2 = Vec::with_capacity(group.order);
    for g in 0..group.order {
        let cjs = coset(g)?;
        chars1.push(omega.powu(cjs as u32));
        chars2.push(omega.powu(2 * cjs as u32));
    }
    let trivial = scalar_irrep("trivial".into(), vec![cr(1.0); group.order]);
    let irreps = vec![
        trivial,
        scalar_irrep("omega".into(), chars1),
        scalar_irrep("omega^2".into(), chars2),
        Irrep { label: "triplet".into(), dim: 3, mats: triplet.mats },
    ];
    Ok((group, irreps))
}

fn dihedral_irreps(n: usize) -> Result<(FiniteGroup, Vec<Irrep>)> {
    let group = build_group(&GroupSpec::Dihedral(n))?;
    let mut irreps = Vec::new();
    let bk = |g: usize| (g / n, g % n);
    irreps.push(scalar_irrep("trivial".into(), vec![cr(1.0); group.order]));
    irreps.push(scalar_irrep(
        "sign".into(),
        (0..group.order).map(|g| cr(if bk(g).0 == 0 { 1.0 } else { -1.0 })).collect(),
    ));
    if n % 2 == 0 {
        irreps.push(scalar_irrep(
            "alt".into(),
            (0..group.order).map(|g| cr(if bk(g).1 % 2 == 0 { 1.0 } else { -1.0 })).collect(),
        ));
        irreps.push(scalar_irrep(
            "alt-sign".into(),
            (0..group.order)
                .map(|g| {
                    let (b, k) = bk(g);
                    cr(if (b + k) % 2 == 0 { 1.0 } else { -1.0 })
                })
                .collect(),
        ));
    }
    let mut h = 1usize;
    while 2 * h < n {
        let mut mats = Vec::with_capacity(group.order);
        for g in 0..group.order {
            let (b, k) = bk(g);
            let phase = 2.0 * std::f64::consts::PI * (h * k) as f64 / n as f64;
            let e = Complex64::new(phase.cos(), phase.sin());
            let mut m = zeros(2, 2);
            if b == 0 {
                m[[0, 0]] = e;
                m[[1, 1]] = e.conj();
            } else {
                m[[0, 1]] = e.conj();
                m[[1, 0]] = e;
            }
            mats.push(m);
        }
        irreps.push(Irrep { label: format!("rho{h}"), dim: 2, mats });
        h += 1;
    }
    Ok((group, irreps))
}

/// The complete list of irreducible representations of a built-in group,
/// as explicit matrices indexed consistently with [`build_group`].
pub fn builtin_irreps(spec: &GroupSpec) -> Result<(FiniteGroup, Vec<Irrep>)> {
    let (group, irreps) = match spec {
        GroupSpec::Cyclic(n) => product_irreps(&[*n])?,
        GroupSpec::Product(ns) => product_irreps(ns)?,
        GroupSpec::A4 => a4_irreps()?,
        GroupSpec::Dihedral(n) => dihedral_irreps(*n)?,
    };
    verify_irreps(&group, &irreps)?;
    Ok((group, irreps))
}

/// Tensor square `Vbar_g = V_g (x) V_g^*` of a projective representation,
/// verified to be an ordinary linear representation (the cocycle cancels).
pub fn tensor_square_rep(v: &ProjectiveRep) -> Result<Vec<CMat>> {
    let vbar: Vec<CMat> =
        v.mats.iter().map(|m| kron(m, &m.mapv(|z| z.conj()))).collect();
    let n = v.group.order;
    for g in 0..n {
        for h in 0..n {
            let res = max_abs(&(&vbar[g].dot(&vbar[h]) - &vbar[v.group.mul(g, h)]));
            if res > REP_TOL {
                return Err(Error::VerificationFailed(format!(
                    "tensor-square cocycle fails to cancel at ({g},{h}): residual {res:.3e}"
                )));
            }
        }
    }
    Ok(vbar)
}

/// Decomposition of the tensor-square representation into irreducible
/// blocks, with a canonical intertwiner and the intertwiner-space basis.
#[derive(Debug, Clone)]
pub struct IrrepDecomposition {
    /// The group.
    pub group: FiniteGroup,
    /// All irreps of the group, in builtin order.
    pub irreps: Vec<Irrep>,
    /// The tensor-square representation `Vbar_g`.
    pub vbar: Vec<CMat>,
    /// Multiplicity `n_J` of each irrep in `Vbar`.
    pub multiplicities: Vec<usize>,
    /// Block-diagonal model representation `Ubar_g = (+)_J 1_{n_J} (x) u^J_g`.
    pub ubar: Vec<CMat>,
    /// Canonical unitary intertwiner with `Vbar_g W = W Ubar_g`.
    pub w_canonical: CMat,
    /// Basis of the full intertwiner space `{W : Vbar_g W = W Ubar_g}`.
    pub intertwiner_basis: Vec<CMat>,
    /// Bond dimension `D` of the source representation.
    pub bond_dim: usize,
}

impl IrrepDecomposition {
    /// Present components `(J, copy)` in column-block order.
    pub fn components(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (j, &n) in self.multiplicities.iter().enumerate() {
            for r in 0..n {
                out.push((j, r));
            }
        }
        out
    }

    /// Column offset of the `(J, copy)` block inside `W` and `Ubar`.
    pub fn block_offset(&self, j: usize, r: usize) -> Result<usize> {
        if j >= self.irreps.len() || r >= self.multiplicities[j] {
            return Err(Error::InvalidInput(format!(
                "no copy {r} of irrep {j} in the decomposition"
            )));
        }
        let mut off = 0usize;
        for (jj, &n) in self.multiplicities.iter().enumerate() {
            if jj == j {
                break;
            }
            off += n * self.irreps[jj].dim;
        }
        Ok(off + r * self.irreps[j].dim)
    }

    /// Dimension of the intertwiner space, `sum_J n_J^2`.
    pub fn intertwiner_dim(&self) -> usize {
        self.multiplicities.iter().map(|&n| n * n).sum()
    }
}

/// Fixes the overall phase of a vector: the first entry of modulus above
/// `1e-8` is made real positive.
fn phase_normalize(v: &mut CVec) {
    for x in v.iter() {
        if x.norm() > 1e-8 {
            let ph = x.conj() / cr(x.norm());
            *v = v.mapv(|z| z * ph);
            return;
        }
    }
}

/// The averaged operator `E^J_{ts} = (d_J/|G|) sum_g conj(u^J_g[t,s]) Vbar_g`.
fn isotypic_unit(vbar: &[CMat], irr: &Irrep, t: usize, s: usize) -> CMat {
    let order = vbar.len();
    let dsq = vbar[0].nrows();
    let mut e = zeros(dsq, dsq);
    for (g, vb) in vbar.iter().enumerate() {
        let w = irr.mats[g][[t, s]].conj() * cr(irr.dim as f64 / order as f64);
        e = e + vb.mapv(|z| z * w);
    }
    e
}

/// Decomposes the tensor square of `v` into irreducible blocks using the
/// built-in irreps of `spec`. Multiplicities come from character inner
/// products; the canonical intertwiner is assembled column by column from
/// isotypic projectors with a deterministic phase convention.
pub fn irrep_decomposition(v: &ProjectiveRep, spec: &GroupSpec) -> Result<IrrepDecomposition> {
    let (group, irreps) = builtin_irreps(spec)?;
    if group.order != v.group.order || group.table != v.group.table {
        return Err(Error::InvalidInput(
            "representation group does not match the requested group spec".into(),
        ));
    }
    let vbar = tensor_square_rep(v)?;
    let dsq = v.dim * v.dim;
    let order = group.order as f64;

    let mut multiplicities = Vec::with_capacity(irreps.len());
    for irr in &irreps {
        let mut acc = Complex64::new(0.0, 0.0);
        for (g, vb) in vbar.iter().enumerate() {
            let trace: Complex64 = (0..dsq).map(|i| vb[[i, i]]).sum();
            acc += irr.character(g).conj() * trace;
        }
        acc /= cr(order);
        let n = acc.re.round();
        if (acc.re - n).abs() > 1e-8 || acc.im.abs() > 1e-8 || n < 0.0 {
            return Err(Error::VerificationFailed(format!(
                "multiplicity of irrep {} is not a nonnegative integer: {acc}",
                irr.label
            )));
        }
        multiplicities.push(n as usize);
    }
    let total: usize =
        multiplicities.iter().zip(irreps.iter()).map(|(&n, j)| n * j.dim).sum();
    if total != dsq {
        return Err(Error::VerificationFailed(format!(
            "irrep dimensions sum to {total}, expected D^2 = {dsq}"
        )));
    }

    let mut cols: Vec<CVec> = Vec::with_capacity(dsq);
    for (ji, irr) in irreps.iter().enumerate() {
        let n = multiplicities[ji];
        if n == 0 {
            continue;
        }
        let e00 = isotypic_unit(&vbar, irr, 0, 0);
        let e_cols: Vec<CVec> = (0..dsq).map(|k| e00.column(k).to_owned()).collect();
        let mut basis = orthonormalize(&e_cols, 1e-8);
        if basis.len() != n {
            return Err(Error::VerificationFailed(format!(
                "isotypic range of irrep {} has dimension {}, expected {n}",
                irr.label,
                basis.len()
            )));
        }
        for b in &mut basis {
            phase_normalize(b);
        }
        let maps: Vec<CMat> = (0..irr.dim).map(|t| isotypic_unit(&vbar, irr, t, 0)).collect();
        for b in &basis {
            for map in &maps {
                cols.push(map.dot(b));
            }
        }
    }
    let mut w_canonical = zeros(dsq, dsq);
    for (k, col) in cols.iter().enumerate() {
        for i in 0..dsq {
            w_canonical[[i, k]] = col[i];
        }
    }

    let mut ubar = Vec::with_capacity(group.order);
    for g in 0..group.order {
        let mut u = zeros(dsq, dsq);
        let mut off = 0usize;
        for (ji, irr) in irreps.iter().enumerate() {
            for _ in 0..multiplicities[ji] {
                for a in 0..irr.dim {
                    for b in 0..irr.dim {
                        u[[off + a, off + b]] = irr.mats[g][[a, b]];
                    }
                }
                off += irr.dim;
            }
        }
        ubar.push(u);
    }

    require_unitary(&w_canonical, REP_TOL)?;
    for g in 0..group.order {
        let res = max_abs(&(&vbar[g].dot(&w_canonical) - &w_canonical.dot(&ubar[g])));
        if res > REP_TOL {
            return Err(Error::VerificationFailed(format!(
                "canonical intertwiner fails at element {g}: residual {res:.3e}"
            )));
        }
    }

    let decomp = IrrepDecomposition {
        group,
        irreps,
        vbar,
        multiplicities,
        ubar,
        w_canonical,
        intertwiner_basis: Vec::new(),
        bond_dim: v.dim,
    };

    let mut basis_elems = Vec::with_capacity(decomp.intertwiner_dim());
    for (ji, irr) in decomp.irreps.iter().enumerate() {
        let n = decomp.multiplicities[ji];
        for r in 0..n {
            for rp in 0..n {
                let mut s = zeros(dsq, dsq);
                let row0 = decomp.block_offset(ji, r)?;
                let col0 = decomp.block_offset(ji, rp)?;
                for t in 0..irr.dim {
                    s[[row0 + t, col0 + t]] = cr(1.0);
                }
                basis_elems.push(decomp.w_canonical.dot(&s));
            }
        }
    }
    Ok(IrrepDecomposition { intertwiner_basis: basis_elems, ..decomp })
}

/// How to fix the residual isotypic freedom when sampling an intertwiner.
#[derive(Debug, Clone)]
pub enum IntertwinerParams {
    /// All isotypic unitaries set to the identity.
    Canonical,
    /// One explicit `n_J x n_J` unitary per irrep with `n_J > 0`, in irrep
    /// order.
    Unitaries(Vec<CMat>),
    /// Haar-random isotypic unitaries from a seeded generator.
    Haar(u64),
}

/// Samples a unitary intertwiner `W = W_can ((+)_J M_J (x) 1_{d_J})`.
pub fn sample_intertwiner(
    decomp: &IrrepDecomposition,
    params: &IntertwinerParams,
) -> Result<CMat> {
    let present: Vec<usize> = (0..decomp.irreps.len())
        .filter(|&j| decomp.multiplicities[j] > 0)
        .collect();
    let factors: Vec<CMat> = match params {
        IntertwinerParams::Canonical => {
            present.iter().map(|&j| identity(decomp.multiplicities[j])).collect()
        }
        IntertwinerParams::Unitaries(ms) => {
            if ms.len() != present.len() {
                return Err(Error::InvalidInput(format!(
                    "expected {} isotypic unitaries, got {}",
                    present.len(),
                    ms.len()
                )));
            }
            for (&j, m) in present.iter().zip(ms.iter()) {
                let n = decomp.multiplicities[j];
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "isotypic unitary for irrep {} must be {n}x{n}, got {}x{}",
                        decomp.irreps[j].label,
                        m.nrows(),
                        m.ncols()
                    )));
                }
                require_unitary(m, 1e-9)?;
            }
            ms.clone()
        }
        IntertwinerParams::Haar(seed) => {
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            present
                .iter()
                .map(|&j| haar_random_unitary(decomp.multiplicities[j], &mut rng))
                .collect()
        }
    };
    let dsq = decomp.bond_dim * decomp.bond_dim;
    let mut blk = zeros(dsq, dsq);
    for (pi, &j) in present.iter().enumerate() {
        let n = decomp.multiplicities[j];
        let dj = decomp.irreps[j].dim;
        for r in 0..n {
            for rp in 0..n {
                let row0 = decomp.block_offset(j, r)?;
                let col0 = decomp.block_offset(j, rp)?;
                for t in 0..dj {
                    blk[[row0 + t, col0 + t]] = factors[pi][[r, rp]];
                }
            }
        }
    }
    let w = decomp.w_canonical.dot(&blk);
    require_unitary(&w, REP_TOL)?;
    for g in 0..decomp.group.order {
        let res = max_abs(&(&decomp.vbar[g].dot(&w) - &w.dot(&decomp.ubar[g])));
        if res > REP_TOL {
            return Err(Error::VerificationFailed(format!(
                "sampled intertwiner fails at element {g}: residual {res:.3e}"
            )));
        }
    }
    Ok(w)
}

/// A choice of irrep copies defining the physical space of the constructed
/// tensor.
#[derive(Debug, Clone)]
pub struct IrrepSelection {
    /// The chosen `(irrep, copy)` pairs, in physical-index order.
    pub picks: Vec<(usize, usize)>,
    /// The `D^2 x d` selection isometry `P`.
    pub p: CMat,
    /// Physical dimension `d`.
    pub d: usize,
    /// The selected physical representation `U_g`, block diagonal over the
    /// picks.
    pub u_phys: Vec<CMat>,
}

/// Builds the selection isometry and physical representation for a list of
/// `(irrep, copy)` picks.
pub fn select_irreps(
    decomp: &IrrepDecomposition,
    picks: &[(usize, usize)],
) -> Result<IrrepSelection> {
    if picks.is_empty() {
        return Err(Error::InvalidInput("selection must pick at least one irrep copy".into()));
    }
    for (i, a) in picks.iter().enumerate() {
        for b in &picks[i + 1..] {
            if a == b {
                return Err(Error::InvalidInput(format!(
                    "irrep copy ({},{}) picked twice",
                    a.0, a.1
                )));
            }
        }
    }
    for &(j, r) in picks {
        decomp.block_offset(j, r)?;
    }
    let dsq = decomp.bond_dim * decomp.bond_dim;
    let d: usize = picks.iter().map(|&(j, _)| decomp.irreps[j].dim).sum();
    let mut p = zeros(dsq, d);
    let mut col = 0usize;
    for &(j, r) in picks {
        let off = decomp.block_offset(j, r)?;
        for t in 0..decomp.irreps[j].dim {
            p[[off + t, col]] = cr(1.0);
            col += 1;
        }
    }
    let mut u_phys = Vec::with_capacity(decomp.group.order);
    for g in 0..decomp.group.order {
        let mut u = zeros(d, d);
        let mut off = 0usize;
        for &(j, _) in picks {
            let irr = &decomp.irreps[j];
            for a in 0..irr.dim {
                for b in 0..irr.dim {
                    u[[off + a, off + b]] = irr.mats[g][[a, b]];
                }
            }
            off += irr.dim;
        }
        u_phys.push(u);
    }
    Ok(IrrepSelection { picks: picks.to_vec(), p, d, u_phys })
}

/// A constructed symmetric tensor with its certificate data.
#[derive(Debug, Clone)]
pub struct ConstructedTensor {
    /// The tensor: left-canonical when normal, the raw reshaped tensor
    /// otherwise.
    pub tensor: MpsTensor,
    /// The raw tensor reshaped from `W P` before canonicalization.
    pub raw: MpsTensor,
    /// Whether the tensor is normal (unique dominant transfer eigenvalue
    /// and successful canonicalization).
    pub normal: bool,
    /// Symmetry phases `e^{i phi_g}` per group element.
    pub phases: Vec<Complex64>,
    /// Worst-case residual of the symmetry certificate.
    pub certificate_residual: f64,
    /// Rescale factor `sqrt(D/d)` applied to the columns of `W P`.
    pub rescale: f64,
}

/// Reshapes the columns of `W P` into a symmetric site tensor and verifies
/// the symmetry certificate
/// `sum_n (U_g^T)_{mn} A^n = e^{i phi_g} V_g A^m V_g^dag` for every group
/// element.
pub fn construct_tensor(
    v: &ProjectiveRep,
    w: &CMat,
    sel: &IrrepSelection,
) -> Result<ConstructedTensor> {
    let dim = v.dim;
    let dsq = dim * dim;
    if w.nrows() != dsq || w.ncols() != dsq {
        return Err(Error::ShapeMismatch(format!(
            "intertwiner must be {dsq}x{dsq}, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let abar = w.dot(&sel.p);
    for m in 0..sel.d {
        for n in 0..sel.d {
            let ip: Complex64 = (0..dsq).map(|i| abar[[i, m]].conj() * abar[[i, n]]).sum();
            let expect = if m == n { cr(1.0) } else { cr(0.0) };
            if (ip - expect).norm() > REP_TOL {
                return Err(Error::VerificationFailed(format!(
                    "columns {m},{n} of WP are not orthonormal"
                )));
            }
        }
    }
    let rescale = (dim as f64 / sel.d as f64).sqrt();
    let mats: Vec<CMat> = (0..sel.d)
        .map(|m| {
            let col: CVec = Array1::from_iter((0..dsq).map(|i| abar[[i, m]] * cr(rescale)));
            unvec_r(&col, dim, dim)
        })
        .collect();
    let raw = MpsTensor::new(mats)?;

    let mut phases = Vec::with_capacity(v.group.order);
    let mut worst = 0.0_f64;
    for g in 0..v.group.order {
        let mut target = zeros(sel.d * dim, dim);
        let mut model = zeros(sel.d * dim, dim);
        for m in 0..sel.d {
            let conj = v.mats[g].dot(&raw.mats[m]).dot(&dagger(&v.mats[g]));
            let mut pushed = zeros(dim, dim);
            for n in 0..sel.d {
                let coef = sel.u_phys[g][[n, m]];
                pushed = pushed + raw.mats[n].mapv(|z| z * coef);
            }
            for i in 0..dim {
                for j in 0..dim {
                    target[[m * dim + i, j]] = conj[[i, j]];
                    model[[m * dim + i, j]] = pushed[[i, j]];
                }
            }
        }
        let phase = phase_fit(&target, &model);
        if (phase.norm() - 1.0).abs() > REP_TOL {
            return Err(Error::VerificationFailed(format!(
                "symmetry phase at element {g} is not unimodular: |c| = {}",
                phase.norm()
            )));
        }
        worst = worst.max(max_abs(&(&model - &target.mapv(|z| z * phase))));
        phases.push(phase);
    }
    if worst > 1e-8 {
        return Err(Error::VerificationFailed(format!(
            "symmetry certificate residual {worst:.3e} exceeds tolerance"
        )));
    }

    match left_canonicalize(&raw) {
        Ok(t) => {
            let spec = transfer_spectrum(&t)?;
            let top = spec[0].norm();
            let dominant = spec.iter().filter(|l| l.norm() > top - 1e-9).count();
            Ok(ConstructedTensor {
                tensor: t,
                raw,
                normal: dominant == 1,
                phases,
                certificate_residual: worst,
                rescale,
            })
        }
        Err(Error::Degenerate) => Ok(ConstructedTensor {
            tensor: raw.clone(),
            raw,
            normal: false,
            phases,
            certificate_residual: worst,
            rescale,
        }),
        Err(e) => Err(e),
    }
}

/// The two-dimensional `sigma_y` representation of the two-element group,
/// the smallest interesting input for the construction.
pub fn sigma_y_rep_z2() -> Result<ProjectiveRep> {
    let group = build_group(&GroupSpec::Cyclic(2))?;
    let y = ndarray::array![
        [cr(0.0), Complex64::new(0.0, -1.0)],
        [Complex64::new(0.0, 1.0), cr(0.0)]
    ];
    Ok(ProjectiveRep {
        group,
        dim: 2,
        mats: vec![identity(2), y],
        cocycle: vec![vec![cr(1.0); 2]; 2],
    })
}

/// Hilbert-Schmidt residual of `Vbar_g B - B Ubar_g` maximized over the
/// group; zero for every element of the intertwiner space.
pub fn intertwining_residual(decomp: &IrrepDecomposition, b: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for g in 0..decomp.group.order {
        worst = worst.max(max_abs(&(&decomp.vbar[g].dot(b) - &b.dot(&decomp.ubar[g]))));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::verify_projective_rep;
    use crate::protocols::trivial_defect_basis;
    use crate::pushing::build_pushing_table;
    use crate::sim::fidelity;
    use crate::tensor::{block_tensor, dense_state, BoundarySpec};
    use crate::{gallery, DEFAULT_BUDGET};

    fn pauli_rep() -> ProjectiveRep {
        named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap()
    }

    #[test]
    fn builtin_irreps_verify_for_all_families() {
        for spec in [
            GroupSpec::Cyclic(5),
            GroupSpec::Product(vec![2, 3]),
            GroupSpec::A4,
            GroupSpec::Dihedral(3),
            GroupSpec::Dihedral(4),
            GroupSpec::Dihedral(6),
        ] {
            let (group, irreps) = builtin_irreps(&spec).unwrap();
            let sum_sq: usize = irreps.iter().map(|j| j.dim * j.dim).sum();
            assert_eq!(sum_sq, group.order);
        }
    }

    #[test]
    fn tensor_square_of_pauli_rep_is_linear() {
        let vbar = tensor_square_rep(&pauli_rep()).unwrap();
        assert_eq!(vbar.len(), 4);
        assert_eq!(vbar[0].nrows(), 4);
    }

    #[test]
    fn tensor_square_of_trivial_rep_is_trivial() {
        let v = trivial_defect_basis().unwrap();
        let vbar = tensor_square_rep(&v).unwrap();
        assert_eq!(vbar.len(), 1);
        assert!(max_abs(&(&vbar[0] - &identity(1))) < 1e-14);
    }

    #[test]
    fn tensor_square_of_a4_triplet_is_linear() {
        let v = named_defect_basis(&BasisSpec::A4Triplet).unwrap();
        let vbar = tensor_square_rep(&v).unwrap();
        assert_eq!(vbar.len(), 12);
        assert_eq!(vbar[0].nrows(), 9);
    }

    #[test]
    fn pauli_square_decomposes_into_four_characters() {
        let decomp = irrep_decomposition(&pauli_rep(), &GroupSpec::Product(vec![2, 2])).unwrap();
        assert_eq!(decomp.multiplicities, vec![1, 1, 1, 1]);
        assert_eq!(decomp.intertwiner_dim(), 4);
        assert_eq!(decomp.intertwiner_basis.len(), 4);
        for b in &decomp.intertwiner_basis {
            assert!(intertwining_residual(&decomp, b) < 1e-12);
        }
    }

    #[test]
    fn sigma_y_square_has_two_characters_with_multiplicity_two() {
        let v = sigma_y_rep_z2().unwrap();
        let decomp = irrep_decomposition(&v, &GroupSpec::Cyclic(2)).unwrap();
        assert_eq!(decomp.multiplicities, vec![2, 2]);
        assert_eq!(decomp.intertwiner_dim(), 8);
        assert_eq!(decomp.intertwiner_basis.len(), 8);
        for b in &decomp.intertwiner_basis {
            assert!(intertwining_residual(&decomp, b) < 1e-12);
        }
    }

    #[test]
    fn a4_triplet_square_decomposition_counts() {
        let v = named_defect_basis(&BasisSpec::A4Triplet).unwrap();
        let decomp = irrep_decomposition(&v, &GroupSpec::A4).unwrap();
        let total: usize = decomp
            .multiplicities
            .iter()
            .zip(decomp.irreps.iter())
            .map(|(&n, j)| n * j.dim)
            .sum();
        assert_eq!(total, 9);
        assert_eq!(decomp.multiplicities, vec![1, 1, 1, 2]);
        assert_eq!(decomp.intertwiner_dim(), 7);
        assert!(decomp.intertwiner_dim() <= 81);
        for b in &decomp.intertwiner_basis {
            assert!(intertwining_residual(&decomp, b) < 1e-10);
        }
    }

    #[test]
    fn canonical_intertwiner_has_tiny_residual() {
        let decomp = irrep_decomposition(&pauli_rep(), &GroupSpec::Product(vec![2, 2])).unwrap();
        let w = sample_intertwiner(&decomp, &IntertwinerParams::Canonical).unwrap();
        assert!(intertwining_residual(&decomp, &w) < 1e-12);
        assert!(crate::linalg::unitarity_residual(&w) < 1e-12);
    }

    #[test]
    fn haar_intertwiner_is_unitary_and_reproducible() {
        let v = sigma_y_rep_z2().unwrap();
        let decomp = irrep_decomposition(&v, &GroupSpec::Cyclic(2)).unwrap();
        let w1 = sample_intertwiner(&decomp, &IntertwinerParams::Haar(11)).unwrap();
        let w2 = sample_intertwiner(&decomp, &IntertwinerParams::Haar(11)).unwrap();
        assert!(max_abs(&(&w1 - &w2)) == 0.0);
        assert!(crate::linalg::unitarity_residual(&w1) < 1e-12);
        assert!(intertwining_residual(&decomp, &w1) < 1e-10);
    }

    #[test]
    fn aklt_from_pauli_rep_construction() {
        let v = pauli_rep();
        let decomp = irrep_decomposition(&v, &GroupSpec::Product(vec![2, 2])).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let ms = vec![
            CMat::from_elem((1, 1), cr(1.0)),
            CMat::from_elem((1, 1), i),
            CMat::from_elem((1, 1), cr(-1.0)),
            CMat::from_elem((1, 1), cr(1.0)),
        ];
        let w = sample_intertwiner(&decomp, &IntertwinerParams::Unitaries(ms)).unwrap();
        let sel = select_irreps(&decomp, &[(1, 0), (2, 0), (3, 0)]).unwrap();
        let built = construct_tensor(&v, &w, &sel).unwrap();
        assert!(built.normal);
        assert!(built.certificate_residual < 1e-12);

        let s2 = 1.0 / 2.0_f64.sqrt();
        let rot = [
            [Complex64::new(0.0, -s2), cr(0.0), cr(s2)],
            [Complex64::new(0.0, s2), cr(0.0), cr(s2)],
            [cr(0.0), cr(1.0), cr(0.0)],
        ];
        let mats: Vec<CMat> = (0..3)
            .map(|m| {
                let mut acc = zeros(2, 2);
                for n in 0..3 {
                    acc = acc + built.tensor.mats[n].mapv(|z| z * rot[m][n]);
                }
                acc
            })
            .collect();
        let spherical = MpsTensor::new(mats).unwrap();

        let (gal, _) = gallery::gallery_tensor("aklt", &[]).unwrap();
        let target = gal.normal().unwrap();
        let b = BoundarySpec::Matrix(identity(2));
        let ours = dense_state(&spherical, &b, 4, DEFAULT_BUDGET).unwrap();
        let theirs = dense_state(&target, &b, 4, DEFAULT_BUDGET).unwrap();
        assert!(fidelity(&ours, &theirs).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn z2_family_from_sigma_y_construction() {
        let v = sigma_y_rep_z2().unwrap();
        let decomp = irrep_decomposition(&v, &GroupSpec::Cyclic(2)).unwrap();
        for g in [-0.9_f64, -0.5, -0.1] {
            let u = (1.0 / 2.0_f64.sqrt()) / (1.0 + g.abs()).sqrt();
            let w5 = -(1.0 / 2.0_f64.sqrt()) * ((-g) / (1.0 + g.abs())).sqrt();
            let m = ndarray::array![
                [cr(u * 2.0_f64.sqrt()), cr(-w5 * 2.0_f64.sqrt())],
                [cr(w5 * 2.0_f64.sqrt()), cr(u * 2.0_f64.sqrt())]
            ];
            let w = sample_intertwiner(
                &decomp,
                &IntertwinerParams::Unitaries(vec![m.clone(), m]),
            )
            .unwrap();
            let sel = select_irreps(&decomp, &[(0, 0), (1, 0)]).unwrap();
            let built = construct_tensor(&v, &w, &sel).unwrap();
            assert!(built.certificate_residual < 1e-12);

            let s2 = 1.0 / 2.0_f64.sqrt();
            let mats: Vec<CMat> = vec![
                (&built.tensor.mats[0] + &built.tensor.mats[1]).mapv(|z| z * cr(s2)),
                (&built.tensor.mats[0] - &built.tensor.mats[1]).mapv(|z| z * cr(s2)),
            ];
            let relabeled = MpsTensor::new(mats).unwrap();

            let (gal, _) = gallery::gallery_tensor("z2_family", &[("g", g)]).unwrap();
            let target = gal.normal().unwrap();
            let b = BoundarySpec::Matrix(identity(2));
            let ours = dense_state(&relabeled, &b, 4, DEFAULT_BUDGET).unwrap();
            let theirs = dense_state(&target, &b, 4, DEFAULT_BUDGET).unwrap();
            assert!(fidelity(&ours, &theirs).unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn full_selection_gives_zero_correlation_length_tensor() {
        let v = pauli_rep();
        let decomp = irrep_decomposition(&v, &GroupSpec::Product(vec![2, 2])).unwrap();
        let w = sample_intertwiner(&decomp, &IntertwinerParams::Canonical).unwrap();
        let picks: Vec<(usize, usize)> = (0..4).map(|j| (j, 0)).collect();
        let sel = select_irreps(&decomp, &picks).unwrap();
        let built = construct_tensor(&v, &w, &sel).unwrap();
        let vmap = crate::tensor::virtual_to_physical_map(&built.tensor);
        let scale = cr((built.tensor.d as f64 / built.tensor.dim as f64).sqrt());
        assert!(crate::linalg::unitarity_residual(&vmap.mat.mapv(|z| z * scale)) < 1e-10);
    }

    #[test]
    fn constructed_tensors_have_complete_pushing_tables() {
        let v = pauli_rep();
        let decomp = irrep_decomposition(&v, &GroupSpec::Product(vec![2, 2])).unwrap();
        let w = sample_intertwiner(&decomp, &IntertwinerParams::Haar(5)).unwrap();
        let sel = select_irreps(&decomp, &[(1, 0), (2, 0), (3, 0)]).unwrap();
        let built = construct_tensor(&v, &w, &sel).unwrap();
        let blocked = block_tensor(&built.tensor, 1).unwrap();
        let table = build_pushing_table(&blocked, &v).unwrap();
        assert!(table.complete);
    }

    #[test]
    fn sigma_y_rep_is_a_valid_projective_rep() {
        let v = sigma_y_rep_z2().unwrap();
        let (_, worst) = verify_projective_rep(&v).unwrap();
        assert!(worst < 1e-12);
    }

    #[test]
    fn selection_validation_rejects_bad_picks() {
        let v = pauli_rep();
        let decomp = irrep_decomposition(&v, &GroupSpec::Product(vec![2, 2])).unwrap();
        assert!(select_irreps(&decomp, &[]).is_err());
        assert!(select_irreps(&decomp, &[(0, 0), (0, 0)]).is_err());
        assert!(select_irreps(&decomp, &[(0, 1)]).is_err());
        assert!(select_irreps(&decomp, &[(9, 0)]).is_err());
    }

    #[test]
    fn dihedral_decomposition_of_pauli_rep() {
        let d4 = build_group(&GroupSpec::Dihedral(4)).unwrap();
        let _ = d4;
        let (group, irreps) = builtin_irreps(&GroupSpec::Dihedral(4)).unwrap();
        assert_eq!(group.order, 8);
        assert_eq!(irreps.len(), 5);
        let dims: Vec<usize> = irreps.iter().map(|j| j.dim).collect();
        assert_eq!(dims, vec![1, 1, 1, 1, 2]);
    }
}
