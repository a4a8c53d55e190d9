//! Finite groups, unitary projective representations, POVM completeness,
//! and coset machinery for symmetry-broken block structures.
//!
//! A defect basis is a set of unitaries `{B^g}` indexed by the elements of a
//! finite group `G` with `B^g B^h = omega(g,h) B^{gh}`. The fusion step of
//! the preparation protocols measures bond pairs in the associated maximally
//! entangled basis, and the correction step looks defects up by their group
//! index, so element ordering is fixed once per family and serialized with
//! the representation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::linalg::{self, c, cr, hs_inner, identity, kron, max_abs, CMat};
use crate::{Error, Result};

/// A finite group presented by its Cayley table.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    /// Number of elements.
    pub order: usize,
    /// `table[g][h]` is the index of the product `g * h`.
    pub table: Vec<Vec<usize>>,
    /// Index of the identity.
    pub id: usize,
    /// `inv[g]` is the index of the inverse of `g`.
    pub inv: Vec<usize>,
    /// Human-readable element names.
    pub labels: Vec<String>,
}

impl FiniteGroup {
    /// Product of two elements by table lookup.
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    /// Order of a single element.
    pub fn element_order(&self, g: usize) -> usize {
        let mut acc = g;
        let mut n = 1;
        while acc != self.id {
            acc = self.mul(acc, g);
            n += 1;
        }
        n
    }

    /// Exhaustive validation of the group laws (identity, inverses, and
    /// associativity for orders up to 64).
    pub fn validate(&self) -> Result<()> {
        let n = self.order;
        if self.table.len() != n || self.inv.len() != n || self.labels.len() != n {
            return Err(Error::ShapeMismatch("group table size mismatch".into()));
        }
        for g in 0..n {
            if self.mul(self.id, g) != g || self.mul(g, self.id) != g {
                return Err(Error::InvalidInput("identity law fails".into()));
            }
            if self.mul(g, self.inv[g]) != self.id || self.mul(self.inv[g], g) != self.id {
                return Err(Error::InvalidInput("inverse law fails".into()));
            }
        }
        if n <= 64 {
            for g in 0..n {
                for h in 0..n {
                    for k in 0..n {
                        if self.mul(self.mul(g, h), k) != self.mul(g, self.mul(h, k)) {
                            return Err(Error::InvalidInput("associativity fails".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Supported abstract group families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    /// Cyclic group of the given order.
    Cyclic(usize),
    /// Direct product of cyclic groups, mixed-radix element indexing with
    /// the first factor most significant.
    Product(Vec<usize>),
    /// The alternating group on four letters.
    A4,
    /// Dihedral group of order `2n`.
    Dihedral(usize),
}

/// Builds one of the supported groups with its canonical element ordering.
pub fn build_group(spec: &GroupSpec) -> Result<FiniteGroup> {
    match spec {
        GroupSpec::Cyclic(n) => build_group(&GroupSpec::Product(vec![*n])),
        GroupSpec::Product(ns) => {
            if ns.is_empty() || ns.iter().any(|&n| n == 0) {
                return Err(Error::Unsupported("empty or zero factor in product group".into()));
            }
            let order: usize = ns.iter().product();
            let digits = |mut idx: usize| -> Vec<usize> {
                let mut d = vec![0usize; ns.len()];
                for k in (0..ns.len()).rev() {
                    d[k] = idx % ns[k];
                    idx /= ns[k];
                }
                d
            };
            let index = |d: &[usize]| -> usize {
                let mut idx = 0usize;
                for (k, &x) in d.iter().enumerate() {
                    idx = idx * ns[k] + x;
                }
                idx
            };
            let mut table = vec![vec![0usize; order]; order];
            let mut inv = vec![0usize; order];
            let mut labels = Vec::with_capacity(order);
            for g in 0..order {
                let dg = digits(g);
                labels.push(format!(
                    "({})",
                    dg.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                ));
                let dinv: Vec<usize> = dg.iter().zip(ns.iter()).map(|(&x, &n)| (n - x) % n).collect();
                inv[g] = index(&dinv);
                for h in 0..order {
                    let dh = digits(h);
                    let sum: Vec<usize> =
                        dg.iter().zip(dh.iter()).zip(ns.iter()).map(|((&x, &y), &n)| (x + y) % n).collect();
                    table[g][h] = index(&sum);
                }
            }
            let g = FiniteGroup { order, table, id: 0, inv, labels };
            g.validate()?;
            Ok(g)
        }
        GroupSpec::A4 => {
            let (group, _) = a4_triplet_closure()?;
            Ok(group)
        }
        GroupSpec::Dihedral(n) => {
            let n = *n;
            if n < 1 {
                return Err(Error::Unsupported("dihedral group needs n >= 1".into()));
            }
            let order = 2 * n;
            let idx = |b: usize, k: usize| b * n + k;
            let mut table = vec![vec![0usize; order]; order];
            let mut inv = vec![0usize; order];
            let mut labels = Vec::with_capacity(order);
            for b in 0..2 {
                for k in 0..n {
                    labels.push(if b == 0 { format!("r^{k}") } else { format!("s r^{k}") });
                }
            }
            for b1 in 0..2usize {
                for k1 in 0..n {
                    let g = idx(b1, k1);
                    inv[g] = if b1 == 0 { idx(0, (n - k1) % n) } else { g };
                    for b2 in 0..2usize {
                        for k2 in 0..n {
                            let h = idx(b2, k2);
                            let (b, k) = if b2 == 1 {
                                ((b1 + 1) % 2, (n + k2 - k1) % n)
                            } else {
                                (b1, (k1 + k2) % n)
                            };
                            table[g][h] = idx(b, k);
                        }
                    }
                }
            }
            let g = FiniteGroup { order, table, id: 0, inv, labels };
            g.validate()?;
            Ok(g)
        }
    }
}

/// Unitary projective representation of a finite group.
#[derive(Debug, Clone)]
pub struct ProjectiveRep {
    /// The underlying group.
    pub group: FiniteGroup,
    /// Representation dimension `D`.
    pub dim: usize,
    /// One unitary per group element, in group element order.
    pub mats: Vec<CMat>,
    /// Cocycle phases `omega(g,h)`.
    pub cocycle: Vec<Vec<Complex64>>,
}

impl ProjectiveRep {
    /// Number of defects `eta`.
    pub fn eta(&self) -> usize {
        self.mats.len()
    }
}

/// Supported defect-basis families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisSpec {
    /// `D^2` qudit Paulis `X^i Z^j`, projective rep of `Z_D x Z_D`.
    QuditPauli(usize),
    /// `4^l` weight-`l` tensor products of qubit Paulis on `2^l` dimensions.
    WeightedPauli(usize),
    /// The 12 rotation matrices of the three-dimensional `A_4` irrep.
    A4Triplet,
    /// The `2n x 2n` symplectic defect basis generated by `a, b, r, s`.
    Sp2n(usize),
}

/// The `D x D` shift matrix `X |j> = |j+1 mod D>`.
pub fn shift_matrix(d: usize) -> CMat {
    let mut x = linalg::zeros(d, d);
    for j in 0..d {
        x[[(j + 1) % d, j]] = cr(1.0);
    }
    x
}

/// The `D x D` clock matrix `Z |j> = exp(2 pi i j / D) |j>`.
pub fn clock_matrix(d: usize) -> CMat {
    let mut z = linalg::zeros(d, d);
    for j in 0..d {
        let phase = 2.0 * PI * (j as f64) / (d as f64);
        z[[j, j]] = c(phase.cos(), phase.sin());
    }
    z
}

/// Single-qubit Pauli `{1, X, Y, Z}` indexed by `(i,j)` as `X^i Z^j` up to
/// phase: index 0 -> 1, 1 -> Z, 2 -> X, 3 -> XZ = -iY.
fn qubit_pauli_xz(i: usize, j: usize) -> CMat {
    let x = shift_matrix(2);
    let z = clock_matrix(2);
    let mut m = identity(2);
    if i == 1 {
        m = m.dot(&x);
    }
    if j == 1 {
        m = m.dot(&z);
    }
    m
}

fn matrix_power(m: &CMat, k: usize) -> CMat {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = out.dot(m);
    }
    out
}

/// Finds `h` with `m` proportional (unit modulus) to `mats[h]`, returning
/// the index and the phase `c` with `m = c * mats[h]`.
fn match_up_to_phase(mats: &[CMat], m: &CMat, tol: f64) -> Option<(usize, Complex64)> {
    let dim = m.nrows() as f64;
    for (k, b) in mats.iter().enumerate() {
        let overlap = hs_inner(b, m);
        if (overlap.norm() - dim).abs() < tol * dim {
            let phase = overlap / cr(dim);
            let residual = max_abs(&(m - &b.mapv(|z| z * phase)));
            if residual < tol {
                return Some((k, phase));
            }
        }
    }
    None
}

/// Synthesizes a [`FiniteGroup`] from a phase-closed set of unitaries: the
/// Cayley table is recovered by matching each product against the set up to
/// a phase.
pub fn group_from_matrices(mats: &[CMat], labels: Vec<String>) -> Result<FiniteGroup> {
    let order = mats.len();
    let mut id = None;
    for (k, m) in mats.iter().enumerate() {
        if max_abs(&(m - &identity(m.nrows()))) < 1e-9 {
            id = Some(k);
        }
    }
    let id = id.ok_or_else(|| Error::InvalidInput("matrix set lacks the identity".into()))?;
    let mut table = vec![vec![0usize; order]; order];
    for g in 0..order {
        for h in 0..order {
            let prod = mats[g].dot(&mats[h]);
            let (k, _) = match_up_to_phase(mats, &prod, 1e-8)
                .ok_or_else(|| Error::InvalidInput(format!("matrix set not closed at ({g},{h})")))?;
            table[g][h] = k;
        }
    }
    let mut inv = vec![usize::MAX; order];
    for g in 0..order {
        for h in 0..order {
            if table[g][h] == id {
                inv[g] = h;
            }
        }
    }
    let group = FiniteGroup { order, table, id, inv, labels };
    group.validate()?;
    Ok(group)
}

/// Breadth-first closure of the `A_4` triplet generators up to phase.
/// Returns the synthesized group and its matrices, identity first, elements
/// labeled by their shortest generator words.
fn a4_triplet_closure() -> Result<(FiniteGroup, Vec<CMat>)> {
    let s = 1.0 / 2.0_f64.sqrt();
    let vx = ndarray::array![
        [cr(0.0), cr(0.0), cr(-1.0)],
        [cr(0.0), cr(-1.0), cr(0.0)],
        [cr(-1.0), cr(0.0), cr(0.0)]
    ];
    let vy = ndarray::array![
        [c(0.0, s * s), cr(s), c(0.0, -s * s)],
        [c(0.0, -s), cr(0.0), c(0.0, -s)],
        [c(0.0, s * s), cr(-s), c(0.0, -s * s)]
    ];
    let gens = [("x", vx), ("y", vy)];
    let mut mats: Vec<CMat> = vec![identity(3)];
    let mut labels: Vec<String> = vec!["e".into()];
    let mut head = 0usize;
    while head < mats.len() {
        let cur = mats[head].clone();
        let cur_label = labels[head].clone();
        for (gname, gmat) in &gens {
            let prod = cur.dot(gmat);
            if match_up_to_phase(&mats, &prod, 1e-8).is_none() {
                let label = if cur_label == "e" { (*gname).to_string() } else { format!("{cur_label}{gname}") };
                mats.push(prod);
                labels.push(label);
            }
        }
        head += 1;
    }
    if mats.len() != 12 {
        return Err(Error::VerificationFailed(format!(
            "A4 triplet closure produced {} elements, expected 12",
            mats.len()
        )));
    }
    let group = group_from_matrices(&mats, labels)?;
    Ok((group, mats))
}

fn compute_cocycle(group: &FiniteGroup, mats: &[CMat]) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let n = group.order;
    let mut cocycle = vec![vec![cr(1.0); n]; n];
    let mut worst = 0.0_f64;
    for g in 0..n {
        for h in 0..n {
            let prod = mats[g].dot(&mats[h]);
            let target = &mats[group.mul(g, h)];
            let phase = linalg::phase_fit(target, &prod);
            let residual = max_abs(&(&prod - &target.mapv(|z| z * phase)));
            worst = worst.max(residual).max((phase.norm() - 1.0).abs());
            cocycle[g][h] = phase;
        }
    }
    Ok((cocycle, worst))
}

/// Builds one of the named defect bases.
pub fn named_defect_basis(spec: &BasisSpec) -> Result<ProjectiveRep> {
    match spec {
        BasisSpec::QuditPauli(d) => {
            let d = *d;
            if d < 2 {
                return Err(Error::Unsupported("qudit Pauli basis needs D >= 2".into()));
            }
            let group = build_group(&GroupSpec::Product(vec![d, d]))?;
            let x = shift_matrix(d);
            let z = clock_matrix(d);
            let mut mats = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    mats.push(matrix_power(&x, i).dot(&matrix_power(&z, j)));
                }
            }
            finish_rep(group, d, mats)
        }
        BasisSpec::WeightedPauli(l) => {
            let l = *l;
            if l < 1 {
                return Err(Error::Unsupported("weighted Pauli basis needs l >= 1".into()));
            }
            let group = build_group(&GroupSpec::Product(vec![2; 2 * l]))?;
            let dim = 1usize << l;
            let mut mats = Vec::with_capacity(group.order);
            for e in 0..group.order {
                let mut m = identity(1);
                let mut rem = e;
                let mut digits = vec![0usize; 2 * l];
                for k in (0..2 * l).rev() {
                    digits[k] = rem % 2;
                    rem /= 2;
                }
                for site in 0..l {
                    let p = qubit_pauli_xz(digits[2 * site], digits[2 * site + 1]);
                    m = kron(&m, &p);
                }
                mats.push(m);
            }
            finish_rep(group, dim, mats)
        }
        BasisSpec::A4Triplet => {
            let (group, mats) = a4_triplet_closure()?;
            finish_rep(group, 3, mats)
        }
        BasisSpec::Sp2n(n) => {
            let n = *n;
            if n < 1 {
                return Err(Error::Unsupported("symplectic basis needs n >= 1".into()));
            }
            let zc = clock_matrix(n);
            let xc = shift_matrix(n);
            let two_n = 2 * n;
            let mut r = linalg::zeros(two_n, two_n);
            let mut s = linalg::zeros(two_n, two_n);
            let mut a = linalg::zeros(two_n, two_n);
            let mut b = linalg::zeros(two_n, two_n);
            for i in 0..n {
                for j in 0..n {
                    r[[i, j]] = zc[[i, j]];
                    r[[n + i, n + j]] = zc[[i, j]].conj();
                    b[[i, j]] = xc[[i, j]];
                    b[[n + i, n + j]] = xc[[i, j]];
                }
                s[[i, n + i]] = c(0.0, 1.0);
                s[[n + i, i]] = c(0.0, 1.0);
                a[[i, i]] = c(0.0, 1.0);
                a[[n + i, n + i]] = c(0.0, -1.0);
            }
            let mut mats: Vec<CMat> = Vec::new();
            let mut labels: Vec<String> = Vec::new();
            for i in 0..2usize {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..2usize {
                            let m = matrix_power(&a, i)
                                .dot(&matrix_power(&b, j))
                                .dot(&matrix_power(&r, k))
                                .dot(&matrix_power(&s, l));
                            if match_up_to_phase(&mats, &m, 1e-8).is_none() {
                                mats.push(m);
                                labels.push(format!("a^{i} b^{j} r^{k} s^{l}"));
                            }
                        }
                    }
                }
            }
            let group = group_from_matrices(&mats, labels)?;
            finish_rep(group, two_n, mats)
        }
    }
}

fn finish_rep(group: FiniteGroup, dim: usize, mats: Vec<CMat>) -> Result<ProjectiveRep> {
    for (k, m) in mats.iter().enumerate() {
        let res = linalg::unitarity_residual(m);
        if res > 1e-12 {
            return Err(Error::VerificationFailed(format!("defect {k} not unitary ({res:.3e})")));
        }
    }
    let (cocycle, residual) = compute_cocycle(&group, &mats)?;
    if residual > 1e-12 {
        return Err(Error::VerificationFailed(format!("cocycle residual {residual:.3e}")));
    }
    Ok(ProjectiveRep { group, dim, mats, cocycle })
}

/// Recomputes the cocycle table of a representation and its worst-case
/// residual against `B^g B^h = omega(g,h) B^{gh}`.
pub fn verify_projective_rep(rep: &ProjectiveRep) -> Result<(Vec<Vec<Complex64>>, f64)> {
    let (cocycle, residual) = compute_cocycle(&rep.group, &rep.mats)?;
    if residual > 1e-8 {
        return Err(Error::VerificationFailed(format!(
            "projective representation residual {residual:.3e}"
        )));
    }
    Ok((cocycle, residual))
}

/// Checks the grand-orthogonality completeness condition
/// `sum_k (B^k_{ij})* (B^k_{lm}) = (eta / D) delta_{il} delta_{jm}`.
/// Passes exactly when the representation is irreducible.
pub fn verify_povm_completeness(rep: &ProjectiveRep) -> (bool, f64) {
    let d = rep.dim;
    let eta = rep.eta() as f64;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                for m in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in &rep.mats {
                        acc += b[[i, j]].conj() * b[[l, m]];
                    }
                    let target = if i == l && j == m { eta / d as f64 } else { 0.0 };
                    worst = worst.max((acc - cr(target)).norm());
                }
            }
        }
    }
    (worst <= 1e-9 * eta, worst)
}

/// Stabilizer subgroup, coset representatives, and induced maps for a group
/// action on block indices.
#[derive(Debug, Clone)]
pub struct CosetData {
    /// Elements of the stabilizer `H` of block 0.
    pub h: Vec<usize>,
    /// Coset representative `k_alpha` per block, with `k_0 = e`.
    pub reps: Vec<usize>,
    /// `hmap[g][alpha] = h(g, alpha)` with `g k_alpha = k_gamma h(g, alpha)`.
    pub hmap: Vec<Vec<usize>>,
    /// `gammamap[g][alpha] = gamma(g, alpha)`, the block image of `alpha`.
    pub gammamap: Vec<Vec<usize>>,
}

/// Computes [`CosetData`] for a transitive action `perm[g]` of `G` on the
/// block set `{0..K-1}`.
pub fn stabilizer_and_cosets(group: &FiniteGroup, perm: &[Vec<usize>], k: usize) -> Result<CosetData> {
    if perm.len() != group.order {
        return Err(Error::ShapeMismatch("one permutation per group element required".into()));
    }
    for (g, p) in perm.iter().enumerate() {
        if p.len() != k {
            return Err(Error::ShapeMismatch(format!("permutation {g} has wrong length")));
        }
        let mut seen = vec![false; k];
        for &x in p {
            if x >= k || seen[x] {
                return Err(Error::InvalidInput(format!("element {g} does not act as a permutation")));
            }
            seen[x] = true;
        }
    }
    for g in 0..group.order {
        for h in 0..group.order {
            let gh = group.mul(g, h);
            for alpha in 0..k {
                if perm[gh][alpha] != perm[g][perm[h][alpha]] {
                    return Err(Error::InvalidInput("perm is not a group action".into()));
                }
            }
        }
    }
    let h: Vec<usize> = (0..group.order).filter(|&g| perm[g][0] == 0).collect();
    let mut reps = vec![usize::MAX; k];
    reps[0] = group.id;
    for g in 0..group.order {
        let alpha = perm[g][0];
        if reps[alpha] == usize::MAX {
            reps[alpha] = g;
        }
    }
    if reps.iter().any(|&r| r == usize::MAX) {
        return Err(Error::InvalidInput(
            "action is not transitive on the block set; split superblocks first".into(),
        ));
    }
    let hset: std::collections::HashSet<usize> = h.iter().cloned().collect();
    let mut hmap = vec![vec![0usize; k]; group.order];
    let mut gammamap = vec![vec![0usize; k]; group.order];
    for g in 0..group.order {
        for alpha in 0..k {
            let gamma = perm[g][alpha];
            let lhs = group.mul(g, reps[alpha]);
            let hval = group.mul(group.inv[reps[gamma]], lhs);
            if !hset.contains(&hval) {
                return Err(Error::VerificationFailed("induced map left the stabilizer".into()));
            }
            hmap[g][alpha] = hval;
            gammamap[g][alpha] = gamma;
        }
    }
    Ok(CosetData { h, reps, hmap, gammamap })
}
