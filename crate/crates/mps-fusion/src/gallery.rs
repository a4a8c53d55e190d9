//! Gallery of canned example tensors with their preparation metadata.
//!
//! Every entry records the defect basis and blocking parameter under which
//! its pushing table is complete, the closed-form correlation length where
//! one is known, and whether it is prepared by the single-chain protocol
//! (normal states) or the block-seeded protocol (non-normal states).
//!
//! All matrices are entered exactly; entries are validated against the
//! left-canonical condition on construction.

use std::f64::consts::PI;

use crate::groups::{clock_matrix, shift_matrix, BasisSpec};
use crate::linalg::{self, c, cr, identity, kron, CMat};
use crate::tensor::{Block, BlockStructure, CorrelationLength, MpsTensor};
use crate::{Error, Result};

/// Preparation route of a gallery entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Parallel segment preparation, fusion, correction, edge projection.
    Protocol1,
    /// GHZ block seed plus block-controlled preparation of each normal part.
    Protocol2,
}

/// Metadata attached to each gallery state.
#[derive(Debug, Clone)]
pub struct GalleryEntry {
    /// Entry name as accepted by [`gallery_tensor`].
    pub name: String,
    /// Resolved parameter values used to build the tensor.
    pub params: Vec<(String, f64)>,
    /// Defect basis under which the pushing table is complete.
    pub basis: BasisSpec,
    /// Blocking parameter at which the table is complete.
    pub q: usize,
    /// Closed-form correlation length, when known.
    pub xi: Option<CorrelationLength>,
    /// Preparation route.
    pub route: Route,
    /// True for normal (injective after blocking) tensors.
    pub normal: bool,
    /// One-line description of the state.
    pub description: String,
}

/// A gallery state: either a single site tensor or a block structure.
#[derive(Debug, Clone)]
pub enum GalleryTensor {
    /// Single site tensor.
    Normal(MpsTensor),
    /// Block-diagonal (non-normal) structure, inflation already applied.
    Blocked(BlockStructure),
}

impl GalleryTensor {
    /// The single site tensor of the entry; errors for blocked entries.
    pub fn normal(&self) -> Result<MpsTensor> {
        match self {
            GalleryTensor::Normal(t) => Ok(t.clone()),
            GalleryTensor::Blocked(_) => {
                Err(Error::InvalidInput("entry is a block structure; use blocked()".into()))
            }
        }
    }

    /// The block structure of the entry; errors for single-tensor entries.
    pub fn blocked(&self) -> Result<BlockStructure> {
        match self {
            GalleryTensor::Blocked(b) => Ok(b.clone()),
            GalleryTensor::Normal(_) => {
                Err(Error::InvalidInput("entry is a single tensor; use normal()".into()))
            }
        }
    }
}

/// Names of all gallery entries.
pub fn gallery_names() -> Vec<&'static str> {
    vec![
        "z2_family",
        "cluster",
        "ghz",
        "aklt",
        "su3",
        "a4_family",
        "sun_aklt",
        "so_aklt",
        "majumdar_ghosh",
        "majumdar_ghosh_chain",
        "z4xz2",
    ]
}

/// Metadata for every entry at its default parameters.
pub fn gallery_list() -> Vec<GalleryEntry> {
    gallery_names()
        .into_iter()
        .map(|n| gallery_tensor(n, &[]).expect("default entry must build").1)
        .collect()
}

fn param(params: &[(&str, f64)], key: &str, default: f64, allowed: &[&str]) -> Result<f64> {
    for (k, _) in params {
        if !allowed.contains(k) {
            return Err(Error::InvalidInput(format!("unknown parameter '{k}'")));
        }
    }
    Ok(params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or(default))
}

fn usize_param(value: f64, key: &str, min: usize) -> Result<usize> {
    if !value.is_finite() || value.fract() != 0.0 || value < min as f64 {
        return Err(Error::InvalidInput(format!("parameter '{key}' must be an integer >= {min}")));
    }
    Ok(value as usize)
}

fn pauli(k: usize) -> CMat {
    match k {
        0 => identity(2),
        1 => ndarray::array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]],
        2 => ndarray::array![[cr(0.0), c(0.0, -1.0)], [c(0.0, 1.0), cr(0.0)]],
        _ => ndarray::array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]],
    }
}

fn sigma_plus() -> CMat {
    ndarray::array![[cr(0.0), cr(1.0)], [cr(0.0), cr(0.0)]]
}

fn sigma_minus() -> CMat {
    ndarray::array![[cr(0.0), cr(0.0)], [cr(1.0), cr(0.0)]]
}

fn z2_tensor(g: f64) -> Result<MpsTensor> {
    if !(-1.0..=1.0).contains(&g) {
        return Err(Error::InvalidInput("z2_family requires -1 <= g <= 1".into()));
    }
    let eta = cr(1.0 / (1.0 + g.abs()).sqrt());
    let s = if g <= 0.0 { cr((-g).sqrt()) } else { c(0.0, g.sqrt()) };
    let z = cr(0.0);
    let a0 = ndarray::array![[eta, z], [eta * s, z]];
    let a1 = ndarray::array![[z, -eta * s], [z, eta]];
    MpsTensor::new(vec![a0, a1])
}

fn z2_xi(g: f64) -> CorrelationLength {
    if g == 0.0 {
        return CorrelationLength::Infinite;
    }
    if g == -1.0 {
        return CorrelationLength::Finite(0.0);
    }
    CorrelationLength::Finite(1.0 / ((1.0 + g) / (1.0 - g)).ln().abs())
}

fn aklt_tensor() -> Result<MpsTensor> {
    let f = (2.0_f64 / 3.0).sqrt();
    let h = (1.0_f64 / 3.0).sqrt();
    let ap = sigma_plus().mapv(|z| z * cr(f));
    let am = sigma_minus().mapv(|z| z * cr(-f));
    let a0 = pauli(3).mapv(|z| z * cr(-h));
    MpsTensor::new(vec![ap, am, a0])
}

fn su3_tensor() -> Result<MpsTensor> {
    let s = 1.0 / 2.0_f64.sqrt();
    let ap = ndarray::array![
        [cr(0.0), cr(s), cr(0.0)],
        [cr(0.0), cr(0.0), cr(s)],
        [cr(0.0), cr(0.0), cr(0.0)]
    ];
    let am = ndarray::array![
        [cr(0.0), cr(0.0), cr(0.0)],
        [cr(-s), cr(0.0), cr(0.0)],
        [cr(0.0), cr(-s), cr(0.0)]
    ];
    let a0 = ndarray::array![
        [cr(s), cr(0.0), cr(0.0)],
        [cr(0.0), cr(0.0), cr(0.0)],
        [cr(0.0), cr(0.0), cr(-s)]
    ];
    MpsTensor::new(vec![ap, am, a0])
}

fn a4_tensor(theta: f64, phi: f64) -> Result<MpsTensor> {
    let half = theta / 2.0;
    let e = c(phi.cos(), phi.sin());
    let u = (cr(half.cos()) + e * cr(half.sin())) / cr(2.0_f64.sqrt());
    let v = (cr(half.cos()) - e * cr(half.sin())) / cr(2.0_f64.sqrt());
    let s = cr(1.0 / 2.0_f64.sqrt());
    let z = cr(0.0);
    let ap = ndarray::array![[z, u, z], [v, z, u], [z, -v, z]].mapv(|x| x * s);
    let am = ndarray::array![[z, v, z], [-u, z, -v], [z, -u, z]].mapv(|x| x * s);
    let a0 = ndarray::array![[u, z, -v], [z, z, z], [v, z, -u]].mapv(|x| x * s);
    MpsTensor::new(vec![ap, am, a0])
}

fn ghz_tensor(d: usize) -> Result<MpsTensor> {
    let mut mats = Vec::with_capacity(d);
    for m in 0..d {
        let mut a = linalg::zeros(d, d);
        a[[m, m]] = cr(1.0);
        mats.push(a);
    }
    MpsTensor::new(mats)
}

fn sun_tensor(n: usize) -> Result<MpsTensor> {
    let x = shift_matrix(n);
    let z = clock_matrix(n);
    let scale = cr(1.0 / ((n * n - 1) as f64).sqrt());
    let mut mats = Vec::with_capacity(n * n - 1);
    let mut xp = identity(n);
    for i in 0..n {
        let mut zp = identity(n);
        for j in 0..n {
            if i != 0 || j != 0 {
                mats.push(xp.dot(&zp).mapv(|w| w * scale));
            }
            zp = zp.dot(&z);
        }
        xp = xp.dot(&x);
    }
    MpsTensor::new(mats)
}

/// The `2l+1` mutually anticommuting Clifford generators on `2^l` dimensions,
/// built recursively: `(Gamma_a (x) X, 1 (x) Y, 1 (x) Z)`.
fn gamma_matrices(l: usize) -> Vec<CMat> {
    if l == 1 {
        return vec![pauli(1), pauli(2), pauli(3)];
    }
    let prev = gamma_matrices(l - 1);
    let dim = 1usize << (l - 1);
    let mut out: Vec<CMat> = prev.iter().map(|g| kron(g, &pauli(1))).collect();
    out.push(kron(&identity(dim), &pauli(2)));
    out.push(kron(&identity(dim), &pauli(3)));
    out
}

fn so_tensor(l: usize) -> Result<MpsTensor> {
    let scale = cr(1.0 / ((2 * l + 1) as f64).sqrt());
    let mats = gamma_matrices(l).into_iter().map(|g| g.mapv(|w| w * scale)).collect();
    MpsTensor::new(mats)
}

fn mg_blocked() -> Result<BlockStructure> {
    let upper: Vec<CMat> = (0..4)
        .map(|m| ndarray::array![[cr(if m == 0 { 1.0 } else { 0.0 })]])
        .collect();
    let lower: Vec<CMat> = (0..4).map(|m| pauli(m).mapv(|z| z * cr(-0.5))).collect();
    let bs = BlockStructure::new(vec![
        Block { a: MpsTensor::new(upper)?, mu: cr(1.0) },
        Block { a: MpsTensor::new(lower)?, mu: cr(1.0) },
    ])?;
    crate::tensor::inflate_blocks(&bs)
}

fn mg_chain_tensor() -> Result<MpsTensor> {
    let s = 1.0 / 2.0_f64.sqrt();
    let a0 = ndarray::array![
        [cr(0.0), cr(1.0), cr(0.0)],
        [cr(0.0), cr(0.0), cr(0.0)],
        [cr(s), cr(0.0), cr(0.0)]
    ];
    let a1 = ndarray::array![
        [cr(0.0), cr(0.0), cr(1.0)],
        [cr(-s), cr(0.0), cr(0.0)],
        [cr(0.0), cr(0.0), cr(0.0)]
    ];
    MpsTensor::new(vec![a0, a1])
}

fn z4xz2_blocked() -> Result<BlockStructure> {
    let f = (2.0_f64 / 3.0).sqrt();
    let h = (1.0_f64 / 3.0).sqrt();
    let a0 = aklt_tensor()?;
    let b_plus = sigma_minus().mapv(|z| z * c(0.0, f));
    let b_minus = sigma_plus().mapv(|z| z * c(0.0, -f));
    let b_zero = pauli(3).mapv(|z| z * cr(-h));
    let a1 = MpsTensor::new(vec![b_plus, b_minus, b_zero])?;
    BlockStructure::new(vec![
        Block { a: a0, mu: cr(1.0) },
        Block { a: a1, mu: cr(1.0) },
    ])
}

/// Virtual symmetry matrix `V_(a,b)` of the symmetry-broken `Z4 x Z2` entry,
/// including the block-permutation factor for odd `a`.
pub fn z4xz2_virtual_symmetry(a: usize, b: usize) -> CMat {
    let xb = if b % 2 == 1 { pauli(1) } else { identity(2) };
    let zp = |k: usize| if k % 2 == 1 { pauli(3) } else { identity(2) };
    let upper = xb.dot(&zp(a / 2));
    let lower = xb.dot(&zp((a + 1) / 2));
    let mut block_diag = linalg::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            block_diag[[i, j]] = upper[[i, j]];
            block_diag[[2 + i, 2 + j]] = lower[[i, j]];
        }
    }
    let perm = if a % 2 == 1 { kron(&pauli(1), &identity(2)) } else { identity(4) };
    block_diag.dot(&perm)
}

/// Builds a gallery state by name.
///
/// Parameters are `(key, value)` pairs; omitted keys take entry defaults.
pub fn gallery_tensor(name: &str, params: &[(&str, f64)]) -> Result<(GalleryTensor, GalleryEntry)> {
    match name {
        "z2_family" => {
            let g = param(params, "g", -0.5, &["g"])?;
            let t = z2_tensor(g)?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![("g".into(), g)],
                basis: BasisSpec::QuditPauli(2),
                q: 1,
                xi: Some(z2_xi(g)),
                route: Route::Protocol1,
                normal: g != 0.0,
                description: "Z2-symmetric family with tunable correlation length".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "cluster" => {
            let _ = param(params, "", 0.0, &[])?;
            let t = z2_tensor(-1.0)?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(2),
                q: 2,
                xi: Some(CorrelationLength::Finite(0.0)),
                route: Route::Protocol1,
                normal: true,
                description: "cluster state; zero correlation length, arbitrary defects pushable at q=2"
                    .into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "ghz" => {
            let d = usize_param(param(params, "d", 2.0, &["d"])?, "d", 2)?;
            let t = ghz_tensor(d)?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![("d".into(), d as f64)],
                basis: BasisSpec::QuditPauli(d),
                q: 1,
                xi: Some(CorrelationLength::Infinite),
                route: Route::Protocol1,
                normal: false,
                description: "qudit GHZ state; diagonal defects removed locally".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "aklt" => {
            let _ = param(params, "", 0.0, &[])?;
            let t = aklt_tensor()?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(2),
                q: 1,
                xi: Some(CorrelationLength::Finite(1.0 / 3.0_f64.ln())),
                route: Route::Protocol1,
                normal: true,
                description: "spin-1 AKLT state; Bell-basis fusion with Pauli defects".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "su3" => {
            let _ = param(params, "", 0.0, &[])?;
            let t = su3_tensor()?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(3),
                q: 2,
                xi: Some(CorrelationLength::Finite(1.0 / 2.0_f64.ln())),
                route: Route::Protocol1,
                normal: true,
                description: "spin-1 state with SU(3) edge symmetry; qutrit Pauli defects at q=2"
                    .into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "a4_family" => {
            let theta = param(params, "theta", PI / 2.0, &["theta", "phi"])?;
            let phi = param(params, "phi", 0.0, &["theta", "phi"])?;
            let t = a4_tensor(theta, phi)?;
            let xi_arg = 0.5 * (1.0 + 3.0 * theta.cos().powi(2)).sqrt();
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![("theta".into(), theta), ("phi".into(), phi)],
                basis: BasisSpec::A4Triplet,
                q: 1,
                xi: Some(CorrelationLength::Finite(-1.0 / xi_arg.ln())),
                route: Route::Protocol1,
                normal: true,
                description: "A4-symmetric d=3, D=3 family; 12 defects need an ancilla-aided POVM"
                    .into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "sun_aklt" => {
            let n = usize_param(param(params, "n", 3.0, &["n"])?, "n", 2)?;
            let t = sun_tensor(n)?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![("n".into(), n as f64)],
                basis: BasisSpec::QuditPauli(n),
                q: 1,
                xi: None,
                route: Route::Protocol1,
                normal: true,
                description: "SU(n)-symmetric AKLT analogue with qudit Pauli physical legs".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "so_aklt" => {
            let l = usize_param(param(params, "l", 2.0, &["l"])?, "l", 1)?;
            let t = so_tensor(l)?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![("l".into(), l as f64)],
                basis: BasisSpec::WeightedPauli(l),
                q: 1,
                xi: None,
                route: Route::Protocol1,
                normal: true,
                description: "SO(2l+1)-symmetric AKLT analogue on Clifford generators".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "majumdar_ghosh" => {
            let _ = param(params, "", 0.0, &[])?;
            let bs = mg_blocked()?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(2),
                q: 1,
                xi: Some(CorrelationLength::Finite(0.0)),
                route: Route::Protocol2,
                normal: false,
                description: "Majumdar-Ghosh state as two inflated zero-correlation blocks over paired sites"
                    .into(),
            };
            Ok((GalleryTensor::Blocked(bs), entry))
        }
        "majumdar_ghosh_chain" => {
            let _ = param(params, "", 0.0, &[])?;
            let t = mg_chain_tensor()?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(2),
                q: 2,
                xi: Some(CorrelationLength::Finite(0.0)),
                route: Route::Protocol2,
                normal: false,
                description: "Majumdar-Ghosh single-site d=2, D=3 tensor before pair blocking".into(),
            };
            Ok((GalleryTensor::Normal(t), entry))
        }
        "z4xz2" => {
            let _ = param(params, "", 0.0, &[])?;
            let bs = z4xz2_blocked()?;
            let entry = GalleryEntry {
                name: name.into(),
                params: vec![],
                basis: BasisSpec::QuditPauli(2),
                q: 1,
                xi: Some(CorrelationLength::Finite(1.0 / 3.0_f64.ln())),
                route: Route::Protocol2,
                normal: false,
                description: "Z4 x Z2 symmetry-broken two-block state; both blocks AKLT-like".into(),
            };
            Ok((GalleryTensor::Blocked(bs), entry))
        }
        other => Err(Error::InvalidInput(format!("unknown gallery entry '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dagger, max_abs, phase_fit};
    use crate::pushing;
    use crate::tensor::{
        block_tensor, dense_state, fidelity, transfer_spectrum, virtual_to_physical_map,
        BoundarySpec,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn all_entries_build_and_are_canonical() {
        for entry in gallery_list() {
            let (t, meta) = gallery_tensor(&entry.name, &[]).unwrap();
            match t {
                GalleryTensor::Normal(a) => {
                    assert!(
                        a.canonical_residual() < 1e-10,
                        "{} residual {}",
                        meta.name,
                        a.canonical_residual()
                    );
                }
                GalleryTensor::Blocked(bs) => {
                    assert!(bs.is_inflated(), "{} should be inflated", meta.name);
                    for b in &bs.blocks {
                        assert!(b.a.canonical_residual() < 1e-10, "{} block", meta.name);
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_name_and_bad_params() {
        assert!(gallery_tensor("nope", &[]).is_err());
        assert!(gallery_tensor("z2_family", &[("h", 1.0)]).is_err());
        assert!(gallery_tensor("z2_family", &[("g", 1.5)]).is_err());
        assert!(gallery_tensor("ghz", &[("d", 2.5)]).is_err());
        assert!(gallery_tensor("ghz", &[("d", 1.0)]).is_err());
    }

    #[test]
    fn z2_at_zero_is_ghz_point() {
        let (t, meta) = gallery_tensor("z2_family", &[("g", 0.0)]).unwrap();
        assert!(!meta.normal);
        let a = t.normal().unwrap();
        let ghz = gallery_tensor("ghz", &[("d", 2.0)]).unwrap().0.normal().unwrap();
        for m in 0..2 {
            assert!(max_abs(&(&a.mats[m] - &ghz.mats[m])) < 1e-15);
        }
        assert_eq!(meta.xi, Some(CorrelationLength::Infinite));
    }

    #[test]
    fn z2_xi_matches_transfer_spectrum() {
        for g in [-0.3, -0.5, -0.8] {
            let (t, meta) = gallery_tensor("z2_family", &[("g", g)]).unwrap();
            let spec = transfer_spectrum(&t.normal().unwrap()).unwrap();
            let xi_spec = -1.0 / (spec[1].norm() / spec[0].norm()).ln();
            match meta.xi.unwrap() {
                CorrelationLength::Finite(xi) => assert_abs_diff_eq!(xi, xi_spec, epsilon = 1e-9),
                _ => panic!("finite xi expected"),
            }
        }
    }

    #[test]
    fn a4_default_equals_su3() {
        let a4 = gallery_tensor("a4_family", &[]).unwrap().0.normal().unwrap();
        let su3 = gallery_tensor("su3", &[]).unwrap().0.normal().unwrap();
        for m in 0..3 {
            assert!(max_abs(&(&a4.mats[m] - &su3.mats[m])) < 1e-14);
        }
        let s1 = dense_state(&a4, &BoundarySpec::Matrix(identity(3)), 4, 1 << 20).unwrap();
        let s2 = dense_state(&su3, &BoundarySpec::Matrix(identity(3)), 4, 1 << 20).unwrap();
        assert!(fidelity(&s1, &s2).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn a4_xi_matches_transfer_spectrum() {
        let theta = 1.1;
        let (t, meta) = gallery_tensor("a4_family", &[("theta", theta), ("phi", 0.7)]).unwrap();
        let spec = transfer_spectrum(&t.normal().unwrap()).unwrap();
        let xi_spec = -1.0 / (spec[1].norm() / spec[0].norm()).ln();
        match meta.xi.unwrap() {
            CorrelationLength::Finite(xi) => assert_abs_diff_eq!(xi, xi_spec, epsilon = 1e-9),
            _ => panic!("finite xi expected"),
        }
    }

    #[test]
    fn sun_and_so_dimensions() {
        let (t, _) = gallery_tensor("sun_aklt", &[]).unwrap();
        let a = t.normal().unwrap();
        assert_eq!(a.d, 8);
        assert_eq!(a.dim, 3);
        let (t, _) = gallery_tensor("so_aklt", &[]).unwrap();
        let a = t.normal().unwrap();
        assert_eq!(a.d, 5);
        assert_eq!(a.dim, 4);
    }

    #[test]
    fn gamma_matrices_anticommute() {
        for l in 1..=3 {
            let gs = gamma_matrices(l);
            assert_eq!(gs.len(), 2 * l + 1);
            for (i, gi) in gs.iter().enumerate() {
                for (j, gj) in gs.iter().enumerate() {
                    let anti = &gi.dot(gj) + &gj.dot(gi);
                    let expect = if i == j { 2.0 } else { 0.0 };
                    assert!(max_abs(&(&anti - &identity(1 << l).mapv(|z| z * cr(expect)))) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn so_aklt_l1_is_cartesian_aklt() {
        let a = gallery_tensor("so_aklt", &[("l", 1.0)]).unwrap().0.normal().unwrap();
        let spec = transfer_spectrum(&a).unwrap();
        assert_abs_diff_eq!(spec[0].re, 1.0, epsilon = 1e-10);
        for k in 1..4 {
            assert_abs_diff_eq!(spec[k].re, -1.0 / 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn documented_tables_complete() {
        for (name, params) in [
            ("z2_family", vec![("g", -0.5)]),
            ("cluster", vec![]),
            ("ghz", vec![("d", 3.0)]),
            ("aklt", vec![]),
            ("su3", vec![]),
            ("sun_aklt", vec![]),
            ("so_aklt", vec![]),
        ] {
            let (t, meta) = gallery_tensor(name, &params).unwrap();
            let a = t.normal().unwrap();
            let blocked = block_tensor(&a, meta.q).unwrap();
            let basis = crate::groups::named_defect_basis(&meta.basis).unwrap();
            let table = pushing::build_pushing_table(&blocked, &basis).unwrap();
            assert!(table.complete, "{name} table incomplete at q={}", meta.q);
        }
    }

    #[test]
    fn a4_table_complete() {
        let (t, meta) = gallery_tensor("a4_family", &[("theta", 0.9), ("phi", 0.3)]).unwrap();
        let a = t.normal().unwrap();
        let blocked = block_tensor(&a, meta.q).unwrap();
        let basis = crate::groups::named_defect_basis(&meta.basis).unwrap();
        let table = pushing::build_pushing_table(&blocked, &basis).unwrap();
        assert!(table.complete);
    }

    #[test]
    fn mg_blocked_structure() {
        let bs = gallery_tensor("majumdar_ghosh", &[]).unwrap().0.blocked().unwrap();
        assert_eq!(bs.k, 2);
        assert_eq!(bs.dbar, 2);
        assert_eq!(bs.blocks[0].a.d, 4);
        for m in 1..4 {
            assert!(max_abs(&bs.blocks[0].a.mats[m]) < 1e-15);
        }
        assert!(max_abs(&(&bs.blocks[0].a.mats[0] - &identity(2))) < 1e-15);
    }

    #[test]
    fn z4xz2_virtual_rep_certificate() {
        let bs = gallery_tensor("z4xz2", &[]).unwrap().0.blocked().unwrap();
        let full = bs.full_tensor().unwrap();
        let map = virtual_to_physical_map(&full);
        let right = pushing::right_inverse(&map).unwrap();
        for a in 0..4 {
            for b in 0..2 {
                let v = z4xz2_virtual_symmetry(a, b);
                assert!(crate::linalg::unitarity_residual(&v) < 1e-12);
                let mut mbar = linalg::zeros(3, 16);
                for m in 0..3 {
                    let conj = v.dot(&full.mats[m]).dot(&dagger(&v));
                    let flat = crate::linalg::vec_r(&conj);
                    for k in 0..16 {
                        mbar[[m, k]] = flat[k];
                    }
                }
                let u = mbar.dot(&right);
                assert!(
                    crate::linalg::unitarity_residual(&u) < 1e-9,
                    "no unitary physical action for ({a},{b})"
                );
                let residual = max_abs(&(&u.dot(&map.mat) - &mbar));
                assert!(residual < 1e-9, "certificate residual {residual} at ({a},{b})");
            }
        }
    }

    #[test]
    fn z4xz2_parity_of_plus_minus_pairs() {
        let bs = gallery_tensor("z4xz2", &[]).unwrap().0.blocked().unwrap();
        let full = bs.full_tensor().unwrap();
        let plus = dense_state(&full, &BoundarySpec::Matrix(identity(4)), 4, 1 << 20).unwrap();
        let mut minus_boundary = identity(4);
        minus_boundary[[2, 2]] = cr(-1.0);
        minus_boundary[[3, 3]] = cr(-1.0);
        let minus = dense_state(&full, &BoundarySpec::Matrix(minus_boundary), 4, 1 << 20).unwrap();
        for (state, parity) in [(plus, 0usize), (minus, 1usize)] {
            for idx in 0..state.amps.len() {
                if state.amps[idx].norm() < 1e-12 {
                    continue;
                }
                let mut rem = idx;
                let mut word = [0usize; 4];
                for s in (0..4).rev() {
                    word[s] = rem % 3;
                    rem /= 3;
                }
                let pluses = word.iter().filter(|&&m| m == 0).count();
                assert_eq!(pluses % 2, parity, "config {word:?} violates pair parity");
            }
        }
    }

    #[test]
    fn z4xz2_blocks_related_by_physical_unitary() {
        let bs = gallery_tensor("z4xz2", &[]).unwrap().0.blocked().unwrap();
        let s = ndarray::array![
            [cr(0.0), c(0.0, -1.0), cr(0.0)],
            [c(0.0, -1.0), cr(0.0), cr(0.0)],
            [cr(0.0), cr(0.0), cr(1.0)]
        ];
        for m in 0..3 {
            let mut mixed = linalg::zeros(2, 2);
            for n in 0..3 {
                mixed = mixed + bs.blocks[0].a.mats[n].mapv(|z| z * s[[m, n]]);
            }
            assert!(max_abs(&(&mixed - &bs.blocks[1].a.mats[m])) < 1e-12);
        }
    }

    #[test]
    fn ghz_matches_explicit_amplitudes() {
        let t = gallery_tensor("ghz", &[("d", 3.0)]).unwrap().0.normal().unwrap();
        let s = dense_state(&t, &BoundarySpec::Matrix(identity(3)), 3, 1 << 20).unwrap();
        let amp = 1.0 / 3.0_f64.sqrt();
        for idx in 0..27 {
            let expect = if idx == 0 || idx == 13 || idx == 26 { amp } else { 0.0 };
            assert_abs_diff_eq!(s.amps[idx].norm(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn mg_chain_tensor_shape() {
        let (t, meta) = gallery_tensor("majumdar_ghosh_chain", &[]).unwrap();
        let a = t.normal().unwrap();
        assert_eq!((a.d, a.dim), (2, 3));
        assert!(!meta.normal);
        assert!(a.canonical_residual() < 1e-12);
    }

    #[test]
    fn cluster_equals_z2_at_minus_one() {
        let c1 = gallery_tensor("cluster", &[]).unwrap().0.normal().unwrap();
        let c2 = gallery_tensor("z2_family", &[("g", -1.0)]).unwrap().0.normal().unwrap();
        for m in 0..2 {
            assert!(max_abs(&(&c1.mats[m] - &c2.mats[m])) < 1e-15);
        }
    }

    #[test]
    fn su3_xi_value() {
        let (t, meta) = gallery_tensor("su3", &[]).unwrap();
        let spec = transfer_spectrum(&t.normal().unwrap()).unwrap();
        let xi_spec = -1.0 / (spec[1].norm() / spec[0].norm()).ln();
        match meta.xi.unwrap() {
            CorrelationLength::Finite(xi) => assert_abs_diff_eq!(xi, xi_spec, epsilon = 1e-9),
            _ => panic!("finite xi expected"),
        }
    }

    #[test]
    fn sun_aklt_partner_is_inverse() {
        let (t, meta) = gallery_tensor("sun_aklt", &[]).unwrap();
        let a = t.normal().unwrap();
        let blocked = block_tensor(&a, meta.q).unwrap();
        let basis = crate::groups::named_defect_basis(&meta.basis).unwrap();
        let table = pushing::build_pushing_table(&blocked, &basis).unwrap();
        assert!(table.complete);
        for g in 0..basis.eta() {
            if g == basis.group.id {
                continue;
            }
            assert_eq!(table.entry(g).unwrap().partner, basis.group.inv[g]);
        }
    }

    #[test]
    fn gallery_list_covers_names() {
        let list = gallery_list();
        assert_eq!(list.len(), gallery_names().len());
        let _ = phase_fit(&identity(2), &identity(2));
    }
}
