//! Dense statevector simulation over heterogeneous qudit registers.
//!
//! Amplitudes are stored as a single complex vector indexed in mixed radix
//! with wire 0 most significant. Wires can have different dimensions, which
//! the preparation protocols use freely: physical qudits, bond qudits, block
//! qudits, and fusion ancillas all live in one register.
//!
//! All stochastic operations draw from an explicitly seeded generator, so a
//! fixed seed reproduces every measurement record and every final state bit
//! for bit.

use num_complex::Complex64;
use num_integer::Integer;
use rand::Rng;

use crate::groups::ProjectiveRep;
use crate::linalg::{self, complete_unitary, cr, require_unitary, CMat, CVec};
use crate::tensor::MpsTensor;
use crate::{Error, Result, DEFAULT_TOL};

/// Role tag for a wire, used for bookkeeping and report readability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WireLabel {
    /// Physical site qudit.
    Physical,
    /// Virtual bond qudit.
    Bond,
    /// Block-index qudit of the non-normal protocol.
    Block,
    /// Fusion ancilla.
    Ancilla,
}

/// Ordered collection of qudit wires with dimensions and role tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuditRegister {
    /// Dimension of each wire.
    pub dims: Vec<usize>,
    /// Role tag of each wire.
    pub labels: Vec<WireLabel>,
}

impl QuditRegister {
    /// Builds a register; dimensions must be positive and match the labels.
    pub fn new(dims: Vec<usize>, labels: Vec<WireLabel>) -> Result<Self> {
        if dims.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("zero-dimensional wire".into()));
        }
        Ok(QuditRegister { dims, labels })
    }

    /// Number of wires.
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    /// True when the register has no wires.
    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Total Hilbert-space dimension.
    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    /// Positional strides: `strides[w]` is the product of dims after wire `w`.
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dims.len();
        let mut s = vec![1usize; n];
        for w in (0..n.saturating_sub(1)).rev() {
            s[w] = s[w + 1] * self.dims[w + 1];
        }
        s
    }
}

/// Record of one measurement: wires, outcomes, and the Born probability.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MeasurementRecord {
    /// Measured wire indices.
    pub wires: Vec<usize>,
    /// Computational outcome per wire.
    pub outcomes: Vec<usize>,
    /// Probability of the realized outcome.
    pub probability: f64,
}

/// Dense pure state over a [`QuditRegister`].
#[derive(Debug, Clone)]
pub struct PureState {
    /// The register layout.
    pub reg: QuditRegister,
    /// Amplitudes in mixed-radix order, wire 0 most significant.
    pub amps: Vec<Complex64>,
}

impl PureState {
    /// Wraps an amplitude vector, checking the length.
    pub fn from_amplitudes(reg: QuditRegister, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != reg.size() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for register of size {}",
                amps.len(),
                reg.size()
            )));
        }
        Ok(PureState { reg, amps })
    }

    /// Computational basis state with the given digit per wire.
    pub fn basis_state(reg: QuditRegister, digits: &[usize]) -> Result<Self> {
        if digits.len() != reg.len() {
            return Err(Error::ShapeMismatch("digit count differs from wire count".into()));
        }
        let strides = reg.strides();
        let mut idx = 0usize;
        for (w, &k) in digits.iter().enumerate() {
            if k >= reg.dims[w] {
                return Err(Error::InvalidInput(format!("digit {k} out of range on wire {w}")));
            }
            idx += k * strides[w];
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); reg.size()];
        amps[idx] = cr(1.0);
        Ok(PureState { reg, amps })
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Rescales to unit norm; errors on the zero vector.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::ZeroProbability);
        }
        for z in &mut self.amps {
            *z /= cr(n);
        }
        Ok(())
    }

    /// Tensor product; `self`'s wires come first.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.reg.dims.clone();
        dims.extend_from_slice(&other.reg.dims);
        let mut labels = self.reg.labels.clone();
        labels.extend_from_slice(&other.reg.labels);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        PureState { reg: QuditRegister { dims, labels }, amps }
    }

    fn check_wires(&self, wires: &[usize]) -> Result<()> {
        for (k, &w) in wires.iter().enumerate() {
            if w >= self.reg.len() {
                return Err(Error::InvalidInput(format!("wire {w} out of range")));
            }
            if wires[..k].contains(&w) {
                return Err(Error::InvalidInput(format!("wire {w} repeated")));
            }
        }
        Ok(())
    }

    /// Offsets of every target configuration (in the order of `wires`) and
    /// every complement configuration.
    fn offset_tables(&self, wires: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let strides = self.reg.strides();
        let tdims: Vec<usize> = wires.iter().map(|&w| self.reg.dims[w]).collect();
        let m: usize = tdims.iter().product();
        let mut toff = Vec::with_capacity(m);
        for t in 0..m {
            let mut rem = t;
            let mut off = 0usize;
            for k in (0..wires.len()).rev() {
                off += (rem % tdims[k]) * strides[wires[k]];
                rem /= tdims[k];
            }
            toff.push(off);
        }
        let comp: Vec<usize> = (0..self.reg.len()).filter(|w| !wires.contains(w)).collect();
        let cdims: Vec<usize> = comp.iter().map(|&w| self.reg.dims[w]).collect();
        let csize: usize = cdims.iter().product();
        let mut coff = Vec::with_capacity(csize);
        for t in 0..csize {
            let mut rem = t;
            let mut off = 0usize;
            for k in (0..comp.len()).rev() {
                off += (rem % cdims[k]) * strides[comp[k]];
                rem /= cdims[k];
            }
            coff.push(off);
        }
        (toff, coff)
    }

    /// Applies a unitary on the listed wires (order significant: the first
    /// wire indexes the most significant digit of the operator).
    pub fn apply_unitary(&mut self, u: &CMat, wires: &[usize]) -> Result<()> {
        self.check_wires(wires)?;
        let m: usize = wires.iter().map(|&w| self.reg.dims[w]).product();
        if u.nrows() != m || u.ncols() != m {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, wires span dimension {m}",
                u.nrows(),
                u.ncols()
            )));
        }
        require_unitary(u, 1e-8)?;
        let (toff, coff) = self.offset_tables(wires);
        let mut scratch = vec![Complex64::new(0.0, 0.0); m];
        for &base in &coff {
            for (t, &off) in toff.iter().enumerate() {
                scratch[t] = self.amps[base + off];
            }
            for (t, &off) in toff.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, &x) in scratch.iter().enumerate() {
                    acc += u[[t, s]] * x;
                }
                self.amps[base + off] = acc;
            }
        }
        Ok(())
    }

    /// Projects the listed wires onto an arbitrary state `v` of their joint
    /// space, removes them from the register, renormalizes, and returns the
    /// projection probability.
    pub fn project_remove(&self, wires: &[usize], v: &CVec) -> Result<(PureState, f64)> {
        self.check_wires(wires)?;
        let m: usize = wires.iter().map(|&w| self.reg.dims[w]).product();
        if v.len() != m {
            return Err(Error::ShapeMismatch(format!(
                "projection vector has length {}, wires span dimension {m}",
                v.len()
            )));
        }
        let (toff, coff) = self.offset_tables(wires);
        let mut amps = Vec::with_capacity(coff.len());
        for &base in &coff {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &off) in toff.iter().enumerate() {
                acc += v[t].conj() * self.amps[base + off];
            }
            amps.push(acc);
        }
        let keep: Vec<usize> = (0..self.reg.len()).filter(|w| !wires.contains(w)).collect();
        let dims = keep.iter().map(|&w| self.reg.dims[w]).collect();
        let labels = keep.iter().map(|&w| self.reg.labels[w]).collect();
        let mut out = PureState { reg: QuditRegister { dims, labels }, amps };
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let prob = out.norm().powi(2) / vnorm2;
        if prob < 1e-300 {
            return Err(Error::ZeroProbability);
        }
        out.normalize()?;
        Ok((out, prob))
    }

    /// Projects the listed wires onto a computational outcome, removing them.
    pub fn project_remove_outcome(&self, wires: &[usize], outcomes: &[usize]) -> Result<(PureState, f64)> {
        let tdims: Vec<usize> = wires.iter().map(|&w| self.reg.dims[w]).collect();
        let m: usize = tdims.iter().product();
        let mut idx = 0usize;
        for (k, &o) in outcomes.iter().enumerate() {
            idx = idx * tdims[k] + o;
        }
        let mut v: CVec = CVec::zeros(m);
        v[idx] = cr(1.0);
        self.project_remove(wires, &v)
    }

    /// Postselects a computational outcome on the listed wires while keeping
    /// them in the register; returns the collapsed state and probability.
    pub fn project(&self, wires: &[usize], outcomes: &[usize]) -> Result<(PureState, f64)> {
        self.check_wires(wires)?;
        if outcomes.len() != wires.len() {
            return Err(Error::ShapeMismatch("one outcome per wire required".into()));
        }
        let strides = self.reg.strides();
        let mut out = self.clone();
        for (k, &w) in wires.iter().enumerate() {
            if outcomes[k] >= self.reg.dims[w] {
                return Err(Error::InvalidInput(format!(
                    "outcome {} out of range on wire {w}",
                    outcomes[k]
                )));
            }
            for (idx, amp) in out.amps.iter_mut().enumerate() {
                let digit = (idx / strides[w]) % self.reg.dims[w];
                if digit != outcomes[k] {
                    *amp = Complex64::new(0.0, 0.0);
                }
            }
        }
        let prob = out.norm().powi(2);
        if prob <= DEFAULT_TOL {
            return Err(Error::ZeroProbability);
        }
        out.normalize()?;
        Ok((out, prob))
    }

    /// Marginal probability distribution over the joint computational
    /// outcomes of the listed wires (in the order given).
    pub fn outcome_distribution(&self, wires: &[usize]) -> Result<Vec<f64>> {
        self.check_wires(wires)?;
        let (toff, coff) = self.offset_tables(wires);
        let mut probs = vec![0.0_f64; toff.len()];
        for &base in &coff {
            for (t, &off) in toff.iter().enumerate() {
                probs[t] += self.amps[base + off].norm_sqr();
            }
        }
        Ok(probs)
    }

    /// Born-rule measurement of the listed wires in the computational basis.
    /// Wires stay in the register, collapsed onto the outcome.
    pub fn measure<R: Rng>(&self, wires: &[usize], rng: &mut R) -> Result<(PureState, MeasurementRecord)> {
        let probs = self.outcome_distribution(wires)?;
        let total: f64 = probs.iter().sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if draw < p {
                outcome = k;
                break;
            }
            draw -= p;
        }
        let tdims: Vec<usize> = wires.iter().map(|&w| self.reg.dims[w]).collect();
        let mut digits = vec![0usize; wires.len()];
        let mut rem = outcome;
        for k in (0..wires.len()).rev() {
            digits[k] = rem % tdims[k];
            rem /= tdims[k];
        }
        let (state, prob) = self.project(wires, &digits)?;
        Ok((state, MeasurementRecord { wires: wires.to_vec(), outcomes: digits, probability: prob }))
    }

    /// Reorders wires; `perm[k]` is the old index of the wire placed at
    /// position `k`.
    pub fn permute(&self, perm: &[usize]) -> Result<PureState> {
        if perm.len() != self.reg.len() {
            return Err(Error::ShapeMismatch("permutation length differs from wire count".into()));
        }
        self.check_wires(perm)?;
        let old_strides = self.reg.strides();
        let dims: Vec<usize> = perm.iter().map(|&w| self.reg.dims[w]).collect();
        let labels: Vec<WireLabel> = perm.iter().map(|&w| self.reg.labels[w]).collect();
        let reg = QuditRegister { dims: dims.clone(), labels };
        let new_strides = reg.strides();
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for new_idx in 0..amps.len() {
            let mut old_idx = 0usize;
            for k in 0..perm.len() {
                let digit = (new_idx / new_strides[k]) % dims[k];
                old_idx += digit * old_strides[perm[k]];
            }
            amps[new_idx] = self.amps[old_idx];
        }
        Ok(PureState { reg, amps })
    }

    /// Merges `count` adjacent wires starting at `first` into a single wire
    /// carrying the product dimension and the given label. Amplitude order is
    /// unchanged.
    pub fn merge_wires(&self, first: usize, count: usize, label: WireLabel) -> Result<PureState> {
        if first + count > self.reg.len() || count == 0 {
            return Err(Error::InvalidInput("merge range out of bounds".into()));
        }
        let merged: usize = self.reg.dims[first..first + count].iter().product();
        let mut dims = Vec::new();
        let mut labels = Vec::new();
        for w in 0..first {
            dims.push(self.reg.dims[w]);
            labels.push(self.reg.labels[w]);
        }
        dims.push(merged);
        labels.push(label);
        for w in first + count..self.reg.len() {
            dims.push(self.reg.dims[w]);
            labels.push(self.reg.labels[w]);
        }
        Ok(PureState { reg: QuditRegister { dims, labels }, amps: self.amps.clone() })
    }
}

/// Inner product `<a|b>`.
pub fn inner(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.reg.dims != b.reg.dims {
        return Err(Error::ShapeMismatch("register shapes differ".into()));
    }
    Ok(a.amps.iter().zip(b.amps.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Fidelity `|<a|b>|^2`; global-phase invariant.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(inner(a, b)?.norm_sqr())
}

/// Stinespring dilation of a left-canonical tensor: the `dD x dD` unitary
/// with `U(|j>_bond (x) |0>_phys) = sum_m A^m |j> (x) |m>`, acting on wires
/// ordered (bond, physical).
pub fn stinespring_dilation(a: &MpsTensor) -> Result<CMat> {
    let res = a.canonical_residual();
    if res > DEFAULT_TOL {
        return Err(Error::NotCanonical(res));
    }
    let total = a.dim * a.d;
    let mut cols: Vec<CVec> = Vec::with_capacity(a.dim);
    for j in 0..a.dim {
        let mut col: CVec = CVec::zeros(total);
        for m in 0..a.d {
            for i in 0..a.dim {
                col[i * a.d + m] = a.mats[m][[i, j]];
            }
        }
        cols.push(col);
    }
    let packed = complete_unitary(&cols, total)?;
    let mut u = linalg::zeros(total, total);
    for j in 0..a.dim {
        for r in 0..total {
            u[[r, j * a.d]] = packed[[r, j]];
        }
    }
    let mut spare = a.dim;
    for col in 0..total {
        if col % a.d == 0 && col / a.d < a.dim {
            continue;
        }
        for r in 0..total {
            u[[r, col]] = packed[[r, spare]];
        }
        spare += 1;
    }
    require_unitary(&u, 1e-10)?;
    Ok(u)
}

/// Fusion-basis rotation for a defect basis. Returns the measurement unitary
/// and the ancilla dimension `p = lcm(eta, D^2) / D^2`.
///
/// For `eta = D^2` this is the `D^2 x D^2` map sending the basis state
/// `|B^k>` to the computational `|k>`. For overcomplete bases the rotation
/// acts on (bond, bond, ancilla) with the ancilla prepared in `|0>`, and the
/// joint computational outcome equals the basis index `k`.
pub fn fusion_basis_unitary(rep: &ProjectiveRep) -> Result<(CMat, usize)> {
    let (pass, residual) = crate::groups::verify_povm_completeness(rep);
    if !pass {
        return Err(Error::VerificationFailed(format!(
            "defect basis fails POVM completeness (residual {residual:.3e})"
        )));
    }
    let d = rep.dim;
    let dsq = d * d;
    let eta = rep.mats.len();
    let p = eta.lcm(&dsq) / dsq;
    let total = dsq * p;
    let scale = cr((d as f64 / eta as f64).sqrt());
    let mut cols: Vec<CVec> = Vec::with_capacity(dsq);
    for i in 0..d {
        for j in 0..d {
            let mut col: CVec = CVec::zeros(total);
            for (k, b) in rep.mats.iter().enumerate() {
                col[k] = scale * b[[i, j]];
            }
            cols.push(col);
        }
    }
    let packed = complete_unitary(&cols, total)?;
    if p == 1 {
        return Ok((packed, 1));
    }
    let mut u = linalg::zeros(total, total);
    for (t, col) in (0..dsq).enumerate() {
        for r in 0..total {
            u[[r, col * p]] = packed[[r, t]];
        }
    }
    let mut spare = dsq;
    for col in 0..total {
        if col % p == 0 {
            continue;
        }
        for r in 0..total {
            u[[r, col]] = packed[[r, spare]];
        }
        spare += 1;
    }
    require_unitary(&u, 1e-10)?;
    Ok((u, p))
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix with
/// the phase convention fixed by the diagonal of `R`.
pub fn haar_random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    use ndarray_linalg::QR;
    use rand_distr::StandardNormal;
    let mut g = linalg::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[[i, j]] = Complex64::new(re, im);
        }
    }
    let (q, r) = g.qr().expect("qr of finite matrix");
    let mut u = q;
    for j in 0..dim {
        let rjj = r[[j, j]];
        let phase = if rjj.norm() > 0.0 { rjj / cr(rjj.norm()) } else { cr(1.0) };
        for i in 0..dim {
            u[[i, j]] *= phase.conj();
        }
    }
    u
}

/// The maximally entangled pair `sum_j |jj> / sqrt(D)` on two bond wires.
pub fn bell_pair(dim: usize) -> PureState {
    let reg = QuditRegister {
        dims: vec![dim, dim],
        labels: vec![WireLabel::Bond, WireLabel::Bond],
    };
    let mut amps = vec![Complex64::new(0.0, 0.0); dim * dim];
    let scale = cr(1.0 / (dim as f64).sqrt());
    for j in 0..dim {
        amps[j * dim + j] = scale;
    }
    PureState { reg, amps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::groups::named_defect_basis;
    use crate::linalg::{identity, max_abs};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn qubit_reg(n: usize) -> QuditRegister {
        QuditRegister::new(vec![2; n], vec![WireLabel::Physical; n]).unwrap()
    }

    #[test]
    fn x_flips_a_qubit() {
        let mut s = PureState::basis_state(qubit_reg(2), &[0, 0]).unwrap();
        let x = ndarray::array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]];
        s.apply_unitary(&x, &[1]).unwrap();
        assert_abs_diff_eq!(s.amps[1].re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unitary_round_trip() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let u = haar_random_unitary(6, &mut rng);
        let reg = QuditRegister::new(vec![2, 3, 2], vec![WireLabel::Physical; 3]).unwrap();
        let mut amps = Vec::new();
        for k in 0..reg.size() {
            amps.push(Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()));
        }
        let mut s = PureState::from_amplitudes(reg, amps).unwrap();
        s.normalize().unwrap();
        let orig = s.clone();
        s.apply_unitary(&u, &[1, 2]).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
        s.apply_unitary(&linalg::dagger(&u), &[1, 2]).unwrap();
        assert!(fidelity(&orig, &s).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn bell_projection() {
        let s = bell_pair(2);
        let (proj, p) = s.project(&[0, 1], &[0, 0]).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(proj.amps[0].norm(), 1.0, epsilon = 1e-14);
        assert!(s.project(&[0, 1], &[0, 1]).is_err());
    }

    #[test]
    fn measure_plus_state_is_fair() {
        let reg = qubit_reg(1);
        let amp = cr(1.0 / 2.0_f64.sqrt());
        let s = PureState::from_amplitudes(reg, vec![amp, amp]).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut counts = [0usize; 2];
        for _ in 0..4000 {
            let (_, rec) = s.measure(&[0], &mut rng).unwrap();
            counts[rec.outcomes[0]] += 1;
        }
        let bias = (counts[0] as f64 - 2000.0).abs() / 4000.0;
        assert!(bias < 0.05, "bias {bias}");
    }

    #[test]
    fn measurement_is_deterministic_under_seed() {
        let s = bell_pair(3);
        let run = |seed: u64| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (_, rec) = s.measure(&[0, 1], &mut rng).unwrap();
            rec.outcomes
        };
        assert_eq!(run(99), run(99));
    }

    #[test]
    fn stinespring_columns_reproduce_tensor() {
        let a = gallery::gallery_tensor("aklt", &[]).unwrap().0.normal().unwrap();
        let u = stinespring_dilation(&a).unwrap();
        assert_eq!(u.nrows(), 6);
        for j in 0..2 {
            for m in 0..3 {
                for i in 0..2 {
                    let got = u[[i * 3 + m, j * 3]];
                    let want = a.mats[m][[i, j]];
                    assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn fusion_unitary_maps_bell_basis() {
        let rep = named_defect_basis(&crate::groups::BasisSpec::QuditPauli(2)).unwrap();
        let (v, p) = fusion_basis_unitary(&rep).unwrap();
        assert_eq!(p, 1);
        let mut s = bell_pair(2);
        s.apply_unitary(&v, &[0, 1]).unwrap();
        assert_abs_diff_eq!(s.amps[0].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fusion_outcomes_uniform_on_maximally_mixed_pair() {
        let rep = named_defect_basis(&crate::groups::BasisSpec::QuditPauli(3)).unwrap();
        let (v, p) = fusion_basis_unitary(&rep).unwrap();
        assert_eq!(p, 1);
        let joint = bell_pair(3).tensor(&bell_pair(3));
        let mut s = joint.permute(&[1, 2, 0, 3]).unwrap();
        s.apply_unitary(&v, &[0, 1]).unwrap();
        let probs = s.outcome_distribution(&[0, 1]).unwrap();
        for &pk in &probs {
            assert_abs_diff_eq!(pk, 1.0 / 9.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_unitarity_and_determinism() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let u = haar_random_unitary(5, &mut rng);
        assert!(linalg::unitarity_residual(&u) < 1e-12);
        let mut rng2 = ChaCha20Rng::seed_from_u64(5);
        let u2 = haar_random_unitary(5, &mut rng2);
        assert!(max_abs(&(&u - &u2)) < 1e-15);
    }

    #[test]
    fn scalar_haar_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let u = haar_random_unitary(1, &mut rng);
        assert_abs_diff_eq!(u[[0, 0]].norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn project_remove_with_vector() {
        let s = bell_pair(2);
        let v = CVec::from_vec(vec![cr(1.0 / 2.0_f64.sqrt()), cr(0.0), cr(0.0), cr(1.0 / 2.0_f64.sqrt())]);
        let (out, prob) = s.project_remove(&[0, 1], &v).unwrap();
        assert_abs_diff_eq!(prob, 1.0, epsilon = 1e-12);
        assert!(out.reg.is_empty());
    }

    #[test]
    fn permute_and_merge() {
        let reg = QuditRegister::new(vec![2, 3], vec![WireLabel::Physical, WireLabel::Bond]).unwrap();
        let mut amps = Vec::new();
        for k in 0..6 {
            amps.push(cr(k as f64 + 1.0));
        }
        let mut s = PureState::from_amplitudes(reg, amps).unwrap();
        s.normalize().unwrap();
        let p = s.permute(&[1, 0]).unwrap();
        assert_eq!(p.reg.dims, vec![3, 2]);
        let norm0 = s.amps[1 * 3 + 2].norm();
        assert_abs_diff_eq!(p.amps[2 * 2 + 1].norm(), norm0, epsilon = 1e-14);
        let m = s.merge_wires(0, 2, WireLabel::Physical).unwrap();
        assert_eq!(m.reg.dims, vec![6]);
        assert_abs_diff_eq!(m.amps[5].norm(), s.amps[5].norm(), epsilon = 1e-14);
    }

    #[test]
    fn non_unitary_rejected() {
        let mut s = PureState::basis_state(qubit_reg(1), &[0]).unwrap();
        let bad = ndarray::array![[cr(1.0), cr(1.0)], [cr(0.0), cr(1.0)]];
        assert!(s.apply_unitary(&bad, &[0]).is_err());
    }

    #[test]
    fn unitarity_of_dilations_for_gallery() {
        for name in ["aklt", "su3", "ghz"] {
            let params: &[(&str, f64)] = if name == "ghz" { &[("d", 3.0)] } else { &[] };
            let a = gallery::gallery_tensor(name, params).unwrap().0.normal().unwrap();
            let u = stinespring_dilation(&a).unwrap();
            assert!(linalg::unitarity_residual(&u) < 1e-12);
        }
    }
}
