//! Deterministic serialization of tensors, representations, pushing tables,
//! state snapshots, and protocol reports.
//!
//! All file formats are structured text (JSON) with fixed field ordering.
//! Complex numbers are always written as `[re, im]` pairs, and every float
//! is rendered with 17 significant digits so that values round-trip
//! bit-exactly through the text form. Protocol reports additionally support
//! a flat CSV rendering with one row per branch.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::groups::{FiniteGroup, ProjectiveRep};
use crate::linalg::CMat;
use crate::protocols::{BranchReport, ProtocolReport};
use crate::pushing::PushingTable;
use crate::sim::{PureState, QuditRegister, WireLabel};
use crate::tensor::MpsTensor;
use crate::{Error, Result};

/// A complex matrix as nested `[re, im]` pairs, row major.
pub type JsonMat = Vec<Vec<[f64; 2]>>;

/// Converts a matrix into its text form.
pub fn mat_to_json(m: &CMat) -> JsonMat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[[i, j]].re, m[[i, j]].im]).collect())
        .collect()
}

/// Rebuilds a matrix from its text form.
pub fn json_to_mat(rows: &JsonMat) -> Result<CMat> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if nr == 0 || nc == 0 {
        return Err(Error::InvalidInput("empty matrix in file".into()));
    }
    let mut m = crate::linalg::zeros(nr, nc);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != nc {
            return Err(Error::ShapeMismatch("ragged matrix rows in file".into()));
        }
        for (j, z) in row.iter().enumerate() {
            m[[i, j]] = Complex64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value to JSON with two-space indentation and floats at 17
/// significant digits.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value.serialize(&mut ser)?;
    let compact: serde_json::Value = serde_json::from_slice(&buf)?;
    let pretty = reindent(&String::from_utf8_lossy(&buf), &compact)?;
    Ok(pretty)
}

fn reindent(raw: &str, _parsed: &serde_json::Value) -> Result<String> {
    let tokens: Vec<char> = raw.chars().collect();
    let mut out = String::with_capacity(raw.len() * 2);
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escape = false;
    let mut i = 0usize;
    while i < tokens.len() {
        let ch = tokens[i];
        if in_str {
            out.push(ch);
            if escape {
                escape = false;
            } else if ch == '\\' {
                escape = true;
            } else if ch == '"' {
                in_str = false;
            }
            i += 1;
            continue;
        }
        match ch {
            '"' => {
                in_str = true;
                out.push(ch);
            }
            '{' | '[' => {
                let close = if ch == '{' { '}' } else { ']' };
                if i + 1 < tokens.len() && tokens[i + 1] == close {
                    out.push(ch);
                    out.push(close);
                    i += 2;
                    continue;
                }
                depth += 1;
                out.push(ch);
                out.push('\n');
                out.push_str(&"  ".repeat(depth));
            }
            '}' | ']' => {
                depth = depth.saturating_sub(1);
                out.push('\n');
                out.push_str(&"  ".repeat(depth));
                out.push(ch);
            }
            ',' => {
                out.push(ch);
                out.push('\n');
                out.push_str(&"  ".repeat(depth));
            }
            ':' => {
                out.push(ch);
                out.push(' ');
            }
            _ => out.push(ch),
        }
        i += 1;
    }
    out.push('\n');
    Ok(out)
}

/// Writes a value as JSON to a file.
pub fn write_json<T: Serialize>(value: &T, path: &std::path::Path) -> Result<()> {
    let s = json_string(value)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(s.as_bytes())?;
    Ok(())
}

/// Stable hexadecimal hash of a configuration description string.
pub fn config_hash(desc: &str) -> String {
    let mut h = DefaultHasher::new();
    desc.hash(&mut h);
    format!("{:016x}", h.finish())
}

/// Provenance metadata attached to constructed tensors.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    /// Group description.
    pub group: String,
    /// Representation identifier.
    pub rep_id: String,
    /// Selected `(irrep, copy)` pairs.
    pub selection: Vec<(usize, usize)>,
    /// Intertwiner parameter description.
    pub params: String,
    /// Sampling seed, when randomness was used.
    pub seed: Option<u64>,
}

/// The tensor file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorFile {
    /// Name of the tensor or family.
    pub name: String,
    /// Physical dimension.
    pub d: usize,
    /// Bond dimension.
    #[serde(rename = "D")]
    pub dim: usize,
    /// The matrices `A^m` as `[re, im]` grids.
    pub mats: Vec<JsonMat>,
    /// Named real parameters.
    pub params: Vec<(String, f64)>,
    /// Construction provenance, when the tensor was manufactured.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<Provenance>,
}

impl TensorFile {
    /// Captures a tensor with its metadata.
    pub fn from_tensor(name: &str, a: &MpsTensor, params: &[(String, f64)]) -> TensorFile {
        TensorFile {
            name: name.to_string(),
            d: a.d,
            dim: a.dim,
            mats: a.mats.iter().map(mat_to_json).collect(),
            params: params.to_vec(),
            provenance: None,
        }
    }

    /// Rebuilds the tensor.
    pub fn to_tensor(&self) -> Result<MpsTensor> {
        let mats: Result<Vec<CMat>> = self.mats.iter().map(json_to_mat).collect();
        let t = MpsTensor::new(mats?)?;
        if t.d != self.d || t.dim != self.dim {
            return Err(Error::ShapeMismatch("tensor file dims disagree with matrices".into()));
        }
        Ok(t)
    }
}

/// The group block of the representation file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    /// Group order.
    pub order: usize,
    /// Cayley table `table[g][h] = g*h`.
    pub table: Vec<Vec<usize>>,
    /// Identity element index.
    pub id: usize,
    /// Inverse of each element.
    pub inv: Vec<usize>,
    /// Element labels.
    pub labels: Vec<String>,
}

/// The representation file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepFile {
    /// The underlying group.
    pub group: GroupFile,
    /// Representation dimension.
    pub dim: usize,
    /// One matrix per group element.
    pub mats: Vec<JsonMat>,
    /// Cocycle phases as `[re, im]` pairs.
    pub cocycle: Vec<Vec<[f64; 2]>>,
}

impl RepFile {
    /// Captures a projective representation.
    pub fn from_rep(rep: &ProjectiveRep) -> RepFile {
        RepFile {
            group: GroupFile {
                order: rep.group.order,
                table: rep.group.table.clone(),
                id: rep.group.id,
                inv: rep.group.inv.clone(),
                labels: rep.group.labels.clone(),
            },
            dim: rep.dim,
            mats: rep.mats.iter().map(mat_to_json).collect(),
            cocycle: rep
                .cocycle
                .iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// Rebuilds the representation, revalidating the group.
    pub fn to_rep(&self) -> Result<ProjectiveRep> {
        let group = FiniteGroup {
            order: self.group.order,
            table: self.group.table.clone(),
            id: self.group.id,
            inv: self.group.inv.clone(),
            labels: self.group.labels.clone(),
        };
        group.validate()?;
        let mats: Result<Vec<CMat>> = self.mats.iter().map(json_to_mat).collect();
        let cocycle = self
            .cocycle
            .iter()
            .map(|row| row.iter().map(|z| Complex64::new(z[0], z[1])).collect())
            .collect();
        Ok(ProjectiveRep { group, dim: self.dim, mats: mats?, cocycle })
    }
}

/// One pushing-table entry in the table file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableEntryFile {
    /// Defect index this entry corrects.
    pub defect: usize,
    /// Partner defect pushed onto the left bond.
    pub partner: usize,
    /// Pushing phase as `[re, im]`.
    pub phase: [f64; 2],
    /// Physical correction operator.
    pub o_phys: JsonMat,
    /// Numerical residual of the pushing relation.
    pub residual: f64,
}

/// The pushing-table file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    /// Defect basis size.
    pub eta: usize,
    /// Blocking parameter.
    pub q: usize,
    /// Whether every defect has a pushing relation.
    pub complete: bool,
    /// The entries present, ordered by defect index.
    pub entries: Vec<TableEntryFile>,
}

impl TableFile {
    /// Captures a pushing table.
    pub fn from_table(table: &PushingTable) -> TableFile {
        let entries = table
            .entries
            .iter()
            .enumerate()
            .filter_map(|(g, e)| {
                e.as_ref().map(|entry| TableEntryFile {
                    defect: g,
                    partner: entry.partner,
                    phase: [entry.phase.re, entry.phase.im],
                    o_phys: mat_to_json(&entry.o_phys),
                    residual: entry.residual,
                })
            })
            .collect();
        TableFile { eta: table.basis.eta(), q: table.q, complete: table.complete, entries }
    }
}

/// The state snapshot file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    /// Wire dimensions, most significant first.
    pub dims: Vec<usize>,
    /// Amplitudes as `[re, im]`, in mixed-radix order.
    pub amps: Vec<[f64; 2]>,
}

impl StateFile {
    /// Captures a pure state.
    pub fn from_state(st: &PureState) -> StateFile {
        StateFile {
            dims: st.reg.dims.clone(),
            amps: st.amps.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    /// Rebuilds the state with anonymous wire labels.
    pub fn to_state(&self) -> Result<PureState> {
        let labels = vec![WireLabel::Ancilla; self.dims.len()];
        let reg = QuditRegister::new(self.dims.clone(), labels)?;
        let amps: Vec<Complex64> =
            self.amps.iter().map(|z| Complex64::new(z[0], z[1])).collect();
        PureState::from_amplitudes(reg, amps)
    }
}

/// One branch record of a protocol report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchFile {
    /// Fusion outcome per junction.
    pub fusion_outcomes: Vec<usize>,
    /// Block-register outcomes of the disentangling round.
    pub block_outcomes: Vec<usize>,
    /// Boundary measurement outcome.
    pub boundary_outcome: Option<usize>,
    /// Probability of the boundary projection.
    pub boundary_probability: Option<f64>,
    /// Total branch probability.
    pub probability: f64,
    /// Fidelity against the dense target.
    pub fidelity: f64,
    /// Applied per-segment corrections.
    pub corrections: Vec<JsonMat>,
    /// Applied edge correction.
    pub edge_correction: JsonMat,
}

/// Summary block of a protocol report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryFile {
    /// Worst branch fidelity.
    pub min_fidelity: f64,
    /// Number of evaluated branches.
    pub branch_count: usize,
    /// Summed branch probability.
    pub total_probability: f64,
}

/// The protocol report file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolReportFile {
    /// Hash of the run configuration.
    pub config_hash: String,
    /// Number of segments.
    pub n: usize,
    /// Sites per segment.
    pub q: usize,
    /// Defect basis size.
    pub eta: usize,
    /// Sampling seed, when sampling was used.
    pub seed: Option<u64>,
    /// Wall-clock duration in milliseconds.
    pub wall_time_ms: u64,
    /// Run summary.
    pub summary: SummaryFile,
    /// One record per branch.
    pub branches: Vec<BranchFile>,
}

fn branch_to_file(b: &BranchReport) -> BranchFile {
    BranchFile {
        fusion_outcomes: b.fusion_outcomes.clone(),
        block_outcomes: b.block_outcomes.clone(),
        boundary_outcome: b.boundary_outcome,
        boundary_probability: b.boundary_probability,
        probability: b.probability,
        fidelity: b.fidelity,
        corrections: b.site_corrections.iter().map(mat_to_json).collect(),
        edge_correction: mat_to_json(&b.edge_correction),
    }
}

/// Converts an in-memory protocol report into its file form.
pub fn report_to_file(report: &ProtocolReport, config_desc: &str) -> ProtocolReportFile {
    ProtocolReportFile {
        config_hash: config_hash(config_desc),
        n: report.n,
        q: report.q,
        eta: report.eta,
        seed: report.seed,
        wall_time_ms: report.wall_time_ms as u64,
        summary: SummaryFile {
            min_fidelity: report.min_fidelity,
            branch_count: report.branch_count,
            total_probability: report.total_probability,
        },
        branches: report.branches.iter().map(branch_to_file).collect(),
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Flat CSV rendering of a protocol report: a header row followed by one row
/// per branch.
pub fn report_csv(report: &ProtocolReportFile) -> String {
    let mut out = String::new();
    out.push_str("config_hash,n,q,eta,branch,fusion_outcomes,block_outcomes,boundary_outcome,boundary_probability,probability,fidelity\n");
    for (i, b) in report.branches.iter().enumerate() {
        let fo = b.fusion_outcomes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let bo = b.block_outcomes.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let bout = b.boundary_outcome.map(|x| x.to_string()).unwrap_or_default();
        let bprob = b.boundary_probability.map(fmt_f).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            report.config_hash,
            report.n,
            report.q,
            report.eta,
            i,
            fo,
            bo,
            bout,
            bprob,
            fmt_f(b.probability),
            fmt_f(b.fidelity),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::gallery_tensor;
    use crate::groups::{named_defect_basis, BasisSpec};
    use crate::protocols::{protocol1, ProtocolConfig};
    use crate::pushing::build_pushing_table;
    use crate::tensor::block_tensor;

    #[test]
    fn tensor_file_round_trips_bit_exactly() {
        let (gal, _) = gallery_tensor("aklt", &[]).unwrap();
        let a = gal.normal().unwrap();
        let file = TensorFile::from_tensor("aklt", &a, &[]);
        let text = json_string(&file).unwrap();
        let parsed: TensorFile = serde_json::from_str(&text).unwrap();
        let b = parsed.to_tensor().unwrap();
        for (x, y) in a.mats.iter().zip(b.mats.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn rep_file_round_trips_bit_exactly() {
        let rep = named_defect_basis(&BasisSpec::QuditPauli(3)).unwrap();
        let file = RepFile::from_rep(&rep);
        let text = json_string(&file).unwrap();
        let parsed: RepFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_rep().unwrap();
        assert_eq!(back.group.table, rep.group.table);
        for (x, y) in rep.mats.iter().zip(back.mats.iter()) {
            assert_eq!(x, y);
        }
        for (row, brow) in rep.cocycle.iter().zip(back.cocycle.iter()) {
            assert_eq!(row, brow);
        }
    }

    #[test]
    fn state_file_round_trips() {
        let (gal, _) = gallery_tensor("z2_family", &[("g", -0.5)]).unwrap();
        let a = gal.normal().unwrap();
        let st = crate::tensor::dense_state(
            &a,
            &crate::tensor::BoundarySpec::Entangled,
            3,
            crate::DEFAULT_BUDGET,
        )
        .unwrap();
        let file = StateFile::from_state(&st);
        let text = json_string(&file).unwrap();
        let parsed: StateFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_state().unwrap();
        assert_eq!(back.amps, st.amps);
    }

    #[test]
    fn protocol_report_json_round_trips() {
        let (gal, _) = gallery_tensor("ghz", &[("d", 2.0)]).unwrap();
        let a = gal.normal().unwrap();
        let basis = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 2);
        let report = protocol1(&a, &basis, &cfg).unwrap();
        let file = report_to_file(&report, "ghz-test");
        let text = json_string(&file).unwrap();
        let parsed: ProtocolReportFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.summary.branch_count, file.summary.branch_count);
        assert_eq!(parsed.summary.min_fidelity, file.summary.min_fidelity);
        assert_eq!(parsed.branches.len(), file.branches.len());
        for (x, y) in parsed.branches.iter().zip(file.branches.iter()) {
            assert_eq!(x.probability, y.probability);
            assert_eq!(x.fidelity, y.fidelity);
        }
    }

    #[test]
    fn csv_has_one_row_per_branch() {
        let (gal, _) = gallery_tensor("ghz", &[("d", 2.0)]).unwrap();
        let a = gal.normal().unwrap();
        let basis = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let cfg = ProtocolConfig::new(1, 3);
        let report = protocol1(&a, &basis, &cfg).unwrap();
        let file = report_to_file(&report, "ghz-test");
        let csv = report_csv(&file);
        assert_eq!(csv.lines().count(), 1 + file.branches.len());
    }

    #[test]
    fn table_file_captures_entries() {
        let (gal, _) = gallery_tensor("aklt", &[]).unwrap();
        let a = gal.normal().unwrap();
        let blocked = block_tensor(&a, 1).unwrap();
        let basis = named_defect_basis(&BasisSpec::QuditPauli(2)).unwrap();
        let table = build_pushing_table(&blocked, &basis).unwrap();
        let file = TableFile::from_table(&table);
        assert!(file.complete);
        assert_eq!(file.entries.len(), 4);
        let text = json_string(&file).unwrap();
        let parsed: TableFile = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.entries.len(), 4);
    }

    #[test]
    fn seventeen_digit_floats_round_trip() {
        let vals = vec![1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, -0.1234567890123456789];
        let text = json_string(&vals).unwrap();
        let parsed: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, vals);
    }

    #[test]
    fn config_hash_is_stable() {
        assert_eq!(config_hash("abc"), config_hash("abc"));
        assert_ne!(config_hash("abc"), config_hash("abd"));
    }
}
