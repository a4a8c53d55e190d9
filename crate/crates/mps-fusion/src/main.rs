//! Command-line surface for the MPS preparation toolkit.
//!
//! Verbs: `construct`, `analyze-pushing`, `simulate`, `verify`, `sample`,
//! `gallery`, `spectrum`. All runs are deterministic under a fixed `--seed`;
//! reports are structured text with floats at 17 significant digits, written
//! to `--out` or stdout. Exit codes: 0 on success, 2 on invariant failure,
//! 3 on usage errors. The default amplitude budget can be overridden with
//! the `MPS_FUSION_BUDGET` environment variable.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use mps_fusion::constructor::{
    construct_tensor, irrep_decomposition, sample_intertwiner, select_irreps, sigma_y_rep_z2,
    IntertwinerParams,
};
use mps_fusion::gallery::{gallery_list, gallery_tensor, GalleryTensor, Route};
use mps_fusion::groups::{named_defect_basis, BasisSpec, GroupSpec, ProjectiveRep};
use mps_fusion::protocols::{protocol1, protocol2, sample_random_mps, sample_spt_phase, ProtocolConfig, RunMode};
use mps_fusion::pushing::{build_block_pushing_table, build_pushing_table};
use mps_fusion::report::{
    json_string, report_csv, report_to_file, Provenance, TableFile, TensorFile,
};
use mps_fusion::tensor::{
    block_tensor, correlation_length, transfer_spectrum, BoundarySpec, CorrelationLength,
};
use mps_fusion::{Error, DEFAULT_BUDGET};

#[derive(Parser)]
#[command(
    name = "mps-fusion",
    version,
    about = "Constant-depth adaptive-circuit preparation of matrix product states"
)]
struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fidelity / residual tolerance for verification verbs.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Maximum number of dense amplitudes to allocate.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Report output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct GallerySelect {
    /// Gallery entry name.
    #[arg(long)]
    gallery: String,
    /// Entry parameter as key=value; repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// Shorthand for the `d` entry parameter.
    #[arg(long)]
    d: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Manufacture a symmetric tensor from a group representation.
    Construct {
        /// Source representation: pauli<D>, sigma-y, or a4-triplet.
        #[arg(long)]
        rep: String,
        /// Selected irrep copies as J:copy pairs, comma separated.
        #[arg(long)]
        picks: String,
        /// Isotypic freedom: canonical, haar, or phases.
        #[arg(long, default_value = "canonical")]
        intertwiner: String,
        /// Phase angles in degrees, one per isotypic component, for
        /// --intertwiner phases.
        #[arg(long)]
        phases: Option<String>,
    },
    /// Search pushing relations for a tensor under a defect basis.
    AnalyzePushing {
        #[command(flatten)]
        target: GallerySelect,
        /// Defect basis: pauli<D>, weighted<l>, a4, or sp<2n>.
        #[arg(long)]
        basis: Option<String>,
        /// Blocking parameter; entry default when omitted.
        #[arg(long)]
        q: Option<usize>,
    },
    /// Run a preparation protocol and report every evaluated branch.
    Simulate {
        #[command(flatten)]
        target: GallerySelect,
        /// Number of segments.
        #[arg(long)]
        n: usize,
        /// Outcome selection: all, sample, or branch.
        #[arg(long, default_value = "all")]
        mode: String,
        /// Number of sampled shots for --mode sample.
        #[arg(long, default_value_t = 1)]
        shots: u64,
        /// Explicit outcome tuple for --mode branch, comma separated.
        #[arg(long)]
        branch: Option<String>,
        /// Defect basis override.
        #[arg(long)]
        basis: Option<String>,
        /// Blocking parameter override.
        #[arg(long)]
        q: Option<usize>,
        /// Boundary closure: entangled or periodic.
        #[arg(long, default_value = "entangled")]
        boundary: String,
    },
    /// All-branch run that fails (exit 2) unless every branch reaches the
    /// target fidelity.
    Verify {
        #[command(flatten)]
        target: GallerySelect,
        /// Number of segments.
        #[arg(long)]
        n: usize,
        /// Defect basis override.
        #[arg(long)]
        basis: Option<String>,
        /// Blocking parameter override.
        #[arg(long)]
        q: Option<usize>,
        /// Enumerate every branch (the default; present for scripting
        /// clarity).
        #[arg(long, default_value_t = false)]
        all_branches: bool,
    },
    /// Draw random-MPS or SPT-phase samples and check them against the
    /// recorded-tensor oracle.
    Sample {
        /// Sampler: random or spt.
        #[arg(long)]
        kind: String,
        /// Number of sites (random) or segments (spt).
        #[arg(long)]
        n: usize,
        /// Physical dimension for the random sampler.
        #[arg(long, default_value_t = 2)]
        phys_dim: usize,
        /// Bond dimension for the random sampler.
        #[arg(long, default_value_t = 2)]
        bond_dim: usize,
        /// Junk bond dimension for the spt sampler.
        #[arg(long, default_value_t = 2)]
        junk_dim: usize,
    },
    /// List gallery entries or export one with its metadata.
    Gallery {
        #[command(subcommand)]
        action: GalleryCmd,
    },
    /// Transfer spectrum and correlation length of a gallery tensor.
    Spectrum {
        #[command(flatten)]
        target: GallerySelect,
    },
}

#[derive(Subcommand)]
enum GalleryCmd {
    /// One line of metadata per entry.
    List,
    /// Export an entry in the tensor file format.
    Show {
        /// Gallery entry name.
        name: String,
        /// Entry parameter as key=value; repeatable.
        #[arg(long = "param")]
        params: Vec<String>,
    },
}

enum CliError {
    Usage(String),
    Invariant(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn from_module(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Usage(m),
        Error::Unsupported(m) => CliError::Usage(m),
        other => CliError::Invariant(other.to_string()),
    }
}

fn parse_params(raw: &[String], d: Option<f64>) -> CliResult<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for kv in raw {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--param expects key=value, got '{kv}'")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| CliError::Usage(format!("--param {k} expects a number, got '{v}'")))?;
        out.push((k.to_string(), v));
    }
    if let Some(d) = d {
        out.push(("d".into(), d));
    }
    Ok(out)
}

fn parse_basis(spec: &str) -> CliResult<BasisSpec> {
    if spec == "a4" {
        return Ok(BasisSpec::A4Triplet);
    }
    if let Some(rest) = spec.strip_prefix("pauli") {
        let d: usize = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad basis '{spec}'")))?;
        return Ok(BasisSpec::QuditPauli(d));
    }
    if let Some(rest) = spec.strip_prefix("weighted") {
        let l: usize = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad basis '{spec}'")))?;
        return Ok(BasisSpec::WeightedPauli(l));
    }
    if let Some(rest) = spec.strip_prefix("sp") {
        let two_n: usize = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad basis '{spec}'")))?;
        if two_n % 2 != 0 || two_n == 0 {
            return usage(format!("sp basis needs an even dimension, got '{spec}'"));
        }
        return Ok(BasisSpec::Sp2n(two_n / 2));
    }
    usage(format!("unknown basis '{spec}'; use pauli<D>, weighted<l>, a4, or sp<2n>"))
}

fn basis_name(spec: &BasisSpec) -> String {
    match spec {
        BasisSpec::QuditPauli(d) => format!("pauli{d}"),
        BasisSpec::WeightedPauli(l) => format!("weighted{l}"),
        BasisSpec::A4Triplet => "a4".into(),
        BasisSpec::Sp2n(n) => format!("sp{}", 2 * n),
    }
}

fn effective_budget(cli_budget: Option<usize>) -> usize {
    if let Some(b) = cli_budget {
        return b;
    }
    if let Ok(raw) = std::env::var("MPS_FUSION_BUDGET") {
        if let Ok(b) = raw.parse::<usize>() {
            return b;
        }
    }
    DEFAULT_BUDGET
}

fn emit(cli: &Cli, json: String, csv: Option<String>) -> CliResult<()> {
    let text = match cli.format.as_str() {
        "json" => json,
        "csv" => csv.ok_or_else(|| {
            CliError::Usage("csv format is only available for protocol reports".into())
        })?,
        other => return usage(format!("unknown format '{other}'")),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Invariant(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_gallery(target: &GallerySelect) -> CliResult<(GalleryTensor, mps_fusion::gallery::GalleryEntry)> {
    let params = parse_params(&target.params, target.d)?;
    let kv: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    gallery_tensor(&target.gallery, &kv).map_err(from_module)
}

fn rep_for(name: &str) -> CliResult<(ProjectiveRep, GroupSpec)> {
    if let Some(rest) = name.strip_prefix("pauli") {
        let d: usize = rest
            .parse()
            .map_err(|_| CliError::Usage(format!("bad representation '{name}'")))?;
        let rep = named_defect_basis(&BasisSpec::QuditPauli(d)).map_err(from_module)?;
        return Ok((rep, GroupSpec::Product(vec![d, d])));
    }
    match name {
        "sigma-y" => {
            let rep = sigma_y_rep_z2().map_err(from_module)?;
            Ok((rep, GroupSpec::Cyclic(2)))
        }
        "a4-triplet" => {
            let rep = named_defect_basis(&BasisSpec::A4Triplet).map_err(from_module)?;
            Ok((rep, GroupSpec::A4))
        }
        other => usage(format!(
            "unknown representation '{other}'; use pauli<D>, sigma-y, or a4-triplet"
        )),
    }
}

#[derive(Serialize)]
struct PushingReport {
    gallery: String,
    basis: String,
    q: usize,
    uniform: Option<bool>,
    tables: Vec<TableFile>,
}

#[derive(Serialize)]
struct SpectrumReport {
    gallery: String,
    params: Vec<(String, f64)>,
    eigenvalues: Vec<[f64; 2]>,
    correlation_length: Option<f64>,
    infinite_correlation_length: bool,
    closed_form: Option<f64>,
    closed_form_infinite: bool,
}

#[derive(Serialize)]
struct SampleReport {
    kind: String,
    n: usize,
    seed: u64,
    fidelity: f64,
    fusion_outcomes: Vec<usize>,
    boundary_outcome: Option<usize>,
    protected_residual: Option<f64>,
}

#[derive(Serialize)]
struct GalleryLine {
    name: String,
    defaults: String,
    route: String,
    q: usize,
    basis: String,
    normal: bool,
    description: String,
}

fn run_protocol(
    cli: &Cli,
    target: &GallerySelect,
    n: usize,
    mode: RunMode,
    basis: &Option<String>,
    q: Option<usize>,
    boundary: BoundarySpec,
) -> CliResult<(mps_fusion::protocols::ProtocolReport, String)> {
    let (gt, entry) = load_gallery(target)?;
    let basis_spec = match basis {
        Some(s) => parse_basis(s)?,
        None => entry.basis.clone(),
    };
    let rep = named_defect_basis(&basis_spec).map_err(from_module)?;
    let q = q.unwrap_or(entry.q);
    let mut cfg = ProtocolConfig::new(q, n);
    cfg.mode = mode;
    cfg.boundary = boundary;
    cfg.budget = effective_budget(cli.budget);
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    let desc = format!(
        "{} params={:?} n={n} q={q} basis={} mode={:?} boundary={:?}",
        entry.name,
        entry.params,
        basis_name(&basis_spec),
        cfg.mode,
        cfg.boundary,
    );
    let report = match (&gt, entry.route) {
        (GalleryTensor::Normal(a), Route::Protocol1) => {
            protocol1(a, &rep, &cfg).map_err(from_module)?
        }
        (GalleryTensor::Normal(a), Route::Protocol2) => {
            let blocked = mps_fusion::tensor::BlockStructure::new(vec![mps_fusion::tensor::Block {
                a: a.clone(),
                mu: Complex64::new(1.0, 0.0),
            }])
            .map_err(from_module)?;
            protocol2(&blocked, &[rep], &cfg).map_err(from_module)?
        }
        (GalleryTensor::Blocked(bs), _) => protocol2(bs, &[rep], &cfg).map_err(from_module)?,
    };
    Ok((report, desc))
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Construct { rep, picks, intertwiner, phases } => {
            let (v, spec) = rep_for(rep)?;
            let decomp = irrep_decomposition(&v, &spec).map_err(from_module)?;
            let mut pick_list = Vec::new();
            for part in picks.split(',') {
                let (j, r) = part.split_once(':').ok_or_else(|| {
                    CliError::Usage(format!("--picks expects J:copy pairs, got '{part}'"))
                })?;
                let j: usize = j
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad irrep index '{j}'")))?;
                let r: usize = r
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad copy index '{r}'")))?;
                pick_list.push((j, r));
            }
            let params = match intertwiner.as_str() {
                "canonical" => IntertwinerParams::Canonical,
                "haar" => IntertwinerParams::Haar(cli.seed.unwrap_or(0)),
                "phases" => {
                    let raw = phases.as_ref().ok_or_else(|| {
                        CliError::Usage("--intertwiner phases requires --phases".into())
                    })?;
                    let mut ms = Vec::new();
                    for (pi, part) in raw.split(',').enumerate() {
                        let deg: f64 = part.trim().parse().map_err(|_| {
                            CliError::Usage(format!("bad phase angle '{part}'"))
                        })?;
                        let th = deg.to_radians();
                        let n = decomp
                            .multiplicities
                            .iter()
                            .filter(|&&m| m > 0)
                            .nth(pi)
                            .copied();
                        if n != Some(1) {
                            return usage(
                                "--intertwiner phases needs every multiplicity equal to one",
                            );
                        }
                        ms.push(ndarray::Array2::from_elem(
                            (1, 1),
                            Complex64::new(th.cos(), th.sin()),
                        ));
                    }
                    IntertwinerParams::Unitaries(ms)
                }
                other => return usage(format!("unknown intertwiner mode '{other}'")),
            };
            let w = sample_intertwiner(&decomp, &params).map_err(from_module)?;
            let sel = select_irreps(&decomp, &pick_list).map_err(from_module)?;
            let built = construct_tensor(&v, &w, &sel).map_err(from_module)?;
            let mut file = TensorFile::from_tensor(
                &format!("constructed-{rep}"),
                &built.tensor,
                &[
                    ("certificate_residual".into(), built.certificate_residual),
                    ("normal".into(), if built.normal { 1.0 } else { 0.0 }),
                    ("rescale".into(), built.rescale),
                ],
            );
            file.provenance = Some(Provenance {
                group: format!("{spec:?}"),
                rep_id: rep.clone(),
                selection: pick_list,
                params: format!("{intertwiner}{}", phases.as_deref().map(|p| format!(":{p}")).unwrap_or_default()),
                seed: if intertwiner == "haar" { Some(cli.seed.unwrap_or(0)) } else { None },
            });
            emit(cli, json_string(&file).map_err(from_module)?, None)
        }
        Cmd::AnalyzePushing { target, basis, q } => {
            let (gt, entry) = load_gallery(target)?;
            let basis_spec = match basis {
                Some(s) => parse_basis(s)?,
                None => entry.basis.clone(),
            };
            let rep = named_defect_basis(&basis_spec).map_err(from_module)?;
            let q = q.unwrap_or(entry.q);
            let report = match &gt {
                GalleryTensor::Normal(a) => {
                    let blocked = block_tensor(a, q).map_err(from_module)?;
                    let table = build_pushing_table(&blocked, &rep).map_err(from_module)?;
                    PushingReport {
                        gallery: entry.name.clone(),
                        basis: basis_name(&basis_spec),
                        q,
                        uniform: None,
                        tables: vec![TableFile::from_table(&table)],
                    }
                }
                GalleryTensor::Blocked(bs) => {
                    let reps = vec![rep; bs.blocks.len()];
                    let bt = build_block_pushing_table(bs, q, &reps, None).map_err(from_module)?;
                    PushingReport {
                        gallery: entry.name.clone(),
                        basis: basis_name(&basis_spec),
                        q,
                        uniform: Some(bt.uniform),
                        tables: bt.tables.iter().map(TableFile::from_table).collect(),
                    }
                }
            };
            emit(cli, json_string(&report).map_err(from_module)?, None)
        }
        Cmd::Simulate { target, n, mode, shots, branch, basis, q, boundary } => {
            let boundary = match boundary.as_str() {
                "entangled" => BoundarySpec::Entangled,
                "periodic" => {
                    let (gt, _) = load_gallery(target)?;
                    let dim = match &gt {
                        GalleryTensor::Normal(a) => a.dim,
                        GalleryTensor::Blocked(bs) => {
                            bs.full_tensor().map_err(from_module)?.dim
                        }
                    };
                    BoundarySpec::Matrix(mps_fusion::linalg::identity(dim))
                }
                other => return usage(format!("unknown boundary '{other}'")),
            };
            let run_mode = match mode.as_str() {
                "all" => RunMode::AllBranches,
                "sample" => RunMode::Sample(cli.seed.unwrap_or(0)),
                "branch" => {
                    let raw = branch.as_ref().ok_or_else(|| {
                        CliError::Usage("--mode branch requires --branch".into())
                    })?;
                    let outcomes: std::result::Result<Vec<usize>, _> =
                        raw.split(',').map(|p| p.trim().parse()).collect();
                    RunMode::Branch(outcomes.map_err(|_| {
                        CliError::Usage(format!("bad outcome tuple '{raw}'"))
                    })?)
                }
                other => return usage(format!("unknown mode '{other}'")),
            };
            if mode == "sample" && *shots > 1 {
                let base = cli.seed.unwrap_or(0);
                let mut merged: Option<mps_fusion::protocols::ProtocolReport> = None;
                let mut desc = String::new();
                for shot in 0..*shots {
                    let (rpt, d) = run_protocol(
                        cli,
                        target,
                        *n,
                        RunMode::Sample(base.wrapping_add(shot)),
                        basis,
                        *q,
                        boundary.clone(),
                    )?;
                    desc = d;
                    match &mut merged {
                        None => merged = Some(rpt),
                        Some(acc) => {
                            acc.branches.extend(rpt.branches);
                            acc.branch_count = acc.branches.len();
                            acc.min_fidelity = acc.min_fidelity.min(rpt.min_fidelity);
                            acc.total_probability += rpt.total_probability;
                            acc.wall_time_ms += rpt.wall_time_ms;
                        }
                    }
                }
                let report = merged.expect("at least one shot");
                let file = report_to_file(&report, &format!("{desc} shots={shots}"));
                let csv = report_csv(&file);
                return emit(cli, json_string(&file).map_err(from_module)?, Some(csv));
            }
            let (report, desc) =
                run_protocol(cli, target, *n, run_mode, basis, *q, boundary)?;
            let file = report_to_file(&report, &desc);
            let csv = report_csv(&file);
            emit(cli, json_string(&file).map_err(from_module)?, Some(csv))
        }
        Cmd::Verify { target, n, basis, q, all_branches } => {
            let _ = all_branches;
            let (report, desc) = run_protocol(
                cli,
                target,
                *n,
                RunMode::AllBranches,
                basis,
                *q,
                BoundarySpec::Entangled,
            )?;
            let tol = cli.tol.unwrap_or(1e-9);
            let file = report_to_file(&report, &desc);
            let csv = report_csv(&file);
            emit(cli, json_string(&file).map_err(from_module)?, Some(csv))?;
            if report.min_fidelity < 1.0 - tol {
                return Err(CliError::Invariant(format!(
                    "verification failed: min branch fidelity {} below 1 - {tol:e}",
                    report.min_fidelity
                )));
            }
            Ok(())
        }
        Cmd::Sample { kind, n, phys_dim, bond_dim, junk_dim } => {
            let seed = cli.seed.unwrap_or(0);
            let budget = effective_budget(cli.budget);
            let report = match kind.as_str() {
                "random" => {
                    let s = sample_random_mps(*phys_dim, *bond_dim, *n, seed, budget)
                        .map_err(from_module)?;
                    SampleReport {
                        kind: kind.clone(),
                        n: *n,
                        seed,
                        fidelity: s.fidelity,
                        fusion_outcomes: s.fusion_outcomes,
                        boundary_outcome: Some(s.boundary_outcome),
                        protected_residual: None,
                    }
                }
                "spt" => {
                    let s = sample_spt_phase(*n, *junk_dim, seed, budget).map_err(from_module)?;
                    SampleReport {
                        kind: kind.clone(),
                        n: *n,
                        seed,
                        fidelity: s.fidelity,
                        fusion_outcomes: s.fusion_outcomes,
                        boundary_outcome: None,
                        protected_residual: Some(s.protected_residual),
                    }
                }
                other => return usage(format!("unknown sampler '{other}'; use random or spt")),
            };
            emit(cli, json_string(&report).map_err(from_module)?, None)
        }
        Cmd::Gallery { action } => match action {
            GalleryCmd::List => {
                let lines: Vec<GalleryLine> = gallery_list()
                    .into_iter()
                    .map(|e| GalleryLine {
                        name: e.name.clone(),
                        defaults: e.params
                            .iter()
                            .map(|(k, v)| format!("{k}={v}"))
                            .collect::<Vec<_>>()
                            .join(","),
                        route: match e.route {
                            Route::Protocol1 => "protocol1".into(),
                            Route::Protocol2 => "protocol2".into(),
                        },
                        q: e.q,
                        basis: basis_name(&e.basis),
                        normal: e.normal,
                        description: e.description.clone(),
                    })
                    .collect();
                emit(cli, json_string(&lines).map_err(from_module)?, None)
            }
            GalleryCmd::Show { name, params } => {
                let params = parse_params(params, None)?;
                let kv: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
                let (gt, entry) = gallery_tensor(name, &kv).map_err(from_module)?;
                let file = match &gt {
                    GalleryTensor::Normal(a) => TensorFile::from_tensor(name, a, &entry.params),
                    GalleryTensor::Blocked(bs) => {
                        let full = bs.full_tensor().map_err(from_module)?;
                        TensorFile::from_tensor(name, &full, &entry.params)
                    }
                };
                emit(cli, json_string(&file).map_err(from_module)?, None)
            }
        },
        Cmd::Spectrum { target } => {
            let (gt, entry) = load_gallery(target)?;
            let a = match &gt {
                GalleryTensor::Normal(a) => a.clone(),
                GalleryTensor::Blocked(bs) => bs.full_tensor().map_err(from_module)?,
            };
            let spec = transfer_spectrum(&a).map_err(from_module)?;
            let xi = correlation_length(&a).map_err(from_module)?;
            let (cl, inf) = match xi {
                CorrelationLength::Finite(x) => (Some(x), false),
                CorrelationLength::Infinite => (None, true),
            };
            let (cf, cf_inf) = match entry.xi {
                Some(CorrelationLength::Finite(x)) => (Some(x), false),
                Some(CorrelationLength::Infinite) => (None, true),
                None => (None, false),
            };
            let report = SpectrumReport {
                gallery: entry.name.clone(),
                params: entry.params.clone(),
                eigenvalues: spec.iter().map(|z| [z.re, z.im]).collect(),
                correlation_length: cl,
                infinite_correlation_length: inf,
                closed_form: cf,
                closed_form_infinite: cf_inf,
            };
            emit(cli, json_string(&report).map_err(from_module)?, None)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return ExitCode::SUCCESS;
                }
                _ => 3,
            };
            eprint!("{e}");
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(3)
        }
    }
}
