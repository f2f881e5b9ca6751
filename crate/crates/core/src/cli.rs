//! Command-line front end: system files, subcommands, CSV and text outputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GifsError, Result};
use crate::exact_arith::{ArithError, Rational};
use crate::geometry::{Attractor, CertifiedBox, CloudMode, Orthogonal, Similarity};
use crate::graph_ifs::{Edge, GraphIfs};
use crate::packing::{overlap_moment, packing_moment, PackingEstimate, PackingOptions};
use crate::renewal::{build_p, classify_lattice, geometric_grid, lq_spectrum_fit, rate_from_fit, theorem2_check, LatticeVerdict};
use crate::separation::{check_cssc, check_osc, check_ssc, compute_constants, construct_ell_paths, default_open_sets, SystemConstants, Verdict};
use crate::spectral::{hausdorff_dimension, solve_beta, solve_gamma};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    version: u32,
    dimension: usize,
    vertices: Vec<String>,
    edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    open_sets: BTreeMap<String, BoxFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    id: String,
    from: String,
    to: String,
    ratio: String,
    prob: String,
    map: MapFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    translate: Vec<String>,
    #[serde(default)]
    reflect: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rotate_deg: Option<String>,
    /// Optional; must agree with the edge ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    lo: Vec<String>,
    hi: Vec<String>,
}

fn rat(field: &str, s: &str) -> Result<Rational> {
    Rational::parse(s).map_err(|e| match e {
        ArithError::ZeroDenominator => GifsError::Input(format!("{field}: zero denominator in {s:?}")),
        _ => GifsError::Input(format!("{field}: malformed rational {s:?}")),
    })
}

/// Parses and validates a system description.
pub fn parse_system(text: &str) -> Result<GraphIfs> {
    let f: SystemFile = serde_json::from_str(text).map_err(|e| GifsError::Input(format!("schema: {e}")))?;
    if f.version != 1 {
        return Err(GifsError::Input(format!("unsupported version {}", f.version)));
    }
    let index = |name: &str| -> Result<usize> {
        f.vertices.iter().position(|v| v == name).ok_or_else(|| GifsError::Input(format!("unknown vertex {name:?}")))
    };
    let mut edges = Vec::with_capacity(f.edges.len());
    for e in &f.edges {
        let ratio = rat(&format!("edge {} ratio", e.id), &e.ratio)?;
        let prob = rat(&format!("edge {} prob", e.id), &e.prob)?;
        let scale = match &e.map.scale {
            Some(s) => rat(&format!("edge {} map.scale", e.id), s)?,
            None => ratio.clone(),
        };
        let t: Vec<Rational> = e.map.translate.iter().map(|s| rat(&format!("edge {} translate", e.id), s)).collect::<Result<_>>()?;
        if t.len() != f.dimension {
            return Err(GifsError::Input(format!("edge {}: translate has {} entries, dimension is {}", e.id, t.len(), f.dimension)));
        }
        let angle = match &e.map.rotate_deg {
            Some(s) => rat(&format!("edge {} rotate_deg", e.id), s)?,
            None => Rational::zero(),
        };
        let map = match f.dimension {
            1 => {
                let a = angle.to_f64().rem_euclid(360.0);
                if a != 0.0 && a != 180.0 {
                    return Err(GifsError::Input(format!("edge {}: rotation on the line must be 0 or 180 degrees", e.id)));
                }
                Similarity::line(scale, e.map.reflect ^ (a == 180.0), t[0].clone())
            }
            2 => Similarity::plane(scale, angle, e.map.reflect, [t[0].clone(), t[1].clone()]),
            d => return Err(GifsError::Input(format!("dimension {d} not supported"))),
        };
        edges.push(Edge { id: e.id.clone(), from: index(&e.from)?, to: index(&e.to)?, ratio, prob, map });
    }
    let mut open = vec![None; f.vertices.len()];
    for (name, b) in &f.open_sets {
        let lo = b.lo.iter().map(|s| rat("open_sets lo", s)).collect::<Result<_>>()?;
        let hi = b.hi.iter().map(|s| rat("open_sets hi", s)).collect::<Result<_>>()?;
        open[index(name)?] = Some(CertifiedBox::new(lo, hi));
    }
    GraphIfs::checked(f.dimension, f.vertices.clone(), edges, open)
}

/// Serializes an exactly specified system to the JSON file format.
pub fn system_to_json(g: &GraphIfs) -> Result<String> {
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            if !e.map.slack.is_zero() {
                return Err(GifsError::Domain(format!("edge {} carries an inexact translation", e.id)));
            }
            let (reflect, rotate_deg) = match &e.map.orth {
                Orthogonal::Line { flip } => (*flip, None),
                Orthogonal::Plane { angle, reflect } => (*reflect, (!angle.is_zero()).then(|| angle.to_string())),
            };
            Ok(EdgeFile {
                id: e.id.clone(),
                from: g.vertex_name(e.from).into(),
                to: g.vertex_name(e.to).into(),
                ratio: e.ratio.to_string(),
                prob: e.prob.to_string(),
                map: MapFile { translate: e.map.translation.iter().map(|t| t.to_string()).collect(), reflect, rotate_deg, scale: None },
            })
        })
        .collect::<Result<_>>()?;
    let open_sets = (0..g.vertex_count())
        .filter_map(|v| {
            g.open_set(v).map(|b| {
                (g.vertex_name(v).to_string(), BoxFile { lo: b.lo.iter().map(|x| x.to_string()).collect(), hi: b.hi.iter().map(|x| x.to_string()).collect() })
            })
        })
        .collect();
    let f = SystemFile {
        version: 1,
        dimension: g.dim(),
        vertices: (0..g.vertex_count()).map(|v| g.vertex_name(v).to_string()).collect(),
        edges,
        open_sets,
    };
    Ok(serde_json::to_string_pretty(&f).expect("serializable") + "\n")
}

/// Float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Provenance line opening every CSV.
pub fn header(config: &[u8]) -> String {
    format!("# gifs-multifractal v{} system={}\n", env!("CARGO_PKG_VERSION"), hex::encode(Sha256::digest(config)))
}

/// Writes via a temporary file in the target directory and renames into place.
pub fn write_atomic(path: &FsPath, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| GifsError::Io(e.error))?;
    Ok(())
}

/// `min:max:step` (inclusive) or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid(pub Vec<f64>);

impl std::str::FromStr for QGrid {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?} in q grid"));
        match parts.as_slice() {
            [v] => Ok(QGrid(vec![num(v)?])),
            [a, b, c] => {
                let (lo, hi, step) = (num(a)?, num(b)?, num(c)?);
                if !(step > 0.0) || hi < lo {
                    return Err("q grid needs min <= max and step > 0".into());
                }
                let k = ((hi - lo) / step + 1e-9).floor() as usize;
                Ok(QGrid((0..=k).map(|i| lo + i as f64 * step).collect()))
            }
            _ => Err("q grid must be min:max:step or a single value".into()),
        }
    }
}

/// `min:max:points`, geometrically spaced from max down to min, or a single scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RGrid(pub Vec<Rational>);

fn scale_value(s: &str) -> std::result::Result<Rational, String> {
    let s = s.trim();
    Rational::parse(s).ok().or_else(|| s.parse::<f64>().ok().and_then(Rational::from_f64)).filter(Rational::is_positive).ok_or_else(|| format!("bad scale {s:?}"))
}

impl std::str::FromStr for RGrid {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(RGrid(vec![scale_value(v)?])),
            [a, b, c] => {
                let (lo, hi) = (scale_value(a)?, scale_value(b)?);
                let n: usize = c.trim().parse().map_err(|_| format!("bad point count {c:?}"))?;
                if n == 0 || lo > hi {
                    return Err("r grid needs min <= max and at least one point".into());
                }
                if n == 1 {
                    return Ok(RGrid(vec![hi]));
                }
                let ratio = (lo.to_f64() / hi.to_f64()).powf(1.0 / (n - 1) as f64);
                let mut v = geometric_grid(hi.to_f64(), ratio, n);
                v[0] = hi;
                v[n - 1] = lo;
                Ok(RGrid(v))
            }
            _ => Err("r grid must be min:max:points or a single scale".into()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gifs", version, about = "Multifractal analysis of graph-directed self-similar sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output file (or directory for `report`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (falls back to GIFS_WORKERS, then the core count).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SystemArg {
    /// System description (JSON).
    pub system: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a system file.
    Validate(SystemArg),
    /// Similarity dimension of the attractor.
    Dimension(SystemArg),
    /// Spectrum table `q,beta,gamma` (gamma when distinguished paths exist).
    Beta {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value = "0:4:0.5", allow_hyphen_values = true)]
        q: QGrid,
    },
    /// Spectrum table `q,beta,gamma`, failing when gamma is unavailable.
    Gamma {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value = "0:4:0.5", allow_hyphen_values = true)]
        q: QGrid,
        /// Minimal length of the distinguished paths.
        #[arg(long, default_value_t = 2)]
        l: usize,
    },
    /// Lattice classification of the measure matrix.
    Lattice {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        q: QGrid,
    },
    /// SSC, CSSC and OSC verdicts.
    Separation {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value = "1e-9")]
        tol: f64,
    },
    /// Distinguished paths and open-set constants.
    Constants {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value_t = 2)]
        l: usize,
    },
    /// Point cloud `x[,y],depth,path`.
    Attractor {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Number of chaos-game points instead of the deterministic cloud.
        #[arg(long)]
        chaos: Option<usize>,
    },
    /// Packing-moment table `q,r,value_lo,value_hi,centers,kind`.
    Pack {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        q: QGrid,
        #[arg(long, default_value = "1/1000:1/10:13")]
        r: RGrid,
    },
    /// Overlap-moment table for two out-edges of a vertex.
    Overlap {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        e: String,
        #[arg(long)]
        f: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        q: QGrid,
        #[arg(long, default_value = "1/1000:1/10:13")]
        r: RGrid,
    },
    /// Spectrum slope fits `q,slope,stderr,beta_ref,pass`.
    VerifyT1 {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        vertex: Option<String>,
        #[arg(long, default_value = "0:2:1", allow_hyphen_values = true)]
        q: QGrid,
        /// Defaults to 41 scales from 1/10 with ratio 2^(-1/4).
        #[arg(long)]
        r: Option<RGrid>,
    },
    /// Overlap bound table `r,q_est_lo,q_est_hi,scaled,pass`.
    VerifyT2 {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long)]
        e: Option<String>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        q: f64,
        #[arg(long, default_value_t = 2)]
        l: usize,
        /// Defaults to 20 scales below the threshold with ratio 2^(-1/4).
        #[arg(long)]
        r: Option<RGrid>,
    },
    /// Full pipeline on one system.
    Report {
        #[command(flatten)]
        sys: SystemArg,
        #[arg(long, default_value = "0:2:0.5", allow_hyphen_values = true)]
        q: QGrid,
    },
}

/// What a command produced.
struct Output {
    files: Vec<(String, String)>,
    summary: String,
    undecided: bool,
}

impl Output {
    fn single(name: &str, body: String, summary: String) -> Self {
        Output { files: vec![(name.into(), body)], summary, undecided: false }
    }
}

struct Loaded {
    g: GraphIfs,
    head: String,
}

fn load(p: &FsPath) -> Result<Loaded> {
    let bytes = std::fs::read(p).map_err(|e| GifsError::Input(format!("{}: {e}", p.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| GifsError::Input(format!("{}: not UTF-8", p.display())))?;
    Ok(Loaded { g: parse_system(&text)?, head: header(&bytes) })
}

fn vertex(g: &GraphIfs, name: &Option<String>) -> Result<usize> {
    match name {
        None => Ok(0),
        Some(n) => g.vertex_index(n).ok_or_else(|| GifsError::Input(format!("unknown vertex {n:?}"))),
    }
}

fn edge(g: &GraphIfs, id: &str) -> Result<usize> {
    g.edge_index(id).ok_or_else(|| GifsError::Input(format!("unknown edge {id:?}")))
}

/// Open sets, OSC verdict, distinguished paths and constants, when obtainable.
fn osc_constants(att: &Attractor, min_l: usize) -> Result<SystemConstants> {
    let open = default_open_sets(att);
    let osc = check_osc(att, &open);
    match osc.verdict {
        Verdict::Holds => {}
        Verdict::Fails => return Err(GifsError::Domain(format!("open set condition fails for the configured boxes: {}", osc.describe(att.graph())))),
        Verdict::Undecided => return Err(GifsError::Domain(format!("open set condition undecided: {}", osc.describe(att.graph())))),
    }
    let (l, ell) = construct_ell_paths(att, &open, 1.0, min_l)?;
    compute_constants(att, &open, l, &ell)
}

fn spectrum(g: &GraphIfs, head: &str, qs: &[f64], ell: Option<&SystemConstants>) -> Result<String> {
    let rows: Vec<(f64, f64, Option<f64>)> = qs
        .par_iter()
        .map(|&q| {
            let b = solve_beta(g, q)?;
            let gm = ell.map(|k| solve_gamma(g, q, k.l, &k.ell_paths)).transpose()?;
            Ok((q, b, gm))
        })
        .collect::<Result<_>>()?;
    let mut s = format!("{head}q,beta,gamma\n");
    for (q, b, gm) in rows {
        s += &format!("{},{},{}\n", fmt_f64(q), fmt_f64(b), gm.map(fmt_f64).unwrap_or_default());
    }
    Ok(s)
}

fn pack_rows(head: &str, ests: &[PackingEstimate]) -> String {
    let mut s = format!("{head}q,r,value_lo,value_hi,centers,kind\n");
    for e in ests {
        s += &format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(e.q),
            fmt_f64(e.r),
            fmt_f64(e.value_interval.lo),
            fmt_f64(e.value_interval.hi),
            e.centers.len(),
            e.kind.as_str()
        );
    }
    s
}

fn default_t1_grid() -> Vec<Rational> {
    geometric_grid(0.1, 2f64.powf(-0.25), 41)
}

fn default_t2_grid(delta: &Rational) -> Vec<Rational> {
    geometric_grid(delta.to_f64() * 0.99, 2f64.powf(-0.25), 20)
}

fn fit_table(att: &Attractor, u: usize, head: &str, qs: &[f64], grid: &[Rational]) -> Result<(String, bool)> {
    let mut s = format!("{head}q,slope,stderr,beta_ref,pass\n");
    let mut all = true;
    for &q in qs {
        let fit = lq_spectrum_fit(att, u, q, grid)?;
        let rate = rate_from_fit(&fit);
        let pass = (fit.slope - fit.beta_ref).abs() < 0.05 && rate.pass;
        all &= pass;
        s += &format!("{},{},{},{},{}\n", fmt_f64(q), fmt_f64(fit.slope), fmt_f64(fit.stderr), fmt_f64(fit.beta_ref), pass);
    }
    Ok((s, all))
}

fn t2_table(att: &Attractor, e: usize, f: usize, q: f64, grid: &[Rational], k: &SystemConstants, head: &str) -> Result<(String, bool)> {
    let u = att.graph().edge(e).from;
    let chk = theorem2_check(att, u, e, f, q, grid, k)?;
    let mut s = format!("{head}r,q_est_lo,q_est_hi,scaled,pass\n");
    for row in &chk.rows {
        let pass = row.scaled <= 10.0 * chk.median && chk.trend_slope <= 0.05;
        s += &format!("{},{},{},{},{}\n", fmt_f64(row.r), fmt_f64(row.q_est.lo), fmt_f64(row.q_est.hi), fmt_f64(row.scaled), pass);
    }
    Ok((s, chk.pass))
}

fn first_pair(g: &GraphIfs) -> (usize, usize) {
    let out = g.out_edges(0);
    (out[0], out[1])
}

fn execute(cmd: &Command, seed: u64) -> Result<Output> {
    match cmd {
        Command::Validate(a) => {
            let l = load(&a.system)?;
            let msg = format!("valid: {} vertices, {} edges, dimension {}\n", l.g.vertex_count(), l.g.edges().len(), l.g.dim());
            Ok(Output::single("validate.txt", msg.clone(), msg))
        }
        Command::Dimension(a) => {
            let l = load(&a.system)?;
            let s = hausdorff_dimension(&l.g)?;
            let msg = format!("s = {}\n", fmt_f64(s));
            Ok(Output::single("dimension.txt", msg.clone(), msg))
        }
        Command::Beta { sys, q } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let k = osc_constants(&att, 2).ok();
            let body = spectrum(&l.g, &l.head, &q.0, k.as_ref())?;
            Ok(Output::single("spectrum.csv", body, format!("{} rows\n", q.0.len())))
        }
        Command::Gamma { sys, q, l: min_l } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let k = osc_constants(&att, *min_l)?;
            let body = spectrum(&l.g, &l.head, &q.0, Some(&k))?;
            Ok(Output::single("spectrum.csv", body, format!("{} rows, l = {}\n", q.0.len(), k.l)))
        }
        Command::Lattice { sys, q } => {
            let l = load(&sys.system)?;
            let mut body = String::new();
            let mut undecided = false;
            let mut verdicts = Vec::new();
            for &qq in &q.0 {
                let c = classify_lattice(&build_p(&l.g, qq)?);
                undecided |= c.verdict == LatticeVerdict::Undecided;
                verdicts.push(c.verdict.to_string());
                body += &format!("q = {}\n{}", fmt_f64(qq), c.report(&l.g));
            }
            verdicts.dedup();
            let summary = verdicts.join("\n") + "\n";
            Ok(Output { files: vec![("lattice.txt".into(), format!("{summary}\n{body}"))], summary, undecided })
        }
        Command::Separation { sys, tol } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let tol = Rational::from_f64(*tol).filter(Rational::is_positive).ok_or_else(|| GifsError::Input("tolerance must be positive".into()))?;
            let reports = [check_ssc(&att, &tol), check_cssc(&att), check_osc(&att, &default_open_sets(&att))];
            let body: String = reports.iter().map(|r| r.describe(&l.g) + "\n").collect();
            let undecided = reports.iter().any(|r| r.verdict == Verdict::Undecided);
            Ok(Output { files: vec![("separation.txt".into(), body.clone())], summary: body, undecided })
        }
        Command::Constants { sys, l: min_l } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let k = osc_constants(&att, *min_l)?;
            let body = k.table(&l.g);
            Ok(Output::single("constants.txt", body.clone(), body))
        }
        Command::Attractor { sys, vertex: v, depth, chaos } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let u = vertex(&l.g, v)?;
            let mode = match chaos {
                Some(n) => CloudMode::Chaos { points: *n, seed },
                None => CloudMode::Deterministic,
            };
            let cloud = att.attractor_points(u, *depth, mode)?;
            let cols = if l.g.dim() == 1 { "x" } else { "x,y" };
            let mut body = format!("{}{cols},depth,path\n", l.head);
            for (p, path) in cloud.points.iter().zip(&cloud.paths) {
                let xs: Vec<String> = p.iter().map(|x| fmt_f64(*x)).collect();
                body += &format!("{},{},{}\n", xs.join(","), cloud.depth, crate::graph_ifs::label(&l.g, path));
            }
            let res = cloud.resolution.map(|r| format!(", resolution {}", fmt_f64(r.to_f64()))).unwrap_or_default();
            Ok(Output::single("attractor.csv", body, format!("{} points{res}\n", cloud.points.len())))
        }
        Command::Pack { sys, vertex: v, q, r } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let u = vertex(&l.g, v)?;
            let opts = PackingOptions::default();
            let tasks: Vec<(f64, &Rational)> = q.0.iter().flat_map(|&qq| r.0.iter().map(move |rr| (qq, rr))).collect();
            let ests: Vec<PackingEstimate> = tasks.par_iter().map(|(qq, rr)| packing_moment(&att, u, *qq, rr, &opts)).collect::<Result<_>>()?;
            let unconv = ests.iter().filter(|e| e.unconverged).count();
            Ok(Output::single("pack.csv", pack_rows(&l.head, &ests), format!("{} rows, {unconv} with unconverged measure brackets\n", ests.len())))
        }
        Command::Overlap { sys, e, f, q, r } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let (e, f) = (edge(&l.g, e)?, edge(&l.g, f)?);
            let u = l.g.edge(e).from;
            if l.g.edge(f).from != u || e == f {
                return Err(GifsError::Input("overlap needs two distinct edges leaving the same vertex".into()));
            }
            let opts = PackingOptions::default();
            let tasks: Vec<(f64, &Rational)> = q.0.iter().flat_map(|&qq| r.0.iter().map(move |rr| (qq, rr))).collect();
            let ests: Vec<PackingEstimate> = tasks.par_iter().map(|(qq, rr)| overlap_moment(&att, u, e, f, *qq, rr, &opts)).collect::<Result<_>>()?;
            Ok(Output::single("overlap.csv", pack_rows(&l.head, &ests), format!("{} rows\n", ests.len())))
        }
        Command::VerifyT1 { sys, vertex: v, q, r } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let u = vertex(&l.g, v)?;
            let grid = r.as_ref().map(|g| g.0.clone()).unwrap_or_else(default_t1_grid);
            let (body, pass) = fit_table(&att, u, &l.head, &q.0, &grid)?;
            Ok(Output::single("fit.csv", body, format!("all fits pass: {pass}\n")))
        }
        Command::VerifyT2 { sys, e, f, q, l: min_l, r } => {
            let l = load(&sys.system)?;
            let att = Attractor::new(l.g.clone())?;
            let k = osc_constants(&att, *min_l)?;
            let (e, f) = match (e, f) {
                (Some(e), Some(f)) => (edge(&l.g, e)?, edge(&l.g, f)?),
                (None, None) => first_pair(&l.g),
                _ => return Err(GifsError::Input("give both --e and --f or neither".into())),
            };
            let grid = r.as_ref().map(|g| g.0.clone()).unwrap_or_else(|| default_t2_grid(&k.delta));
            let (body, pass) = t2_table(&att, e, f, *q, &grid, &k, &l.head)?;
            Ok(Output::single("theorem2.csv", body, format!("bounded: {pass}\n")))
        }
        Command::Report { sys, q } => report(&sys.system, &q.0),
    }
}

fn report(path: &FsPath, qs: &[f64]) -> Result<Output> {
    let l = load(path)?;
    let g = &l.g;
    let att = Attractor::new(g.clone())?;
    let mut files = Vec::new();
    let mut text = format!("system: {} vertices, {} edges, dimension {}\n", g.vertex_count(), g.edges().len(), g.dim());
    text += &format!("dimension s = {}\n", fmt_f64(hausdorff_dimension(g)?));
    let tol = Rational::frac(1, 1_000_000_000);
    let seps = [check_ssc(&att, &tol), check_cssc(&att), check_osc(&att, &default_open_sets(&att))];
    let mut undecided = false;
    for s in &seps {
        text += &(s.describe(g) + "\n");
        undecided |= s.verdict == Verdict::Undecided;
    }
    let lat = classify_lattice(&build_p(g, 0.0)?);
    text += &format!("lattice: {}\n", lat.verdict);
    undecided |= lat.verdict == LatticeVerdict::Undecided;
    files.push(("lattice.txt".to_string(), lat.report(g)));
    let k = osc_constants(&att, 2);
    match &k {
        Ok(k) => {
            files.push(("constants.txt".to_string(), k.table(g)));
            text += &format!("constants: l = {}, N = {}, delta = {}\n", k.l, k.n, k.delta);
        }
        Err(e) => text += &format!("constants unavailable: {e}\n"),
    }
    files.push(("spectrum.csv".to_string(), spectrum(g, &l.head, qs, k.as_ref().ok())?));
    if g.dim() == 1 {
        let t1: Vec<f64> = qs.iter().copied().filter(|q| *q >= 0.0).collect();
        let (fit, pass) = fit_table(&att, 0, &l.head, &t1, &default_t1_grid())?;
        text += &format!("spectrum slope fits pass: {pass}\n");
        files.push(("fit.csv".to_string(), fit));
    }
    if let Ok(k) = &k {
        let (e, f) = first_pair(g);
        let (body, pass) = t2_table(&att, e, f, 0.0, &default_t2_grid(&k.delta), k, &l.head)?;
        text += &format!("overlap bound at q = 0 ({} vs {}): {pass}\n", g.edge(e).id, g.edge(f).id);
        files.push(("theorem2.csv".to_string(), body));
    }
    files.push(("report.txt".to_string(), text.clone()));
    Ok(Output { files, summary: text, undecided })
}

fn exit_code(e: &GifsError) -> i32 {
    match e {
        GifsError::Invalid(_) | GifsError::Input(_) | GifsError::Domain(_) => EXIT_VALIDATION,
        e if e.is_validation() => EXIT_VALIDATION,
        _ => EXIT_NUMERIC,
    }
}

fn workers(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var("GIFS_WORKERS").ok().and_then(|v| v.trim().parse().ok())).unwrap_or(0)
}

fn emit(out: &Output, target: Option<&FsPath>, report: bool) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match target {
        None => {
            if report {
                stdout.write_all(out.summary.as_bytes())?;
            } else {
                for (_, body) in &out.files {
                    stdout.write_all(body.as_bytes())?;
                }
            }
        }
        Some(p) if report => {
            for (name, body) in &out.files {
                write_atomic(&p.join(name), body)?;
            }
            stdout.write_all(out.summary.as_bytes())?;
        }
        Some(p) => {
            let body: String = out.files.iter().map(|f| f.1.as_str()).collect();
            write_atomic(p, &body)?;
            stdout.write_all(out.summary.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers(cli.workers)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: worker pool: {e}");
            return EXIT_NUMERIC;
        }
    };
    let result = pool.install(|| execute(&cli.command, cli.seed));
    match result {
        Ok(out) => {
            let is_report = matches!(cli.command, Command::Report { .. });
            if let Err(e) = emit(&out, cli.out.as_deref(), is_report) {
                eprintln!("error: {e}");
                return EXIT_NUMERIC;
            }
            if out.undecided {
                EXIT_UNDECIDED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn grids() {
        assert_eq!("0:4:0.5".parse::<QGrid>().unwrap().0.len(), 9);
        assert_eq!("-1:1:1".parse::<QGrid>().unwrap().0, vec![-1.0, 0.0, 1.0]);
        assert!("1:0:1".parse::<QGrid>().is_err());
        let r = "1/1000:1/10:3".parse::<RGrid>().unwrap().0;
        assert_eq!((r[0].clone(), r[2].clone()), (Rational::frac(1, 10), Rational::frac(1, 1000)));
        assert!((r[1].to_f64() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        for g in fixtures::all().into_iter().chain([fixtures::gasket(), fixtures::quarter_eighth(), fixtures::flipped()]) {
            let text = system_to_json(&g).unwrap();
            let back = parse_system(&text).unwrap();
            assert_eq!(system_to_json(&back).unwrap(), text);
            assert_eq!(back.edges().len(), g.edges().len());
        }
    }

    #[test]
    fn schema_errors() {
        let good = system_to_json(&fixtures::cantor()).unwrap();
        let bad = good.replace("\"ratio\": \"1/3\"", "\"ratio\": \"4/3\"");
        match parse_system(&bad) {
            Err(GifsError::Invalid(r)) => assert!(r.to_string().contains("outside (0,1)")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_system("{\"version\": 1}"), Err(GifsError::Input(_))));
        let zero = good.replace("\"prob\": \"1/2\"", "\"prob\": \"1/0\"");
        assert!(matches!(parse_system(&zero), Err(GifsError::Input(_))));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0 / 3.0).len(), "3.3333333333333331e-1".len());
    }
}
