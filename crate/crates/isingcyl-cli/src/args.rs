use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isingcyl::{CylinderGeometry, Direction, Edge, ModelParams, Site};
use serde::Serialize;

use crate::{Failure, Result};

#[derive(Parser, Debug)]
#[command(name = "isingcyl", version, about = "Free-fermion Ising cylinders: tables, oracles and acceptance checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Propagator tables with symmetry and boundary residuals
    Propagator(PropagatorArgs),
    /// Pfaffian partition function, optionally against enumeration
    Partition(PartitionArgs),
    /// Energy moments and cumulants
    Correlate(CorrelateArgs),
    /// Convergence of rescaled lattice quantities under a-halving
    Scaling(ScalingArgs),
    /// Scale decomposition, reconstruction residuals and decay fits
    Multiscale(MultiscaleArgs),
    /// Kernel cancellations, norm battery and RG-step demo
    Kernels(KernelsArgs),
    /// Full acceptance suite
    Selftest(SelftestArgs),
}

/// Output and verification flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run independent oracles alongside and fail on residuals above tolerance
    #[arg(long)]
    pub verify: bool,
    /// Seed for randomized batteries
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override, NAME=VALUE (repeatable)
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

impl Common {
    /// Defaults with the overrides applied; unknown names are rejected.
    pub fn tolerances(&self, defaults: &[(&str, f64)]) -> Result<BTreeMap<String, f64>> {
        let mut t: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &self.tol {
            match t.get_mut(k) {
                Some(slot) => *slot = *v,
                None => {
                    let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
                    return Err(Failure::Config(format!("--tol: unknown tolerance {k:?}, expected one of {known:?}")));
                }
            }
        }
        Ok(t)
    }
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("tolerance must be finite and non-negative, got {v}"));
    }
    Ok((k.trim().to_string(), v))
}

/// Geometry and couplings. Unset fields fall back to per-command defaults.
#[derive(Args, Debug, Clone)]
pub struct Model {
    /// Cylinder circumference (even)
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Number of rows
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Horizontal coupling tanh(beta J1)
    #[arg(long)]
    pub t1: Option<f64>,
    /// Vertical coupling tanh(beta J2); forced from t1 on the critical line
    #[arg(long)]
    pub t2: Option<f64>,
    /// Inverse temperature; couplings become tanh(beta J)
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "J1", default_value_t = 1.0)]
    pub j1: f64,
    #[arg(long = "J2", default_value_t = 1.0)]
    pub j2: f64,
    /// Put the model on the critical line, t2 = (1 - t1)/(1 + t1)
    #[arg(long)]
    pub critical: bool,
    /// Dressed horizontal coupling
    #[arg(long = "t1-star")]
    pub t1_star: Option<f64>,
    /// Dressed vertical coupling
    #[arg(long = "t2-star")]
    pub t2_star: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Resolved {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub params: ModelParams,
}

impl Resolved {
    pub fn geometry(&self) -> CylinderGeometry {
        CylinderGeometry::new(self.l, self.m).expect("validated on construction")
    }
}

pub fn geometry(l: usize, m: usize) -> Result<CylinderGeometry> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Failure::Config(format!("--L: must be a positive even integer, got {l}")));
    }
    if m < 1 {
        return Err(Failure::Config(format!("--M: must be at least 1, got {m}")));
    }
    CylinderGeometry::new(l, m).map_err(|e| Failure::Config(e.to_string()))
}

fn coupling(name: &str, t: f64) -> Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(Failure::Config(format!("--{name}: must lie in (0, 1), got {t}")))
    }
}

impl Model {
    /// `t1` defaults to the isotropic critical value, `t2` to the critical one.
    pub fn resolve(&self, l: usize, m: usize) -> Result<Resolved> {
        let (l, m) = (self.l.unwrap_or(l), self.m.unwrap_or(m));
        geometry(l, m)?;
        let mut p = if let Some(beta) = self.beta {
            if self.t1.is_some() || self.t2.is_some() {
                return Err(Failure::Config("--beta: cannot be combined with --t1/--t2".into()));
            }
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Failure::Config(format!("--beta: must be positive, got {beta}")));
            }
            let p = ModelParams::from_beta(beta, self.j1, self.j2).map_err(|e| Failure::Config(format!("--beta/--J1/--J2: {e}")))?;
            if self.critical {
                ModelParams::critical(p.t1)?
            } else {
                p
            }
        } else {
            let t1 = coupling("t1", self.t1.unwrap_or(2f64.sqrt() - 1.0))?;
            match self.t2 {
                Some(_) if self.critical => return Err(Failure::Config("--t2: cannot be set together with --critical".into())),
                Some(t2) => ModelParams::new(t1, coupling("t2", t2)?)?,
                None => ModelParams::critical(t1)?,
            }
        };
        if let Some(t) = self.t1_star {
            p.t1_star = coupling("t1-star", t)?;
        }
        if let Some(t) = self.t2_star {
            p.t2_star = coupling("t2-star", t)?;
        }
        Ok(Resolved { l, m, params: p })
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Critical,
    Massive,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fourier,
    Direct,
}

#[derive(Args, Debug, Clone)]
pub struct PropagatorArgs {
    #[command(flatten)]
    pub model: Model,
    #[arg(long, value_enum, default_value_t = Kind::Critical)]
    pub kind: Kind,
    /// Construction of the critical propagator
    #[arg(long, value_enum, default_value_t = Method::Fourier)]
    pub method: Method,
    /// Write the full table as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub model: Model,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub model: Model,
    /// Edges as h(x1,x2) or v(x1,x2), comma separated
    #[arg(long, value_parser = parse_edges)]
    pub edges: Edges,
    #[command(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Propagator,
    Energy,
}

#[derive(Args, Debug, Clone)]
pub struct ScalingArgs {
    #[arg(long, default_value_t = 0.5)]
    pub t1: f64,
    /// Points of the unit cylinder, "(x,y),(x,y),..."
    #[arg(long, value_parser = parse_points, default_value = "(0.25,0.375),(0.75,0.625)")]
    pub points: Points,
    #[arg(long, value_enum, default_value_t = Observable::Propagator)]
    pub observable: Observable,
    /// Edge directions for the energy observable, e.g. "v,v"
    #[arg(long, value_parser = parse_dirs)]
    pub labels: Option<Dirs>,
    /// Initial lattice spacing
    #[arg(long, default_value_t = 0.0625)]
    pub a0: f64,
    #[arg(long, default_value_t = 4)]
    pub halvings: u32,
    #[arg(long, default_value_t = 1.0)]
    pub ell1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ell2: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct MultiscaleArgs {
    #[command(flatten)]
    pub model: Model,
    /// Scale of the bulk/edge split
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub h: i32,
    #[arg(long, default_value_t = 1)]
    pub fit_min: i64,
    #[arg(long, default_value_t = 8)]
    pub fit_max: i64,
    /// Write bulk and edge decay profiles as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct KernelsArgs {
    #[command(flatten)]
    pub model: Model,
    /// Random kernels per cancellation check
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Random kernels per norm inequality
    #[arg(long, default_value_t = 50)]
    pub battery: usize,
    #[arg(long, default_value_t = 0.1)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Circumference of the cylinder used for the RG-step demo
    #[arg(long = "rg-L", default_value_t = 6)]
    pub rg_l: usize,
    /// Rows of the cylinder used for the RG-step demo
    #[arg(long = "rg-M", default_value_t = 3)]
    pub rg_m: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Debug, Serialize)]
pub struct Edges(pub Vec<Edge>);

#[derive(Clone, Debug, Serialize)]
pub struct Points(pub Vec<(f64, f64)>);

#[derive(Clone, Debug, Serialize)]
pub struct Dirs(pub Vec<Direction>);

/// `"(a,b),(c,d)"` into pairs; tags before the parentheses are returned too.
fn parse_pairs(s: &str) -> std::result::Result<Vec<(String, String, String)>, String> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| format!("expected '(' in {rest:?}"))?;
        let close = rest.find(')').ok_or_else(|| format!("unclosed '(' in {rest:?}"))?;
        let tag = rest[..open].trim().trim_start_matches(',').trim().to_string();
        let (a, b) = rest[open + 1..close].split_once(',').ok_or_else(|| format!("expected two coordinates in {:?}", &rest[..=close]))?;
        out.push((tag, a.trim().to_string(), b.trim().to_string()));
        rest = rest[close + 1..].trim_start().trim_start_matches(',').trim_start();
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_points(s: &str) -> std::result::Result<Points, String> {
    parse_pairs(s)?
        .into_iter()
        .map(|(tag, a, b)| {
            if !tag.is_empty() {
                return Err(format!("unexpected {tag:?} before a point"));
            }
            let x: f64 = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
            let y: f64 = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
            Ok((x, y))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Points)
}

fn parse_dir(s: &str) -> std::result::Result<Direction, String> {
    match s.trim() {
        "h" | "H" => Ok(Direction::Horizontal),
        "v" | "V" => Ok(Direction::Vertical),
        o => Err(format!("direction must be h or v, got {o:?}")),
    }
}

fn parse_dirs(s: &str) -> std::result::Result<Dirs, String> {
    s.split(',').map(parse_dir).collect::<std::result::Result<_, _>>().map(Dirs)
}

fn parse_edges(s: &str) -> std::result::Result<Edges, String> {
    parse_pairs(s)?
        .into_iter()
        .map(|(tag, a, b)| {
            let d = parse_dir(&tag)?;
            let x: i64 = a.parse().map_err(|e| format!("{a:?}: {e}"))?;
            let y: i64 = b.parse().map_err(|e| format!("{b:?}: {e}"))?;
            Ok(Edge::new(Site::new(x, y), d))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Edges)
}
