use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stargraph::birman::{bs_spectrum, count_bound, DEFAULT_NODES_PER_EDGE};
use stargraph::config::{parse_config, Config};
use stargraph::edge::SpectralParameter;
use stargraph::fd::build_matrix;
use stargraph::secular::{find_eigenvalues_with, SecularOptions, SpectralResult, Window};
use stargraph::squeeze::{squeeze_experiment, SqueezeOptions};
use stargraph::weak::{weak_scan, WeakScanOptions};
use stargraph::{Coupling, StarGraph};

mod output;

use output::{fmt_f64, fmt_opt, Manifest, Table};

const DEFAULT_LAMBDAS: [f64; 4] = [0.02, 0.01, 0.005, 0.0025];
const DEFAULT_EPSILONS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const DEFAULT_FD_H: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "stargraph", version, about = "Bound states of Schrödinger operators on star graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Negative eigenvalues of the configured operator.
    Eigen(Common),
    /// Ground state of H_0(lambda V) against the two-term weak-coupling expansion.
    WeakScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing coupling grid.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Eigenvalues of the discretized Birman-Schwinger kernel at -kappa^2.
    Bs {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Upper bound on the number of negative eigenvalues.
    Bound(Common),
    /// Squeezed potentials against their delta-coupling limit.
    Squeeze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        kappa0: Option<f64>,
    },
    /// Finite-difference eigenvalues next to the secular ones.
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    tol_root: Option<f64>,
    #[arg(long)]
    kappa_max: Option<f64>,
    #[arg(long)]
    nodes_per_edge: Option<usize>,
    #[arg(long)]
    fd_h: Option<f64>,
    #[arg(long = "fd-L")]
    fd_l: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl From<stargraph::Error> for Failure {
    fn from(e: stargraph::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

struct Context {
    config: Config,
    manifest: Manifest,
    secular: SecularOptions,
    kappa_max: Option<f64>,
}

impl Context {
    fn window(&self, graph: &StarGraph) -> Result<Window, Failure> {
        let w = Window::default_for(graph);
        Ok(match self.kappa_max {
            Some(hi) => w.with_hi(hi)?,
            None => w,
        })
    }

    fn spectrum(&self, graph: &StarGraph) -> Result<SpectralResult, Failure> {
        Ok(find_eigenvalues_with(graph, self.window(graph)?, &self.secular)?)
    }
}

fn overrides(common: &Common, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((k.to_string(), v));
        }
    };
    push("tol-root", common.tol_root.map(fmt_f64));
    push("kappa-max", common.kappa_max.map(fmt_f64));
    push("nodes-per-edge", common.nodes_per_edge.map(|n| n.to_string()));
    push("fd-h", common.fd_h.map(fmt_f64));
    push("fd-L", common.fd_l.map(fmt_f64));
    for (k, v) in extra {
        out.push((k.to_string(), v.clone()));
    }
    out
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn load(subcommand: &str, common: &Common, extra: &[(&str, String)]) -> Result<Context, Failure> {
    let bytes = std::fs::read(&common.config)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", common.config.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Input(format!("{} is not UTF-8", common.config.display())))?;
    let config = parse_config(&text)?;
    let mut secular = SecularOptions::default();
    if let Some(t) = common.tol_root {
        if t.is_nan() || t <= 0.0 {
            return Err(Failure::Input("--tol-root must be positive".into()));
        }
        secular.tol_root = t;
    }
    let kappa_max = common.kappa_max.or(config.experiment.kappa_max);
    Ok(Context {
        manifest: Manifest::new(&common.config, subcommand, overrides(common, extra), &common.out, &bytes),
        config,
        secular,
        kappa_max,
    })
}

fn require_half_lines_ideal(graph: &StarGraph, what: &str) -> Result<(), Failure> {
    if !graph.all_infinite() {
        return Err(Failure::Input(format!("{what} needs half-line edges")));
    }
    if graph.coupling() != Coupling::Delta(0.0) {
        return Err(Failure::Input(format!("{what} needs alpha = 0")));
    }
    Ok(())
}

fn eigen(common: &Common) -> Result<(), Failure> {
    let ctx = load("eigen", common, &[])?;
    let levels = ctx.spectrum(&ctx.config.graph)?;
    let mut t = Table::new(&["kappa", "energy", "multiplicity"]);
    for e in &levels.eigenvalues {
        t.row(vec![fmt_f64(e.kappa), fmt_f64(e.energy), e.multiplicity.to_string()]);
    }
    t.write(&common.out, "eigen.csv", &ctx.manifest)
}

fn weak(common: &Common, lambdas: &Option<Vec<f64>>) -> Result<(), Failure> {
    let extra: Vec<(&str, String)> = lambdas.iter().map(|l| ("lambdas", fmt_list(l))).collect();
    let ctx = load("weak-scan", common, &extra)?;
    let grid = lambdas
        .clone()
        .or_else(|| ctx.config.experiment.lambdas.clone())
        .unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let opts = WeakScanOptions {
        kappa_max: ctx.kappa_max,
        secular: ctx.secular,
        ..WeakScanOptions::default()
    };
    let scan = weak_scan(&ctx.config.graph, &grid, &opts)?;
    let mut t = Table::new(&[
        "lambda",
        "kappa_numeric",
        "kappa_asym1",
        "kappa_asym2",
        "residual",
        "residual_over_lambda3",
        "flags",
    ]);
    for r in &scan.rows {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.label()).collect();
        t.row(vec![
            fmt_f64(r.lambda),
            fmt_opt(r.kappa_numeric),
            fmt_f64(r.kappa_asym1),
            fmt_f64(r.kappa_asym2),
            fmt_opt(r.residual),
            fmt_opt(r.residual_over_lambda3),
            flags.join("|"),
        ]);
    }
    t.write(&common.out, "weak.csv", &ctx.manifest)
}

fn bs(common: &Common, kappa: Option<f64>) -> Result<(), Failure> {
    let extra: Vec<(&str, String)> = kappa.iter().map(|&k| ("kappa", fmt_f64(k))).collect();
    let ctx = load("bs", common, &extra)?;
    require_half_lines_ideal(&ctx.config.graph, "bs")?;
    let kappa = kappa
        .or(ctx.config.experiment.kappa)
        .ok_or_else(|| Failure::Input("bs needs --kappa or `kappa` in [experiment]".into()))?;
    let k = SpectralParameter::new(kappa)?;
    let nodes = common.nodes_per_edge.unwrap_or(DEFAULT_NODES_PER_EDGE);
    let mu = bs_spectrum(&ctx.config.graph.potentials(), k, nodes)?;
    let mut t = Table::new(&["index", "eigenvalue"]);
    for (i, m) in mu.iter().enumerate() {
        t.row(vec![i.to_string(), fmt_f64(*m)]);
    }
    t.write(&common.out, "bs.csv", &ctx.manifest)
}

fn bound(common: &Common) -> Result<(), Failure> {
    let ctx = load("bound", common, &[])?;
    require_half_lines_ideal(&ctx.config.graph, "bound")?;
    let b = count_bound(&ctx.config.graph.potentials())?;
    let count = ctx.spectrum(&ctx.config.graph)?.count();
    let mut t = Table::new(&["mean_negative", "diag_term", "cross_term", "bound", "actual_count"]);
    t.row(vec![
        fmt_f64(b.mean_negative),
        fmt_f64(b.diag_term),
        fmt_f64(b.cross_term),
        fmt_f64(b.bound),
        count.to_string(),
    ]);
    t.write(&common.out, "bound.csv", &ctx.manifest)
}

fn squeeze(common: &Common, epsilons: &Option<Vec<f64>>, kappa0: Option<f64>) -> Result<(), Failure> {
    let mut extra: Vec<(&str, String)> = epsilons.iter().map(|e| ("epsilons", fmt_list(e))).collect();
    extra.extend(kappa0.iter().map(|&k| ("kappa0", fmt_f64(k))));
    let ctx = load("squeeze", common, &extra)?;
    let w = ctx
        .config
        .squeeze
        .clone()
        .ok_or_else(|| Failure::Input("squeeze needs [squeeze.j] sections".into()))?;
    let grid = epsilons
        .clone()
        .or_else(|| ctx.config.experiment.epsilons.clone())
        .unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    let opts = SqueezeOptions {
        kappa0: kappa0.or(ctx.config.experiment.kappa0),
        probes: None,
        kappa_max: ctx.kappa_max,
        secular: ctx.secular,
    };
    let r = squeeze_experiment(&ctx.config.graph, &w, &grid, &opts)?;
    let mut t = Table::new(&["epsilon", "eigen_error", "max_kernel_probe_error"]);
    for row in &r.rows {
        t.row(vec![
            fmt_f64(row.epsilon),
            fmt_opt(row.eigen_error),
            fmt_f64(row.max_kernel_probe_error),
        ]);
    }
    t.write(&common.out, "squeeze.csv", &ctx.manifest)
}

fn oracle(common: &Common) -> Result<(), Failure> {
    let ctx = load("oracle", common, &[])?;
    let graph = &ctx.config.graph;
    let levels = ctx.spectrum(graph)?;
    let secular: Vec<f64> = {
        let mut e: Vec<f64> = levels
            .eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.energy, e.multiplicity))
            .collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let h = common.fd_h.unwrap_or(DEFAULT_FD_H);
    let truncation = match common.fd_l {
        Some(l) => l,
        None => {
            let support = graph.edges().iter().map(|e| e.potential().support_end()).fold(0.0, f64::max);
            let kmin = secular.iter().map(|e| (-e).sqrt()).fold(f64::INFINITY, f64::min);
            support + if kmin.is_finite() { 20.0 / kmin } else { 20.0 }
        }
    };
    let fd = build_matrix(graph, h, truncation)?.eigenvalues_below(0.0)?;
    let mut t = Table::new(&["index", "secular_energy", "fd_energy", "abs_difference"]);
    for i in 0..secular.len().max(fd.len()) {
        let s = secular.get(i).copied();
        let f = fd.get(i).copied();
        let d = s.zip(f).map(|(s, f)| (s - f).abs());
        t.row(vec![i.to_string(), fmt_opt(s), fmt_opt(f), fmt_opt(d)]);
    }
    t.write(&common.out, "oracle.csv", &ctx.manifest)
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::Eigen(c) => eigen(c),
        Command::WeakScan { common, lambdas } => weak(common, lambdas),
        Command::Bs { common, kappa } => bs(common, *kappa),
        Command::Bound(c) => bound(c),
        Command::Squeeze {
            common,
            epsilons,
            kappa0,
        } => squeeze(common, epsilons, *kappa0),
        Command::Oracle(c) => oracle(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Input(m) | Failure::Numeric(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
