//! The `hyinc` command line. [`run`] holds everything so tests can drive it
//! without a subprocess.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_inclusions::arc::HybridArc;
use hybrid_inclusions::closeness::{closeness_margin, graph_distance, tau_eps_close, ProbeSchedule};
use hybrid_inclusions::definition::{load_system, parse_system, shipped, Definition, SystemDoc, SHIPPED};
use hybrid_inclusions::expr::Expr;
use hybrid_inclusions::fixtures;
use hybrid_inclusions::hybrid::PerturbationFamily;
use hybrid_inclusions::reach::{
    doubling_approx, inflation_approx, isc_probe, osc_probe, reach, reach_interval, Initial, ProbeConfig, ProbeReport,
    ReachConfig,
};
use hybrid_inclusions::report::{ConditionReport, Verdict};
use hybrid_inclusions::simulate::{solve, Priority, SolvePolicy};
use hybrid_inclusions::wellposedness::{check_b, check_c, check_v, check_w_p, sample_points, CheckConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "hyinc", version, about = "Simulate and check hybrid dynamical inclusions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one solution and print it as CSV (j,t,x1..xn).
    Simulate(SimulateArgs),
    /// Sample the reachable set at (T, J) or over [T_lo, T_hi] x {J}.
    Reach(ReachArgs),
    /// Check a condition list at sampled points.
    CheckConditions(CheckArgs),
    /// Compare two arcs written by `simulate`.
    Closeness(ClosenessArgs),
    /// Run a semicontinuity or approximation probe along a schedule.
    Probe(ProbeArgs),
    /// List the shipped examples or print their definition files.
    Examples(ExamplesArgs),
}

#[derive(Args, Debug)]
struct SystemArg {
    /// Definition file, or the name of a shipped example (e.g. bouncing_ball.json).
    #[arg(long)]
    system: String,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    sys: SystemArg,
    /// Initial state, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Budget on t + j.
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    #[arg(long, value_enum)]
    priority: Option<PriorityArg>,
    /// JSON solve policy; flags given on the command line override it.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the arc here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReachArgs {
    #[command(flatten)]
    sys: SystemArg,
    /// Initial state; repeat for several.
    #[arg(long, allow_hyphen_values = true, required = true)]
    x0: Vec<String>,
    #[arg(long = "T", conflicts_with = "interval")]
    t: Option<f64>,
    #[arg(long = "J", default_value_t = 0)]
    j: usize,
    /// Flow-time window T_lo T_hi.
    #[arg(long, num_args = 2, value_names = ["T_LO", "T_HI"])]
    interval: Option<Vec<f64>>,
    /// JSON reach configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    branch_budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the cloud as JSON instead of CSV.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    sys: SystemArg,
    #[arg(long, value_enum)]
    list: ListArg,
    /// JSON array of points; sampled from the system when absent.
    #[arg(long)]
    points: Option<PathBuf>,
    /// JSON check configuration (radii, deltas, sample counts).
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Half-width of the sampling box around the origin.
    #[arg(long, default_value_t = 2.0)]
    r#box: f64,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ClosenessArgs {
    /// Arc file (CSV from `simulate`, or JSON); give exactly two.
    #[arg(long, num_args = 1, required = true)]
    arc: Vec<PathBuf>,
    #[arg(long)]
    tau: f64,
    /// Also decide (τ, ε)-closeness.
    #[arg(long)]
    eps: Option<f64>,
    /// Weight of one jump in the graphical distance.
    #[arg(long, default_value_t = 1.0)]
    j_weight: f64,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    sys: SystemArg,
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long = "T")]
    t: f64,
    #[arg(long = "J", default_value_t = 0)]
    j: usize,
    /// JSON probe schedule {radii, deltas, samples, tol}.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// JSON probe configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inflation function for `osc`; defaults to the file's rho, else 1.
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    expect: Option<Expect>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ExamplesArgs {
    /// Print the definition file of this example.
    #[arg(long)]
    dump: Option<String>,
    /// Write every shipped definition file into this directory.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PriorityArg {
    FlowFirst,
    JumpFirst,
    Branch,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Expect {
    Pass,
    Fail,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
#[value(rename_all = "UPPER")]
enum ListArg {
    B,
    C,
    V,
    W,
    P,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum KindArg {
    Osc,
    Isc,
    Inflate,
    Double,
}

/// A failure that maps to an exit code; the message goes to standard error.
struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

type Res<T> = Result<T, Failure>;

/// Runs `hyinc` with `argv` (including the program name) and returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.cmd {
        Command::Simulate(a) => simulate_cmd(a, out),
        Command::Reach(a) => reach_cmd(a, out),
        Command::CheckConditions(a) => check_cmd(a, out, err),
        Command::Closeness(a) => closeness_cmd(a, out, err),
        Command::Probe(a) => probe_cmd(a, out, err),
        Command::Examples(a) => examples_cmd(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "hyinc: {msg}");
            code
        }
    }
}

fn load(spec: &str) -> Res<Definition> {
    let path = Path::new(spec);
    if path.exists() {
        return load_system(path).map_err(usage);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    match shipped(stem) {
        Some(text) => parse_system(text).map_err(usage),
        None => Err(usage(format!("no such file or shipped example: {spec}"))),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Res<T> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| usage(format!("{}: at {}: {}", path.display(), e.path(), e.inner())))
}

fn parse_vec(text: &str, dim: usize) -> Res<Vec<f64>> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number `{s}` in `{text}`"))))
        .collect::<Res<Vec<_>>>()?;
    if v.len() != dim {
        return Err(usage(format!("`{text}` has {} entries, the system has dimension {dim}", v.len())));
    }
    Ok(v)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, data: &str) -> Res<()> {
    match path {
        Some(p) => std::fs::write(p, data).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => match out.write_all(data.as_bytes()).and_then(|_| out.flush()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(usage(e)),
            _ => Ok(()),
        },
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn simulate_cmd(a: SimulateArgs, out: &mut dyn Write) -> Res<i32> {
    let def = load(&a.sys.system)?;
    let x0 = parse_vec(&a.x0, def.system.dim)?;
    let mut policy: SolvePolicy = match &a.policy {
        Some(p) => read_json(p)?,
        None => SolvePolicy::default(),
    };
    policy = policy.with_tau(a.tau).with_seed(a.seed);
    if let Some(p) = a.priority {
        policy = policy.with_priority(match p {
            PriorityArg::FlowFirst => Priority::FlowFirst,
            PriorityArg::JumpFirst => Priority::JumpFirst,
            PriorityArg::Branch => Priority::Branch,
        });
    }
    policy.validate().map_err(usage)?;
    let arc = solve(&def.system, &x0, &policy).map_err(usage)?;
    let data = match a.format {
        Format::Csv => arc.to_csv(),
        Format::Json => to_json(&arc),
    };
    emit(out, a.out.as_deref(), &data)?;
    Ok(EXIT_OK)
}

fn reach_cmd(a: ReachArgs, out: &mut dyn Write) -> Res<i32> {
    let def = load(&a.sys.system)?;
    let points = a.x0.iter().map(|x| parse_vec(x, def.system.dim)).collect::<Res<Vec<_>>>()?;
    let mut cfg: ReachConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ReachConfig::default(),
    };
    if let Some(b) = a.branch_budget {
        cfg.branch_budget = b;
    }
    let cloud = match (&a.interval, a.t) {
        (Some(iv), _) => reach_interval(&def.system, &Initial::Points(points), iv[0], iv[1], a.j, &cfg, a.seed),
        (None, Some(t)) => reach(&def.system, &Initial::Points(points), t, a.j, &cfg, a.seed),
        (None, None) => return Err(usage("give --T or --interval")),
    }
    .map_err(usage)?;
    let data = if a.json { to_json(&cloud) } else { cloud.to_csv() };
    emit(out, a.out.as_deref(), &data)?;
    Ok(EXIT_OK)
}

fn family_of(def: &Definition) -> PerturbationFamily {
    def.family.clone().unwrap_or_else(|| PerturbationFamily::degenerate(&def.system))
}

fn check_cmd(a: CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    let def = load(&a.sys.system)?;
    let h = &def.system;
    let mut cfg: CheckConfig = match &a.schedule {
        Some(p) => read_json(p)?,
        None => CheckConfig::default(),
    };
    cfg.seed = a.seed;
    let n = h.dim;
    let (lo, hi) = (vec![-a.r#box; n], vec![a.r#box; n]);
    let in_c = || sample_points(&h.c, &lo, &hi, a.samples, a.seed);
    let in_domain = || {
        let mut v = in_c();
        v.extend(sample_points(&h.d, &lo, &hi, a.samples, a.seed ^ 1));
        v
    };
    let given: Option<Vec<Vec<f64>>> = a.points.as_deref().map(read_json).transpose()?;
    if let Some(pts) = &given {
        if let Some(p) = pts.iter().find(|p| p.len() != n) {
            return Err(usage(format!("point {p:?} does not have dimension {n}")));
        }
    }
    let needs_family = |what: &str| -> Res<PerturbationFamily> {
        def.family.clone().ok_or_else(|| usage(format!("--list {what} needs a `family` section in the definition")))
    };
    let report = match a.list {
        ListArg::B => check_b(h, &given.unwrap_or_else(in_domain), &cfg),
        ListArg::C => check_c(&needs_family("C")?, h, &given.unwrap_or_else(in_domain), &cfg),
        ListArg::V => check_v(&h.c, &h.f, &h.d, &given.unwrap_or_else(in_c), &cfg).map_err(usage)?,
        ListArg::W | ListArg::P => {
            let letter = if a.list == ListArg::W { "W" } else { "P" };
            let full = check_w_p(&needs_family(letter)?, h, &given.unwrap_or_else(in_c), &cfg);
            ConditionReport { entries: full.entries.into_iter().filter(|e| e.id.starts_with(letter)).collect() }
        }
    };
    let data = if a.json { to_json(&report) } else { report.to_text() };
    emit(out, None, &data)?;
    let failed = report.entries.iter().any(|e| e.verdict == Verdict::Fail);
    Ok(judge(a.expect, !failed, err))
}

fn judge(expect: Option<Expect>, passed: bool, err: &mut dyn Write) -> i32 {
    let Some(e) = expect else { return EXIT_OK };
    let met = (e == Expect::Pass) == passed;
    let got = if passed { "pass" } else { "fail" };
    if met {
        EXIT_OK
    } else {
        let _ = writeln!(err, "hyinc: expected {}, got {got}", if e == Expect::Pass { "pass" } else { "fail" });
        EXIT_VERDICT
    }
}

fn read_arc(p: &Path) -> Res<HybridArc> {
    if p.extension().is_some_and(|e| e == "json") {
        return read_json(p);
    }
    let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    HybridArc::from_csv(&text).map_err(|e| usage(format!("{}: {e}", p.display())))
}

#[derive(Serialize)]
struct ClosenessOut {
    tau: f64,
    margin: f64,
    resolution: f64,
    graph_distance: f64,
    j_weight: f64,
    eps: Option<f64>,
    close: Option<bool>,
}

fn closeness_cmd(a: ClosenessArgs, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    if a.arc.len() != 2 {
        return Err(usage("give exactly two --arc files"));
    }
    if !(a.tau >= 0.0) {
        return Err(usage("--tau must be nonnegative"));
    }
    let (x, y) = (read_arc(&a.arc[0])?, read_arc(&a.arc[1])?);
    if x.dim != y.dim {
        return Err(usage(format!("arcs have dimensions {} and {}", x.dim, y.dim)));
    }
    let m = closeness_margin(&x, &y, a.tau);
    let close = a.eps.map(|e| tau_eps_close(&x, &y, a.tau, e));
    let r = ClosenessOut {
        tau: a.tau,
        margin: m.value,
        resolution: m.resolution,
        graph_distance: graph_distance(&x, &y, a.tau, a.j_weight),
        j_weight: a.j_weight,
        eps: a.eps,
        close,
    };
    let data = if a.json {
        to_json(&r)
    } else {
        let mut s = format!("{:<16} {:<14} {:<14}\n", "tau", "margin", "graph_dist");
        s.push_str(&format!("{:<16} {:<14.6e} {:<14.6e}\n", r.tau, r.margin, r.graph_distance));
        if let (Some(e), Some(c)) = (r.eps, r.close) {
            s.push_str(&format!("({}, {e})-close: {c}\n", r.tau));
        }
        s
    };
    emit(out, None, &data)?;
    Ok(judge(a.expect, close.unwrap_or(m.value.is_finite()), err))
}

fn probe_cmd(a: ProbeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Res<i32> {
    let def = load(&a.sys.system)?;
    let h = &def.system;
    let x0 = parse_vec(&a.x0, h.dim)?;
    let sched: ProbeSchedule = match &a.schedule {
        Some(p) => read_json(p)?,
        None => ProbeSchedule::default(),
    };
    sched.validate().map_err(usage)?;
    let cfg: ProbeConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ProbeConfig::default(),
    };
    let fam = family_of(&def);
    let report: ProbeReport = match a.kind {
        KindArg::Osc => {
            let rho = match &a.rho {
                Some(t) => Expr::parse(t, h.dim, &[]).map_err(|e| usage(format!("--rho: {e}")))?,
                None => def.rho.clone().unwrap_or_else(|| Expr::constant(1.0, h.dim)),
            };
            osc_probe(h, &rho, &x0, a.t, a.j, &sched, a.seed, &cfg)
        }
        KindArg::Isc => isc_probe(&fam, h, &x0, a.t, a.j, &sched, a.seed, &cfg),
        KindArg::Inflate => inflation_approx(&fam, h, &x0, a.t, a.j, &sched, a.seed, &cfg),
        KindArg::Double => doubling_approx(&fam, h, &x0, a.t, a.j, &sched, a.seed, &cfg),
    }
    .map_err(usage)?;
    let data = if a.json { to_json(&report) } else { report.to_text() };
    emit(out, None, &data)?;
    Ok(judge(a.expect, report.applicable && report.consistent, err))
}

fn examples_cmd(a: ExamplesArgs, out: &mut dyn Write) -> Res<i32> {
    if let Some(dir) = &a.dump_dir {
        std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        for (name, text) in SHIPPED {
            let p = dir.join(format!("{name}.json"));
            std::fs::write(&p, text).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        }
        return Ok(EXIT_OK);
    }
    if let Some(name) = &a.dump {
        let stem = Path::new(name).file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        let text = shipped(stem).ok_or_else(|| usage(format!("unknown example `{name}`")))?;
        emit(out, None, text)?;
        return Ok(EXIT_OK);
    }
    let mut s = String::new();
    for fx in fixtures::all() {
        let def = parse_system(shipped(fx.name).expect("every fixture ships a file")).map_err(usage)?;
        let doc: &SystemDoc = &def.doc;
        let family = if doc.family.is_some() { " family" } else { "" };
        s.push_str(&format!("{:<20} dim={}{family}  {}.json\n", fx.name, doc.dim, fx.name));
    }
    emit(out, None, &s)?;
    Ok(EXIT_OK)
}
