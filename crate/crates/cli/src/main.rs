use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracsep::fracderiv::{caputo_power, caputo_quad, caputo_time_coefficient, FractionalOrder, QUAD_NODES};
use fracsep::reduction::{
    assemble_solution, certify_example, closed_form_deltas_in, default_scenario_path, load_scenario, write_check_csv,
    CertifyOptions, ExampleScenario, Reading, Regime,
};
use fracsep::specfun::{gamma, ml_eval, MLParams};
use fracsep::subspaces::{default_corpus_path, format_real, load_table_corpus, verify_corpus, write_report_csv, Verdict};
use fracsep::Real;

/// Fixed default seed so that reports are reproducible.
const DEFAULT_SEED: u64 = 20240601;

#[derive(Parser)]
#[command(name = "fracsep", version, about = "Invariant-subspace verification and closed-form certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every tabulated product space for invariance under its restricted operator.
    VerifyCorpus(VerifyArgs),
    /// Run reduction, oracle, FODE, initial/boundary and PDE checks for one example.
    CertifyExample(CertifyArgs),
    /// Evaluate an assembled solution at points (x1, x2, t).
    Eval(EvalArgs),
    /// Evaluate E_{a,b}(z).
    MlEval(MlArgs),
    /// Caputo derivative of t^gamma by the power rule and by quadrature.
    Caputo(CaputoArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    case: Option<u32>,
    /// Shift one operator parameter after the printed restrictions are applied.
    #[arg(long, num_args = 2, value_names = ["NAME", "VALUE"], allow_negative_numbers = true)]
    perturb: Option<Vec<String>>,
    #[arg(long, default_value_t = 16)]
    draws: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Example id 1..5, read from the bundled scenario files.
    #[arg(long, conflicts_with = "scenario")]
    example: Option<u8>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the scenario's orders.
    #[arg(long, num_args = 2, value_names = ["ALPHA1", "ALPHA2"])]
    alpha: Option<Vec<Real>>,
    #[arg(long, value_enum, default_value_t = ReadingArg::Derived)]
    reading: ReadingArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReadingArg {
    Printed,
    Derived,
}

impl From<ReadingArg> for Reading {
    fn from(r: ReadingArg) -> Self {
        match r {
            ReadingArg::Printed => Reading::Printed,
            ReadingArg::Derived => Reading::Derived,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RegimeArg {
    Diffusion,
    Wave,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Diffusion => Regime::Diffusion,
            RegimeArg::Wave => Regime::Wave,
        }
    }
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// PDE residual grid: NX NY spatial points and NT positive times.
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NT"])]
    grid: Option<Vec<usize>>,
    /// Override the tolerance of one check, e.g. --tol oracle 1e-6.
    #[arg(long, num_args = 2, value_names = ["NAME", "VALUE"], action = clap::ArgAction::Append)]
    tol: Vec<String>,
    /// Oracle steps on the finest mesh.
    #[arg(long, default_value_t = 4096)]
    steps: usize,
    /// Branch the constants are meant for; must match the orders.
    #[arg(long, num_args = 2, value_enum, value_names = ["REGIME1", "REGIME2"])]
    branch: Option<Vec<RegimeArg>>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// One evaluation point; repeatable.
    #[arg(long, num_args = 3, value_names = ["X1", "X2", "T"], allow_negative_numbers = true, action = clap::ArgAction::Append)]
    point: Vec<Real>,
    /// CSV file with columns x1,x2,t.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Times T_END·j/N for j = 0..N at a fixed (x1, x2).
    #[arg(long, num_args = 4, value_names = ["X1", "X2", "T_END", "N"], allow_negative_numbers = true)]
    sweep: Option<Vec<Real>>,
    /// Also emit the Caputo time derivatives of u1 and u2; requires t > 0.
    #[arg(long)]
    caputo: bool,
}

#[derive(Args)]
struct MlArgs {
    #[arg(long)]
    a: Real,
    #[arg(long)]
    b: Real,
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    z: Vec<Real>,
}

#[derive(Args)]
struct CaputoArgs {
    #[arg(long)]
    alpha: Real,
    #[arg(long)]
    gamma: Real,
    #[arg(long, num_args = 1.., required = true)]
    t: Vec<Real>,
    #[arg(long, default_value_t = QUAD_NODES)]
    nodes: usize,
}

/// Input or usage problem: exit 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

type Outcome = Result<bool, Usage>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyCorpus(a) => cmd_verify_corpus(a),
        Command::CertifyExample(a) => cmd_certify_example(a),
        Command::Eval(a) => cmd_eval(a),
        Command::MlEval(a) => cmd_ml_eval(a),
        Command::Caputo(a) => cmd_caputo(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Usage> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Usage(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_verify_corpus(a: VerifyArgs) -> Outcome {
    let path = a.corpus.unwrap_or_else(default_corpus_path);
    if !path.exists() {
        return Err(Usage(format!("corpus file {} not found", path.display())));
    }
    let corpus = load_table_corpus(&path)?;
    let perturb = match &a.perturb {
        Some(v) => Some((v[0].clone(), v[1].parse::<Real>().map_err(|e| Usage(format!("perturbation value '{}': {e}", v[1])))?)),
        None => None,
    };
    let threads = a.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let reports = verify_corpus(&corpus, a.case, a.draws, a.seed, perturb.as_ref().map(|(n, v)| (n.as_str(), *v)), threads)?;
    let mut out = output(&a.out)?;
    write_report_csv(&reports, &mut out)?;
    out.flush()?;
    let mut ok = true;
    for r in &reports {
        if r.verdict == Verdict::Pass {
            continue;
        }
        match &r.erratum {
            Some(reason) => eprintln!("case {}: {} (known erratum: {reason})", r.case_id, r.verdict),
            None => {
                ok = false;
                eprintln!("case {}: {}", r.case_id, r.verdict);
            }
        }
        if let Some(w) = &r.witness {
            eprintln!("  witness: {w:?}");
        }
        for d in &r.diagnostics {
            eprintln!("  {d}");
        }
    }
    Ok(ok)
}

fn load(args: &ScenarioArgs) -> Result<ExampleScenario, Usage> {
    let path = match (&args.scenario, args.example) {
        (Some(p), _) => p.clone(),
        (None, Some(id)) if (1..=5).contains(&id) => default_scenario_path(id),
        (None, Some(id)) => return Err(Usage(format!("example id {id} outside 1..5"))),
        (None, None) => return Err(Usage("give --example or --scenario".into())),
    };
    let sc = load_scenario(Path::new(&path))?;
    Ok(match &args.alpha {
        Some(al) => sc.with_alphas(al[0], al[1])?,
        None => sc,
    })
}

fn cmd_certify_example(a: CertifyArgs) -> Outcome {
    let sc = load(&a.scenario)?;
    let reading: Reading = a.scenario.reading.into();
    if let Some(b) = &a.branch {
        closed_form_deltas_in(&sc, [b[0].into(), b[1].into()], reading)?;
    }
    let mut tolerances = BTreeMap::new();
    for pair in a.tol.chunks(2) {
        let v: Real = pair[1].parse().map_err(|e| Usage(format!("tolerance '{}': {e}", pair[1])))?;
        if v.is_nan() || v <= 0.0 {
            return Err(Usage(format!("tolerance for {} must be positive", pair[0])));
        }
        tolerances.insert(pair[0].clone(), v);
    }
    let grid = match &a.grid {
        Some(g) if g.iter().all(|&n| n >= 1) => (g[0], g[1], g[2]),
        Some(_) => return Err(Usage("grid sizes must be positive".into())),
        None => CertifyOptions::default().grid,
    };
    let opts = CertifyOptions { reading, oracle_steps: a.steps, grid, seed: a.seed, tolerances };
    let rows = certify_example(&sc, &opts)?;
    for name in opts.tolerances.keys() {
        if !rows.iter().any(|r| &r.check == name) {
            return Err(Usage(format!("no check named '{name}'")));
        }
    }
    let mut out = output(&a.out)?;
    write_check_csv(&rows, &mut out)?;
    out.flush()?;
    let failed: Vec<&str> = rows.iter().filter(|r| r.verdict != Verdict::Pass).map(|r| r.check.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("example {}: {} check(s) failed: {}", sc.example_id, failed.len(), failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn eval_points(a: &EvalArgs) -> Result<Vec<[Real; 3]>, Usage> {
    let mut pts: Vec<[Real; 3]> = a.point.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    if let Some(path) = &a.points {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?;
        for rec in rdr.deserialize::<(Real, Real, Real)>() {
            let (x1, x2, t) = rec?;
            pts.push([x1, x2, t]);
        }
    }
    if let Some(s) = &a.sweep {
        let n = s[3];
        if !(n >= 1.0 && n.fract() == 0.0) {
            return Err(Usage("sweep count must be a positive integer".into()));
        }
        pts.extend((0..=n as usize).map(|j| [s[0], s[1], s[2] * j as Real / n]));
    }
    Ok(pts)
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let sc = load(&a.scenario)?;
    let reading: Reading = a.scenario.reading.into();
    let pts = eval_points(&a)?;
    if let Some(p) = pts.iter().find(|p| p[2] < 0.0 || (a.caputo && p[2] <= 0.0)) {
        return Err(Usage(format!("t = {} rejected: Caputo outputs need t > 0 and values need t >= 0", p[2])));
    }
    let sol = assemble_solution(&sc, reading)?;
    let orders = [sc.alphas.0, sc.alphas.1];
    let mut w = csv::Writer::from_writer(output(&a.out)?);
    let mut header = vec!["x1", "x2", "t", "u1", "u2"];
    if a.caputo {
        header.extend(["caputo_u1", "caputo_u2"]);
    }
    w.write_record(&header)?;
    for p in &pts {
        let x = [p[0], p[1]];
        let mut rec = vec![format_real(p[0]), format_real(p[1]), format_real(p[2])];
        for s in 0..2 {
            rec.push(format_real(sol.eval(s, &x, p[2])?));
        }
        if a.caputo {
            for (s, order) in orders.iter().enumerate() {
                rec.push(format_real(caputo_u(&sol.components[s], *order, &x, p[2])?));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(true)
}

type Component = [(fracsep::fracderiv::TimeCoefficient, fracsep::basis::ProductBasisFunction)];

fn caputo_u(component: &Component, order: FractionalOrder, x: &[Real], t: Real) -> Result<Real, Usage> {
    let mut v = 0.0;
    for (d, w) in component {
        v += caputo_time_coefficient(d, order, t)? * w.eval(x);
    }
    Ok(v)
}

fn cmd_ml_eval(a: MlArgs) -> Outcome {
    let p = MLParams::new(a.a, a.b)?;
    let mut w = csv::Writer::from_writer(io::stdout());
    w.write_record(["a", "b", "z", "value"])?;
    for z in a.z {
        w.write_record([format_real(a.a), format_real(a.b), format_real(z), format_real(ml_eval(p, z)?)])?;
    }
    w.flush()?;
    Ok(true)
}

fn cmd_caputo(a: CaputoArgs) -> Outcome {
    let alpha = FractionalOrder::new(a.alpha)?;
    let k = alpha.ceil_index() as i32;
    // f^{(k)}(y) = Γ(γ+1)/Γ(γ−k+1)·y^{γ−k}; zero when γ is an integer below k.
    let g = a.gamma;
    let coef = if g.fract() == 0.0 && g < k as Real { 0.0 } else { gamma(g + 1.0)? / gamma(g - k as Real + 1.0)? };
    let fk = move |y: Real| coef * y.powf(g - k as Real);
    let mut w = csv::Writer::from_writer(io::stdout());
    w.write_record(["alpha", "gamma", "t", "power_rule", "quadrature"])?;
    for t in a.t {
        let exact = caputo_power(alpha, g, t)?;
        let quad = caputo_quad(&fk, alpha, t, a.nodes)?;
        w.write_record([format_real(a.alpha), format_real(g), format_real(t), format_real(exact), format_real(quad)])?;
    }
    w.flush()?;
    Ok(true)
}
