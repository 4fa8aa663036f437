//! The `qrac` command line.
//!
//! Exit codes: 0 success, 2 bad configuration or input, 3 failed
//! verification. `QRAC_THREADS` caps the worker count.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::{classical_maxmin, Constraint};
use crate::error::{Error, Result};
use crate::io::{load_state, parse_decodings, parse_encodings, with_output, write_csv_rows, write_json, DecodingSpec, Format};
use crate::measures::{advantage_predicates, measure_set};
use crate::optimal::{
    equal_projection_residual, orthogonal_min_2to1, pmax, pmax_2to1, pmax_3to1, pmax_3to1_or_oracle,
    equalized_bound_2to1, OptimalResult,
};
use crate::oracle::{oracle_orthogonal_min, oracle_pmax, SphereSearchConfig};
use crate::pauli_bloch::{canonicalize, BellDiagonal, RotationPair, TwoQubitBloch, UnitVector3};
use crate::rac::{evaluate, simulate, DecodingSet, EncodingSet, RacReport, RacTask};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qrac", version, about = "Random access codes assisted by two-qubit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form optimal worst-case success and encodings.
    Pmax(PmaxArgs),
    /// Brute-force sphere search for the same optimum.
    Oracle(OracleArgs),
    /// Monte Carlo run of a protocol.
    Simulate(SimulateArgs),
    /// Classical baselines with one shared bit per party.
    Classical(ClassicalArgs),
    /// Correlation measures of a Bell-diagonal state or a grid of them.
    Measures(MeasuresArgs),
    /// Sweep the Bell-diagonal tetrahedron on a uniform grid.
    Scan(ScanArgs),
    /// Closed form against oracle and simulation against exact values.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args, Debug)]
pub struct ProblemArgs {
    /// State as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub state: String,
    /// `orthogonal-axes`, an axis list like `x,y`, or JSON 3-vectors.
    #[arg(long, default_value = "orthogonal-axes")]
    pub dec: String,
    /// Number of bits; inferred from explicit decodings.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Grid points per angle for the coarse sphere search.
    #[arg(long, default_value_t = 180)]
    pub grid: usize,
    #[arg(long, default_value_t = 200)]
    pub refine_iters: usize,
    #[arg(long, default_value_t = 0.7)]
    pub refine_shrink: f64,
    /// Step size at which refinement stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl SearchArgs {
    fn config(&self) -> SphereSearchConfig {
        SphereSearchConfig {
            coarse_grid: self.grid,
            refine_iters: self.refine_iters,
            refine_shrink: self.refine_shrink,
            tolerance: self.tol,
        }
    }
}

#[derive(Args, Debug)]
pub struct PmaxArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Use the sphere search for coplanar 3→1 decodings instead of failing.
    #[arg(long)]
    pub oracle_fallback: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Minimize over all orthogonal decoding pairs instead (2→1 only).
    #[arg(long)]
    pub orthogonal_min: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Encodings as JSON 3-vectors; the closed-form optimum when omitted.
    #[arg(long)]
    pub enc: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    Unrestricted,
    BobMaximallyMixed,
}

#[derive(Args, Debug)]
pub struct ClassicalArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ConstraintArg::Unrestricted)]
    pub constraint: ConstraintArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["state", "grid"])))]
pub struct MeasuresArgs {
    #[arg(long)]
    pub state: Option<String>,
    /// Grid points per axis over [-1, 1]³.
    #[arg(long)]
    pub grid: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Grid points per axis over [-1, 1]³.
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Random instances per code length.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Largest allowed |closed form − oracle|.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Trials per simulated instance.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A problem brought to the diagonal frame.
struct Resolved {
    task: RacTask,
    canonical: TwoQubitBloch,
    rotation: RotationPair,
    dec: DecodingSet,
}

impl Resolved {
    fn new(p: &ProblemArgs) -> Result<Self> {
        let state = load_state(&p.state)?;
        let (canonical, rotation) = canonicalize(&state);
        let (n, dec) = match parse_decodings(&p.dec)? {
            DecodingSpec::OrthogonalAxes => {
                let n = p.n.unwrap_or(2);
                RacTask::new(n)?;
                (n, DecodingSet::principal_axes(n))
            }
            DecodingSpec::Explicit(dirs) => {
                if let Some(n) = p.n {
                    if n != dirs.len() {
                        return Err(Error::SizeMismatch { what: "decoding directions", expected: n, got: dirs.len() });
                    }
                }
                (dirs.len(), DecodingSet::new(dirs).to_canonical(&rotation))
            }
        };
        Ok(Self { task: RacTask::new(n)?, canonical, rotation, dec })
    }

    fn lab_decodings(&self) -> Vec<[f64; 3]> {
        self.dec.from_canonical(&self.rotation).directions().iter().map(|d| d.to_array()).collect()
    }

    /// Report at the given canonical-frame optimum, with encodings in the input frame.
    fn report(&self, opt: OptimalResult) -> Result<RacReport> {
        let report = evaluate(&self.task, &self.canonical, &opt.encodings, &self.dec)?;
        let lab = OptimalResult { encodings: opt.encodings.from_canonical(&self.rotation), ..opt };
        Ok(report.with_optimal(lab))
    }
}

#[derive(Serialize)]
struct ProblemOutput {
    /// Correlations in the diagonal frame.
    correlations: [f64; 3],
    decodings: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equalized_bound: Option<f64>,
    report: RacReport,
}

fn emit_report(out: &ProblemOutput, args: &OutputArgs) -> Result<()> {
    with_output(args.out.as_deref(), |w| match Format::from(args.format) {
        Format::Json => write_json(out, w),
        Format::Csv => out.report.write_csv(w),
    })
}

fn emit<T: Serialize>(rows: &[T], single: bool, args: &OutputArgs) -> Result<()> {
    with_output(args.out.as_deref(), |w| match Format::from(args.format) {
        Format::Json if single => write_json(&rows[0], w),
        Format::Json => write_json(&rows, w),
        Format::Csv => write_csv_rows(rows, w),
    })
}

fn cmd_pmax(a: &PmaxArgs) -> Result<i32> {
    let r = Resolved::new(&a.problem)?;
    let opt = match r.task.n() {
        2 => pmax_2to1(&r.canonical, &r.dec)?,
        _ if a.oracle_fallback => pmax_3to1_or_oracle(&r.canonical, &r.dec, &SphereSearchConfig::default())?,
        _ => pmax_3to1(&r.canonical, &r.dec)?,
    };
    let equalized_bound = match r.task.n() {
        2 => Some(equalized_bound_2to1(&r.canonical, &r.dec)?),
        _ => None,
    };
    let out = ProblemOutput {
        correlations: r.canonical.correlations(),
        decodings: r.lab_decodings(),
        equalized_bound,
        report: r.report(opt)?,
    };
    emit_report(&out, &a.output)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct OrthogonalMinRow {
    closed_form: f64,
    oracle: f64,
    deviation: f64,
}

fn cmd_oracle(a: &OracleArgs) -> Result<i32> {
    let cfg = a.search.config();
    cfg.validate()?;
    if a.orthogonal_min {
        let (canonical, _) = canonicalize(&load_state(&a.problem.state)?);
        let closed_form = orthogonal_min_2to1(&canonical)?;
        let oracle = oracle_orthogonal_min(&canonical, &cfg)?;
        let row = OrthogonalMinRow { closed_form, oracle, deviation: (oracle - closed_form).abs() };
        emit(&[row], true, &a.output)?;
        return Ok(EXIT_OK);
    }
    let r = Resolved::new(&a.problem)?;
    let opt = oracle_pmax(&r.task, &r.canonical, &r.dec, &cfg)?;
    let out = ProblemOutput {
        correlations: r.canonical.correlations(),
        decodings: r.lab_decodings(),
        equalized_bound: None,
        report: r.report(opt)?,
    };
    emit_report(&out, &a.output)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulateOutput {
    trials: u64,
    seed: u64,
    exact_p_min: f64,
    exact_p_avg: f64,
    /// Largest |frequency − exact| in binomial standard deviations.
    max_sigma: f64,
    report: RacReport,
}

/// Largest deviation of `sim` from `exact` in units of the per-pair binomial
/// standard deviation. Pairs with zero variance count only when they differ.
pub fn max_sigma(sim: &RacReport, exact: &RacReport) -> f64 {
    let task = exact.task();
    let mut worst: f64 = 0.0;
    for x in 0..task.num_strings() {
        for k in 0..task.n() {
            let p = exact.prob(x, k);
            let shots = sim.trials(x, k).unwrap_or(1) as f64;
            let diff = (sim.prob(x, k) - p).abs();
            let sd = (p * (1.0 - p) / shots).sqrt();
            let z = if sd > 0.0 {
                diff / sd
            } else if diff > 1e-12 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(z);
        }
    }
    worst
}

fn cmd_simulate(a: &SimulateArgs) -> Result<i32> {
    let r = Resolved::new(&a.problem)?;
    let enc = match &a.enc {
        Some(arg) => EncodingSet::new(parse_encodings(arg)?).to_canonical(&r.rotation),
        None => match r.task.n() {
            2 => pmax_2to1(&r.canonical, &r.dec)?.encodings,
            _ => pmax_3to1_or_oracle(&r.canonical, &r.dec, &SphereSearchConfig::default())?.encodings,
        },
    };
    let exact = evaluate(&r.task, &r.canonical, &enc, &r.dec)?;
    let sim = simulate(&r.task, &r.canonical, &enc, &r.dec, a.trials, a.seed)?;
    let out = SimulateOutput {
        trials: a.trials,
        seed: a.seed,
        exact_p_min: exact.p_min(),
        exact_p_avg: exact.p_avg(),
        max_sigma: max_sigma(&sim, &exact),
        report: sim,
    };
    with_output(a.output.out.as_deref(), |w| match Format::from(a.output.format) {
        Format::Json => write_json(&out, w),
        Format::Csv => out.report.write_csv(w),
    })?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ClassicalRow {
    n: usize,
    constraint: String,
    value: f64,
    exact: String,
    certified: bool,
    shared_randomness_bound: f64,
}

fn cmd_classical(a: &ClassicalArgs) -> Result<i32> {
    let constraint = match a.constraint {
        ConstraintArg::Unrestricted => Constraint::Unrestricted,
        ConstraintArg::BobMaximallyMixed => Constraint::BobMaximallyMixed,
    };
    let r = classical_maxmin(a.n, constraint)?;
    with_output(a.output.out.as_deref(), |w| match Format::from(a.output.format) {
        Format::Json => write_json(&r, w),
        Format::Csv => write_csv_rows(
            &[ClassicalRow {
                n: r.n,
                constraint: r.constraint.to_string(),
                value: r.value,
                exact: r.exact.clone(),
                certified: r.certified,
                shared_randomness_bound: r.shared_randomness_bound,
            }],
            w,
        ),
    })?;
    Ok(EXIT_OK)
}

/// One row of the measures table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureRow {
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    pub p_orth: f64,
    pub q3: f64,
    pub s2: f64,
    pub s3: f64,
    pub d_geom: f64,
    pub adv_necessary: bool,
    pub adv_orthogonal: bool,
    pub adv_exists: bool,
}

pub fn measure_row(bd: &BellDiagonal) -> MeasureRow {
    let m = measure_set(bd);
    let p = advantage_predicates(bd);
    let [t1, t2, t3] = bd.t();
    MeasureRow {
        t1,
        t2,
        t3,
        p_orth: m.p_orth,
        q3: m.q3,
        s2: m.s2,
        s3: m.s3,
        d_geom: m.d_geom,
        adv_necessary: p.necessary_all_decodings,
        adv_orthogonal: p.all_orthogonal_2to1,
        adv_exists: p.exists_decoding_2to1,
    }
}

/// Rows for every point of the uniform grid on `[-1, 1]³` inside the
/// tetrahedron, in lexicographic order of `(T1, T2, T3)`.
pub fn scan_rows(grid: usize) -> Result<Vec<MeasureRow>> {
    if grid < 2 {
        return Err(Error::Config(format!("grid must have at least 2 points per axis, got {grid}")));
    }
    let value = |i: usize| -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
    let mut rows = Vec::new();
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                if let Ok(bd) = BellDiagonal::new(value(i), value(j), value(k)) {
                    rows.push(measure_row(&bd));
                }
            }
        }
    }
    Ok(rows)
}

fn cmd_measures(a: &MeasuresArgs) -> Result<i32> {
    if let Some(grid) = a.grid {
        emit(&scan_rows(grid)?, false, &a.output)?;
        return Ok(EXIT_OK);
    }
    let state = load_state(a.state.as_deref().expect("clap enforces one input"))?;
    let (canonical, _) = canonicalize(&state);
    let bd = BellDiagonal::from_bloch(&canonical, 1e-9)
        .ok_or_else(|| Error::Parse("measures needs a Bell-diagonal state (vanishing local Bloch vectors)".into()))?;
    emit(&[measure_row(&bd)], true, &a.output)?;
    Ok(EXIT_OK)
}

fn cmd_scan(a: &ScanArgs) -> Result<i32> {
    emit(&scan_rows(a.grid)?, false, &a.output)?;
    Ok(EXIT_OK)
}

fn random_bell_diagonal(rng: &mut ChaCha8Rng) -> BellDiagonal {
    loop {
        let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        if let Ok(bd) = BellDiagonal::new(t[0], t[1], t[2]) {
            return bd.ordered();
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> UnitVector3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    UnitVector3::from_angles(z.acos(), phi)
}

/// Random decodings with `|triple product| ≥ 0.05` for `n = 3` and an angle of
/// at least a few degrees between any two.
fn random_decodings(rng: &mut ChaCha8Rng, n: usize) -> DecodingSet {
    loop {
        let d: Vec<UnitVector3> = (0..n).map(|_| random_direction(rng)).collect();
        let v: Vec<_> = d.iter().map(|u| u.into_inner()).collect();
        let spread = (0..n).all(|i| (i + 1..n).all(|j| v[i].cross(&v[j]).norm() > 0.05));
        let volume = n == 2 || v[0].cross(&v[1]).dot(&v[2]).abs() > 0.05;
        if spread && volume {
            return DecodingSet::new(d);
        }
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    samples: usize,
    tolerance: f64,
    max_deviation_n2: f64,
    max_deviation_n3: f64,
    max_residual: f64,
    max_sigma: f64,
    passed: bool,
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    if a.samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let cfg = SphereSearchConfig::default();
    let mut deviation = [0.0f64; 2];
    let mut max_residual: f64 = 0.0;
    let mut sigma: f64 = 0.0;
    for (slot, n) in [2usize, 3].into_iter().enumerate() {
        let task = RacTask::new(n)?;
        for i in 0..a.samples {
            let s = random_bell_diagonal(&mut rng).to_bloch();
            let dec = random_decodings(&mut rng, n);
            let closed = pmax(&s, &dec)?;
            let oracle = oracle_pmax(&task, &s, &dec, &cfg)?;
            deviation[slot] = deviation[slot].max((closed.p_max - oracle.p_max).abs());
            max_residual = max_residual.max(equal_projection_residual(&s, &closed.encodings, &dec)?);
            // A few of the instances are also simulated.
            if i < 3 {
                let exact = evaluate(&task, &s, &closed.encodings, &dec)?;
                let sim = simulate(&task, &s, &closed.encodings, &dec, a.trials, a.seed.wrapping_add(i as u64))?;
                sigma = sigma.max(max_sigma(&sim, &exact));
            }
        }
    }
    let passed = deviation[0] <= a.tol && deviation[1] <= a.tol && max_residual <= 1e-9 && sigma <= 5.0;
    let out = VerifyOutput {
        samples: a.samples,
        tolerance: a.tol,
        max_deviation_n2: deviation[0],
        max_deviation_n3: deviation[1],
        max_residual,
        max_sigma: sigma,
        passed,
    };
    emit(&[out], true, &a.output)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY })
}

/// Applies `QRAC_THREADS` to the global pool. Later calls are no-ops.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("QRAC_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Error::Config(format!("QRAC_THREADS must be a positive integer, got {raw:?}")))?;
    // Fails only if a pool already exists, e.g. when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Pmax(a) => cmd_pmax(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Classical(a) => cmd_classical(a),
        Command::Measures(a) => cmd_measures(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            EXIT_CONFIG
        }
    }
}
