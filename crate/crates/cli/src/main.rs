use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use kservice_core::instances::{gen_bad_instance, gen_random, BadInstanceParams, RandomSpec};
use kservice_core::invariants::{
    check_bad_instance, check_fact4, check_lemma1, check_lemma2, check_metric_axioms, check_power_triangle, CheckOutcome,
};
use kservice_core::io::{load_instance, parse_json, save_instance, save_json, InstanceFile, SolutionFile};
use kservice_core::list::{build_list, DEFAULT_THEORY_CAP};
use kservice_core::oracle::{oracle_constrained, OracleBudget};
use kservice_core::sampling::substream;
use kservice_core::solver::{practical_params, solve, SolveOptions};
use kservice_core::streaming::{stream_solve, write_stream_file, FileStream, MemoryStream, PointStream, StreamContext};
use kservice_core::{partition, AlgorithmParams, CenterSet, ConstraintSpec, Error, MetricInstance};

/// Constrained k-median / k-means: candidate-list solver, exact oracles,
/// adversarial generators and multi-pass streaming.
#[derive(Parser, Debug)]
#[command(name = "kservice", version)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "KSERVICE_SEED", default_value_t = 0)]
    seed: u64,

    /// Print human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,

    /// Worker threads [default: available cores].
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Solve with the sampled candidate list.
    Solve(SolveArgs),
    /// Optimal partition of the clients for fixed centers.
    Partition(PartitionArgs),
    /// Exact optimum by exhaustive search (small instances only).
    Oracle(OracleArgs),
    /// Build and print the candidate list.
    List(ListArgs),
    /// Solve in passes over a client stream.
    StreamSolve(StreamSolveArgs),
    /// Run the invariant suites and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    /// Decoy gadgets on which the candidate list misses the optimum.
    Bad,
    /// Uniform or blob points, Euclidean or matrix.
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Practical,
    Theory,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,

    /// JSON parameters. bad: {"k","s","delta","ell","big_delta"?};
    /// random: {"clients","facilities","mode"?,"spread"?,"dim"?,"ell"?,"blobs"?,"clients_are_facilities"?}.
    #[arg(long)]
    params: String,

    /// Constraint JSON stored in the file.
    #[arg(long)]
    constraint: Option<String>,

    /// Instance file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write the clients as a stream file.
    #[arg(long)]
    stream_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,

    /// Constraint JSON, e.g. '{"kind":"r_gather","r":[2,2]}'. Overrides the
    /// file's constraint; unconstrained when neither is given.
    #[arg(long)]
    constraint: Option<String>,

    /// Write the JSON result here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlgoArgs {
    /// Accuracy parameter in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,

    /// Parameter preset; theory uses the closed-form sample counts.
    #[arg(long, value_enum, default_value = "practical")]
    mode: ModeArg,

    /// Samples per cluster [default: 10k/eps^2, scaled by (k+m)/k with outliers].
    #[arg(long)]
    eta: Option<usize>,

    /// Repetitions [default: min(2^k, 64)].
    #[arg(long)]
    reps: Option<usize>,

    /// Approximation factor credited to seeding (theory mode).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,

    /// Largest eta*k theory mode will run.
    #[arg(long, default_value_t = DEFAULT_THEORY_CAP)]
    theory_cap: u64,

    /// Skip center sets emitted by an earlier repetition.
    #[arg(long)]
    dedup: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    io: InstanceArgs,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    #[command(flatten)]
    algo: AlgoArgs,

    /// Stop at the first zero-cost batch.
    #[arg(long)]
    early_exit: bool,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    io: InstanceArgs,

    /// Center point ids, comma separated; cluster j uses the j-th.
    #[arg(long, value_delimiter = ',', required = true)]
    centers: Vec<usize>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    io: InstanceArgs,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    #[arg(long, default_value_t = OracleBudget::default().max_clients)]
    max_clients: usize,

    #[arg(long, default_value_t = OracleBudget::default().max_facilities)]
    max_facilities: usize,

    #[arg(long, default_value_t = OracleBudget::default().max_k)]
    max_k: usize,

    /// Labelings enumerated before giving up.
    #[arg(long, default_value_t = OracleBudget::default().max_states)]
    max_states: u64,
}

#[derive(Args, Debug)]
struct ListArgs {
    /// Instance file (JSON).
    #[arg(long)]
    instance: PathBuf,

    /// Number of clusters.
    #[arg(long)]
    k: usize,

    #[command(flatten)]
    algo: AlgoArgs,

    /// Include every candidate center set in the output.
    #[arg(long)]
    emit_json: bool,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StreamSolveArgs {
    #[command(flatten)]
    solve: SolveArgs,

    /// Client records, one `id v1 v2 ...` line each; the instance's own
    /// clients when absent. Facilities always come from the instance.
    #[arg(long)]
    stream: Option<PathBuf>,

    /// Bucket width of the representative graph [default: --epsilon].
    #[arg(long)]
    graph_epsilon: Option<f64>,

    /// Report passes and peak stored records (stderr and meta).
    #[arg(long)]
    report_passes: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Instance files to check.
    files: Vec<PathBuf>,

    /// Also check this many generated random instances.
    #[arg(long, default_value_t = 0)]
    batch: usize,

    /// Clients per generated instance.
    #[arg(long, default_value_t = 7)]
    clients: usize,

    /// Facilities per generated instance.
    #[arg(long, default_value_t = 6)]
    facilities: usize,

    /// k for the exhaustive client-centers check.
    #[arg(long, default_value_t = 2)]
    k: usize,

    /// Random triples and subsets per sampled check.
    #[arg(long, default_value_t = 200)]
    samples: usize,

    /// List-builder seeds per decoy instance.
    #[arg(long, default_value_t = 3)]
    list_seeds: u64,

    /// Write the table as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.parallel {
        if n == 0 {
            eprintln!("error: --parallel must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let run = match &cli.command {
        Command::Gen(a) => gen(&cli, a),
        Command::Solve(a) => solve_cmd(&cli, a),
        Command::Partition(a) => partition_cmd(&cli, a),
        Command::Oracle(a) => oracle_cmd(&cli, a),
        Command::List(a) => list_cmd(&cli, a),
        Command::StreamSolve(a) => stream_cmd(&cli, a),
        Command::Verify(a) => verify(&cli, a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
        Err(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
    }
}

fn parse_constraint(text: &str) -> CliResult<ConstraintSpec> {
    parse_json(text).map_err(|e| Failure::Usage(format!("--constraint: {e}")))
}

/// Instance plus the constraint in force: `--constraint`, else the file's.
fn load(io: &InstanceArgs) -> CliResult<(MetricInstance, InstanceFile, ConstraintSpec)> {
    let (inst, file) = load_instance(&io.instance)?;
    let spec = match &io.constraint {
        Some(text) => parse_constraint(text)?,
        None => file.constraint.clone().unwrap_or_default(),
    };
    Ok((inst, file, spec))
}

fn params(a: &AlgoArgs, k: usize, ell: f64, spec: &ConstraintSpec) -> CliResult<AlgorithmParams> {
    if k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let mut p = match a.mode {
        ModeArg::Practical => practical_params(k, spec, a.epsilon)?,
        ModeArg::Theory => AlgorithmParams::theory(k, ell, a.epsilon, a.alpha, a.theory_cap)?,
    };
    if let Some(eta) = a.eta {
        p = p.with_eta(eta);
    }
    if let Some(reps) = a.reps {
        p = p.with_repetitions(reps);
    }
    p = p.with_dedup(a.dedup);
    p.validate()?;
    Ok(p)
}

/// Writes `value` to `out` if given, then prints JSON or the table.
fn finish(cli: &Cli, value: &Value, out: Option<&Path>, table: impl FnOnce() -> String) -> CliResult<()> {
    if let Some(path) = out {
        save_json(path, value)?;
    }
    if cli.pretty {
        print!("{}", table());
    } else {
        println!("{value}");
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| Failure::Core(Error::Internal(e.to_string())))
}

fn solution_table(sol: &SolutionFile) -> String {
    let mut sizes = vec![0usize; sol.centers.len()];
    for &j in sol.assignment.values() {
        sizes[j] += 1;
    }
    let mut s = String::new();
    let _ = writeln!(s, "cost     {}", sol.cost);
    let _ = writeln!(s, "{:<8} {:>8} {:>6}", "cluster", "center", "size");
    for (j, (c, n)) in sol.centers.iter().zip(&sizes).enumerate() {
        let _ = writeln!(s, "{j:<8} {c:>8} {n:>6}");
    }
    if !sol.excluded.is_empty() {
        let ids: Vec<String> = sol.excluded.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "excluded {}", ids.join(" "));
    }
    s
}

fn emit_solution(cli: &Cli, sol: &SolutionFile, out: Option<&Path>) -> CliResult<()> {
    finish(cli, &to_value(sol)?, out, || solution_table(sol))
}

fn base_meta(cli: &Cli, command: &str, spec: &ConstraintSpec) -> CliResult<Map<String, Value>> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("seed".into(), cli.seed.into());
    m.insert("constraint".into(), to_value(spec)?);
    Ok(m)
}

fn gen(cli: &Cli, a: &GenArgs) -> CliResult<()> {
    let constraint = a.constraint.as_deref().map(parse_constraint).transpose()?;
    let (inst, meta) = match a.kind {
        GenKind::Bad => {
            let p: BadInstanceParams = parse_json(&a.params).map_err(|e| Failure::Usage(format!("--params: {e}")))?;
            let bundle = gen_bad_instance(&p)?;
            (bundle.instance, json!({ "generator": "bad", "params": p }))
        }
        GenKind::Random => {
            let spec: RandomSpec = parse_json(&a.params).map_err(|e| Failure::Usage(format!("--params: {e}")))?;
            let inst = gen_random(&spec, &mut substream(cli.seed, &[]))?;
            (inst, json!({ "generator": "random", "params": spec, "seed": cli.seed }))
        }
    };
    if let Some(path) = &a.stream_out {
        write_stream_file(&inst, path)?;
    }
    let summary = json!({
        "clients": inst.n_clients(),
        "facilities": inst.n_facilities(),
        "mode": inst.metric().mode_name(),
    });
    match &a.out {
        Some(path) => {
            save_instance(path, &inst, constraint, Some(meta))?;
            let mut s = summary;
            s["out"] = path.display().to_string().into();
            finish(cli, &s, None, || {
                format!("wrote {} ({} clients, {} facilities)\n", path.display(), inst.n_clients(), inst.n_facilities())
            })
        }
        None => {
            let file = InstanceFile::from_instance(&inst, constraint, Some(meta));
            let v = to_value(&file)?;
            if cli.pretty {
                println!("{}", serde_json::to_string_pretty(&v).expect("JSON value serializes"));
            } else {
                println!("{v}");
            }
            Ok(())
        }
    }
}

fn solve_cmd(cli: &Cli, a: &SolveArgs) -> CliResult<()> {
    let (inst, _, spec) = load(&a.io)?;
    let p = params(&a.algo, a.k, inst.ell(), &spec)?;
    let opts = SolveOptions { parallel: None, early_exit: a.early_exit };
    let sol = solve(&inst, a.k, &spec, &p, cli.seed, &opts)?;
    let mut meta = base_meta(cli, "solve", &spec)?;
    meta.insert("params".into(), to_value(&p)?);
    let file = SolutionFile::from_solution(&inst, &sol, meta);
    emit_solution(cli, &file, a.io.out.as_deref())
}

fn partition_cmd(cli: &Cli, a: &PartitionArgs) -> CliResult<()> {
    let (inst, _, spec) = load(&a.io)?;
    let idx = a
        .centers
        .iter()
        .map(|&p| inst.facility_at_point(p).ok_or_else(|| Failure::Usage(format!("point {p} is not a facility"))))
        .collect::<CliResult<Vec<_>>>()?;
    let centers = CenterSet::new(idx, inst.n_facilities())?;
    let res = partition(&inst, &centers, &spec)?;
    let mut meta = base_meta(cli, "partition", &spec)?;
    if let Some(d) = &res.demand_assignment {
        meta.insert("demand_assignment".into(), to_value(d)?);
    }
    let file = SolutionFile::from_parts(&inst, centers.as_slice(), &res.clustering, res.cost, meta);
    emit_solution(cli, &file, a.io.out.as_deref())
}

fn oracle_cmd(cli: &Cli, a: &OracleArgs) -> CliResult<()> {
    let (inst, _, spec) = load(&a.io)?;
    if a.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let budget = OracleBudget {
        max_clients: a.max_clients,
        max_facilities: a.max_facilities,
        max_k: a.max_k,
        max_states: a.max_states,
    };
    let opt = oracle_constrained(&inst, a.k, &spec, &budget)?;
    let meta = base_meta(cli, "oracle", &spec)?;
    let file = SolutionFile::from_parts(&inst, opt.centers.as_slice(), &opt.clustering, opt.cost, meta);
    emit_solution(cli, &file, a.io.out.as_deref())
}

fn list_cmd(cli: &Cli, a: &ListArgs) -> CliResult<()> {
    let (inst, _) = load_instance(&a.instance)?;
    let p = params(&a.algo, a.k, inst.ell(), &ConstraintSpec::Unconstrained)?;
    let list = build_list(&inst, a.k, &p, cli.seed)?;
    let fac = |v: &[usize]| v.iter().map(|&f| inst.facility_point(f)).collect::<Vec<_>>();
    let reps: Vec<Value> = list
        .repetitions()
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "samples": r.samples.iter().map(|&c| inst.client_point(c)).collect::<Vec<_>>(),
                "pool": fac(&r.pool),
                "subsets": u64::try_from(r.subset_count(a.k)).unwrap_or(u64::MAX),
            })
        })
        .collect();
    let mut v = json!({
        "k": a.k,
        "seed": cli.seed,
        "params": to_value(&p)?,
        "seeds": list.seeds().iter().map(|&c| inst.client_point(c)).collect::<Vec<_>>(),
        "facilities": fac(&list.facilities().into_iter().collect::<Vec<_>>()),
        "len_bound": u64::try_from(list.len_bound()).unwrap_or(u64::MAX),
        "repetitions": reps,
    });
    if a.emit_json {
        v["candidates"] = list.iter().map(|c| fac(c.centers.as_slice())).collect::<Vec<_>>().into();
    }
    finish(cli, &v, a.out.as_deref(), || {
        let mut s = String::new();
        let _ = writeln!(s, "eta {} x k {}, {} repetitions, at most {} candidates", p.eta, a.k, p.repetitions, list.len_bound());
        let _ = writeln!(s, "{:<6} {:>8} {:>6} {:>10}", "rep", "samples", "pool", "subsets");
        for r in list.repetitions() {
            let _ = writeln!(s, "{:<6} {:>8} {:>6} {:>10}", r.index, r.samples.len(), r.pool.len(), r.subset_count(a.k));
        }
        s
    })
}

fn stream_cmd(cli: &Cli, a: &StreamSolveArgs) -> CliResult<()> {
    let s = &a.solve;
    let (inst, _, spec) = load(&s.io)?;
    let p = params(&s.algo, s.k, inst.ell(), &spec)?;
    let ctx = StreamContext::from_instance(&inst);
    let eps = a.graph_epsilon.unwrap_or(s.algo.epsilon);
    let mut stream: Box<dyn PointStream> = match &a.stream {
        Some(path) => Box::new(FileStream::open(path, ctx.kind())?),
        None => Box::new(MemoryStream::from_instance(&inst)),
    };
    let st = stream_solve(stream.as_mut(), &ctx, s.k, &spec, &p, eps, None, cli.seed)?;
    let sol = &st.solution;
    let mut assignment = std::collections::BTreeMap::new();
    let mut excluded = Vec::new();
    for (pos, l) in sol.clustering.labels().iter().enumerate() {
        match l {
            Some(j) => {
                assignment.insert(st.ids[pos], *j);
            }
            None => excluded.push(st.ids[pos]),
        }
    }
    let mut meta = base_meta(cli, "stream-solve", &spec)?;
    meta.insert("params".into(), to_value(&p)?);
    meta.insert("graph_epsilon".into(), eps.into());
    meta.insert("seeding".into(), sol.seeding_note.clone().into());
    meta.insert("candidates_evaluated".into(), sol.candidates_evaluated.into());
    if a.report_passes {
        meta.insert("passes".into(), st.passes.into());
        meta.insert("peak_records".into(), st.peak_records.into());
        eprintln!("passes: {}, peak stored records: {}", st.passes, st.peak_records);
    }
    let file = SolutionFile {
        cost: sol.cost,
        centers: sol.centers.as_slice().iter().map(|&f| inst.facility_point(f)).collect(),
        assignment,
        excluded,
        meta: Value::Object(meta),
    };
    emit_solution(cli, &file, s.io.out.as_deref())
}

struct Row {
    instance: String,
    outcome: Option<CheckOutcome>,
    name: String,
    note: String,
}

impl Row {
    fn of(instance: &str, o: CheckOutcome) -> Self {
        Row { instance: instance.into(), name: o.name.clone(), note: String::new(), outcome: Some(o) }
    }

    fn skipped(instance: &str, name: &str, why: String) -> Self {
        Row { instance: instance.into(), outcome: None, name: name.into(), note: why }
    }

    fn status(&self) -> &'static str {
        match &self.outcome {
            Some(o) if o.passed() => "PASS",
            Some(_) => "FAIL",
            None => "SKIP",
        }
    }
}

/// Decoy parameters recorded by `gen --kind bad`.
fn bad_params(meta: Option<&Value>) -> Option<BadInstanceParams> {
    let meta = meta?;
    if meta.get("generator")?.as_str()? != "bad" {
        return None;
    }
    serde_json::from_value(meta.get("params")?.clone()).ok()
}

fn check_instance(cli: &Cli, a: &VerifyArgs, name: &str, inst: &MetricInstance, meta: Option<&Value>, index: u64) -> CliResult<Vec<Row>> {
    let mut rng = substream(cli.seed, &[index]);
    let mut rows = vec![
        Row::of(name, check_metric_axioms(inst, 40, a.samples, &mut rng)),
        Row::of(name, check_power_triangle(inst, a.samples, &mut rng)),
        Row::of(name, check_lemma1(inst, a.samples, &mut rng)),
        Row::of(name, check_lemma2(inst, a.samples, &mut rng)),
    ];
    let k = a.k.min(inst.n_clients()).min(inst.n_facilities()).max(1);
    match check_fact4(inst, k, &OracleBudget::default()) {
        Ok(o) => rows.push(Row::of(name, o)),
        Err(Error::Budget(why)) => rows.push(Row::skipped(name, "client centers vs facilities (2^l)", why)),
        Err(e) => return Err(e.into()),
    }
    if let Some(p) = bad_params(meta) {
        let bundle = gen_bad_instance(&p)?;
        let mut same = CheckOutcome { name: "file matches regenerated gadget".into(), checked: 1, violations: 0, detail: String::new() };
        if bundle.instance != *inst {
            same.violations = 1;
            same.detail = "instance differs from the one its parameters generate".into();
        }
        rows.push(Row::of(name, same));
        let params = AlgorithmParams::practical(p.k, 0.5)?;
        let seeds: Vec<u64> = (0..a.list_seeds).map(|s| cli.seed.wrapping_add(s)).collect();
        for o in check_bad_instance(&bundle, &params, &seeds)? {
            rows.push(Row::of(name, o));
        }
    }
    Ok(rows)
}

fn verify(cli: &Cli, a: &VerifyArgs) -> CliResult<()> {
    if a.files.is_empty() && a.batch == 0 {
        return Err(Failure::Usage("give instance files or --batch N".into()));
    }
    let mut rows = Vec::new();
    for (i, path) in a.files.iter().enumerate() {
        let (inst, file) = load_instance(path)?;
        rows.extend(check_instance(cli, a, &path.display().to_string(), &inst, file.meta.as_ref(), i as u64)?);
    }
    for b in 0..a.batch {
        let spec = RandomSpec::new(a.clients, a.facilities);
        let inst = gen_random(&spec, &mut substream(cli.seed, &[0x7665_7269_6679, b as u64]))?;
        rows.extend(check_instance(cli, a, &format!("random#{b}"), &inst, None, (a.files.len() + b) as u64)?);
    }

    if let Some(path) = &a.out {
        let v: Vec<Value> = rows
            .iter()
            .map(|r| {
                json!({
                    "instance": r.instance,
                    "check": r.name,
                    "status": r.status(),
                    "checked": r.outcome.as_ref().map_or(0, |o| o.checked),
                    "violations": r.outcome.as_ref().map_or(0, |o| o.violations),
                    "detail": r.outcome.as_ref().map_or(r.note.clone(), |o| o.detail.clone()),
                })
            })
            .collect();
        save_json(path, &v)?;
    }

    let w_inst = rows.iter().map(|r| r.instance.len()).max().unwrap_or(8).max(8);
    let w_name = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    for r in &rows {
        let (checked, violations, detail) = match &r.outcome {
            Some(o) => (o.checked.to_string(), o.violations.to_string(), o.detail.as_str()),
            None => ("-".into(), "-".into(), r.note.as_str()),
        };
        if cli.pretty {
            println!("{:<4}  {:<w_inst$}  {:<w_name$}  {:>8}  {:>5}  {detail}", r.status(), r.instance, r.name, checked, violations);
        } else {
            println!("{}\t{}\t{}\t{checked}\t{violations}\t{detail}", r.status(), r.instance, r.name);
        }
    }
    let failed = rows.iter().filter(|r| r.status() == "FAIL").count();
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}
