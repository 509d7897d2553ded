//! Command-line front end. `run` parses arguments, dispatches to the
//! library and returns the process exit code:
//! 0 positive answer, 1 negative answer, 2 usage or input error,
//! 3 resource cap.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use brdg::formula::{negate_for_validity, Class, Props, Property, QFFormula, Signature, UniversalSentence};
use brdg::io::{CertificateDoc, ModelDoc, StructureDoc, SCHEMA};
use brdg::oracle::{self, Oracle, OracleError, OracleOutcome, MAX_LATTICE_SIZE};
use brdg::solver::{decide_sat_with, Model, SatResult, SolverError, SolverOptions};
use brdg::structure::{certify, prime_filters, refine_filters, PartialStructure, Refusal};
use brdg::tiling::{self, GameOutcome, TilingError, TilingInstance};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "brdg", version, about = "Decide satisfiability and validity over brdg's and related classes")]
struct Cli {
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the search.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Is the quantifier-free formula satisfiable in the class?
    Sat(Decide),
    /// Is the universal sentence valid in the class?
    Valid(Decide),
    /// Does the partial structure embed into a member of the class?
    Certify(CertifyArgs),
    /// Brute-force enumeration of small algebras.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Corridor tiling games and their formulas.
    #[command(subcommand)]
    Tiling(TilingCommand),
}

#[derive(Args, Debug)]
struct ClassArgs {
    #[arg(long, value_parser = parse_class)]
    class: Class,
    /// Comma-separated subset of P1,P2,P3,P4.
    #[arg(long = "prop")]
    props: Option<String>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Input {
    /// File holding the formula.
    #[arg(long)]
    file: Option<PathBuf>,
    /// The formula itself.
    #[arg(long)]
    formula: Option<String>,
}

#[derive(Args, Debug)]
struct Decide {
    #[command(flatten)]
    class: ClassArgs,
    #[command(flatten)]
    input: Input,
    /// Enumerate every partial structure (formulas of size at most 3).
    #[arg(long)]
    naive: bool,
    /// Write the model or countermodel with its certificate here.
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Refuse formulas above this size.
    #[arg(long)]
    max_size: Option<u64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    structure: PathBuf,
    /// Must match the class in the file when given.
    #[arg(long, value_parser = parse_class)]
    class: Option<Class>,
    /// Overrides the properties listed in the file.
    #[arg(long = "prop")]
    props: Option<String>,
    /// Also refine the prime filters in a shuffled order and compare.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the certificate here.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// One algebra per line, as JSON.
    Enumerate {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
    },
    /// Search the small algebras for a satisfying valuation.
    Sat {
        #[command(flatten)]
        class: ClassArgs,
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
    },
    /// Check the axioms of the class on a total algebra.
    Check {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long = "prop")]
        props: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum TilingCommand {
    /// Write the formula of an instance.
    Gen {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the modal formula instead of its translation.
        #[arg(long)]
        modal: bool,
    },
    /// Decide who wins the game.
    Solve {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Check game, strategy model, algebra and translation against each other.
    Roundtrip {
        #[arg(short, long)]
        input: PathBuf,
        /// Largest Kripke model searched when Abelard wins.
        #[arg(long, default_value_t = 4)]
        max_worlds: usize,
    },
}

fn parse_class(s: &str) -> Result<Class, String> {
    s.parse()
}

/// Failure other than a negative answer.
#[derive(Debug)]
enum Failure {
    Input(String),
    Cap(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Cap(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Cap(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Formula(_) => input(e),
            SolverError::SizeCap(_) | SolverError::NaiveLimit(_) => Failure::Cap(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SizeGuard(_) => Failure::Cap(e.to_string()),
            OracleError::Formula(_) => input(e),
        }
    }
}

impl From<TilingError> for Failure {
    fn from(e: TilingError) -> Self {
        match e {
            TilingError::Budget(_) => Failure::Cap(e.to_string()),
            _ => input(e),
        }
    }
}

/// What a subcommand produced: the answer and the text for stdout.
struct Outcome {
    positive: bool,
    stdout: String,
}

struct Ctx {
    json: bool,
}

impl Ctx {
    /// Either the JSON document or the human summary.
    fn emit(&self, positive: bool, doc: Value, human: String) -> Outcome {
        let stdout = if self.json {
            let mut doc = doc;
            let mut map = serde_json::Map::new();
            map.insert("schema".into(), json!(SCHEMA));
            if let Value::Object(rest) = doc.take() {
                map.extend(rest);
            }
            let mut s = serde_json::to_string(&Value::Object(map)).expect("serializable");
            s.push('\n');
            s
        } else {
            human
        };
        Outcome { positive, stdout }
    }
}

/// Runs the command line on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match cli.jobs {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(input(e)),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(o) => {
            let _ = out.write_all(o.stdout.as_bytes());
            if o.positive {
                0
            } else {
                1
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    let ctx = Ctx { json: cli.json };
    match &cli.command {
        Command::Sat(d) => sat(&ctx, d),
        Command::Valid(d) => valid(&ctx, d),
        Command::Certify(c) => certify_cmd(&ctx, c),
        Command::Oracle(o) => oracle_cmd(&ctx, o),
        Command::Tiling(t) => tiling_cmd(&ctx, t),
    }
}

fn signature(class: Class, props: Option<&str>) -> Result<Signature, Failure> {
    let mut q = match props {
        Some(list) => Props::parse_list(list).map_err(Failure::Input)?,
        None => Props::EMPTY,
    };
    if class.has_unit() {
        q = q.with(Property::P4);
    }
    Signature::new(class, q).map_err(input)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn formula_text(i: &Input) -> Result<String, Failure> {
    match (&i.file, &i.formula) {
        (Some(p), _) => read(p),
        (None, Some(t)) => Ok(t.clone()),
        (None, None) => Err(Failure::Input("one of --file and --formula is required".into())),
    }
}

fn props_json(q: Props) -> Value {
    json!(q.iter().map(|p| p.to_string()).collect::<Vec<_>>())
}

fn solver_options(d: &Decide, size: u64) -> Result<SolverOptions, Failure> {
    if let Some(cap) = d.max_size {
        if size > cap {
            return Err(Failure::Cap(format!("formula size {size} exceeds --max-size {cap}")));
        }
    }
    Ok(SolverOptions {
        naive: d.naive,
        ..SolverOptions::default()
    })
}

fn describe_model(m: &Model, names: &[String]) -> String {
    let s = &m.structure;
    let mut out = format!(
        "  carrier {} (0 = {}, 1 = {}), {} prime filters\n",
        s.size(),
        s.name(s.zero()),
        s.name(s.one()),
        m.certificate.family.len()
    );
    for (name, &v) in names.iter().zip(&m.valuation) {
        out.push_str(&format!("  {name} = {}\n", s.name(v)));
    }
    out
}

fn write_witness(d: &Decide, m: &Model, names: &[String], q: Props) -> Result<(), Failure> {
    if let Some(path) = &d.witness {
        let doc = ModelDoc::of_model(m, names, q);
        let mut text = serde_json::to_string(&doc).expect("serializable");
        text.push('\n');
        write(path, &text)?;
    }
    Ok(())
}

fn model_json(m: &Model, names: &[String], q: Props) -> Value {
    let doc = ModelDoc::of_model(m, names, q);
    json!({
        "structure": doc.structure,
        "valuation": doc.valuation,
        "certificate": doc.certificate,
    })
}

fn sat(ctx: &Ctx, d: &Decide) -> Result<Outcome, Failure> {
    let sig = signature(d.class.class, d.class.props.as_deref())?;
    let phi = QFFormula::parse(&formula_text(&d.input)?, sig).map_err(input)?;
    let opts = solver_options(d, phi.size())?;
    let (result, stats) = decide_sat_with(&phi, sig, &opts)?;
    let names = phi.var_names();
    let (positive, model, human) = match &result {
        SatResult::Sat(m) => {
            write_witness(d, m, names, sig.props())?;
            (true, model_json(m, names, sig.props()), format!("sat\n{}", describe_model(m, names)))
        }
        SatResult::Unsat => (false, Value::Null, "unsat\n".to_string()),
    };
    let human = format!("{human}  formula size {}, {} search nodes\n", phi.size(), stats.nodes);
    let doc = json!({
        "command": "sat",
        "class": sig.class(),
        "properties": props_json(sig.props()),
        "formula": phi.to_string(),
        "size": phi.size(),
        "naive": d.naive,
        "result": if positive { "sat" } else { "unsat" },
        "model": model,
    });
    Ok(ctx.emit(positive, doc, human))
}

fn valid(ctx: &Ctx, d: &Decide) -> Result<Outcome, Failure> {
    let sig = signature(d.class.class, d.class.props.as_deref())?;
    let sentence = UniversalSentence::parse(&formula_text(&d.input)?, sig).map_err(input)?;
    let negation = negate_for_validity(&sentence);
    let opts = solver_options(d, negation.size())?;
    let (result, stats) = decide_sat_with(&negation, sig, &opts)?;
    let names = negation.var_names();
    let (positive, model, human) = match &result {
        SatResult::Unsat => (true, Value::Null, "valid\n".to_string()),
        SatResult::Sat(m) => {
            write_witness(d, m, names, sig.props())?;
            (
                false,
                model_json(m, names, sig.props()),
                format!("invalid, countermodel:\n{}", describe_model(m, names)),
            )
        }
    };
    let human = format!("{human}  formula size {}, {} search nodes\n", negation.size(), stats.nodes);
    let doc = json!({
        "command": "valid",
        "class": sig.class(),
        "properties": props_json(sig.props()),
        "sentence": sentence.to_string(),
        "size": negation.size(),
        "naive": d.naive,
        "result": if positive { "valid" } else { "invalid" },
        "countermodel": model,
    });
    Ok(ctx.emit(positive, doc, human))
}

fn load_structure(c: &CertifyArgs) -> Result<(PartialStructure, Props), Failure> {
    let doc = StructureDoc::parse(&read(&c.structure)?).map_err(input)?;
    if let Some(class) = c.class {
        if class != doc.class {
            return Err(Failure::Input(format!(
                "--class {class} does not match the structure's class {}",
                doc.class
            )));
        }
    }
    let (s, file_props) = doc.to_structure().map_err(input)?;
    let q = match &c.props {
        Some(list) => signature(doc.class, Some(list))?.props(),
        None => file_props,
    };
    Ok((s, q))
}

fn certify_cmd(ctx: &Ctx, c: &CertifyArgs) -> Result<Outcome, Failure> {
    let (s, q) = load_structure(c)?;
    let result = certify(&s, q);
    if let Err(Refusal::FilterLimit) = result {
        return Err(Failure::Cap(Refusal::FilterLimit.describe(&s)));
    }
    let shuffle = c.seed.map(|seed| {
        let mut initial = prime_filters(&s, q);
        initial.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut refined = refine_filters(&s, &initial, q);
        refined.sort_by_key(|f| f.0);
        let mut canonical = refine_filters(&s, &prime_filters(&s, q), q);
        canonical.sort_by_key(|f| f.0);
        refined == canonical
    });
    if shuffle == Some(false) {
        return Err(Failure::Input("filter refinement depends on the order of the filters".into()));
    }
    let mut doc = json!({
        "command": "certify",
        "class": s.class(),
        "properties": props_json(q),
        "carrier": s.size(),
    });
    if let Some(seed) = c.seed {
        doc["shuffle_seed"] = json!(seed);
    }
    match result {
        Ok(cert) => {
            let cdoc = CertificateDoc::of_certificate(&cert);
            if let Some(path) = &c.certificate {
                let mut text =
                    serde_json::to_string(&json!({"schema": SCHEMA, "certificate": cdoc})).expect("serializable");
                text.push('\n');
                write(path, &text)?;
            }
            doc["result"] = json!("certified");
            doc["certificate"] = json!(cdoc);
            let human = format!(
                "certified: {} prime filters, {} witnesses\n",
                cert.family.len(),
                cert.witnesses.len()
            );
            Ok(ctx.emit(true, doc, human))
        }
        Err(r) => {
            let reason = r.describe(&s);
            doc["result"] = json!("refused");
            doc["stage"] = json!(r.stage());
            doc["reason"] = json!(reason);
            Ok(ctx.emit(false, doc, format!("refused at {}: {reason}\n", r.stage())))
        }
    }
}

fn oracle_limit(max_size: usize) -> Result<(), Failure> {
    if max_size > MAX_LATTICE_SIZE {
        return Err(OracleError::SizeGuard(max_size).into());
    }
    Ok(())
}

fn oracle_cmd(ctx: &Ctx, o: &OracleCommand) -> Result<Outcome, Failure> {
    match o {
        OracleCommand::Enumerate { class, max_size } => {
            let sig = signature(class.class, class.props.as_deref())?;
            oracle_limit(*max_size)?;
            let oracle = Oracle::new(sig, *max_size)?;
            let mut stdout = String::new();
            for a in oracle.algebras() {
                let mut doc = StructureDoc::of_algebra(a);
                doc.schema = Some(SCHEMA);
                stdout.push_str(&serde_json::to_string(&doc).expect("serializable"));
                stdout.push('\n');
            }
            Ok(Outcome { positive: true, stdout })
        }
        OracleCommand::Sat { class, input: i, max_size } => {
            let sig = signature(class.class, class.props.as_deref())?;
            oracle_limit(*max_size)?;
            let phi = QFFormula::parse(&formula_text(i)?, sig).map_err(input)?;
            let oracle = Oracle::new(sig, *max_size)?;
            let mut doc = json!({
                "command": "oracle sat",
                "class": sig.class(),
                "properties": props_json(sig.props()),
                "formula": phi.to_string(),
                "max_size": max_size,
            });
            match oracle.find_witness(&phi)? {
                OracleOutcome::Witness { algebra, valuation } => {
                    let names = phi.var_names();
                    doc["result"] = json!("witness");
                    doc["algebra"] = json!(StructureDoc::of_algebra(&algebra));
                    doc["valuation"] = json!(names
                        .iter()
                        .cloned()
                        .zip(valuation.iter().copied())
                        .collect::<std::collections::BTreeMap<_, _>>());
                    let human = format!("witness in an algebra with {} elements\n", algebra.size());
                    Ok(ctx.emit(true, doc, human))
                }
                OracleOutcome::Exhausted => {
                    doc["result"] = json!("exhausted");
                    let human = format!("no witness among algebras with at most {max_size} elements\n");
                    Ok(ctx.emit(false, doc, human))
                }
            }
        }
        OracleCommand::Check { algebra, props } => {
            let mut doc = StructureDoc::parse(&read(algebra)?).map_err(input)?;
            if let Some(list) = props {
                doc.properties = signature(doc.class, Some(list))?.props().iter().collect();
            }
            let a = doc.to_algebra().map_err(input)?;
            let q = a.signature().props();
            let mut out = json!({
                "command": "oracle check",
                "class": a.class(),
                "properties": props_json(q),
                "size": a.size(),
            });
            match oracle::is_member(&a, a.class(), q) {
                true => {
                    out["result"] = json!("member");
                    Ok(ctx.emit(true, out, format!("member of {}\n", a.class())))
                }
                false => {
                    let v = a.check_axioms(a.class(), q).expect_err("not a member");
                    out["result"] = json!("not_member");
                    out["violation"] = json!(v.to_string());
                    Ok(ctx.emit(false, out, format!("not a member: {v}\n")))
                }
            }
        }
    }
}

fn load_instance(path: &Path) -> Result<TilingInstance, Failure> {
    let t: TilingInstance = serde_json::from_str(&read(path)?).map_err(input)?;
    t.validate()?;
    Ok(t)
}

fn tiling_cmd(ctx: &Ctx, t: &TilingCommand) -> Result<Outcome, Failure> {
    match t {
        TilingCommand::Gen { input: i, output, modal } => {
            let inst = load_instance(i)?;
            let phi = tiling::build_modal_formula(&inst)?.formula();
            let text = if *modal {
                phi.to_string()
            } else {
                tiling::translate(&phi)?.formula.to_string()
            };
            let text = format!("{text}\n");
            match output {
                Some(path) => {
                    write(path, &text)?;
                    Ok(Outcome {
                        positive: true,
                        stdout: String::new(),
                    })
                }
                None => Ok(Outcome {
                    positive: true,
                    stdout: text,
                }),
            }
        }
        TilingCommand::Solve { input: i } => {
            let inst = load_instance(i)?;
            let outcome = tiling::solve_game(&inst)?;
            let positive = outcome == GameOutcome::EloiseWins;
            let doc = json!({
                "command": "tiling solve",
                "n": inst.n,
                "s": inst.s(),
                "result": outcome,
            });
            let human = if positive { "Eloise wins\n" } else { "Abelard wins\n" };
            Ok(ctx.emit(positive, doc, human.to_string()))
        }
        TilingCommand::Roundtrip { input: i, max_worlds } => {
            let inst = load_instance(i)?;
            let r = tiling::round_trip(&inst, *max_worlds)?;
            let consistent = r.consistent();
            let mut doc = json!({"command": "tiling roundtrip", "consistent": consistent});
            if let (Value::Object(map), Value::Object(fields)) = (&mut doc, json!(r)) {
                map.extend(fields);
            }
            let mut human = format!(
                "{}; modal size {}, formula size {}, {} fresh variables\n",
                if r.outcome == GameOutcome::EloiseWins {
                    "Eloise wins"
                } else {
                    "Abelard wins"
                },
                r.modal_size,
                r.formula_size,
                r.fresh_variables
            );
            if let Some(w) = r.strategy_worlds {
                human.push_str(&format!("  strategy model: {w} worlds\n"));
            }
            if let (Some(k), Some(found)) = (r.bounded_worlds, r.bounded_model_found) {
                human.push_str(&format!(
                    "  bounded search up to {k} worlds: {}\n",
                    if found { "model found" } else { "no model" }
                ));
            }
            human.push_str(if consistent { "consistent\n" } else { "INCONSISTENT\n" });
            Ok(ctx.emit(consistent, doc, human))
        }
    }
}
