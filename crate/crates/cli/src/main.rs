//! `admg`: queries, transforms and model checks on ADMG text files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use admg_core::checks::{self, check_lm, relation_matrix, CheckReport, Model};
use admg_core::dist::{AnyTable, JointTable, Kernel, Scalar, DEFAULT_TOL};
use admg_core::fixing::{fixable_sets, CondGraph};
use admg_core::sim::{
    generate_system, verify_consistency, verify_fixing_identity, verify_no_direct_effect,
    verify_swig_markov, EquationSystem, Intervention, VerifyReport,
};
use admg_core::transform::{
    augment, expand_clique, expand_noise, expand_pairwise, marginalize, swig, swig_labels,
    CliqueScope,
};
use admg_core::{parse_graph, MixedGraph, SeparationQuery, TopologicalOrder, VertexSet};
use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "admg", version, about = "Acyclic directed mixed graph toolkit")]
struct Cli {
    /// Print `{"ok", "result", "violations"}` instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write output here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Graph file.
    #[arg(short, long)]
    graph: PathBuf,
}

#[derive(Args)]
struct SystemArg {
    /// Equation system JSON file.
    #[arg(short, long)]
    system: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether `--from` and `--to` are m-separated given `--given`.
    Msep {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value = "")]
        given: String,
    },
    /// District of a vertex, or all districts.
    District {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        vertex: Option<String>,
    },
    /// Markov boundary (collider-connected set).
    Mb {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        vertex: String,
    },
    /// Markov background: district and its parents, less the vertex.
    Mbg {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        vertex: String,
    },
    /// Ancestral closure of a set.
    Ancestral {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        set: String,
    },
    /// Graph classes.
    Classify {
        #[command(flatten)]
        g: GraphArg,
    },
    /// Latent projection onto `--keep`.
    Marginalize {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        keep: String,
    },
    /// Replace bidirected structure by latent parents.
    Expand {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, value_enum)]
        kind: ExpandKind,
        #[arg(long, value_enum, default_value = "all")]
        cliques: CliqueArg,
    },
    /// Single world intervention graph.
    Swig {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        on: String,
        /// Values for display labels, e.g. `B=1`.
        #[arg(long)]
        assign: Option<String>,
    },
    /// Undirected augmented graph.
    Augment {
        #[command(flatten)]
        g: GraphArg,
    },
    /// Fixable sets with their canonical orders, or fixability of one vertex.
    Fixable {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        vertex: Option<String>,
    },
    /// Fix a sequence of vertices in the graph, and in a table if given.
    Fix {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long)]
        seq: String,
        /// Distribution file.
        #[arg(short, long)]
        dist: Option<PathBuf>,
    },
    /// Check a table against a model of the graph.
    Check {
        #[arg(value_enum)]
        model: ModelArg,
        #[command(flatten)]
        g: GraphArg,
        #[arg(short, long)]
        dist: PathBuf,
        /// Float-mode tolerance; rational tables compare exactly.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Topological order for `lm`.
        #[arg(long)]
        order: Option<String>,
    },
    /// Random equation system on a graph.
    GenSystem {
        #[command(flatten)]
        g: GraphArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        noise_card: usize,
        /// Cardinality of every observed variable.
        #[arg(long, default_value_t = 2)]
        card: usize,
    },
    /// Law of the potential outcomes under an intervention.
    Po {
        #[command(flatten)]
        s: SystemArg,
        /// Assignments such as `B=1,C=0`; empty gives the observed law.
        #[arg(long = "do", default_value = "")]
        intervention: String,
    },
    /// Verify a causal property of an equation system.
    Verify {
        #[arg(value_enum)]
        property: PropertyArg,
        #[command(flatten)]
        s: SystemArg,
        /// Fixing: one set instead of every fixable set.
        #[arg(long)]
        set: Option<String>,
        /// Fixing: check every fixable permutation.
        #[arg(long)]
        all_orders: bool,
        /// Swig-markov and no-direct-effect: intervention such as `B=1`.
        #[arg(long = "do")]
        intervention: Option<String>,
        /// No-direct-effect: outcome set.
        #[arg(long)]
        outcome: Option<String>,
        /// No-direct-effect: additional intervened set.
        #[arg(long)]
        also: Option<String>,
    },
    /// Run every applicable checker over `<name>.g` / `<name>.dist` pairs.
    Relations {
        #[arg(long)]
        corpus_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpandKind {
    Pairwise,
    Clique,
    Noise,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliqueArg {
    All,
    NonSingleton,
    Maximal,
}

impl From<CliqueArg> for CliqueScope {
    fn from(c: CliqueArg) -> Self {
        match c {
            CliqueArg::All => CliqueScope::All,
            CliqueArg::NonSingleton => CliqueScope::NonSingleton,
            CliqueArg::Maximal => CliqueScope::Maximal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gm,
    Um,
    Lm,
    F,
    Ef,
    A,
    Nm,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gm => Model::GM,
            ModelArg::Um => Model::UM,
            ModelArg::Lm => Model::LM,
            ModelArg::F => Model::F,
            ModelArg::Ef => Model::EF,
            ModelArg::A => Model::A,
            ModelArg::Nm => Model::NM,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    Fixing,
    Consistency,
    SwigMarkov,
    NoDirectEffect,
}

struct Outcome {
    text: String,
    result: Value,
    violations: Vec<Value>,
    ok: bool,
}

impl Outcome {
    fn answer(text: String, result: Value) -> Self {
        Outcome {
            text,
            result,
            violations: Vec::new(),
            ok: true,
        }
    }

    fn graph(text: String) -> Self {
        let result = json!({ "graph": text });
        Outcome::answer(text, result)
    }

    fn document(value: Value) -> Self {
        let text = serde_json::to_string_pretty(&value).expect("serializable") + "\n";
        Outcome::answer(text, value)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(out) => {
            let body = if cli.json {
                let env =
                    json!({ "ok": out.ok, "result": out.result, "violations": out.violations });
                serde_json::to_string_pretty(&env).expect("serializable") + "\n"
            } else {
                out.text
            };
            let written = match &cli.output {
                Some(path) => std::fs::write(path, body)
                    .with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{body}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(arg: &GraphArg) -> anyhow::Result<MixedGraph> {
    let text = read(&arg.graph)?;
    parse_graph(&text).with_context(|| format!("parsing {}", arg.graph.display()))
}

fn load_table(path: &Path) -> anyhow::Result<AnyTable> {
    AnyTable::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_system(arg: &SystemArg) -> anyhow::Result<EquationSystem> {
    EquationSystem::from_json(&read(&arg.system)?)
        .with_context(|| format!("parsing {}", arg.system.display()))
}

fn labels(list: &str) -> Vec<&str> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn vertex_set(g: &MixedGraph, list: &str) -> anyhow::Result<VertexSet> {
    Ok(g.set_of(&labels(list))?)
}

fn vertex(g: &MixedGraph, label: &str) -> anyhow::Result<usize> {
    Ok(g.index_of(label.trim())?)
}

fn sequence(g: &MixedGraph, list: &str) -> anyhow::Result<Vec<usize>> {
    labels(list).into_iter().map(|l| vertex(g, l)).collect()
}

fn intervention(g: &MixedGraph, list: &str) -> anyhow::Result<Intervention> {
    let mut out = Intervention::new();
    for part in labels(list) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `label=value`, got `{part}`"))?;
        let value: usize = value
            .trim()
            .parse()
            .with_context(|| format!("value in `{part}`"))?;
        if out.insert(vertex(g, name)?, value).is_some() {
            bail!("`{}` assigned twice", name.trim());
        }
    }
    Ok(out)
}

fn set_result(g: &MixedGraph, set: VertexSet) -> Outcome {
    Outcome::answer(
        format!("{}\n", g.format_set(set)),
        json!(g.sorted_names(set)),
    )
}

fn run(command: &Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Msep { g, from, to, given } => {
            let g = load_graph(g)?;
            let q = SeparationQuery {
                j: vertex_set(&g, from)?,
                k: vertex_set(&g, to)?,
                l: vertex_set(&g, given)?,
            };
            let sep = g.m_separated(&q)?;
            Ok(Outcome::answer(
                format!("m-separated: {sep}\n"),
                json!({ "m_separated": sep }),
            ))
        }
        Command::District { g, vertex: v } => {
            let g = load_graph(g)?;
            match v {
                Some(v) => Ok(set_result(&g, g.district(vertex(&g, v)?)?)),
                None => {
                    let districts = g.districts();
                    let text: String = districts.iter().map(|d| g.format_set(*d) + "\n").collect();
                    let result: Vec<Vec<String>> =
                        districts.iter().map(|d| g.sorted_names(*d)).collect();
                    Ok(Outcome::answer(text, json!(result)))
                }
            }
        }
        Command::Mb { g, vertex: v } => {
            let g = load_graph(g)?;
            Ok(set_result(&g, g.markov_boundary(vertex(&g, v)?)?))
        }
        Command::Mbg { g, vertex: v } => {
            let g = load_graph(g)?;
            Ok(set_result(&g, g.markov_background(vertex(&g, v)?)?))
        }
        Command::Ancestral { g, set } => {
            let g = load_graph(g)?;
            Ok(set_result(&g, g.ancestral_closure(vertex_set(&g, set)?)?))
        }
        Command::Classify { g } => {
            let g = load_graph(g)?;
            let classes: Vec<String> = g.classify().iter().map(|c| c.to_string()).collect();
            Ok(Outcome::answer(
                format!("classes: {}\n", classes.join(", ")),
                json!(classes),
            ))
        }
        Command::Marginalize { g, keep } => {
            let g = load_graph(g)?;
            Ok(Outcome::graph(
                marginalize(&g, vertex_set(&g, keep)?)?.to_string(),
            ))
        }
        Command::Expand { g, kind, cliques } => {
            let g = load_graph(g)?;
            let e = match kind {
                ExpandKind::Pairwise => expand_pairwise(&g)?,
                ExpandKind::Clique => expand_clique(&g, (*cliques).into())?,
                ExpandKind::Noise => expand_noise(&g)?,
            };
            Ok(Outcome::graph(e.to_string()))
        }
        Command::Swig { g, on, assign } => {
            let g = load_graph(g)?;
            let set = vertex_set(&g, on)?;
            let values = assign.as_deref().map(|a| intervention(&g, a)).transpose()?;
            if let Some(values) = &values {
                if values.keys().any(|v| !set.contains(*v)) {
                    bail!("--assign names a vertex outside --on");
                }
            }
            let display = swig_labels(&g, set, values.as_ref());
            let graph = swig(&g, set).to_string();
            Ok(Outcome::answer(
                format!("# labels: {}\n{graph}", display.join(" ")),
                json!({ "graph": graph, "labels": display }),
            ))
        }
        Command::Augment { g } => {
            let g = load_graph(g)?;
            Ok(Outcome::graph(augment(&g).to_string()))
        }
        Command::Fixable { g, vertex: v } => {
            let g = load_graph(g)?;
            match v {
                Some(v) => {
                    let fixable = CondGraph::new(&g)?.is_fixable(vertex(&g, v)?)?;
                    Ok(Outcome::answer(
                        format!("fixable: {fixable}\n"),
                        json!({ "fixable": fixable }),
                    ))
                }
                None => {
                    let sets = fixable_sets(&g)?;
                    let mut text = String::new();
                    let mut result = Vec::new();
                    for fs in &sets {
                        let order: Vec<&str> = fs.order.iter().map(|&v| g.label(v)).collect();
                        let shown = if order.is_empty() {
                            "(empty)".to_string()
                        } else {
                            order.join(", ")
                        };
                        writeln!(text, "{}  order: {shown}", g.format_set(fs.set))?;
                        result.push(json!({ "set": g.sorted_names(fs.set), "order": order }));
                    }
                    Ok(Outcome::answer(text, json!(result)))
                }
            }
        }
        Command::Fix { g, seq, dist } => {
            let g = load_graph(g)?;
            let seq = sequence(&g, seq)?;
            let c = CondGraph::new(&g)?.fix_sequence(&seq)?;
            match dist {
                None => {
                    let graph = c.graph().to_string();
                    Ok(Outcome::answer(
                        format!("fixed: {}\n{graph}", g.format_set(c.fixed())),
                        json!({ "fixed": g.sorted_names(c.fixed()), "graph": graph }),
                    ))
                }
                Some(path) => {
                    let value = match load_table(path)? {
                        AnyTable::Rational(t) => fix_table(&g, t, &seq)?,
                        AnyTable::Float(t) => fix_table(&g, t, &seq)?,
                    };
                    Ok(Outcome::document(value))
                }
            }
        }
        Command::Check {
            model,
            g,
            dist,
            tol,
            order,
        } => {
            let g = load_graph(g)?;
            let model: Model = (*model).into();
            let order = match order {
                Some(o) if model == Model::LM => Some(TopologicalOrder::new(&g, sequence(&g, o)?)?),
                Some(_) => bail!("--order only applies to lm"),
                None => None,
            };
            let report = match load_table(dist)? {
                AnyTable::Rational(t) => run_check(model, &g, t, order.as_ref(), *tol)?,
                AnyTable::Float(t) => run_check(model, &g, t, order.as_ref(), *tol)?,
            };
            Ok(check_outcome(&report))
        }
        Command::GenSystem {
            g,
            seed,
            noise_card,
            card,
        } => {
            let g = load_graph(g)?;
            Ok(Outcome::document(
                generate_system(&g, *seed, *noise_card, *card)?.to_value(),
            ))
        }
        Command::Po {
            s,
            intervention: iv,
        } => {
            let s = load_system(s)?;
            let iv = intervention(s.graph(), iv)?;
            Ok(Outcome::document(s.po_distribution(&iv)?.to_value()))
        }
        Command::Verify {
            property,
            s,
            set,
            all_orders,
            intervention: iv,
            outcome,
            also,
        } => {
            let s = load_system(s)?;
            let g = s.graph().clone();
            match property {
                PropertyArg::Consistency => Ok(verify_outcome(&verify_consistency(&s))),
                PropertyArg::Fixing => {
                    let sets = match set {
                        Some(set) => vec![vertex_set(&g, set)?],
                        None => fixable_sets(&g)?.into_iter().map(|f| f.set).collect(),
                    };
                    let mut reports = Vec::new();
                    for set in sets {
                        reports.push((
                            g.format_set(set),
                            verify_fixing_identity(&s, set, *all_orders)?,
                        ));
                    }
                    Ok(verify_many(reports))
                }
                PropertyArg::SwigMarkov => {
                    let ivs = match iv {
                        Some(iv) => vec![intervention(&g, iv)?],
                        None => s
                            .interventions()
                            .into_iter()
                            .filter(|i| i.len() == 1)
                            .collect(),
                    };
                    let mut text = String::new();
                    let mut ok = true;
                    let mut results = Vec::new();
                    let mut violations = Vec::new();
                    for iv in ivs {
                        let report = verify_swig_markov(&s, &iv)?;
                        let label = describe(&g, &iv);
                        let sub = check_outcome(&report);
                        write!(text, "{label}: {}", sub.text)?;
                        ok &= report.passed;
                        violations.extend(sub.violations);
                        results.push(json!({ "intervention": label, "report": report }));
                    }
                    Ok(Outcome {
                        text,
                        result: json!(results),
                        violations,
                        ok,
                    })
                }
                PropertyArg::NoDirectEffect => {
                    let iv = iv.as_deref().ok_or_else(|| anyhow!("--do is required"))?;
                    let k: VertexSet = intervention(&g, iv)?.keys().copied().collect();
                    let j = vertex_set(
                        &g,
                        outcome
                            .as_deref()
                            .ok_or_else(|| anyhow!("--outcome is required"))?,
                    )?;
                    let l = vertex_set(
                        &g,
                        also.as_deref()
                            .ok_or_else(|| anyhow!("--also is required"))?,
                    )?;
                    Ok(verify_outcome(&verify_no_direct_effect(&s, j, k, l)?))
                }
            }
        }
        Command::Relations { corpus_dir, tol } => relations(corpus_dir, *tol),
    }
}

fn describe(g: &MixedGraph, iv: &Intervention) -> String {
    let parts: Vec<String> = iv
        .iter()
        .map(|(&v, &x)| format!("{}={x}", g.label(v)))
        .collect();
    format!("do({})", parts.join(", "))
}

fn fix_table<S: Scalar>(g: &MixedGraph, t: JointTable<S>, seq: &[usize]) -> anyhow::Result<Value> {
    let t = t.aligned_to(g)?;
    let c = CondGraph::new(g)?;
    let (k, _) = Kernel::from_joint(t).fix_sequence(&c, seq)?;
    Ok(k.to_value())
}

fn run_check<S: Scalar>(
    model: Model,
    g: &MixedGraph,
    t: JointTable<S>,
    order: Option<&TopologicalOrder>,
    tol: f64,
) -> anyhow::Result<CheckReport> {
    let t = t.aligned_to(g)?;
    Ok(match order {
        Some(o) => check_lm(g, &t, o, tol)?,
        None => checks::check(model, g, &t, tol)?,
    })
}

fn witness_text(w: &BTreeMap<String, usize>) -> String {
    let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
    parts.join(", ")
}

fn check_outcome(r: &CheckReport) -> Outcome {
    let mut text = if r.passed {
        format!("{}: pass ({} constraints)\n", r.model, r.constraints)
    } else {
        format!(
            "{}: FAIL ({} of {} constraints violated)\n",
            r.model,
            r.violations.len(),
            r.constraints
        )
    };
    for v in &r.violations {
        let fixed = if v.fixed.is_empty() {
            String::new()
        } else {
            format!("  fixed: {}", v.fixed.join(", "))
        };
        let _ = writeln!(
            text,
            "  {}{fixed}  witness: {}  magnitude: {}",
            v.constraint,
            witness_text(&v.witness),
            v.magnitude
        );
    }
    if r.skipped_slices > 0 {
        let _ = writeln!(text, "  skipped undefined slices: {}", r.skipped_slices);
    }
    Outcome {
        text,
        result: serde_json::to_value(r).expect("serializable"),
        violations: r
            .violations
            .iter()
            .map(|v| serde_json::to_value(v).expect("serializable"))
            .collect(),
        ok: r.passed,
    }
}

fn report_text(r: &VerifyReport) -> String {
    let name = serde_json::to_value(r.property).expect("serializable");
    let name = name.as_str().unwrap_or_default();
    let mut text = if r.passed {
        format!("{name}: pass ({} checks)\n", r.checked)
    } else {
        format!(
            "{name}: FAIL ({} of {} checks)\n",
            r.violations.len(),
            r.checked
        )
    };
    for v in &r.violations {
        let _ = writeln!(
            text,
            "  {}  witness: {}",
            v.constraint,
            witness_text(&v.witness)
        );
    }
    if r.skipped_slices > 0 {
        let _ = writeln!(text, "  skipped undefined slices: {}", r.skipped_slices);
    }
    text
}

fn verify_outcome(r: &VerifyReport) -> Outcome {
    Outcome {
        text: report_text(r),
        result: serde_json::to_value(r).expect("serializable"),
        violations: r
            .violations
            .iter()
            .map(|v| serde_json::to_value(v).expect("serializable"))
            .collect(),
        ok: r.passed,
    }
}

fn verify_many(reports: Vec<(String, VerifyReport)>) -> Outcome {
    let mut text = String::new();
    let mut violations = Vec::new();
    let mut results = Vec::new();
    let mut ok = true;
    for (label, r) in reports {
        let sub = verify_outcome(&r);
        text.push_str(&format!("{label}: {}", sub.text));
        violations.extend(sub.violations);
        ok &= r.passed;
        results.push(json!({ "set": label, "report": sub.result }));
    }
    Outcome {
        text,
        result: json!(results),
        violations,
        ok,
    }
}

fn relations(dir: &Path, tol: f64) -> anyhow::Result<Outcome> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "g"))
        .collect();
    names.sort();
    let mut rational = Vec::new();
    let mut float = Vec::new();
    for path in &names {
        let dist = path.with_extension("dist");
        if !dist.exists() {
            continue;
        }
        let g = load_graph(&GraphArg {
            graph: path.clone(),
        })?;
        match load_table(&dist)? {
            AnyTable::Rational(t) => rational.push((g.clone(), t.aligned_to(&g)?)),
            AnyTable::Float(t) => float.push((g.clone(), t.aligned_to(&g)?)),
        }
    }
    if rational.is_empty() && float.is_empty() {
        bail!("no `<name>.g` / `<name>.dist` pairs in {}", dir.display());
    }
    let m = if float.is_empty() {
        relation_matrix(&rational, tol)?
    } else {
        float.extend(rational.into_iter().map(|(g, t)| (g, t.to_f64())));
        relation_matrix(&float, tol)?
    };
    let violations = m.hard_failures.iter().map(|f| json!(f)).collect();
    Ok(Outcome {
        text: m.to_string(),
        result: serde_json::to_value(&m).expect("serializable"),
        violations,
        ok: m.ok(),
    })
}
