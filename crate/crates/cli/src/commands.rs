use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use warpshift::approx::{approx_value, candidate_set, decide_cubic, decide_randomized, decide_simple, dense_boxes, preprocess};
use warpshift::curve_io::{format_curve, parse_curve};
use warpshift::dynamic_sp::SubcubicPlan;
use warpshift::exact_l1::{exact_l1_translation, linf_via_rotation};
use warpshift::oracle::{gen_ngon_instance, gen_random_instance, reduction_gadget};
use warpshift::zorder::{update_stream_with, StreamOptions};
use warpshift::{dtw, Curve, Decider, DecisionInstance, EngineKind, Error, Norm, Verdict};

use crate::{Algorithm, ApproxArgs, BenchArgs, Cli, Command, Engine, Gen, Input, Output, Translate};

const SCHEMA: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

/// Bad input maps to 2, everything else to 1.
pub fn lib_exit_code(e: &Error) -> u8 {
    match e {
        Error::GuardExceeded { .. } | Error::InvalidTraversal(_) => 1,
        _ => 2,
    }
}

type Res<T> = Result<T, CliError>;

fn read_curve(path: &Path) -> Res<Curve> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_curve(&text).map_err(|e| match e {
        Error::Parse { line, message } => CliError::Usage(format!("{}:{line}: {message}", path.display())),
        other => CliError::Lib(other),
    })
}

fn write_curve(path: &Path, c: &Curve) -> Res<()> {
    fs::write(path, format_curve(c)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_norm(p: &str) -> Res<Norm> {
    let v: f64 = p
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("invalid norm {p:?}; use 1, 2, inf or a number >= 1")))?;
    Ok(Norm::from_p(v)?)
}

fn load(input: &Input) -> Res<(Curve, Curve, Norm)> {
    let norm = parse_norm(&input.p)?;
    let pi = read_curve(&input.pi)?;
    let sigma = read_curve(&input.sigma)?;
    if pi.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: pi.dim(), found: sigma.dim() }.into());
    }
    Ok((pi, sigma, norm))
}

fn engine_kind(e: Engine) -> EngineKind {
    match e {
        Engine::Recompute => EngineKind::Recompute,
        Engine::DirtyRegion => EngineKind::DirtyRegion,
    }
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Simple => "simple",
        Algorithm::Cubic => "cubic",
        Algorithm::Randomized => "randomized",
        Algorithm::Subcubic => "subcubic",
    }
}

fn decider(a: &ApproxArgs) -> Decider {
    match a.algorithm {
        Algorithm::Simple => Decider::Simple,
        Algorithm::Cubic => Decider::Cubic,
        Algorithm::Randomized => Decider::Randomized { seed: a.seed, repetitions: a.repetitions },
        Algorithm::Subcubic => Decider::Subcubic(engine_kind(a.engine)),
    }
}

fn check_eps(eps: f64) -> Res<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--epsilon must lie in (0, 1], got {eps}")))
    }
}

fn check_planar(pi: &Curve, what: &str) -> Res<()> {
    if pi.dim() == 2 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} needs planar curves, got dimension {}", pi.dim())))
    }
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn render(json_mode: bool, report: Value, text: String) -> String {
    if json_mode {
        let mut v = report;
        v["schema"] = json!(SCHEMA);
        format!("{}\n", serde_json::to_string_pretty(&v).expect("reports serialize"))
    } else {
        text
    }
}

pub fn run(cli: &Cli) -> Res<String> {
    match &cli.command {
        Command::Dtw { input, traversal } => cmd_dtw(cli.json, input, *traversal),
        Command::Translate(t) => cmd_translate(cli.json, t),
        Command::Decide { input, delta, approx } => cmd_decide(cli.json, input, *delta, approx),
        Command::Gen(g) => cmd_gen(cli.json, g),
        Command::Stream { input, delta, epsilon, prune } => cmd_stream(input, *delta, *epsilon, *prune),
        Command::Bench(b) => cmd_bench(b),
    }
}

fn cmd_dtw(json_mode: bool, input: &Input, with_traversal: bool) -> Res<String> {
    let (pi, sigma, norm) = load(input)?;
    let res = dtw(&pi, &sigma, norm)?;
    let mut report = json!({
        "command": "dtw",
        "cost": res.cost,
        "n": pi.len(),
        "m": sigma.len(),
        "norm": norm.to_string(),
    });
    let mut text = format!("cost {}\n", res.cost);
    if with_traversal {
        report["traversal"] = json!(res.traversal.steps());
        let steps: Vec<String> = res.traversal.steps().iter().map(|(i, j)| format!("({i},{j})")).collect();
        let _ = writeln!(text, "traversal {}", steps.join(" "));
    }
    Ok(render(json_mode, report, text))
}

fn cmd_translate(json_mode: bool, t: &Translate) -> Res<String> {
    match t {
        Translate::ExactL1 { input } => {
            let (pi, sigma, norm) = load(input)?;
            let sol = match norm {
                Norm::L1 => exact_l1_translation(&pi, &sigma)?,
                Norm::LInf if pi.dim() == 2 => linf_via_rotation(&pi, &sigma)?,
                Norm::LInf => return Err(CliError::Usage("exact-l1 with p = inf needs planar curves".into())),
                other => return Err(CliError::Usage(format!("exact-l1 supports p = 1 or inf, not {other}"))),
            };
            let report = json!({
                "command": "translate",
                "algorithm": "exact-l1",
                "norm": norm.to_string(),
                "value": sol.value,
                "tau": sol.tau.coords(),
                "candidates": sol.candidates,
            });
            let text = format!("value {}\ntau {}\n", sol.value, fmt_point(sol.tau.coords()));
            Ok(render(json_mode, report, text))
        }
        Translate::Approx { input, approx } => {
            let (pi, sigma, norm) = load(input)?;
            check_eps(approx.epsilon)?;
            check_planar(&pi, "approx")?;
            let start = Instant::now();
            let out = approx_value(&pi, &sigma, approx.epsilon, norm, decider(approx))?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let mut report = json!({
                "command": "translate",
                "algorithm": algorithm_name(approx.algorithm),
                "norm": norm.to_string(),
                "epsilon": approx.epsilon,
                "value": out.value,
                "tau": out.tau.coords(),
            });
            let mut text = format!("value {}\ntau {}\n", out.value, fmt_point(out.tau.coords()));
            if approx.stats {
                report["stats"] = json!({
                    "decider_calls": out.stats.decider_calls,
                    "updates": out.stats.updates,
                    "queries": out.stats.queries,
                    "wall_ms": wall_ms,
                });
                let _ = writeln!(
                    text,
                    "decider_calls {}\nupdates {}\nqueries {}\nwall_ms {wall_ms:.3}",
                    out.stats.decider_calls, out.stats.updates, out.stats.queries
                );
            }
            Ok(render(json_mode, report, text))
        }
    }
}

fn cmd_decide(json_mode: bool, input: &Input, delta: f64, approx: &ApproxArgs) -> Res<String> {
    let (pi, sigma, norm) = load(input)?;
    check_eps(approx.epsilon)?;
    check_planar(&pi, "decide")?;
    let inst = DecisionInstance::new(pi, sigma, delta, approx.epsilon, norm)?;
    let mut stats = None;
    let verdict = match approx.algorithm {
        Algorithm::Simple => decide_simple(&inst),
        Algorithm::Cubic => decide_cubic(&inst),
        Algorithm::Randomized => {
            let reps = approx.repetitions.unwrap_or(40 * inst.size());
            decide_randomized(&inst, approx.seed, reps)?
        }
        Algorithm::Subcubic => {
            let plan = SubcubicPlan::new(&inst)?;
            let mut engine = engine_kind(approx.engine).build(warpshift::WeightGrid::zeros(inst.n(), inst.m()));
            let res = plan.run(engine.as_mut());
            stats = Some(res.stats);
            res.verdict
        }
    };
    let mut report = json!({
        "command": "decide",
        "algorithm": algorithm_name(approx.algorithm),
        "norm": norm.to_string(),
        "delta": delta,
        "epsilon": inst.eps(),
    });
    let mut text = String::new();
    match &verdict {
        Verdict::Le(w) => {
            report["verdict"] = json!("le");
            report["witness"] = json!({ "tau": w.tau.coords(), "value": w.value });
            let _ = writeln!(text, "verdict <= (1+eps)*delta\ntau {}\nvalue {}", fmt_point(w.tau.coords()), w.value);
        }
        Verdict::Gt => {
            report["verdict"] = json!("gt");
            text.push_str("verdict > delta\n");
        }
    }
    if approx.stats {
        if let Some(s) = stats {
            report["stats"] = serde_json::to_value(&s).expect("stats serialize");
            let _ = writeln!(
                text,
                "candidates {}\nupdates {}\nqueries {}\nevents_per_pair_p50 {}\nevents_per_pair_p99 {}",
                s.candidates, s.updates, s.queries, s.events_per_pair_p50, s.events_per_pair_p99
            );
        }
    }
    Ok(render(json_mode, report, text))
}

fn cmd_gen(json_mode: bool, g: &Gen) -> Res<String> {
    let (pi, sigma, out, kind) = match g {
        Gen::Random { n, m, dim, lo, hi, seed, out } => {
            if *n == 0 || *m == 0 || *dim == 0 || !(lo < hi) {
                return Err(CliError::Usage("need n, m, dim >= 1 and lo < hi".into()));
            }
            let (pi, sigma) = gen_random_instance(*n, *m, *dim, *lo, *hi, *seed);
            (pi, sigma, out, "random")
        }
        Gen::Ngon { n, eps_geom, out } => {
            let (pi, sigma) = gen_ngon_instance(*n, *eps_geom)?;
            (pi, sigma, out, "ngon")
        }
        Gen::Gadget { input, b, out } => {
            let (pi, sigma, norm) = load(input)?;
            let (pi, sigma) = reduction_gadget(&pi, &sigma, *b, norm)?;
            (pi, sigma, out, "gadget")
        }
    };
    let Output { out_pi, out_sigma } = out;
    write_curve(out_pi, &pi)?;
    write_curve(out_sigma, &sigma)?;
    let report = json!({
        "command": "gen",
        "kind": kind,
        "n": pi.len(),
        "m": sigma.len(),
        "pi": out_pi.display().to_string(),
        "sigma": out_sigma.display().to_string(),
    });
    let text = format!("wrote {} ({} points) and {} ({} points)\n", out_pi.display(), pi.len(), out_sigma.display(), sigma.len());
    Ok(render(json_mode, report, text))
}

fn cmd_stream(input: &Input, delta: f64, eps: f64, prune: bool) -> Res<String> {
    let (pi, sigma, norm) = load(input)?;
    check_eps(eps)?;
    check_planar(&pi, "stream")?;
    if !(delta > 0.0) {
        return Err(CliError::Usage("--delta must be positive".into()));
    }
    let inst = DecisionInstance::new(pi, sigma, delta, eps, norm)?;
    let prep = preprocess(&inst)?;
    let q = candidate_set(&prep, &dense_boxes(&prep));
    let stream = update_stream_with(&prep, &q, StreamOptions { prune_to_queries: prune });
    let mut buf = Vec::new();
    stream.write_debug(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

fn cmd_bench(b: &BenchArgs) -> Res<String> {
    for &e in &b.eps {
        check_eps(e)?;
    }
    let mut out = String::from("n,m,eps,algorithm,updates,queries,wall_ms\n");
    for &n in &b.sizes {
        if n == 0 {
            return Err(CliError::Usage("sizes must be positive".into()));
        }
        for &eps in &b.eps {
            for &alg in &b.algorithms {
                for k in 0..b.instances {
                    let seed = b.seed.wrapping_add(k as u64);
                    let (pi, sigma) = gen_random_instance(n, n, 2, 0.0, 1.0, seed);
                    let args = ApproxArgs {
                        algorithm: alg,
                        epsilon: eps,
                        seed,
                        repetitions: None,
                        engine: b.engine,
                        stats: true,
                    };
                    let start = Instant::now();
                    let res = approx_value(&pi, &sigma, eps, Norm::L2, decider(&args))?;
                    let ms = start.elapsed().as_secs_f64() * 1e3;
                    let _ = writeln!(
                        out,
                        "{n},{n},{eps},{},{},{},{ms:.3}",
                        algorithm_name(alg),
                        res.stats.updates,
                        res.stats.queries
                    );
                }
            }
        }
    }
    Ok(out)
}
