use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hbtree::analysis::{
    combined_frr, cost_model, false_branch_general, false_branch_normal_approx,
    false_branch_tie_aware, far_auth, frr_auth, iterated_rates, plan_parameters,
    response_length_curve, ErfcConvention, PlanRequest, SiblingExponent,
};
use hbtree::sim::{emit_report, run_privacy, simulate, Experiment, Format, Report, SimConfig};
use hbtree::tree::{run_protocol_traced, setup_system};
use hbtree::{Error, NoiseRate, ProtocolParams, RootSeed};

#[derive(Parser)]
#[command(
    name = "hbtree",
    version,
    about = "Key-tree HB+ identification: analysis, planning and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form error rates and costs for one parameter set.
    Analyze(AnalyzeArgs),
    /// Choose parameters for a population and error targets.
    Plan(PlanArgs),
    /// Monte Carlo experiment from a JSON config.
    Sim(SimArgs),
    /// Minimal traversal response length against branching factor.
    Curve(CurveArgs),
    /// Dump the transcript of a single protocol run.
    Trace(TraceArgs),
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 80)]
    k_x: usize,
    #[arg(long, default_value_t = 330)]
    k_y: usize,
    #[arg(long, default_value_t = 212)]
    r: usize,
    #[arg(long, default_value_t = 102)]
    r_tr: usize,
    #[arg(long, default_value_t = 63)]
    tau: usize,
    #[arg(long = "depth", default_value_t = 2)]
    d: u32,
    #[arg(long, default_value_t = 1000)]
    beta: u64,
    #[arg(long, default_value_t = 1)]
    s: u32,
    /// Use `beta - 1` wrong siblings instead of `beta`.
    #[arg(long)]
    beta_minus_one: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long)]
    target_frr: f64,
    #[arg(long)]
    target_far: f64,
    #[arg(long, default_value_t = 4)]
    s_max: u32,
    #[arg(long)]
    k_x: Option<usize>,
    #[arg(long)]
    k_y: Option<usize>,
    #[arg(long)]
    beta_minus_one: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's root seed (hex).
    #[arg(long)]
    seed: Option<RootSeed>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01")]
    targets: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    beta_max: u64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long)]
    beta_minus_one: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<RootSeed>,
    /// Registered tag to run; ids are `0..n_tags`.
    #[arg(long, default_value_t = 0)]
    tag: u64,
    #[command(flatten)]
    output: Output,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exponent(beta_minus_one: bool) -> SiblingExponent {
    if beta_minus_one {
        SiblingExponent::BetaMinusOne
    } else {
        SiblingExponent::Beta
    }
}

fn noise(eps: f64) -> Result<NoiseRate, Error> {
    NoiseRate::from_f64(eps).map_err(|e| Error::Config(e.to_string()))
}

fn write_text(text: &str, out: &Output) -> Result<(), Error> {
    match &out.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// `metric,value` table.
fn key_values(rows: &[(&str, f64)], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for (k, v) in rows {
                writeln!(s, "{k},{v}").expect("writing to a String");
            }
            s
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = rows
                .iter()
                .map(|(k, v)| (k.to_string(), (*v).into()))
                .collect();
            serde_json::to_string_pretty(&map).expect("finite map") + "\n"
        }
    }
}

fn analyze(a: &AnalyzeArgs) -> Result<(), Error> {
    let eps = noise(a.eps)?;
    let params = ProtocolParams {
        eps,
        k_x: a.k_x,
        k_y: a.k_y,
        r: a.r,
        r_tr: a.r_tr,
        tau: a.tau,
        d: a.d,
        beta: a.beta,
        s: a.s,
        checked_noise: false,
    };
    params
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    let e = eps.value();
    let (r, r_tr, tau) = (a.r as u32, a.r_tr as u32, a.tau as u32);
    let p_fb = false_branch_general(r_tr, &e, a.beta, exponent(a.beta_minus_one));
    let frr_a = frr_auth(r, tau, &e);
    let far_a: f64 = far_auth(r, tau);
    let gamma = combined_frr(a.d, &p_fb, &frr_a);
    let it = iterated_rates(&gamma, &far_a, a.s);
    let cost = cost_model(&params);
    let mut rows = vec![
        ("p_false_branch", p_fb),
        (
            "p_false_branch_tie_aware",
            false_branch_tie_aware(r_tr, &e, a.beta),
        ),
    ];
    if let Ok(v) = false_branch_normal_approx(r_tr, eps, ErfcConvention::Compat) {
        rows.push(("p_false_branch_normal", v));
    }
    rows.extend([
        ("frr_auth", frr_a),
        ("far_auth", far_a),
        ("frr_single_run", gamma),
        ("frr", it.frr),
        ("far", it.far),
        ("expected_repeat_factor", it.expected_cost_factor),
        ("reader_bitops", cost.reader_bitops),
        ("tag_bitops", cost.tag_bitops),
        ("comm_bits", cost.comm_bits),
        ("tag_mem_bits", cost.tag_mem_bits as f64),
    ]);
    write_text(&key_values(&rows, a.output.format), &a.output)
}

fn plan(a: &PlanArgs) -> Result<(), Error> {
    let mut req = PlanRequest::new(a.n, a.target_frr, a.target_far, noise(a.eps)?, a.depth);
    req.s_max = a.s_max;
    req.k_x = a.k_x;
    req.k_y = a.k_y;
    req.exponent = exponent(a.beta_minus_one);
    let res = plan_parameters(&req)?;
    let text = match a.output.format {
        Format::Json => serde_json::to_string_pretty(&res).expect("serializable") + "\n",
        Format::Csv => {
            let p = &res.params;
            key_values(
                &[
                    ("eps", p.eps.value()),
                    ("k_x", p.k_x as f64),
                    ("k_y", p.k_y as f64),
                    ("r", p.r as f64),
                    ("r_tr", p.r_tr as f64),
                    ("tau", p.tau as f64),
                    ("d", p.d as f64),
                    ("beta", p.beta as f64),
                    ("s", p.s as f64),
                    ("p_false_branch", res.p_false_branch),
                    ("frr_auth", res.frr_auth),
                    ("far_auth", res.far_auth),
                    ("frr", res.predicted_frr),
                    ("far", res.predicted_far),
                    ("reader_bitops", res.cost.reader_bitops),
                    ("tag_bitops", res.cost.tag_bitops),
                    ("comm_bits", res.cost.comm_bits),
                    ("tag_mem_bits", res.cost.tag_mem_bits as f64),
                ],
                Format::Csv,
            )
        }
    };
    write_text(&text, &a.output)
}

fn load(path: &Path, seed: Option<RootSeed>) -> Result<SimConfig, Error> {
    let mut cfg = SimConfig::load(path)?;
    if let Some(s) = seed {
        cfg.root_seed = s;
    }
    Ok(cfg)
}

fn sim(a: &SimArgs) -> Result<(), Error> {
    let mut cfg = load(&a.config, a.seed)?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let report = match cfg.experiment {
        Experiment::ErrorRates => Report::from_stats(&simulate(&cfg)?),
        Experiment::Privacy => Report::from_privacy(&cfg.config_id, &run_privacy(&cfg)?),
    };
    emit_report(&report, a.output.format, a.output.out.as_deref())
}

fn curve(a: &CurveArgs) -> Result<(), Error> {
    let pts = response_length_curve(
        &a.targets,
        a.beta_max,
        noise(a.eps)?,
        exponent(a.beta_minus_one),
    )?;
    let text = match a.output.format {
        Format::Json => serde_json::to_string_pretty(&pts).expect("serializable") + "\n",
        Format::Csv => {
            let mut s = String::from("target,beta,r\n");
            for p in &pts {
                writeln!(s, "{},{},{}", p.target, p.beta, p.r).expect("writing to a String");
            }
            s
        }
    };
    write_text(&text, &a.output)
}

fn trace(a: &TraceArgs) -> Result<(), Error> {
    let cfg = load(&a.config, a.seed)?;
    if a.tag >= cfg.n_tags {
        return Err(Error::Config(format!("tag {} is not registered", a.tag)));
    }
    let mut s = cfg.root_seed.stream("setup", 0);
    let mut dir = setup_system(cfg.n_tags, cfg.params.clone(), &mut s)?;
    let mut cred = None;
    for t in 0..=a.tag {
        cred = Some(dir.register_tag(t, &mut s)?);
    }
    let cred = cred.expect("at least one tag");
    let (outcome, transcript) =
        run_protocol_traced(&dir, &cred, &cfg.root_seed.stream("trace", a.tag))?;
    let doc = serde_json::json!({
        "tag_id": cred.tag_id,
        "true_leaf": cred.leaf,
        "outcome": outcome,
        "transcript": transcript,
    });
    write_text(
        &(serde_json::to_string_pretty(&doc).expect("serializable") + "\n"),
        &a.output,
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let res = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Plan(a) => plan(a),
        Command::Sim(a) => sim(a),
        Command::Curve(a) => curve(a),
        Command::Trace(a) => trace(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidParams(_)
                | Error::NoiseRate(_)
                | Error::Capacity { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
