//! Command-line front end.
//!
//! Every run writes its tables to the output directory (`--out`, else
//! `$HEAVYTAIL_OUT`, else `heavytail-out`) with the effective arguments echoed
//! as `# key=value` header lines. A `--config` file holds `key = value` lines
//! that mirror the long flags; flags given on the command line take
//! precedence. Exit status: 0 holds or success, 1 fails, 2 inconclusive,
//! 64 usage error, 74 I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::classify::{
    check_h_insensitive, test_long_tailed, test_subexponential, test_tail_equivalence, test_weak_tail_equivalence,
    LabConfig,
};
use crate::decomp::{conv_tail, decomposition_report};
use crate::families::{family_catalogue, parse_law, parse_measure, CounterexampleLaw};
use crate::hfunc::{construct_h, HConfig, HSpec};
use crate::lemmas::{lemma_defaults, lemma_probe, Inputs};
use crate::measure::{SharedMeasure, TailCurve};
use crate::montecarlo::{big_jump_report, mc_conv_tail, mc_decomposition, mc_grid, McTerm};
use crate::output::{mc_csv, probes_csv, svg_plot, to_json, Header, McRow, OutputDir};
use crate::probe::{Claim, Verdict, VerdictReport};
use crate::suite::{run_suite, SuiteConfig};
use crate::theorems::{verify_theorem, InstanceConfig};
use crate::{Error, Result};

/// Exit status for malformed invocations.
pub const EXIT_USAGE: i32 = 64;
/// Exit status when output cannot be written.
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(name = "heavytail", version, about = "Numerical laboratory for convolutions of heavy-tailed distributions")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// File of `key = value` lines mirroring the long flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Also write SVG ratio plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Caps the top of every verdict grid.
    #[arg(long, global = true, value_name = "X")]
    pub grid_top: Option<f64>,
    /// Master seed for sampling.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Print only the verdict line.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Catalogue of laws and the counterexample breakpoints.
    Families {
        #[command(subcommand)]
        action: FamiliesCmd,
    },
    /// Tail of a convolution by quadrature.
    ConvTail(ConvTailArgs),
    /// All terms of the tail decomposition at level h(x).
    Decompose(DecomposeArgs),
    /// Class-membership tests.
    Test {
        #[command(subcommand)]
        kind: TestCmd,
    },
    /// Builds an insensitivity scale h for the given laws.
    ConstructH(ConstructHArgs),
    /// Probes a lemma on an instance.
    Lemma(LemmaArgs),
    /// Verifies a theorem on an instance.
    Theorem(TheoremArgs),
    /// Monte Carlo estimates.
    Mc {
        #[command(subcommand)]
        action: McCmd,
    },
    /// The acceptance battery.
    Suite {
        #[command(subcommand)]
        action: SuiteCmd,
    },
}

#[derive(Subcommand, Debug)]
pub enum FamiliesCmd {
    /// Names, parameters and tails of the families.
    List,
    /// Breakpoints of the counterexample law.
    DumpBreakpoints {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
}

#[derive(Args, Debug)]
pub struct ConvTailArgs {
    #[arg(long = "F", value_name = "LAW")]
    pub f: String,
    /// Defaults to F.
    #[arg(long = "G", value_name = "LAW")]
    pub g: Option<String>,
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub x: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[arg(long = "F", value_name = "LAW")]
    pub f: String,
    #[arg(long = "G", value_name = "LAW")]
    pub g: Option<String>,
    /// sqrt | half | const(c=…) | power(scale=…, exponent=…) | auto
    #[arg(long, default_value = "sqrt")]
    pub h: String,
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    pub x: Vec<f64>,
}

#[derive(Subcommand, Debug)]
pub enum TestCmd {
    /// F(x + a, ∞)/F(x, ∞) → 1.
    Longtail {
        #[arg(long)]
        law: String,
    },
    /// F*F(x, ∞)/(2‖F‖F(x, ∞)) → 1, with long-tailedness.
    Subexp {
        #[arg(long)]
        law: String,
    },
    /// F1(x, ∞)/F2(x, ∞) → 1.
    TailEquiv {
        #[arg(long)]
        law: String,
        #[arg(long)]
        law2: String,
    },
    /// F1(x, ∞)/F2(x, ∞) bounded away from 0 and ∞.
    WeakEquiv {
        #[arg(long)]
        law: String,
        #[arg(long)]
        law2: String,
    },
    /// F(x ± h(x), ∞)/F(x, ∞) → 1.
    HInsensitive {
        #[arg(long)]
        law: String,
        #[arg(long, default_value = "sqrt")]
        h: String,
    },
}

#[derive(Args, Debug)]
pub struct ConstructHArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub law: Vec<String>,
    #[arg(long, default_value_t = 1e8)]
    pub horizon: f64,
    #[arg(long, default_value_t = 40)]
    pub points_per_decade: usize,
}

#[derive(Args, Debug, Default)]
pub struct LawSlots {
    #[arg(long = "F", value_name = "LAW")]
    pub f: Option<String>,
    #[arg(long = "G", value_name = "LAW")]
    pub g: Option<String>,
    #[arg(long = "F1", value_name = "LAW")]
    pub f1: Option<String>,
    #[arg(long = "F2", value_name = "LAW")]
    pub f2: Option<String>,
    #[arg(long = "F3", value_name = "LAW")]
    pub f3: Option<String>,
    #[arg(long = "G1", value_name = "LAW")]
    pub g1: Option<String>,
    #[arg(long = "G2", value_name = "LAW")]
    pub g2: Option<String>,
    #[arg(long = "G3", value_name = "LAW")]
    pub g3: Option<String>,
}

impl LawSlots {
    fn given(&self) -> Vec<(&'static str, &str)> {
        [
            ("F", &self.f),
            ("G", &self.g),
            ("F1", &self.f1),
            ("F2", &self.f2),
            ("F3", &self.f3),
            ("G1", &self.g1),
            ("G2", &self.g2),
            ("G3", &self.g3),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    /// `defaults` with the given slots replaced.
    fn merge(&self, defaults: Inputs) -> Result<Inputs> {
        self.given().into_iter().try_fold(defaults, |acc, (k, v)| acc.with(k, v))
    }
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    /// h1 | h2 | h3 | h3plus | s1 | eq14
    pub id: String,
    #[command(flatten)]
    pub laws: LawSlots,
    #[arg(long, default_value = "sqrt")]
    pub h: String,
}

#[derive(Args, Debug)]
pub struct TheoremArgs {
    pub id: String,
    #[command(flatten)]
    pub laws: LawSlots,
    /// Number of convolution factors.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mixture weight.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub h: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum McCmd {
    /// Pr(ξ + η > x), or one decomposition term with --term.
    ConvTail {
        #[arg(long = "F", value_name = "LAW")]
        f: String,
        #[arg(long = "G", value_name = "LAW")]
        g: Option<String>,
        #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// le_h | le_h_swapped | gt_h | gt_gt
        #[arg(long)]
        term: Option<String>,
        #[arg(long, default_value = "sqrt")]
        h: String,
    },
    /// Pr(ξ₁ + ξ₂ > x)/Pr(max(ξ₁, ξ₂) > x) on a grid.
    BigJump {
        #[arg(long)]
        law: String,
        /// Grid; defaults to points up to where 100 hits are expected.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        points: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum SuiteCmd {
    /// Every acceptance check, with a summary table.
    All {
        #[arg(long, default_value_t = 1_000_000)]
        mc_n: usize,
        #[arg(long, default_value_t = 10_000_000)]
        mc_n_large: usize,
        #[arg(long, default_value_t = 100)]
        lattice_pairs: usize,
    },
}

/// Appends the entries of the `--config` file that are not already given.
fn expand_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--" {
            break;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = strs.get(i + 1).cloned();
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config file `{path}`: {e}"))?;
    let mut out = args;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected `key = value`", no + 1))?;
        let (k, v) = (k.trim().trim_start_matches("--"), v.trim());
        let given = strs.iter().any(|a| a == &format!("--{k}") || a.starts_with(&format!("--{k}=")));
        if given || k == "config" {
            continue;
        }
        match v {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => out.push(format!("--{k}={v}").into()),
        }
    }
    Ok(out)
}

/// Effective arguments of the matched subcommand chain as a header.
fn header_from(cmd: &clap::Command, m: &clap::ArgMatches) -> Header {
    let mut path = Vec::new();
    let mut entries = Vec::new();
    let (mut cmd, mut m) = (cmd, m);
    loop {
        for arg in cmd.get_arguments() {
            let id = arg.get_id().as_str();
            if matches!(id, "help" | "version") {
                continue;
            }
            if let Some(vals) = m.get_raw(id) {
                let key = arg.get_long().unwrap_or(id).to_string();
                let v: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
                if !entries.iter().any(|(k, _): &(String, String)| *k == key) {
                    entries.push((key, v.join(",")));
                }
            }
        }
        match m.subcommand() {
            Some((name, sub)) => {
                path.push(name.to_string());
                cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
                m = sub;
            }
            None => break,
        }
    }
    let mut h = Header::new(&path.join(" "));
    for (k, v) in entries {
        if k != "out" && k != "quiet" {
            h.push(&k, v);
        }
    }
    h
}

fn exit_for(e: &Error) -> i32 {
    match e {
        Error::Accuracy { .. } | Error::Range { .. } | Error::VanishingTail { .. } => Verdict::Inconclusive.exit_code(),
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Human-readable output goes to `out`, errors to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let cmd = Cli::command();
    let matches = match cmd.clone().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let header = header_from(&cmd, &matches);
    match execute(&cli, header, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    }
}

/// [`run_with`] on the process arguments and standard streams.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

struct Ctx<'a> {
    cli: &'a Cli,
    dir: OutputDir,
    header: Header,
    lab: LabConfig,
    out: &'a mut dyn Write,
    written: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn save(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.save(name, contents)?;
        self.written.push(p);
        Ok(())
    }

    /// Console output; a closed stdout does not fail the run.
    fn say(&mut self, s: &str) -> Result<()> {
        if !self.cli.quiet {
            self.line(s);
        }
        Ok(())
    }

    fn line(&mut self, s: &str) {
        let _ = write!(self.out, "{s}");
    }

    /// Writes `<stem>.json`, `<stem>.csv` and optionally `<stem>.svg`.
    fn save_report(&mut self, stem: &str, report: &VerdictReport) -> Result<i32> {
        self.save(&format!("{stem}.json"), &to_json(&self.header, report)?)?;
        let probes = report.probes();
        self.save(&format!("{stem}.csv"), &probes_csv(&self.header, &probes))?;
        if self.cli.svg {
            let target = report.claims.iter().chain(report.parts.iter().flat_map(|p| &p.claims)).find_map(|c| match c.claim {
                Claim::Limit { target } => Some(target),
                _ => None,
            });
            self.save(&format!("{stem}.svg"), &svg_plot(&report.subject, &probes, target))?;
        }
        self.verdict_lines(report);
        Ok(report.verdict.exit_code())
    }

    fn verdict_lines(&mut self, report: &VerdictReport) {
        if self.cli.quiet {
            self.line(&format!("{}: {}\n", report.subject, report.verdict));
        } else {
            self.line(&report.summary());
        }
    }

    fn finish(&mut self, code: i32) -> Result<i32> {
        if !self.cli.quiet {
            let lines: String = self.written.iter().map(|p| format!("wrote {}\n", p.display())).collect();
            self.line(&lines);
        }
        Ok(code)
    }
}

fn measure(spec: &str) -> Result<SharedMeasure> {
    parse_measure(spec)
}

fn h_for(spec: &str, tails: &[&dyn TailCurve], horizon: f64) -> Result<crate::hfunc::HFunction> {
    spec.parse::<HSpec>()?.build(tails, horizon)
}

fn execute(cli: &Cli, header: Header, out: &mut dyn Write) -> Result<i32> {
    let lab = match cli.grid_top {
        Some(t) if !(t > 0.0) => return Err(Error::InvalidParameter(format!("grid top must be positive, got {t}"))),
        Some(t) => LabConfig::default().with_grid_top(t),
        None => LabConfig::default(),
    };
    let mut ctx = Ctx {
        cli,
        dir: OutputDir::resolve(cli.out.clone()),
        header,
        lab,
        out,
        written: Vec::new(),
    };
    let code = dispatch(&mut ctx)?;
    ctx.finish(code)
}

fn dispatch(ctx: &mut Ctx<'_>) -> Result<i32> {
    let cli = ctx.cli;
    match &cli.command {
        Command::Families { action } => match action {
            FamiliesCmd::List => {
                let mut csv = ctx.header.render();
                csv.push_str("name,parameters,tail\n");
                let mut text = String::new();
                for (name, params, tail) in family_catalogue() {
                    csv.push_str(&format!("{name},\"{params}\",\"{tail}\"\n"));
                    text.push_str(&format!("{name:<15} {params:<45} {tail}\n"));
                }
                ctx.say(&text)?;
                ctx.save("families.csv", &csv)?;
                Ok(0)
            }
            FamiliesCmd::DumpBreakpoints { alpha, n } => {
                let c = CounterexampleLaw::new(*alpha)?;
                let body = c.breakpoints_csv(*n)?;
                ctx.say(&body)?;
                let csv = format!("{}{body}", ctx.header.render());
                ctx.save("breakpoints.csv", &csv)?;
                Ok(0)
            }
        },
        Command::ConvTail(a) => {
            let f = measure(&a.f)?;
            let g = measure(a.g.as_deref().unwrap_or(&a.f))?;
            let mut csv = ctx.header.render();
            csv.push_str("x,value,abs_err\n");
            for &x in &a.x {
                let v = conv_tail(&*f, &*g, x, &ctx.lab.quad)?;
                csv.push_str(&format!("{x},{:e},{:e}\n", v.value(), v.abs_err()));
                ctx.say(&format!("x = {x}: {:.12e} (+- {:.1e})\n", v.value(), v.abs_err()))?;
            }
            ctx.save("conv_tail.csv", &csv)?;
            Ok(0)
        }
        Command::Decompose(a) => {
            let f = measure(&a.f)?;
            let g = measure(a.g.as_deref().unwrap_or(&a.f))?;
            let h = h_for(&a.h, &[&*f, &*g], ctx.lab.analytic.top)?;
            let mut rows = Vec::new();
            let mut csv = ctx.header.render();
            csv.push_str("x,level,total,le_h,le_h_swapped,gt_h,gt_gt,split_residual,upper_slack,three_term_residual,identities_hold\n");
            let mut ok = true;
            for &x in &a.x {
                let r = decomposition_report(&*f, &*g, &h, x, &ctx.lab.quad)?;
                ok &= r.identities_hold();
                csv.push_str(&format!(
                    "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
                    r.x,
                    r.level,
                    r.total,
                    r.le_h,
                    r.le_h_swapped,
                    r.gt_h,
                    r.gt_gt,
                    r.split_residual,
                    r.upper_slack,
                    r.three_term_residual.map_or(String::new(), |v| format!("{v:e}")),
                    r.identities_hold()
                ));
                ctx.say(&format!(
                    "x = {x}, h = {}: total {:.6e} = le_h {:.6e} + gt_h {:.6e}; slack {:.2e}\n",
                    r.level, r.total, r.le_h, r.gt_h, r.upper_slack
                ))?;
                rows.push(r);
            }
            ctx.save("decompose.csv", &csv)?;
            ctx.save("decompose.json", &to_json(&ctx.header, &rows)?)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Test { kind } => {
            let lab = ctx.lab.clone();
            let (stem, report) = match kind {
                TestCmd::Longtail { law } => ("test_longtail", test_long_tailed(&*measure(law)?, &lab)?),
                TestCmd::Subexp { law } => ("test_subexp", test_subexponential(&*measure(law)?, &lab)?),
                TestCmd::TailEquiv { law, law2 } => (
                    "test_tail_equiv",
                    test_tail_equivalence(&*measure(law)?, &*measure(law2)?, &lab)?,
                ),
                TestCmd::WeakEquiv { law, law2 } => (
                    "test_weak_equiv",
                    test_weak_tail_equivalence(&*measure(law)?, &*measure(law2)?, &lab)?,
                ),
                TestCmd::HInsensitive { law, h } => {
                    let f = measure(law)?;
                    let h = h_for(h, &[&*f], lab.analytic.top)?;
                    ("test_h_insensitive", check_h_insensitive(&*f, &h, &lab)?)
                }
            };
            ctx.save_report(stem, &report)
        }
        Command::ConstructH(a) => {
            let laws: Vec<SharedMeasure> = a.law.iter().map(|s| measure(s)).collect::<Result<_>>()?;
            let tails: Vec<&dyn TailCurve> = laws.iter().map(|m| &**m as &dyn TailCurve).collect();
            let h = construct_h(
                &tails,
                &HConfig {
                    horizon: a.horizon,
                    points_per_decade: a.points_per_decade,
                    ..HConfig::default()
                },
            )?;
            let mut csv = ctx.header.render();
            csv.push_str("n,x_n\n");
            for (k, x) in h.breakpoints().iter().enumerate() {
                csv.push_str(&format!("{},{x}\n", k + 1));
            }
            ctx.say(&format!("{}\n", h.describe()))?;
            for n in &h.notes {
                ctx.say(&format!("note: {n}\n"))?;
            }
            ctx.save("h.csv", &csv)?;
            ctx.save("h.json", &to_json(&ctx.header, &h)?)?;
            Ok(0)
        }
        Command::Lemma(a) => {
            let inputs = a.laws.merge(lemma_defaults(&a.id)?)?;
            let laws: Vec<SharedMeasure> = inputs.specs().keys().map(|k| inputs.get(k)).collect::<Result<_>>()?;
            let tails: Vec<&dyn TailCurve> = laws.iter().map(|m| &**m as &dyn TailCurve).collect();
            let h = h_for(&a.h, &tails, ctx.lab.analytic.top)?;
            let report = lemma_probe(&a.id, &inputs, &h, &ctx.lab)?;
            ctx.save_report(&format!("lemma_{}", a.id), &report)
        }
        Command::Theorem(a) => {
            let defaults = crate::theorems::theorem_defaults(&a.id)?;
            let inputs = a.laws.merge(defaults)?;
            let h = match a.h.as_deref() {
                None => None,
                Some(s) => match s.parse::<HSpec>()? {
                    HSpec::Auto => None,
                    spec => Some(spec.build(&[], ctx.lab.analytic.top)?),
                },
            };
            let instance = InstanceConfig {
                inputs,
                n: a.n,
                p: a.p,
                h,
            };
            let report = verify_theorem(&a.id, &instance, &ctx.lab)?;
            ctx.save_report(&format!("theorem_{}", a.id), &report)
        }
        Command::Mc { action } => match action {
            McCmd::ConvTail { f, g, x, n, term, h } => {
                let fl = parse_law(f)?;
                let gl = parse_law(g.as_deref().unwrap_or(f))?;
                let term = term.as_deref().map(str::parse::<McTerm>).transpose()?;
                let hf = h_for(h, &[&fl, &gl], ctx.lab.analytic.top)?;
                let mut rows = Vec::new();
                for (i, &xv) in x.iter().enumerate() {
                    let seed = crate::montecarlo::derive_seed(cli.seed, i as u64);
                    let e = match term {
                        None => mc_conv_tail(&fl, &gl, xv, *n, seed)?,
                        Some(t) => mc_decomposition(&fl, &gl, &hf, xv, *n, seed)?.term(t),
                    };
                    ctx.say(&format!("x = {xv}: {:.7} +- {:.2e} ({} hits)\n", e.value, e.std_error, e.hits))?;
                    rows.push(McRow::from_estimate(xv, &e));
                }
                let csv = mc_csv(&ctx.header, &rows);
                ctx.save("mc_conv_tail.csv", &csv)?;
                Ok(0)
            }
            McCmd::BigJump { law, x, n, points } => {
                let fl = parse_law(law)?;
                let xs = if x.is_empty() { mc_grid(&fl, *n, *points) } else { x.clone() };
                let (report, est) = big_jump_report(&fl, &xs, *n, cli.seed, &ctx.lab.thresholds)?;
                let rows: Vec<McRow> = est
                    .iter()
                    .map(|e| McRow {
                        x: e.x,
                        estimate: e.ratio,
                        std_error: e.std_error,
                        n: e.sum.n,
                        hits: e.sum.hits,
                    })
                    .collect();
                ctx.save("mc_big_jump.csv", &mc_csv(&ctx.header, &rows))?;
                ctx.save("mc_big_jump.json", &to_json(&ctx.header, &report)?)?;
                if cli.svg {
                    ctx.save("mc_big_jump.svg", &svg_plot(&report.subject, &report.probes(), Some(1.0)))?;
                }
                ctx.verdict_lines(&report);
                Ok(report.verdict.exit_code())
            }
        },
        Command::Suite { action } => match action {
            SuiteCmd::All {
                mc_n,
                mc_n_large,
                lattice_pairs,
            } => {
                let cfg = SuiteConfig {
                    grid_top: cli.grid_top,
                    seed: cli.seed,
                    mc_n: *mc_n,
                    mc_n_large: *mc_n_large,
                    lattice_pairs: *lattice_pairs,
                };
                let quiet = cli.quiet;
                let log: Box<dyn FnMut(&crate::suite::SuiteItem)> = Box::new(move |i| {
                    if !quiet {
                        eprintln!("[{:>6.2}s] {} {}: {}", i.seconds, i.criterion, i.id, i.verdict);
                    }
                });
                let report = run_suite(&cfg, Some(log))?;
                let header = cfg.header();
                ctx.save("suite.json", &to_json(&header, &report)?)?;
                for (name, csv) in report.mc_csvs() {
                    ctx.save(&format!("mc_{name}.csv"), &csv)?;
                }
                ctx.line(&report.table());
                Ok(report.exit_code())
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(dir: &std::path::Path, args: &[&str]) -> (i32, String, String) {
        let mut argv = vec!["heavytail".to_string(), "--out".into(), dir.display().to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(argv, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_64() {
        let d = tempfile::tempdir().unwrap();
        assert_eq!(run_in(d.path(), &["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = run_in(d.path(), &["theorem", "nope"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("closure.S") && err.contains("long.add.5"), "{err}");
        let (code, _, err) = run_in(d.path(), &["test", "subexp", "--law", "gamma(k=2)"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("pareto"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let d = tempfile::tempdir().unwrap();
        let (code, out, _) = run_in(d.path(), &["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("suite"));
    }

    #[test]
    fn config_file_fills_missing_flags() {
        let d = tempfile::tempdir().unwrap();
        let cfg = d.path().join("run.conf");
        std::fs::write(&cfg, "# conv tail\nF = pareto(alpha=1)\nx = 100\n").unwrap();
        let (code, out, err) = run_in(d.path(), &["conv-tail", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("2.0919"), "{out}");
        let csv = std::fs::read_to_string(d.path().join("conv_tail.csv")).unwrap();
        assert!(csv.contains("# F=pareto(alpha=1)") && csv.contains("# x=100"), "{csv}");
    }

    #[test]
    fn header_records_defaults() {
        let d = tempfile::tempdir().unwrap();
        let (code, _, _) = run_in(d.path(), &["families", "dump-breakpoints", "--n", "3"]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(d.path().join("breakpoints.csv")).unwrap();
        assert!(csv.starts_with("# command=families dump-breakpoints\n"), "{csv}");
        assert!(csv.contains("# alpha=1\n") && csv.contains("# n=3\n") && csv.contains("# seed=1\n"));
    }
}
