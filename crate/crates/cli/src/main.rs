use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use gaugeforge::complexes::{build_alp, build_bb_code, build_minimal_torus, build_toric, parse_monomials, ChainComplex, Family};
use gaugeforge::cup::{check_integrated_leibniz, check_leibniz, fundamental_classes, install_cup, CupFile, CupProduct, FundamentalClass};
use gaugeforge::f2core::F2Vector;
use gaugeforge::gauge_graph::{
    auto_graph, bb_graph, cubic_graph, default_vp, gauge_cz_graph_bb, gauge_cz_graph_fracton, gauge_swap_graph, AncillaGraph, GraphFile,
    PhiFile, PhiMap,
};
use gaugeforge::gauge_homological::{gauge_cz, gauge_swap, GaugedCode, GaugedFile};
use gaugeforge::protocol::{
    check_dressed, dress_logicals, dress_logicals_swap, measure_cz_shots, pairing_sign, run_preparations, DressedLogical, LogicalInput,
    LogicalKind,
};

#[derive(Parser)]
#[command(name = "gaugeforge", version, about = "Gauging transversal gates of CSS chain-complex codes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a chain complex.
    Build(BuildArgs),
    /// Homology dimensions and representatives of a complex.
    Homology {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leibniz certification of a cup product.
    CupCheck {
        #[arg(long)]
        complex: PathBuf,
        /// Cup tables; the family's installed cup is used when omitted.
        #[arg(long)]
        cup: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gauge a transversal gate and emit the resulting code.
    Gauge(GaugeArgs),
    /// Closure, involution and LDPC audits of a gauged code.
    Verify {
        #[arg(long)]
        gauged: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Dressed logical operators of a gauged code, with commutation checks.
    Logicals(LogicalsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Toric,
    Alp,
    Bb,
    MinimalTorus,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long = "Lx")]
    lx: Option<usize>,
    #[arg(long = "Ly")]
    ly: Option<usize>,
    #[arg(long = "Lz")]
    lz: Option<usize>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the family's cup product here.
    #[arg(long)]
    cup_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    HomologicalCz,
    HomologicalSwap,
    GraphSwap,
    GraphCz,
}

#[derive(Args)]
struct GaugeArgs {
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long)]
    complex: PathBuf,
    #[arg(long)]
    cup: Option<PathBuf>,
    /// `all` for the sum of every 2-cell, or an index into the H2 basis.
    #[arg(long, default_value = "all")]
    class: String,
    #[arg(long)]
    phi: Option<PathBuf>,
    #[arg(long, conflicts_with = "auto_graph")]
    graph: Option<PathBuf>,
    #[arg(long)]
    auto_graph: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the ancilla complex (the A sublattice's home) here.
    #[arg(long)]
    ancilla_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ProtocolCmd {
    /// Seeded measurement-based preparations with feedforward.
    Prep {
        #[arg(long)]
        gauged: PathBuf,
        #[arg(long)]
        ancilla: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gauge, measure and ungauge a logical CZ on the dense simulator.
    MeasureCz {
        #[arg(long, value_enum, required_unless_present = "complex")]
        family: Option<FamilyArg>,
        #[arg(long, conflicts_with = "family")]
        complex: Option<PathBuf>,
        #[arg(long)]
        cup: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        class: String,
        /// Two characters `xy` put logical `x` on B0 and `y` on C1; or `B:C`
        /// with one character per logical qubit of each copy.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 2000)]
        shots: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LogicalsArgs {
    #[arg(long, value_enum, default_value = "homological-cz")]
    mode: ModeArg,
    #[arg(long)]
    complex: PathBuf,
    #[arg(long)]
    cup: Option<PathBuf>,
    #[arg(long, default_value = "all")]
    class: String,
    #[arg(long)]
    phi: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

// ============================================================================
// Plumbing
// ============================================================================

#[derive(Serialize)]
struct RunManifest {
    command_line: Vec<String>,
    input_hashes: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    tool_version: String,
    timestamp_unix_ms: u128,
    elapsed_ms: u128,
}

/// Collects inputs read during a run, for the manifest.
#[derive(Default)]
struct Ctx {
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
}

impl Ctx {
    fn read<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), format!("{:x}", Sha256::digest(&bytes)));
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
    }

    fn complex(&mut self, path: &Path) -> Result<ChainComplex> {
        let c: ChainComplex = self.read(path)?;
        if !c.validate().chain_ok {
            bail!("{}: boundary maps do not compose to zero", path.display());
        }
        Ok(c)
    }

    fn cup(&mut self, path: Option<&Path>, c: &ChainComplex) -> Result<CupProduct> {
        match path {
            Some(p) => {
                let f: CupFile = self.read(p)?;
                Ok(CupProduct::from_file(&f)?)
            }
            None => Ok(install_cup(c)?),
        }
    }
}

/// What a command produced: the JSON payload, whether its checks passed
/// and a residual report for standard error when they did not.
struct Outcome {
    data: Value,
    ok: bool,
    report: Option<String>,
}

impl Outcome {
    fn ok(data: Value) -> Self {
        Self { data, ok: true, report: None }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn pick_class(c: &ChainComplex, choice: &str) -> Result<FundamentalClass> {
    if choice == "all" {
        return FundamentalClass::new(c, F2Vector::ones(c.n2()), Some("all-cells".into()))
            .map_err(|_| anyhow!("the sum of all 2-cells is not closed; pass a class index"));
    }
    let k: usize = choice.parse().map_err(|_| anyhow!("--class must be `all` or an index"))?;
    let mut classes = fundamental_classes(c);
    if k >= classes.len() {
        bail!("class index {k} out of range (H2 has dimension {})", classes.len());
    }
    Ok(classes.swap_remove(k))
}

fn need(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| anyhow!("--{name} is required for this family"))
}

fn build_family(a: &BuildArgs) -> Result<ChainComplex> {
    Ok(match a.family {
        FamilyArg::Toric => build_toric(need(a.l, "L")?)?,
        FamilyArg::Alp => build_alp(need(a.lx, "Lx")?, need(a.ly, "Ly")?, need(a.lz, "Lz")?)?,
        FamilyArg::Bb => {
            let f = a.f.as_deref().ok_or_else(|| anyhow!("--f is required for bb"))?;
            let g = a.g.as_deref().ok_or_else(|| anyhow!("--g is required for bb"))?;
            build_bb_code(&parse_monomials(f)?, &parse_monomials(g)?, need(a.lx, "Lx")?, need(a.ly, "Ly")?)?
        }
        FamilyArg::MinimalTorus => build_minimal_torus(),
    })
}

fn ancilla_graph(ctx: &mut Ctx, c: &ChainComplex, phi: &PhiMap, graph: Option<&Path>) -> Result<AncillaGraph> {
    match graph {
        Some(p) => {
            let f: GraphFile = ctx.read(p)?;
            Ok(AncillaGraph::from_file(&f)?)
        }
        None => Ok(auto_graph(c, phi)?),
    }
}

fn phi_map(ctx: &mut Ctx, c: &ChainComplex, path: Option<&Path>) -> Result<PhiMap> {
    match path {
        Some(p) => {
            let f: PhiFile = ctx.read(p)?;
            Ok(PhiMap::from_file(&f, c.n1())?)
        }
        None => Ok(PhiMap::first_endpoint(c)?),
    }
}

// ============================================================================
// Commands
// ============================================================================

fn cmd_build(a: &BuildArgs) -> Result<Outcome> {
    let c = build_family(a)?;
    if let Some(p) = &a.cup_out {
        let cp = install_cup(&c)?;
        write_json(p, &to_json(&cp.to_file())?)?;
    }
    Ok(Outcome::ok(to_json(&c)?))
}

fn cmd_homology(ctx: &mut Ctx, input: &Path) -> Result<Outcome> {
    let c = ctx.complex(input)?;
    let h = c.homology()?;
    Ok(Outcome::ok(json!({
        "cells": [c.n0(), c.n1(), c.n2()],
        "validation": c.validate(),
        "homology": h,
    })))
}

fn cmd_cup_check(ctx: &mut Ctx, complex: &Path, cup: Option<&Path>, trials: usize, seed: u64) -> Result<Outcome> {
    ctx.seed = Some(seed);
    let c = ctx.complex(complex)?;
    let cp = ctx.cup(cup, &c)?;
    let leibniz = check_leibniz(&cp, &c, trials, seed);
    let mut ok = leibniz.failures.is_empty();
    let mut integrated = Vec::new();
    for m in fundamental_classes(&c) {
        for lambda in [2, 3] {
            let r = check_integrated_leibniz(&cp, &c, &m, lambda, trials, seed)?;
            ok &= r.failures == 0;
            integrated.push(json!({ "class": m.tag, "report": r }));
        }
    }
    let report = (!ok).then(|| format!("{} basis-pair Leibniz failures", leibniz.failures.len()));
    Ok(Outcome {
        data: json!({
            "leibniz": leibniz,
            "integrated": integrated,
            "locality_radius": cp.locality_radius(&c),
        }),
        ok,
        report,
    })
}

fn cmd_gauge(ctx: &mut Ctx, a: &GaugeArgs) -> Result<Outcome> {
    let c = ctx.complex(&a.complex)?;
    let (g, ancilla): (GaugedCode, ChainComplex) = match a.mode {
        ModeArg::HomologicalCz => {
            let cp = ctx.cup(a.cup.as_deref(), &c)?;
            let m = pick_class(&c, &a.class)?;
            (gauge_cz(&c, &cp, &m)?, c.clone())
        }
        ModeArg::HomologicalSwap => {
            let cp = ctx.cup(a.cup.as_deref(), &c)?;
            let m = pick_class(&c, &a.class)?;
            (gauge_swap(&c, &cp, &m, &m, None)?, c.clone())
        }
        ModeArg::GraphSwap => {
            let phi = phi_map(ctx, &c, a.phi.as_deref())?;
            let graph = ancilla_graph(ctx, &c, &phi, a.graph.as_deref())?;
            (gauge_swap_graph(&c, &phi, &graph, &default_vp(&c))?, graph.complex()?)
        }
        ModeArg::GraphCz => match c.family {
            Family::Alp { lx, ly, lz } => (gauge_cz_graph_fracton(&c)?, cubic_graph(lx, ly, lz)?.complex()?),
            Family::Bb { .. } => {
                let graph = match &a.graph {
                    Some(p) => {
                        let f: GraphFile = ctx.read(p)?;
                        AncillaGraph::from_file(&f)?
                    }
                    None => bb_graph(&c)?,
                };
                (gauge_cz_graph_bb(&c, Some(&graph))?, graph.complex()?)
            }
            _ => bail!("graph-cz supports the alp and bb families"),
        },
    };
    if let Some(p) = &a.ancilla_out {
        write_json(p, &to_json(&ancilla)?)?;
    }
    Ok(Outcome::ok(to_json(&g.to_file())?))
}

fn cmd_verify(ctx: &mut Ctx, gauged: &Path) -> Result<Outcome> {
    let f: GaugedFile = ctx.read(gauged)?;
    let g = GaugedCode::from_file(&f)?;
    let closure = g.audit_closure()?;
    let involution = g.audit_involution()?;
    let ldpc = g.ldpc_audit();
    let ok = closure.ok() && involution.is_empty();
    let report = (!ok).then(|| {
        let mut s = String::new();
        for fl in closure.failures.iter().take(20) {
            s.push_str(&format!("closure: generators ({}, {}): {}\n", fl.first, fl.second, fl.reason));
        }
        if closure.failures.len() > 20 {
            s.push_str(&format!("closure: {} more failures\n", closure.failures.len() - 20));
        }
        for k in &involution {
            s.push_str(&format!("involution: x-type generator {k} does not square to identity\n"));
        }
        s
    });
    Ok(Outcome {
        data: json!({
            "qubits": g.n(),
            "closure": closure,
            "involution_failures": involution,
            "ldpc": ldpc,
            "ok": ok,
        }),
        ok,
        report,
    })
}

fn cmd_prep(ctx: &mut Ctx, gauged: &Path, ancilla: &Path, trials: usize, seed: u64) -> Result<Outcome> {
    ctx.seed = Some(seed);
    let f: GaugedFile = ctx.read(gauged)?;
    let g = GaugedCode::from_file(&f)?;
    let anc = ctx.complex(ancilla)?;
    let st = run_preparations(&g, &anc, trials, seed)?;
    let ok = st.corrected == st.trials;
    let report = (!ok).then(|| format!("{} of {} trials left uncorrected stabilizers", st.trials - st.corrected, st.trials));
    Ok(Outcome { data: to_json(&st)?, ok, report })
}

fn parse_input(s: &str) -> Result<LogicalInput> {
    if let Some((b, c)) = s.split_once(':') {
        return Ok(LogicalInput { b: b.into(), c: c.into() });
    }
    let ch: Vec<char> = s.chars().collect();
    if ch.len() != 2 {
        bail!("--input takes two characters or `B:C`");
    }
    Ok(LogicalInput {
        b: format!("{}0", ch[0]),
        c: format!("0{}", ch[1]),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_measure_cz(
    ctx: &mut Ctx,
    family: Option<FamilyArg>,
    complex: Option<&Path>,
    cup: Option<&Path>,
    class: &str,
    input: &str,
    shots: usize,
    seed: u64,
) -> Result<Outcome> {
    ctx.seed = Some(seed);
    let c = match (family, complex) {
        (_, Some(p)) => ctx.complex(p)?,
        (Some(FamilyArg::MinimalTorus), None) => build_minimal_torus(),
        _ => bail!("measure-cz builds only the minimal torus itself; pass --complex otherwise"),
    };
    let cp = ctx.cup(cup, &c)?;
    let m = pick_class(&c, class)?;
    let input = parse_input(input)?;
    let st = measure_cz_shots(&c, &cp, &m, &input, shots, seed)?;
    let mut data = to_json(&st)?;
    data["input"] = to_json(&input)?;
    data["p_plus"] = json!(st.mu_plus_frequency.first().copied());
    Ok(Outcome::ok(data))
}

fn logical_json(dl: &DressedLogical, check: &gaugeforge::protocol::DressedCheck) -> Result<Value> {
    Ok(json!({
        "kind": dl.kind,
        "base": dl.base.support(),
        "basepoints": dl.basepoints,
        "operator": dl.op.to_file(),
        "check": check,
    }))
}

fn cmd_logicals(ctx: &mut Ctx, a: &LogicalsArgs) -> Result<Outcome> {
    let c = ctx.complex(&a.complex)?;
    let (g, ancilla, ls) = match a.mode {
        ModeArg::HomologicalCz => {
            let cp = ctx.cup(a.cup.as_deref(), &c)?;
            let m = pick_class(&c, &a.class)?;
            let g = gauge_cz(&c, &cp, &m)?;
            let ls = dress_logicals(&c, &cp, &m)?;
            (g, c.clone(), ls)
        }
        ModeArg::GraphSwap => {
            let phi = phi_map(ctx, &c, a.phi.as_deref())?;
            let graph = ancilla_graph(ctx, &c, &phi, a.graph.as_deref())?;
            let g = gauge_swap_graph(&c, &phi, &graph, &default_vp(&c))?;
            let ls = dress_logicals_swap(&c, &g, &phi, &graph)?;
            (g, graph.complex()?, ls)
        }
        _ => bail!("logicals supports homological-cz and graph-swap"),
    };
    let mut ok = true;
    let mut out = Vec::new();
    for dl in &ls {
        let r = check_dressed(&c, &ancilla, &g, dl)?;
        ok &= r.ok();
        out.push(logical_json(dl, &r)?);
    }
    // Pairing on a few fixed basis states.
    let n = g.n();
    let patterns = [
        F2Vector::zeros(n),
        F2Vector::ones(n),
        F2Vector::from_bools(&(0..n).map(|i| i % 2 == 1).collect::<Vec<_>>()),
        F2Vector::from_bools(&(0..n).map(|i| i % 3 == 0).collect::<Vec<_>>()),
    ];
    let mut pairing_failures = Vec::new();
    let is_x = |k: LogicalKind| matches!(k, LogicalKind::XB | LogicalKind::XC);
    let is_z = |k: LogicalKind| matches!(k, LogicalKind::ZB | LogicalKind::ZC);
    for (i, x) in ls.iter().enumerate().filter(|(_, d)| is_x(d.kind)) {
        for (j, z) in ls.iter().enumerate().filter(|(_, d)| is_z(d.kind)) {
            let same = matches!((x.kind, z.kind), (LogicalKind::XB, LogicalKind::ZB) | (LogicalKind::XC, LogicalKind::ZC));
            let want = if same && x.base.dot(&z.base) { -1 } else { 1 };
            for bits in &patterns {
                if pairing_sign(x, z, bits)? != want {
                    pairing_failures.push([i, j]);
                    break;
                }
            }
        }
    }
    ok &= pairing_failures.is_empty();
    let report = (!ok).then(|| format!("{} pairing failures; see the `check` fields", pairing_failures.len()));
    Ok(Outcome {
        data: json!({ "logicals": out, "pairing_failures": pairing_failures }),
        ok,
        report,
    })
}

// ============================================================================

fn main() -> ExitCode {
    let started = Instant::now();
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let mut ctx = Ctx::default();

    let (res, out) = match &cli.cmd {
        Cmd::Build(a) => (cmd_build(a), a.out.clone()),
        Cmd::Homology { input, out } => (cmd_homology(&mut ctx, input), out.clone()),
        Cmd::CupCheck { complex, cup, trials, seed, out } => (cmd_cup_check(&mut ctx, complex, cup.as_deref(), *trials, *seed), out.clone()),
        Cmd::Gauge(a) => (cmd_gauge(&mut ctx, a), a.out.clone()),
        Cmd::Verify { gauged, out } => (cmd_verify(&mut ctx, gauged), out.clone()),
        Cmd::Protocol(ProtocolCmd::Prep { gauged, ancilla, trials, seed, out }) => {
            (cmd_prep(&mut ctx, gauged, ancilla, *trials, *seed), out.clone())
        }
        Cmd::Protocol(ProtocolCmd::MeasureCz { family, complex, cup, class, input, shots, seed, out }) => (
            cmd_measure_cz(&mut ctx, *family, complex.as_deref(), cup.as_deref(), class, input, *shots, *seed),
            out.clone(),
        ),
        Cmd::Logicals(a) => (cmd_logicals(&mut ctx, a), a.out.clone()),
    };

    let outcome = match res {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let manifest = RunManifest {
        command_line: argv,
        input_hashes: ctx.inputs,
        seed: ctx.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp_unix_ms: stamp,
        elapsed_ms: started.elapsed().as_millis(),
    };
    let written = match &out {
        Some(p) => write_json(p, &outcome.data).and_then(|()| {
            let mut mp = p.clone().into_os_string();
            mp.push(".manifest.json");
            write_json(Path::new(&mp), &serde_json::to_value(&manifest)?)
        }),
        None => serde_json::to_string_pretty(&outcome.data).map_err(Into::into).map(|s| {
            println!("{s}");
            eprintln!("{}", serde_json::to_string(&manifest).unwrap_or_default());
        }),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if !outcome.ok {
        eprintln!("verification failed");
        if let Some(r) = outcome.report {
            eprint!("{r}");
            if !r.ends_with('\n') {
                eprintln!();
            }
        }
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
