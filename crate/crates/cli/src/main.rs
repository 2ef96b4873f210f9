use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mtpgd::compare::{compare, CompareReport, Quantity, Selection};
use mtpgd::incremental::{HistoryRecord, IncrementalSolver};
use mtpgd::io;
use mtpgd::model::StructuralModel;
use mtpgd::pgd::{initial_guess, solve, Decomposition};
use mtpgd::scenario::{BuiltModel, ModelSpec, Scenario, BUILTIN};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mtpgd", version, about = "Incremental and multi-temporal PGD runs of cyclic elastoplastic benchmarks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Incremental,
    Pgd,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Built-in scenario name or path to a JSON config.
    #[arg(long)]
    scenario: String,
    /// Maximum number of PGD modes.
    #[arg(long)]
    modes: Option<usize>,
    /// Number of decomposed cycles (one scale unless --scales is given).
    #[arg(long)]
    cycles: Option<usize>,
    /// Large-time scale sizes, e.g. 20,10.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    /// Seed of the mesh perturbation (plate scenarios).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write the output bundle.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_enum, default_value = "incremental")]
        solver: SolverKind,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip the incremental reference run of a PGD solve.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Compare a candidate (B) against a reference (A).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Leading steps of A to drop (e.g. warm-up cycles).
        #[arg(long, default_value_t = 0)]
        skip_a: usize,
        #[arg(long, default_value_t = 0)]
        skip_b: usize,
        /// Steps per cycle; read from a decomposition or sidecar when omitted.
        #[arg(long)]
        steps_per_cycle: Option<usize>,
        /// Restrict the comparison to these dofs.
        #[arg(long, value_delimiter = ',')]
        dofs: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a binary history or decomposition as CSV, or a scenario as JSON.
    Export {
        input: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario and print its size.
    Validate {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario> {
    let mut s = if BUILTIN.contains(&args.scenario.as_str()) {
        Scenario::builtin(&args.scenario)?
    } else {
        let text = std::fs::read_to_string(&args.scenario).with_context(|| format!("reading {}", args.scenario))?;
        Scenario::from_json(&text).with_context(|| format!("in {}", args.scenario))?
    };
    if let Some(m) = args.modes {
        s.pgd.max_modes = m;
    }
    match (&args.scales, args.cycles) {
        (Some(sc), Some(c)) if sc.iter().product::<usize>() != c => {
            bail!("--cycles {c} does not match --scales {sc:?} (product {})", sc.iter().product::<usize>())
        }
        (Some(sc), _) => s.time.scales = sc.clone(),
        (None, Some(c)) => s.time.scales = vec![c],
        (None, None) => {}
    }
    if let Some(seed) = args.seed {
        match &mut s.model {
            ModelSpec::PlaneStrain(p) => p.mesh.seed = seed,
            ModelSpec::WinklerBeam(_) => eprintln!("note: --seed has no effect on a beam scenario"),
        }
    }
    s.validate()?;
    Ok(s)
}

struct Bundle {
    dir: PathBuf,
    meta: Value,
}

impl Bundle {
    fn save(&self) -> Result<()> {
        io::write_json(&self.dir.join("metadata.json"), &self.meta)?;
        Ok(())
    }
}

fn trace_rows(
    built: &BuiltModel,
    rows: &[Vec<f64>],
    first_step: usize,
    dt: f64,
    m: usize,
    loads: &[f64],
    extra: &[&[f64]],
) -> Vec<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, u)| {
            let n = first_step + i;
            let cycle = if n == 0 { 0 } else { (n - 1) / m + 1 };
            let mut r = vec![n as f64, n as f64 * dt, cycle as f64, loads[i]];
            r.extend(built.probe(u));
            r.extend(extra.iter().map(|e| e[i]));
            r
        })
        .collect()
}

fn header(built: &BuiltModel, extra: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = ["step", "time", "cycle", "load"].iter().map(|s| s.to_string()).collect();
    h.extend(built.probe_names());
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

fn reference<M: StructuralModel<f64>>(model: &M, s: &Scenario) -> Result<HistoryRecord<f64, M::Point>> {
    let grid = s.grid()?;
    let solver = IncrementalSolver::new(model, s.solver.clone())?;
    Ok(solver.run_history(&s.load.with_warmup(&grid, s.time.warmup_cycles), grid.steps_per_cycle())?)
}

fn write_record<P: Clone>(bundle: &mut Bundle, built: &BuiltModel, s: &Scenario, rec: &HistoryRecord<f64, P>, prefix: &str) -> Result<()> {
    let grid = s.grid()?;
    let m = grid.steps_per_cycle();
    let dt = grid.period / m as f64;
    let dir = &bundle.dir;
    io::write_history(&dir.join(format!("{prefix}history.bin")), &rec.displacements)?;
    io::write_json(
        &dir.join(format!("{prefix}history.json")),
        &json!({
            "format": "mtpgd-history",
            "version": 1,
            "n_dofs": rec.n_dofs,
            "n_steps": rec.n_steps(),
            "steps_per_cycle": m,
            "warmup_cycles": s.time.warmup_cycles,
            "chunk_rows": io::CHUNK_ROWS,
            "worst_cycle_energy_error": rec.worst_cycle_energy_error(),
            "newton_iterations": rec.iterations.iter().map(|&i| i as u64).sum::<u64>(),
            "bisections": rec.bisections.iter().map(|&i| i as u64).sum::<u64>(),
        }),
    )?;
    let loads: Vec<f64> = rec.load_factors.clone();
    let cols = ["external_work", "stored_energy", "dissipation_physical", "dissipation_algorithmic", "plastic_measure"];
    let extra: [&[f64]; 5] = [
        &rec.external_work,
        &rec.stored_energy,
        &rec.dissipation_physical,
        &rec.dissipation_algorithmic,
        &rec.plastic_measure,
    ];
    io::write_csv(&dir.join(format!("{prefix}trace.csv")), &header(built, &cols), trace_rows(built, &rec.displacements, 0, dt, m, &loads, &extra))?;
    bundle.meta[format!("{prefix}history")] = json!(format!("{prefix}history.bin"));
    Ok(())
}

fn profile_quantities(built: &BuiltModel) -> Vec<(&'static str, Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + '_>)> {
    match built {
        BuiltModel::Plate { .. } => Vec::new(),
        BuiltModel::Pile { .. } => (0..3)
            .map(|k| {
                let name = ["deflection", "shear", "moment"][k];
                let f: Box<dyn Fn(&[f64]) -> Vec<f64> + Sync> = Box::new(move |u: &[f64]| built.profiles(u)[k].1.clone());
                (name, f)
            })
            .collect(),
    }
}

fn report(built: &BuiltModel, reference: &[Vec<f64>], candidate: &[Vec<f64>], m: usize) -> Result<CompareReport> {
    let q = profile_quantities(built);
    let quantities: Vec<Quantity> = q.iter().map(|(n, f)| Quantity { name: n, extract: f.as_ref() }).collect();
    Ok(compare(reference, candidate, m, &Selection::All, &quantities)?)
}

fn run_pgd<M: StructuralModel<f64>>(model: &M, built: &BuiltModel, s: &Scenario, bundle: &mut Bundle, oracle: bool) -> Result<()> {
    let grid = s.grid()?;
    let m = grid.steps_per_cycle();
    let dt = grid.period / m as f64;
    let offset = s.time.warmup_cycles * m;
    let t = Instant::now();
    let seed = initial_guess(model, &s.solver, &s.load, &grid, s.time.warmup_cycles)?;
    let run = solve(model, &grid, &s.load, &seed, &s.pgd)?;
    bundle.meta["timings"]["pgd_seconds"] = json!(t.elapsed().as_secs_f64());
    let d = &run.decomposition;
    let dir = bundle.dir.clone();
    io::write_decomposition(&dir.join("decomposition.bin"), d)?;
    io::write_json(
        &dir.join("decomposition.json"),
        &json!({
            "format": "mtpgd-decomposition",
            "version": 1,
            "grid": { "n_tau": grid.n_tau, "period": grid.period, "scales": grid.scales },
            "n_dofs": d.n_dofs,
            "n_modes": d.n_modes(),
            "zeta": d.zetas(),
            "first_global_step": offset,
            "settings": s.pgd,
            "stop_reason": run.stop_reason,
            "modes": run.logs,
            "mean_boundary_jump": d.mean_boundary_jump(),
            "block_dissipation": run.history.total_dissipation(),
        }),
    )?;
    io::write_decomposition_csv(&dir, d)?;
    let rows = d.reconstruct_all();
    let loads = s.load.amplitudes(&grid);
    let cum_d: Vec<f64> = run.history.dissipation.iter().scan(0.0, |a, &x| {
        *a += x;
        Some(*a)
    }).collect();
    let cols = ["block_dissipation", "plastic_measure"];
    let extra: [&[f64]; 2] = [&cum_d, &run.history.plastic_measure];
    io::write_csv(&dir.join("reconstruction.csv"), &header(built, &cols), trace_rows(built, &rows, offset, dt, m, &loads, &extra))?;
    bundle.meta["decomposition"] = json!("decomposition.bin");
    bundle.meta["n_modes"] = json!(d.n_modes());
    if oracle {
        let t = Instant::now();
        let rec = reference(model, s)?;
        bundle.meta["timings"]["oracle_seconds"] = json!(t.elapsed().as_secs_f64());
        write_record(bundle, built, s, &rec, "oracle_")?;
        let block = &rec.displacements[offset..];
        let full = report(built, block, &rows, m)?;
        let per_mode: Vec<Value> = run
            .snapshots
            .iter()
            .map(|snap: &Decomposition<f64>| json!({ "modes": snap.n_modes(), "relative_l2": snap.relative_l2(block), "mean_boundary_jump": snap.mean_boundary_jump() }))
            .collect();
        let d_ref = rec.dissipation_physical[rec.n_steps() - 1] - rec.dissipation_physical[offset];
        io::write_json(
            &dir.join("report.json"),
            &json!({ "reference": "incremental", "comparison": full, "per_mode": per_mode,
                     "dissipation": { "pgd": run.history.total_dissipation(), "incremental": d_ref } }),
        )?;
        println!("relative L2 error vs incremental: {:.3e}", full.relative_l2);
    }
    println!("{} modes ({}); ζ = {:?}", d.n_modes(), run.stop_reason, d.zetas());
    Ok(())
}

fn run_model<M: StructuralModel<f64>>(model: &M, built: &BuiltModel, s: &Scenario, solver: SolverKind, bundle: &mut Bundle, oracle: bool) -> Result<()> {
    match solver {
        SolverKind::Incremental => {
            let t = Instant::now();
            let rec = reference(model, s)?;
            bundle.meta["timings"]["incremental_seconds"] = json!(t.elapsed().as_secs_f64());
            write_record(bundle, built, s, &rec, "")?;
            println!("{} steps, worst cycle energy error {:.2e}", rec.n_steps(), rec.worst_cycle_energy_error());
            Ok(())
        }
        SolverKind::Pgd => run_pgd(model, built, s, bundle, oracle),
    }
}

fn cmd_run(args: &ScenarioArgs, solver: SolverKind, out: &Path, no_oracle: bool) -> Result<()> {
    let s = load_scenario(args)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    io::write_json(&out.join("config.json"), &s)?;
    let grid = s.grid()?;
    let built = s.build()?;
    let n_d = built.n_dofs();
    let (inc, pgd) = mtpgd::time::dof_counts(&grid, n_d as u64, s.pgd.max_modes as u64);
    let mut bundle = Bundle {
        dir: out.to_path_buf(),
        meta: json!({
            "tool": "mtpgd",
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": s.name,
            "config_hash": s.hash(),
            "solver": match solver { SolverKind::Incremental => "incremental", SolverKind::Pgd => "pgd" },
            "n_dofs": n_d,
            "dof_counts": { "incremental": inc, "pgd": pgd, "modes": s.pgd.max_modes },
            "cycles": { "warmup": s.time.warmup_cycles, "block": grid.n_cycles(), "scales": grid.scales },
            "timings": {},
            "complete": false,
        }),
    };
    bundle.save()?;
    let t = Instant::now();
    let result = match &built {
        BuiltModel::Plate { model, .. } => run_model(model, &built, &s, solver, &mut bundle, !no_oracle),
        BuiltModel::Pile { model, .. } => run_model(model, &built, &s, solver, &mut bundle, !no_oracle),
    };
    bundle.meta["timings"]["total_seconds"] = json!(t.elapsed().as_secs_f64());
    match result {
        Ok(()) => {
            bundle.meta["complete"] = json!(true);
            bundle.save()?;
            println!("outputs in {}", out.display());
            Ok(())
        }
        Err(e) => {
            bundle.meta["error"] = json!(format!("{e:#}"));
            bundle.save()?;
            Err(e.context("run incomplete; partial outputs are flagged in metadata.json"))
        }
    }
}

enum Loaded {
    History(Vec<Vec<f64>>, Option<usize>),
    Decomp(Decomposition<f64>),
}

fn load_any(path: &Path) -> Result<Loaded> {
    match io::read_decomposition(path) {
        Ok(d) => Ok(Loaded::Decomp(d)),
        Err(io::IoError::Magic { .. }) => {
            let rows = io::read_history(path)?;
            let sidecar = path.with_extension("json");
            let m = std::fs::read_to_string(&sidecar)
                .ok()
                .and_then(|t| serde_json::from_str::<Value>(&t).ok())
                .and_then(|v| v["steps_per_cycle"].as_u64())
                .map(|v| v as usize);
            Ok(Loaded::History(rows, m))
        }
        Err(e) => Err(e.into()),
    }
}

fn rows_of(l: Loaded) -> (Vec<Vec<f64>>, Option<usize>) {
    match l {
        Loaded::History(r, m) => (r, m),
        Loaded::Decomp(d) => {
            let m = d.grid.steps_per_cycle();
            (d.reconstruct_all(), Some(m))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(a: &Path, b: &Path, skip_a: usize, skip_b: usize, m: Option<usize>, dofs: Option<Vec<usize>>, out: Option<&Path>) -> Result<()> {
    let (ra, ma) = rows_of(load_any(a)?);
    let (rb, mb) = rows_of(load_any(b)?);
    let m = m.or(ma).or(mb).ok_or_else(|| anyhow!("cannot infer steps per cycle; pass --steps-per-cycle"))?;
    if skip_a > ra.len() || skip_b > rb.len() {
        bail!("skip exceeds the history length");
    }
    let selection = dofs.map_or(Selection::All, Selection::Dofs);
    let r = compare(&ra[skip_a..], &rb[skip_b..], m, &selection, &[])?;
    let text = serde_json::to_string_pretty(&r)?;
    match out {
        Some(p) => io::write_json(p, &r)?,
        None => println!("{text}"),
    }
    eprintln!("relative L2 {:.6e}, max pointwise {:.6e}", r.relative_l2, r.max_pointwise);
    Ok(())
}

fn cmd_export(input: Option<&Path>, scenario: Option<&str>, out: &Path) -> Result<()> {
    match (input, scenario) {
        (None, Some(name)) => {
            let args = ScenarioArgs { scenario: name.into(), modes: None, cycles: None, scales: None, seed: None };
            io::write_json(out, &load_scenario(&args)?)?;
        }
        (Some(path), None) => {
            let (rows, _) = rows_of(load_any(path)?);
            let n = rows.first().map_or(0, Vec::len);
            let mut h = vec!["step".to_string()];
            h.extend((0..n).map(|i| format!("u{i}")));
            let data = rows.into_iter().enumerate().map(|(k, r)| {
                let mut v = vec![k as f64];
                v.extend(r);
                v
            });
            io::write_csv(out, &h, data)?;
        }
        _ => bail!("export needs either an input file or --scenario"),
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_validate(args: &ScenarioArgs) -> Result<()> {
    let s = load_scenario(args)?;
    let grid = s.grid()?;
    let n_d = s.n_dofs()?;
    let (inc, pgd) = s.dof_counts(s.pgd.max_modes)?;
    let summary = json!({
        "scenario": s.name,
        "valid": true,
        "config_hash": s.hash(),
        "n_dofs": n_d,
        "n_tau": grid.n_tau,
        "scales": grid.scales,
        "block_cycles": grid.n_cycles(),
        "warmup_cycles": s.time.warmup_cycles,
        "block_steps": grid.n_steps(),
        "dof_counts": { "incremental": inc, "pgd": pgd, "modes": s.pgd.max_modes },
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Run { scenario, solver, out, no_oracle } => cmd_run(scenario, *solver, out, *no_oracle),
        Command::Compare { a, b, skip_a, skip_b, steps_per_cycle, dofs, out } => {
            cmd_compare(a, b, *skip_a, *skip_b, *steps_per_cycle, dofs.clone(), out.as_deref())
        }
        Command::Export { input, scenario, out } => cmd_export(input.as_deref(), scenario.as_deref(), out),
        Command::Validate { scenario } => cmd_validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
