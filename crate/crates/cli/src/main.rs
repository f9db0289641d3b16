use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use multidwr_core::driver::write_history_csv;
use multidwr_core::io::config::RunConfig;
use multidwr_core::io::vtk::{dual_scalars, indicator_scalar, primal_scalars};
use multidwr_core::io::{export_vtk, read_config, write_manifest, write_mesh_file, SavedState};
use multidwr_core::mesh::leaf_mesh;
use multidwr_core::{adapt_loop, single_mesh_baseline, solve_steady, CellField, Error};

/// Overrides the output directory of the configuration.
const OUTPUT_ENV: &str = "MULTIDWR_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "multidwr", version, about = "Multi-target DWR mesh adaptation for 2D Euler flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on the initial mesh and write the Newton history, state and VTK.
    Solve(RunArgs),
    /// Multi-mesh adaptation for the configured composite functional.
    Adapt(RunArgs),
    /// Single-mesh adaptation for the weighted sum of the targets.
    Baseline(RunArgs),
    /// Write the initial mesh of the configured geometry as a mesh file.
    GenMesh {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a saved state to VTK.
    Export {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; takes precedence over the environment and the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Recorded in the manifest; the solver is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 3,
        Error::MeshFormat { .. }
        | Error::InvalidMesh(_)
        | Error::UnknownBoundaryMarker(_)
        | Error::Io(_)
        | Error::Json(_) => 4,
        Error::NewtonDiverged { .. }
        | Error::NewtonStalled { .. }
        | Error::NoConvergence(_)
        | Error::NonphysicalState { .. } => 5,
        Error::BudgetExceeded { .. } => 6,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run_solve(&a),
        Command::Adapt(a) => run_adapt(&a),
        Command::Baseline(a) => run_baseline(&a),
        Command::GenMesh { config, out } => gen_mesh(&config, &out),
        Command::Export { state, out } => export(&state, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("multidwr: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Run {
    cfg: RunConfig,
    tree: multidwr_core::HierarchicalTree,
    out: PathBuf,
}

fn prepare(a: &RunArgs) -> Result<Run, Error> {
    let cfg = read_config(&a.config)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let tree = cfg.build_geometry(base)?;
    let out = a
        .output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&out)?;
    Ok(Run { cfg, tree, out })
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn manifest(command: &str, a: &RunArgs, run: &Run, body: Value) -> Result<Value, Error> {
    let mut m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": a.seed,
        "config": serde_json::to_value(&run.cfg)?,
        "initial_cells": run.tree.leaf_count(),
        "root_fingerprint": format!("{:016x}", run.tree.root_mesh().fingerprint()),
        "timestamp": timestamp(),
    });
    if let (Value::Object(m), Value::Object(b)) = (&mut m, body) {
        m.extend(b);
    }
    Ok(m)
}

fn run_solve(a: &RunArgs) -> Result<(), Error> {
    let run = prepare(a)?;
    let fs = run.cfg.freestream_spec();
    let mesh = leaf_mesh(&run.tree)?;
    let u0 = CellField::uniform(&mesh, fs.state().0);
    let (u, history) = solve_steady(&mesh, &u0, &fs, &run.cfg.solver)?;
    history.write_csv(BufWriter::new(File::create(run.out.join("newton_history.csv"))?))?;
    SavedState::new(&run.tree, &u, &fs)?.write(&run.out.join("state.json"))?;
    if run.cfg.output.vtk {
        export_vtk(&run.out.join("solution.vtk"), &mesh, &primal_scalars(&mesh, &u, &fs)?)?;
    }
    let values: Vec<f64> = run
        .cfg
        .targets()
        .iter()
        .map(|t| multidwr_core::functionals::evaluate(&mesh, &u, t))
        .collect::<Result<_, _>>()?;
    let m = manifest(
        "solve",
        a,
        &run,
        json!({
            "newton_iterations": history.iterations(),
            "final_residual": history.final_residual(),
            "values": values,
        }),
    )?;
    write_manifest(&run.out.join("manifest.json"), &m)?;
    println!(
        "solved {} cells in {} Newton iterations, residual {:e}",
        mesh.num_cells(),
        history.iterations(),
        history.final_residual()
    );
    Ok(())
}

fn require_targets(cfg: &RunConfig) -> Result<(), Error> {
    if cfg.targets.is_empty() {
        return Err(Error::Config(vec![multidwr_core::ConfigIssue {
            line: None,
            message: "this command needs at least one [[targets]] entry".into(),
        }]));
    }
    Ok(())
}

fn run_adapt(a: &RunArgs) -> Result<(), Error> {
    let run = prepare(a)?;
    require_targets(&run.cfg)?;
    let fs = run.cfg.freestream_spec();
    let comp = run.cfg.composite();
    let outcome = adapt_loop(&run.tree, &comp, &fs, &run.cfg.adaptation_config())?;
    let st = &outcome.state;
    write_history_csv(&st.history, BufWriter::new(File::create(run.out.join("history.csv"))?))?;
    for (i, (tree, u)) in st.trees.iter().zip(&st.solutions).enumerate() {
        SavedState::new(tree, u, &fs)?.write(&run.out.join(format!("state_target{i}.json")))?;
        if run.cfg.output.vtk {
            let mesh = leaf_mesh(tree)?;
            let mut fields = primal_scalars(&mesh, u, &fs)?;
            fields.push(indicator_scalar(&st.indicators[i], &format!("target{i}")));
            export_vtk(&run.out.join(format!("target{i}.vtk")), &mesh, &fields)?;
        }
    }
    SavedState::new(&st.union_tree, &st.union_solution, &fs)?.write(&run.out.join("state_union.json"))?;
    if run.cfg.output.vtk {
        let dual_mesh = leaf_mesh(&st.union_tree.refine_uniform())?;
        let fields: Vec<_> = st
            .duals
            .iter()
            .enumerate()
            .flat_map(|(i, d)| dual_scalars(d, &format!("target{i}")))
            .collect();
        export_vtk(&run.out.join("duals.vtk"), &dual_mesh, &fields)?;
    }
    let m = manifest(
        "adapt",
        a,
        &run,
        json!({
            "stop": outcome.stop,
            "history": st.history,
            "final_cells": st.trees.iter().map(|t| t.leaf_count()).collect::<Vec<_>>(),
            "union_cells": st.union_tree.leaf_count(),
        }),
    )?;
    write_manifest(&run.out.join("manifest.json"), &m)?;
    let last = st.history.last().expect("at least one iteration");
    println!(
        "adapt stopped after {} rounds ({:?}); composite {:.10e}, estimate {:.3e}",
        st.history.len(),
        outcome.stop,
        last.composite,
        last.estimate_total
    );
    Ok(())
}

fn run_baseline(a: &RunArgs) -> Result<(), Error> {
    let run = prepare(a)?;
    require_targets(&run.cfg)?;
    let fs = run.cfg.freestream_spec();
    let targets = run.cfg.targets();
    let weights = run.cfg.adaptation.weights.clone().unwrap_or_else(|| vec![1.0; targets.len()]);
    let outcome = single_mesh_baseline(&run.tree, &targets, &weights, &fs, &run.cfg.adaptation_config())?;
    write_history_csv(&outcome.history, BufWriter::new(File::create(run.out.join("history.csv"))?))?;
    SavedState::new(&outcome.tree, &outcome.solution, &fs)?.write(&run.out.join("state.json"))?;
    if run.cfg.output.vtk {
        let mesh = leaf_mesh(&outcome.tree)?;
        export_vtk(&run.out.join("solution.vtk"), &mesh, &primal_scalars(&mesh, &outcome.solution, &fs)?)?;
    }
    let m = manifest(
        "baseline",
        a,
        &run,
        json!({
            "weights": weights,
            "stop": outcome.stop,
            "history": outcome.history,
            "final_cells": outcome.tree.leaf_count(),
        }),
    )?;
    write_manifest(&run.out.join("manifest.json"), &m)?;
    println!("baseline stopped after {} rounds ({:?})", outcome.history.len(), outcome.stop);
    Ok(())
}

fn gen_mesh(config: &Path, out: &Path) -> Result<(), Error> {
    let cfg = read_config(config)?;
    let mut g = cfg.geometry.clone();
    g.initial_refinements = 0;
    let tree = RunConfig { geometry: g, ..cfg }.build_geometry(config.parent().unwrap_or(Path::new(".")))?;
    write_mesh_file(tree.root_mesh(), out)?;
    println!("wrote {} triangles to {}", tree.leaf_count(), out.display());
    Ok(())
}

fn export(state: &Path, out: &Path) -> Result<(), Error> {
    let saved = SavedState::read(state)?;
    let (_, mesh, u) = saved.restore()?;
    export_vtk(out, &mesh, &primal_scalars(&mesh, &u, &saved.freestream)?)?;
    println!("wrote {} cells to {}", mesh.num_cells(), out.display());
    Ok(())
}
