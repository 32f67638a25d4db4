//! Config-driven batch CLI: `run`, `calibrate`, `material-probe`,
//! `version`.
//!
//! Exit codes: 0 success (including runs ending in localization), 1
//! configuration error, 2 solver failure.

use clap::{Parser, Subcommand};
use glasspf::config::RunConfig;
use glasspf::error::Error;
use glasspf::materials::{
    equivalent_shear_modulus, wlf_shift_factor, InterlayerKind, InterlayerModel, MaterialGlass,
    PronySeries, WlfShift,
};
use glasspf::output::{file_checksum, Manifest, write_atomic, write_probe_csv, MANIFEST_SCHEMA};
use glasspf::phasefield::{
    calibrate, homogeneous_peak_stress, CalibrationInput, FormulationKind, Reduction,
};
use glasspf::solver::{run_quasistatic, Termination};
use glasspf::vtk::{write_mesh, write_state_fields};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "glasspf", about = "Phase-field fracture of glass plates in four-point bending")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a quasi-static simulation described by a TOML config.
    Run { config: PathBuf },
    /// Print the consistent (l_c, G_f) pair and the homogeneous peak stress.
    Calibrate {
        #[arg(long, value_enum)]
        kind: FormulationCli,
        #[arg(long, value_enum, default_value = "plane-stress")]
        reduction: ReductionCli,
        /// Length-scale parameter in meters.
        #[arg(long)]
        lc: Option<f64>,
        /// Fracture energy in J/m^2.
        #[arg(long)]
        gf: Option<f64>,
        /// Young's modulus in Pa.
        #[arg(long, default_value_t = 70e9)]
        young_modulus: f64,
        /// Tensile strength in Pa.
        #[arg(long, default_value_t = 45e6)]
        tensile_strength: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print the equivalent interlayer moduli G(t, T) and E_eq.
    MaterialProbe {
        /// `eva`, `pvb`, or a path to a Prony CSV (`tau_s,G_Pa` header).
        interlayer: String,
        /// Load duration in seconds.
        duration: f64,
        /// Temperature in degrees Celsius.
        temperature: f64,
        /// Long-term shear modulus in Pa (CSV input only).
        #[arg(long, default_value_t = 0.0)]
        long_term_modulus: f64,
    },
    /// Print the crate version.
    Version,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormulationCli {
    PfB,
    PfM,
    PfP,
}

impl From<FormulationCli> for FormulationKind {
    fn from(v: FormulationCli) -> Self {
        match v {
            FormulationCli::PfB => FormulationKind::PfB,
            FormulationCli::PfM => FormulationKind::PfM,
            FormulationCli::PfP => FormulationKind::PfP,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ReductionCli {
    PlaneStress,
    Beam,
}

impl From<ReductionCli> for Reduction {
    fn from(v: ReductionCli) -> Self {
        match v {
            ReductionCli::PlaneStress => Reduction::PlaneStress,
            ReductionCli::Beam => Reduction::Beam,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Calibrate {
            kind,
            reduction,
            lc,
            gf,
            young_modulus,
            tensile_strength,
            json,
        } => cmd_calibrate(
            kind.into(),
            reduction.into(),
            lc,
            gf,
            young_modulus,
            tensile_strength,
            json,
        ),
        Command::MaterialProbe {
            interlayer,
            duration,
            temperature,
            long_term_modulus,
        } => cmd_material_probe(&interlayer, duration, temperature, long_term_modulus),
        Command::Version => {
            println!("glasspf {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error:\n{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_run(config_path: &PathBuf) -> glasspf::Result<()> {
    let started = Instant::now();
    let cfg = RunConfig::from_path(config_path)?;
    let out_dir = cfg.output.directory.clone();
    std::fs::create_dir_all(&out_dir)?;

    let built = cfg.build()?;
    let mut model = built.model;
    let plan = built.plan;
    let probes = built.probes;
    let interlayer = built.interlayer;

    write_mesh(&out_dir.join("mesh.vtk"), &model.mesh)?;

    let cadence = cfg.output.snapshot_every;
    let mut snapshot_files: Vec<PathBuf> = Vec::new();
    let mut snapshot = |step: usize,
                        m: &glasspf::solver::Model2D,
                        s: &glasspf::solver::SimulationState|
     -> glasspf::Result<()> {
        if step % cadence == 0 {
            let path = out_dir.join(format!("fields_{step}.vtk"));
            write_state_fields(&path, m, s)?;
            snapshot_files.push(path);
        }
        Ok(())
    };

    let result = run_quasistatic(
        &mut model,
        &plan,
        &probes,
        &cfg.schedule(),
        &cfg.run_options(),
        interlayer.as_ref(),
        &cfg.solver.staggered,
        Some(&mut snapshot),
    )?;
    for line in &result.log {
        eprintln!("{line}");
    }

    // final state snapshot regardless of cadence
    let final_path = out_dir.join(format!("fields_{}.vtk", result.records.len().saturating_sub(1)));
    write_state_fields(&final_path, &model, &result.state)?;
    if !snapshot_files.contains(&final_path) {
        snapshot_files.push(final_path);
    }

    let probes_path = out_dir.join("probes.csv");
    write_probe_csv(&probes_path, &result.records)?;

    write_atomic(&out_dir.join("manifest.schema.json"), MANIFEST_SCHEMA.as_bytes())?;

    let mut checksums = BTreeMap::new();
    checksums.insert("probes.csv".to_string(), file_checksum(&probes_path)?);
    checksums.insert(
        "mesh.vtk".to_string(),
        file_checksum(&out_dir.join("mesh.vtk"))?,
    );
    for f in &snapshot_files {
        let name = f.file_name().unwrap().to_string_lossy().to_string();
        checksums.insert(name, file_checksum(f)?);
    }

    let manifest = Manifest {
        config: serde_json::to_value(&cfg)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?,
        assumptions: cfg.assumptions(),
        snapped_probes: built.snapped,
        termination: match result.termination {
            Termination::ScheduleComplete => "schedule-complete".to_string(),
            Termination::Localization => "localization".to_string(),
        },
        accepted_steps: result.records.len(),
        peak_reaction_n: result.peak_reaction,
        failure_stress_pa: result.failure_stress,
        wall_time_s: started.elapsed().as_secs_f64(),
        checksums,
    };
    manifest.write(&out_dir.join("manifest.json"))?;

    println!(
        "{}: {} steps, peak reaction {:.3} N, failure stress {:.3} MPa",
        manifest.termination,
        manifest.accepted_steps,
        manifest.peak_reaction_n,
        manifest.failure_stress_pa / 1e6
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    kind: FormulationKind,
    reduction: Reduction,
    lc: Option<f64>,
    gf: Option<f64>,
    young_modulus: f64,
    tensile_strength: f64,
    json: bool,
) -> glasspf::Result<()> {
    let (input, value) = match (lc, gf) {
        (Some(v), None) => (CalibrationInput::Lc, v),
        (None, Some(v)) => (CalibrationInput::Gf, v),
        (None, None) => return Err(Error::config("one of --lc/--gf is required")),
        (Some(_), Some(_)) => {
            return Err(Error::config("--lc and --gf are mutually exclusive"))
        }
    };
    if !(value > 0.0) {
        return Err(Error::config("calibration input must be > 0"));
    }
    let mut mat = MaterialGlass::annealed(1.0, 1.0);
    mat.young_modulus = young_modulus;
    mat.tensile_strength = tensile_strength;
    let cal = calibrate(kind, reduction, input, value, &mat);
    mat.length_scale = cal.length_scale;
    mat.fracture_energy = cal.fracture_energy;
    let peak = homogeneous_peak_stress(kind, &mat);
    if json {
        println!(
            "{}",
            serde_json::json!({
                "length_scale_m": cal.length_scale,
                "fracture_energy_j_per_m2": cal.fracture_energy,
                "homogeneous_peak_stress_pa": peak,
                "heuristic": cal.heuristic,
            })
        );
    } else {
        println!("length_scale            = {:.6e} m", cal.length_scale);
        println!("fracture_energy         = {:.6e} J/m^2", cal.fracture_energy);
        println!("homogeneous_peak_stress = {:.6e} Pa", peak);
        if cal.heuristic {
            println!("note: PF-M shares PF-B constants; the pairing is heuristic");
        }
    }
    Ok(())
}

fn cmd_material_probe(
    interlayer: &str,
    duration: f64,
    temperature: f64,
    long_term_modulus: f64,
) -> glasspf::Result<()> {
    let model = match interlayer.to_ascii_lowercase().as_str() {
        "eva" => InterlayerModel::builtin(InterlayerKind::Eva),
        "pvb" => InterlayerModel::builtin(InterlayerKind::Pvb),
        path => {
            let p = std::path::Path::new(path);
            if !p.exists() {
                return Err(Error::config(format!(
                    "unknown interlayer {interlayer:?}: expected eva, pvb, or a CSV path"
                )));
            }
            InterlayerModel {
                prony: PronySeries::from_csv(p, long_term_modulus)?,
                wlf: WlfShift {
                    c1: 0.0,
                    c2: 1.0,
                    reference_temperature: temperature,
                },
                poisson_ratio: 0.49,
            }
        }
    };
    if duration < 0.0 {
        return Err(Error::config("duration must be >= 0"));
    }
    let a_t = wlf_shift_factor(&model.wlf, temperature)?;
    let g = equivalent_shear_modulus(&model, duration, temperature)?;
    let e_eq = 2.0 * g * (1.0 + model.poisson_ratio);
    println!("a_T  = {a_t:.6e}");
    println!("G    = {g:.6e} Pa");
    println!("E_eq = {e_eq:.6e} Pa");
    Ok(())
}
