//! `sapflow` — generate meshes, run the area-preserving flow, and
//! re-analyze run artifacts.
//!
//! Exit codes: 0 converged or time limit, 1 input error, 2 blow-up.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sapflow::flow::Stepping;
use sapflow::mesh::Bump;

use manifest::{GeneratorSpec, RunManifest};

#[derive(Parser)]
#[command(
    name = "sapflow",
    version,
    about = "Surface-area-preserving mean curvature flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh (OFF, or CSV for polygons).
    Generate {
        #[command(subcommand)]
        shape: Shape,
        /// Output path; defaults to `<shape>.off`.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Run the flow from a manifest and/or flags (flags win).
    Run(RunArgs),
    /// Recompute summary.json from a run's series.csv.
    Analyze {
        series: PathBuf,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Shape {
    Icosphere {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_parser = triple, default_value = "0,0,0", allow_negative_numbers = true)]
        center: [f64; 3],
        #[arg(long, default_value_t = 3)]
        subdiv: u32,
    },
    Ellipsoid {
        #[arg(long, value_parser = triple, default_value = "1.2,1,0.85")]
        axes: [f64; 3],
        #[arg(long, default_value_t = 3)]
        subdiv: u32,
    },
    /// Sphere with a radial harmonic bump or a Gaussian dent.
    Perturbed {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, allow_negative_numbers = true)]
        amplitude: f64,
        /// Gaussian bump instead of a harmonic (negative amplitude dents).
        #[arg(long, conflicts_with_all = ["degree", "order"])]
        dent: bool,
        #[arg(long, default_value_t = 0.3)]
        width: f64,
        #[arg(long, value_parser = triple, default_value = "0,0,1", allow_negative_numbers = true)]
        direction: [f64; 3],
        #[arg(long, default_value_t = 2)]
        degree: u32,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        order: i32,
        #[arg(long, default_value_t = 3)]
        subdiv: u32,
    },
    /// Regular polygon (curve mode).
    Polygon {
        #[arg(long, default_value_t = 64)]
        sides: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

/// Parses `x,y,z`.
fn triple(s: &str) -> Result<[f64; 3], String> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated numbers, got {}", v.len()))
}

impl Shape {
    fn spec(&self) -> GeneratorSpec {
        match self {
            Shape::Icosphere {
                radius,
                center,
                subdiv,
            } => GeneratorSpec::Icosphere {
                radius: *radius,
                center: *center,
                subdiv: *subdiv,
            },
            Shape::Ellipsoid { axes, subdiv } => GeneratorSpec::Ellipsoid {
                axes: *axes,
                subdiv: *subdiv,
            },
            Shape::Perturbed {
                radius,
                amplitude,
                dent,
                width,
                direction,
                degree,
                order,
                subdiv,
            } => GeneratorSpec::Perturbed {
                radius: *radius,
                amplitude: *amplitude,
                bump: if *dent {
                    Bump::Dent {
                        direction: *direction,
                        width: *width,
                    }
                } else {
                    Bump::Harmonic {
                        l: *degree,
                        m: *order,
                    }
                },
                subdiv: *subdiv,
            },
            Shape::Polygon { sides, radius } => GeneratorSpec::Polygon {
                sides: *sides,
                radius: *radius,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SteppingArg {
    Explicit,
    SemiImplicit,
}

#[derive(Args)]
struct RunArgs {
    /// TOML manifest.
    manifest: Option<PathBuf>,
    /// Input mesh (replaces any generator in the manifest).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    stepping: Option<SteppingArg>,
    #[arg(long)]
    cfl_safety: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    roundness_tol: Option<f64>,
    #[arg(long)]
    blowup_max_a: Option<f64>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Write a mesh every this many snapshots (0 disables).
    #[arg(long)]
    mesh_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the area projection.
    #[arg(long)]
    no_projection: bool,
    #[arg(long)]
    deterministic: Option<bool>,
}

impl RunArgs {
    fn manifest(&self) -> Result<RunManifest> {
        let mut m = match &self.manifest {
            Some(p) => {
                let mut m = RunManifest::load(p)?;
                if let Some(dir) = p.parent() {
                    m.resolve_relative_to(dir);
                }
                m
            }
            None => RunManifest::default(),
        };
        if let Some(mesh) = &self.mesh {
            m.mesh = Some(mesh.clone());
            m.generator = None;
        }
        if let Some(d) = &self.output_dir {
            m.output_dir = d.clone();
        }
        if let Some(s) = self.stepping {
            m.flow.stepping = match s {
                SteppingArg::Explicit => Stepping::Explicit,
                SteppingArg::SemiImplicit => Stepping::SemiImplicit,
            };
        }
        let f = &mut m.flow;
        f.cfl_safety = self.cfl_safety.unwrap_or(f.cfl_safety);
        f.dt_max = self.dt_max.unwrap_or(f.dt_max);
        f.t_max = self.t_max.unwrap_or(f.t_max);
        f.roundness_tol = self.roundness_tol.unwrap_or(f.roundness_tol);
        f.blowup_max_a = self.blowup_max_a.or(f.blowup_max_a);
        f.snapshot_every = self.snapshot_every.unwrap_or(f.snapshot_every);
        f.seed = self.seed.unwrap_or(f.seed);
        if self.no_projection {
            f.area_projection = false;
        }
        m.mesh_every = self.mesh_every.unwrap_or(m.mesh_every);
        m.deterministic = self.deterministic.unwrap_or(m.deterministic);
        Ok(m)
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { shape, output } => {
            commands::generate(&shape.spec(), output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let m = args.manifest()?;
            sapflow::exec::set_deterministic(m.deterministic);
            // The environment has the last word.
            if let Err(e) = sapflow::exec::configure_from_env() {
                bail!(e);
            }
            let t = commands::run(&m)?;
            Ok(if t.is_blow_up() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Analyze { series, output } => {
            let summary = commands::analyze(&series)?;
            commands::write_summary(&summary, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as a blow-up.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
