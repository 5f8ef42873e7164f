use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sapflow::flow::FlowConfig;
use sapflow::mesh::{self, Bump, MeshFormat, TriMesh, Vec3};
use serde::{Deserialize, Serialize};

/// Largest subdivision level accepted from users (~1.3M faces).
const MAX_SUBDIV: u32 = 8;

/// Procedural input mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Icosphere {
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
        subdiv: u32,
    },
    Ellipsoid {
        axes: [f64; 3],
        subdiv: u32,
    },
    Perturbed {
        #[serde(default = "one")]
        radius: f64,
        amplitude: f64,
        bump: Bump,
        subdiv: u32,
    },
    Polygon {
        sides: usize,
        radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Icosphere { .. } => "icosphere",
            GeneratorSpec::Ellipsoid { .. } => "ellipsoid",
            GeneratorSpec::Perturbed { .. } => "perturbed",
            GeneratorSpec::Polygon { .. } => "polygon",
        }
    }

    /// Checks parameters the generators would otherwise panic on.
    pub fn build(&self) -> Result<TriMesh> {
        let subdiv_ok = |s: u32| {
            if s > MAX_SUBDIV {
                bail!("subdiv {s} exceeds the maximum of {MAX_SUBDIV}");
            }
            Ok(())
        };
        let positive = |what: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                bail!("{what} must be positive, got {x}");
            }
            Ok(())
        };
        Ok(match *self {
            GeneratorSpec::Icosphere {
                radius,
                center,
                subdiv,
            } => {
                positive("radius", radius)?;
                subdiv_ok(subdiv)?;
                mesh::gen_icosphere(radius, Vec3::from(center), subdiv)
            }
            GeneratorSpec::Ellipsoid { axes, subdiv } => {
                for a in axes {
                    positive("semi-axis", a)?;
                }
                subdiv_ok(subdiv)?;
                mesh::gen_ellipsoid(axes[0], axes[1], axes[2], subdiv)
            }
            GeneratorSpec::Perturbed {
                radius,
                amplitude,
                bump,
                subdiv,
            } => {
                positive("radius", radius)?;
                subdiv_ok(subdiv)?;
                if !(amplitude.abs() < 0.5 * radius) {
                    bail!("|amplitude| must be below radius/2, got {amplitude}");
                }
                match bump {
                    Bump::Harmonic { l, m } if m.unsigned_abs() > l => {
                        bail!("harmonic order |m| = {} exceeds degree {l}", m.unsigned_abs())
                    }
                    Bump::Dent { direction, width } => {
                        positive("width", width)?;
                        if Vec3::from(direction).norm() == 0.0 {
                            bail!("dent direction must be nonzero");
                        }
                    }
                    _ => {}
                }
                mesh::gen_perturbed_sphere(radius, amplitude, bump, subdiv)
            }
            GeneratorSpec::Polygon { sides, radius } => {
                positive("radius", radius)?;
                if sides < 3 {
                    bail!("a polygon needs at least 3 sides, got {sides}");
                }
                mesh::gen_polygon(sides, radius)
            }
        })
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("sapflow-run")
}

fn default_mesh_every() -> usize {
    1
}

fn yes() -> bool {
    true
}

/// Run description read from TOML. Flow parameters sit at the top level
/// next to the input and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Input mesh file (OFF, OBJ or curve CSV).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write a mesh every this many snapshots; 0 disables.
    #[serde(default = "default_mesh_every")]
    pub mesh_every: usize,
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(flatten)]
    pub flow: FlowConfig,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            mesh: None,
            generator: None,
            output_dir: default_output_dir(),
            mesh_every: default_mesh_every(),
            deterministic: true,
            flow: FlowConfig::default(),
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid manifest {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Relative mesh paths are taken relative to the manifest's directory.
    pub fn resolve_relative_to(&mut self, base: &Path) {
        if let Some(m) = &self.mesh {
            if m.is_relative() {
                self.mesh = Some(base.join(m));
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.mesh, &self.generator) {
            (Some(_), Some(_)) => bail!("manifest sets both `mesh` and `[generator]`; choose one"),
            (None, None) => bail!("manifest needs an input: `mesh = \"…\"` or a `[generator]` table"),
            _ => {}
        }
        self.flow.validate()?;
        Ok(())
    }

    /// Loads or generates the input mesh. Returns it with a provenance
    /// string.
    pub fn input_mesh(&self) -> Result<(TriMesh, String)> {
        if let Some(path) = &self.mesh {
            let format = MeshFormat::from_path(path)?;
            let m = mesh::load_mesh(path, format)
                .with_context(|| format!("cannot load mesh {}", path.display()))?;
            Ok((m, format!("file:{}", path.display())))
        } else if let Some(g) = &self.generator {
            Ok((g.build()?, format!("generator:{}", serde_json::to_string(g)?)))
        } else {
            bail!("no input mesh")
        }
    }
}
