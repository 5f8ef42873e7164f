use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sapflow::diagnostics::{self, Summary, TimeSeries};
use sapflow::flow::{self, Termination};
use sapflow::mesh::{self, MeshFormat, MeshMode, TriMesh};
use sapflow::GeometryCache;

use crate::manifest::{GeneratorSpec, RunManifest};

fn mesh_format(m: &TriMesh) -> (MeshFormat, &'static str) {
    match m.mode() {
        MeshMode::Surface => (MeshFormat::Off, "off"),
        MeshMode::Curve => (MeshFormat::CurveCsv, "csv"),
    }
}

/// Writes the generated mesh and reports its size and curvature range on
/// stderr.
pub fn generate(spec: &GeneratorSpec, output: Option<PathBuf>) -> Result<PathBuf> {
    let m = spec.build()?;
    let (format, ext) = mesh_format(&m);
    let path = output.unwrap_or_else(|| PathBuf::from(format!("{}.{ext}", spec.name())));
    mesh::save_mesh(&m, &path, format)?;
    let cache = GeometryCache::compute(&m)?;
    let min_h = cache.mean_curvature.iter().copied().fold(f64::INFINITY, f64::min);
    let max_h = cache
        .mean_curvature
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    eprintln!(
        "wrote {}: {} vertices, {} faces, min H = {min_h:.6}, max H = {max_h:.6}",
        path.display(),
        m.n_vertices(),
        m.faces().len(),
    );
    Ok(path)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Executes a validated manifest and writes all artifacts into its output
/// directory. Input problems are errors; blow-ups are a normal outcome.
pub fn run(manifest: &RunManifest) -> Result<Termination> {
    manifest.validate()?;
    let (input, provenance) = manifest.input_mesh()?;
    let out = &manifest.output_dir;
    fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    let mesh_dir = out.join("meshes");
    if manifest.mesh_every > 0 {
        fs::create_dir_all(&mesh_dir)?;
    }
    fs::write(out.join("manifest.toml"), manifest.to_toml()?)?;

    let (format, ext) = mesh_format(&input);
    let mut snapshot = 0usize;
    let mut write_error = None;
    let result = flow::run_flow_with(input, &manifest.flow, |state, _| {
        if manifest.mesh_every > 0 && snapshot.is_multiple_of(manifest.mesh_every) && write_error.is_none() {
            let p = mesh_dir.join(format!("step_{:06}.{ext}", state.step_index));
            if let Err(e) = mesh::save_mesh(&state.mesh, &p, format) {
                write_error = Some(e);
            }
        }
        snapshot += 1;
    })?;
    if let Some(e) = write_error {
        return Err(e.into());
    }

    let mut series = result.series;
    series.metadata = serde_json::json!({
        "dimension": series.dimension,
        "provenance": provenance,
        "manifest": manifest,
        "termination": result.termination.label(),
        "steps": result.steps,
        "final_time": result.final_state.t,
    });
    let final_name = format!("final.{ext}");
    mesh::save_mesh(&result.final_state.mesh, &out.join(&final_name), format)?;
    diagnostics::write_series_csv(&series, BufWriter::new(File::create(out.join("series.csv"))?))?;
    diagnostics::write_ode_terms_csv(
        &series.ode_terms,
        BufWriter::new(File::create(out.join("ode_terms.csv"))?),
    )?;
    write_json(&out.join("metadata.json"), &series.metadata)?;
    let summary = diagnostics::summarize(
        &series,
        Some(&result.final_state.mesh),
        Some(&result.termination.label()),
    );
    write_json(&out.join("summary.json"), &summary)?;
    eprintln!(
        "{} after {} steps, t = {:.6}; artifacts in {}",
        result.termination.label(),
        result.steps,
        result.final_state.t,
        out.display()
    );
    Ok(result.termination)
}

/// Recomputes the summary from a `series.csv` and whatever sibling
/// artifacts exist next to it (`ode_terms.csv`, `metadata.json`,
/// `final.off` / `final.csv`).
pub fn analyze(series_path: &Path) -> Result<Summary> {
    let file = File::open(series_path).with_context(|| format!("cannot open {}", series_path.display()))?;
    let mut series: TimeSeries = diagnostics::read_series_csv(BufReader::new(file))
        .with_context(|| format!("malformed series {}", series_path.display()))?;
    if series.records.is_empty() {
        bail!("{} holds no snapshots", series_path.display());
    }
    let dir = series_path.parent().unwrap_or(Path::new("."));

    let metadata: Option<serde_json::Value> = match File::open(dir.join("metadata.json")) {
        Ok(f) => Some(serde_json::from_reader(BufReader::new(f)).context("malformed metadata.json")?),
        Err(_) => None,
    };
    series.dimension = metadata
        .as_ref()
        .and_then(|m| m["dimension"].as_u64())
        .map_or(2, |d| d as usize);
    let termination = metadata
        .as_ref()
        .and_then(|m| m["termination"].as_str().map(str::to_string));

    if let Ok(f) = File::open(dir.join("ode_terms.csv")) {
        let terms = diagnostics::read_ode_terms_csv(BufReader::new(f)).context("malformed ode_terms.csv")?;
        if terms.len() == series.records.len() {
            series.ode_terms = terms;
        }
    }

    let final_mesh = [
        ("final.off", MeshFormat::Off),
        ("final.csv", MeshFormat::CurveCsv),
    ]
    .iter()
    .map(|(name, fmt)| (dir.join(name), *fmt))
    .find(|(p, _)| p.exists())
    .map(|(p, fmt)| mesh::load_mesh(&p, fmt))
    .transpose()
    .context("cannot load final mesh")?;

    Ok(diagnostics::summarize(
        &series,
        final_mesh.as_ref(),
        termination.as_deref(),
    ))
}

pub fn write_summary(summary: &Summary, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => write_json(p, summary),
        None => {
            println!("{}", serde_json::to_string_pretty(summary)?);
            Ok(())
        }
    }
}
