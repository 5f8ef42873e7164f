use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{MeshError, MeshMode, TriMesh, Vec3};

/// On-disk mesh formats. Floats are written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
    /// One `x,y` pair per line, closed curve in cyclic order.
    CurveCsv,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            Some("csv") => Ok(MeshFormat::CurveCsv),
            _ => Err(MeshError::UnsupportedFormat(path.display().to_string())),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> MeshError {
    MeshError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads and validates a closed mesh.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh, MeshError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_mesh(&text, format)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriMesh, MeshError> {
    match format {
        MeshFormat::Off => {
            let (v, f) = parse_off(text)?;
            TriMesh::new(v, f)
        }
        MeshFormat::Obj => {
            let (v, f) = parse_obj(text)?;
            TriMesh::new(v, f)
        }
        MeshFormat::CurveCsv => TriMesh::curve(parse_curve_csv(text)?),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))
}

fn parse_off(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    // The counts may share the header line ("OFF 4 4 6").
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(hline, "missing OFF header"))?
        .trim();
    let (cline, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(hline, "missing element counts"))?
    } else {
        (hline, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(cline, "invalid count")))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of vertex list"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<_, _>>()?;
        if c.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, "invalid face index")))
            .collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(parse_err(ln, "only triangle faces are supported"));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    Ok((vertices, faces))
}

fn parse_obj(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>), MeshError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let mut toks = raw.split('#').next().unwrap_or("").split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<f64> = toks.map(|t| parse_f64(t, ln)).collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        // "i", "i/t", "i/t/n", "i//n"
                        let head = t.split('/').next().unwrap_or("");
                        let k: i64 = head
                            .parse()
                            .map_err(|_| parse_err(ln, format!("invalid face index {t:?}")))?;
                        let resolved = if k < 0 { vertices.len() as i64 + k } else { k - 1 };
                        usize::try_from(resolved)
                            .map_err(|_| parse_err(ln, format!("face index {k} out of range")))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(ln, "only triangle faces are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

fn parse_curve_csv(text: &str) -> Result<Vec<[f64; 2]>, MeshError> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let c: Vec<&str> = l.split(',').map(str::trim).collect();
        if c.len() != 2 {
            return Err(parse_err(i + 1, "expected x,y"));
        }
        pts.push([parse_f64(c[0], i + 1)?, parse_f64(c[1], i + 1)?]);
    }
    Ok(pts)
}

/// Writes `mesh` to `path`. Curve meshes must use [`MeshFormat::CurveCsv`]
/// and surfaces OFF or OBJ.
pub fn save_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_mesh(mesh, &mut w, format).map_err(|e| match e {
        MeshError::Io { source, .. } => io_err(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_mesh<W: Write>(mesh: &TriMesh, w: &mut W, format: MeshFormat) -> Result<(), MeshError> {
    let wrap = |e: std::io::Error| MeshError::Io {
        path: "<writer>".into(),
        source: e,
    };
    match (mesh.mode(), format) {
        (MeshMode::Surface, MeshFormat::Off) => {
            writeln!(w, "OFF").map_err(wrap)?;
            writeln!(
                w,
                "{} {} {}",
                mesh.n_vertices(),
                mesh.faces().len(),
                mesh.edges().len()
            )
            .map_err(wrap)?;
            for v in mesh.vertices() {
                writeln!(w, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).map_err(wrap)?;
            }
            for f in mesh.faces() {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2]).map_err(wrap)?;
            }
        }
        (MeshMode::Surface, MeshFormat::Obj) => {
            for v in mesh.vertices() {
                writeln!(w, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).map_err(wrap)?;
            }
            for f in mesh.faces() {
                writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(wrap)?;
            }
        }
        (MeshMode::Curve, MeshFormat::CurveCsv) => {
            for v in mesh.vertices() {
                writeln!(w, "{:.16e},{:.16e}", v.x, v.y).map_err(wrap)?;
            }
        }
        (mode, format) => {
            return Err(MeshError::UnsupportedFormat(format!(
                "{format:?} for {mode:?} mesh"
            )))
        }
    }
    Ok(())
}
