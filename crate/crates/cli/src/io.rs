use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use finiteband::linalg::{c, CMatrix};
use finiteband::pencil::PencilJson;
use finiteband::{BandStructure, MatrixPencil, PencilQuadruple, PotentialProfile};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names `{prefix}_{i}{j}_re`, `{prefix}_{i}{j}_im` in row-major order.
pub fn matrix_header(prefix: &str, m: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * m * m);
    for i in 0..m {
        for j in 0..m {
            h.push(format!("{prefix}_{i}{j}_re"));
            h.push(format!("{prefix}_{i}{j}_im"));
        }
    }
    h
}

pub fn push_matrix(row: &mut Vec<String>, a: &CMatrix) {
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            row.push(num(a[(i, j)].re));
            row.push(num(a[(i, j)].im));
        }
    }
}

pub fn csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

const DERIV_NAMES: [&str; 4] = ["q", "qp", "qpp", "qppp"];

pub fn profile_csv(p: &PotentialProfile) -> String {
    let m = p.dim();
    let mut header = vec!["x".to_string()];
    for name in DERIV_NAMES {
        header.extend(matrix_header(name, m));
    }
    let rows: Vec<Vec<String>> = (0..p.len())
        .map(|k| {
            let mut r = vec![num(p.xs[k])];
            for a in [&p.q[k], &p.qp[k], &p.qpp[k], &p.qppp[k]] {
                push_matrix(&mut r, a);
            }
            r
        })
        .collect();
    csv(&header, &rows)
}

pub fn parse_profile(text: &str) -> Result<PotentialProfile, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Parse("potential.csv is empty".into()))?;
    let cols = header.split(',').count();
    if cols < 9 || (cols - 1) % 8 != 0 {
        return Err(CliError::Parse(format!("potential.csv: unexpected column count {cols}")));
    }
    let m2 = (cols - 1) / 8;
    let m = (m2 as f64).sqrt().round() as usize;
    if m * m != m2 {
        return Err(CliError::Parse("potential.csv: column count is not 1 + 8m²".into()));
    }
    let mut prof = PotentialProfile {
        xs: Vec::new(),
        q: Vec::new(),
        qp: Vec::new(),
        qpp: Vec::new(),
        qppp: Vec::new(),
    };
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Parse(format!("potential.csv line {}: {e}", ln + 2)))?;
        if vals.len() != cols {
            return Err(CliError::Parse(format!("potential.csv line {}: expected {cols} fields", ln + 2)));
        }
        prof.xs.push(vals[0]);
        let mat = |block: usize| -> CMatrix {
            let off = 1 + block * 2 * m2;
            CMatrix::from_fn(m, m, |i, j| {
                let k = off + 2 * (i * m + j);
                c(vals[k], vals[k + 1])
            })
        };
        prof.q.push(mat(0));
        prof.qp.push(mat(1));
        prof.qpp.push(mat(2));
        prof.qppp.push(mat(3));
    }
    if prof.xs.len() < 2 {
        return Err(CliError::Parse("potential.csv needs at least two rows".into()));
    }
    Ok(prof)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilsFile {
    pub x0: f64,
    pub bands: Vec<f64>,
    pub f: PencilJson,
    pub g1: PencilJson,
    pub g2: PencilJson,
    pub h: PencilJson,
}

impl PencilsFile {
    pub fn from_quadruple(q: &PencilQuadruple, x0: f64) -> Self {
        PencilsFile {
            x0,
            bands: q.bands.edges().to_vec(),
            f: q.f.to_json(),
            g1: q.g1.to_json(),
            g2: q.g2.to_json(),
            h: q.h.to_json(),
        }
    }

    pub fn to_quadruple(&self) -> Result<PencilQuadruple, CliError> {
        let p = |j: &PencilJson, name: &str| MatrixPencil::from_json(j).map_err(|e| CliError::Parse(format!("pencils.json {name}: {e}")));
        Ok(PencilQuadruple {
            f: p(&self.f, "f")?,
            g1: p(&self.g1, "g1")?,
            g2: p(&self.g2, "g2")?,
            h: p(&self.h, "h")?,
            bands: BandStructure::new(self.bands.clone()).map_err(|e| CliError::Parse(format!("pencils.json bands: {e}")))?,
        })
    }
}
