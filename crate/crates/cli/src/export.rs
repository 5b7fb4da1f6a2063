//! Nodal field output: `csv-grid` (one file per field) and legacy ASCII
//! VTK `STRUCTURED_POINTS` (all fields in one file).

use crate::{write_file, CliError, ExportFormat, Result};
use fascd::smoother::ActiveSet;
use fascd::cycle::plain_residual;
use fascd::{semi_smooth_residual, MeshLevel, NodalFunction, VIProblem};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Vertex lattice of a level: `nx * ny` points, x fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    pub fn of(level: &MeshLevel) -> Self {
        let [nx, ny] = level.vertices_per_axis();
        let [dx, dy] = level.spacing();
        let lo = level.lo();
        Self {
            nx,
            ny: ny.max(1),
            x0: lo[0],
            y0: if level.dim() == 2 { lo[1] } else { 0.0 },
            dx,
            dy: if level.dim() == 2 { dy } else { 0.0 },
        }
    }

    pub fn header(&self) -> String {
        format!("nx,ny,x0,y0,dx,dy\n{},{},{},{},{},{}\n", self.nx, self.ny, self.x0, self.y0, self.dx, self.dy)
    }
}

/// A named nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: &'static str,
    pub values: Vec<f64>,
    pub integer: bool,
}

/// Solution, obstacles, active-set labels and semi-smooth residual at the
/// finest level.
pub fn fields(w: &NodalFunction, problem: &VIProblem) -> Result<Vec<Field>> {
    let top = problem.finest();
    let r = plain_residual(problem, w)?;
    let tol = 1e-10 * (1.0 + fascd::function::norm_inf(w));
    let labels = ActiveSet::classify(w, problem.lower(), problem.upper(), &r, problem.dirichlet_mask(top), tol);
    let rss = semi_smooth_residual(problem, w)?;
    Ok(vec![
        Field { name: "solution", values: w.values().to_vec(), integer: false },
        Field { name: "lower", values: problem.lower().to_vec(), integer: false },
        Field { name: "upper", values: problem.upper().to_vec(), integer: false },
        Field {
            name: "labels",
            values: labels.labels.iter().map(|l| l.code() as f64).collect(),
            integer: true,
        },
        Field { name: "rss", values: rss, integer: false },
    ])
}

fn csv_grid(grid: &Grid, f: &Field) -> String {
    let mut s = grid.header();
    for row in f.values.chunks(grid.nx) {
        let line: Vec<String> = row
            .iter()
            .map(|v| if f.integer { format!("{}", *v as i64) } else { format!("{v}") })
            .collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// VTK has no portable infinity, so unbounded obstacles become +-1e300.
fn vtk_value(v: f64) -> String {
    if v.is_infinite() {
        format!("{:e}", 1e300f64.copysign(v))
    } else {
        format!("{v:e}")
    }
}

fn vtk(grid: &Grid, title: &str, fields: &[Field]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", grid.nx, grid.ny);
    let _ = writeln!(s, "ORIGIN {} {} 0", grid.x0, grid.y0);
    let dy = if grid.dy > 0.0 { grid.dy } else { 1.0 };
    let _ = writeln!(s, "SPACING {} {dy} 1", grid.dx);
    let _ = writeln!(s, "POINT_DATA {}", grid.nx * grid.ny);
    for f in fields {
        let ty = if f.integer { "int" } else { "double" };
        let _ = writeln!(s, "SCALARS {} {ty} 1\nLOOKUP_TABLE default", f.name);
        for v in &f.values {
            if f.integer {
                let _ = writeln!(s, "{}", *v as i64);
            } else {
                let _ = writeln!(s, "{}", vtk_value(*v));
            }
        }
    }
    s
}

/// Writes the fields next to `stem`: `<stem>_<field>.csv` for csv-grid,
/// `<stem>.vtk` for vtk-legacy.  Returns the written paths.
pub fn export_fields(w: &NodalFunction, problem: &VIProblem, stem: &Path, fmt: ExportFormat) -> Result<Vec<PathBuf>> {
    let grid = Grid::of(problem.level(problem.finest()));
    let fields = fields(w, problem)?;
    let base = stem.file_name().and_then(|s| s.to_str()).ok_or_else(|| CliError::Spec(format!("bad export path {}", stem.display())))?;
    let mut out = Vec::new();
    match fmt {
        ExportFormat::None => {}
        ExportFormat::CsvGrid => {
            for f in &fields {
                let path = stem.with_file_name(format!("{base}_{}.csv", f.name));
                write_file(&path, &csv_grid(&grid, f))?;
                out.push(path);
            }
        }
        ExportFormat::VtkLegacy => {
            let path = stem.with_file_name(format!("{base}.vtk"));
            write_file(&path, &vtk(&grid, &format!("fascd {base}"), &fields))?;
            out.push(path);
        }
    }
    Ok(out)
}
