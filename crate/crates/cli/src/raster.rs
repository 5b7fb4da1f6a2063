//! Gridded input fields in the csv-grid layout written by the exporter.

use crate::{io_err, CliError, Result};
use fascd::MeshLevel;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub grid: crate::export::Grid,
    /// Row-major, x fastest.
    pub values: Vec<f64>,
}

impl Raster {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|msg| CliError::Raster {
            path: PathBuf::from(path),
            msg,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or("empty file")?;
        if head.replace(' ', "") != "nx,ny,x0,y0,dx,dy" {
            return Err(format!("expected header nx,ny,x0,y0,dx,dy, found '{head}'"));
        }
        let nums = |l: &str| -> std::result::Result<Vec<f64>, String> {
            l.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"))).collect()
        };
        let g = nums(lines.next().ok_or("missing grid line")?)?;
        if g.len() != 6 || g[0] < 1.0 || g[1] < 1.0 {
            return Err("grid line needs nx,ny >= 1 and six entries".into());
        }
        let (nx, ny) = (g[0] as usize, g[1] as usize);
        let mut values = Vec::with_capacity(nx * ny);
        for l in lines {
            let row = nums(l)?;
            if row.len() != nx {
                return Err(format!("row of {} values, expected {nx}", row.len()));
            }
            values.extend(row);
        }
        if values.len() != nx * ny {
            return Err(format!("{} rows, expected {ny}", values.len() / nx));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        Ok(Self {
            grid: crate::export::Grid { nx, ny, x0: g[2], y0: g[3], dx: g[4], dy: g[5] },
            values,
        })
    }

    /// Bilinear interpolation, constant beyond the edges.
    pub fn sample(&self, x: [f64; 2]) -> f64 {
        let g = &self.grid;
        let locate = |t: f64, t0: f64, d: f64, n: usize| -> (usize, f64) {
            if n == 1 || d <= 0.0 {
                return (0, 0.0);
            }
            let s = ((t - t0) / d).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            (i, s - i as f64)
        };
        let (i, fx) = locate(x[0], g.x0, g.dx, g.nx);
        let (k, fy) = locate(x[1], g.y0, g.dy, g.ny);
        let at = |i: usize, k: usize| self.values[i.min(g.nx - 1) + g.nx * k.min(g.ny - 1)];
        let lo = at(i, k) * (1.0 - fx) + at(i + 1, k) * fx;
        let hi = at(i, k + 1) * (1.0 - fx) + at(i + 1, k + 1) * fx;
        lo * (1.0 - fy) + hi * fy
    }

    pub fn sample_nodes(&self, level: &MeshLevel) -> Vec<f64> {
        (0..level.num_vertices()).map(|q| self.sample(level.coords(q))).collect()
    }
}
