//! Text grid format shared by the solver and TF exports.
//!
//! Header: `gpe2d-grid v1 nx=<int> ny=<int> x0=<f> x1=<f> y0=<f> y1=<f>
//! component=<int>`, then `ny` rows of `nx` space-separated values; a row
//! holds fixed `y` with ascending `x`, rows ascend in `y`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{GpeError, Result};
use crate::model::CoefficientField;

const GRID_MAGIC: &str = "gpe2d-grid v1";

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    /// 1-based component label carried in the file.
    pub component: usize,
    /// Row-major `[ny][nx]`, row = fixed y.
    pub values: Vec<f64>,
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

impl DensityGrid {
    pub fn xs(&self) -> Vec<f64> {
        linspace(self.x0, self.x1, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        linspace(self.y0, self.y1, self.ny)
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        &self.values[iy * self.nx..(iy + 1) * self.nx]
    }

    /// Samples a coefficient field on the lattice.
    pub fn from_field(
        field: &CoefficientField,
        window: (f64, f64, f64, f64),
        resolution: (usize, usize),
        component: usize,
    ) -> Self {
        let (x0, x1, y0, y1) = window;
        let (nx, ny) = resolution;
        let values = field.synthesize_on_grid(&linspace(x0, x1, nx), &linspace(y0, y1, ny));
        Self {
            nx,
            ny,
            x0,
            x1,
            y0,
            y1,
            component,
            values,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(
            out,
            "{GRID_MAGIC} nx={} ny={} x0={:.16e} x1={:.16e} y0={:.16e} y1={:.16e} component={}",
            self.nx, self.ny, self.x0, self.x1, self.y0, self.y1, self.component
        )
        .expect("string write");
        for iy in 0..self.ny {
            let row = self.row(iy);
            for (ix, v) in row.iter().enumerate() {
                if ix > 0 {
                    out.push(' ');
                }
                write!(out, "{v:.16e}").expect("string write");
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let bad = |reason: &str| GpeError::ParseError {
            path: path.display().to_string(),
            reason: reason.to_string(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let rest = header
            .strip_prefix(GRID_MAGIC)
            .ok_or_else(|| bad("missing gpe2d-grid v1 header"))?;
        let mut fields = std::collections::HashMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad("malformed header"))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| -> Result<String> {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| bad(&format!("missing header key {k}")))
        };
        let nx: usize = get("nx")?.parse().map_err(|_| bad("bad nx"))?;
        let ny: usize = get("ny")?.parse().map_err(|_| bad("bad ny"))?;
        let x0: f64 = get("x0")?.parse().map_err(|_| bad("bad x0"))?;
        let x1: f64 = get("x1")?.parse().map_err(|_| bad("bad x1"))?;
        let y0: f64 = get("y0")?.parse().map_err(|_| bad("bad y0"))?;
        let y1: f64 = get("y1")?.parse().map_err(|_| bad("bad y1"))?;
        let component: usize = get("component")?.parse().map_err(|_| bad("bad component"))?;

        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad("bad grid value"))?);
            }
        }
        if values.len() != nx * ny {
            return Err(bad(&format!(
                "expected {} values, found {}",
                nx * ny,
                values.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            x0,
            x1,
            y0,
            y1,
            component,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisSpec, TensorBasis2D};
    use std::sync::Arc;

    #[test]
    fn grid_file_roundtrip() {
        let basis = Arc::new(
            TensorBasis2D::new(
                BasisSpec::new(3, 1.0).unwrap(),
                BasisSpec::new(3, 1.0).unwrap(),
            )
            .unwrap(),
        );
        let field = CoefficientField::from_mode(basis, (1, 0), 1.0).unwrap();
        let grid = DensityGrid::from_field(&field, (-2.0, 2.0, -1.0, 1.0), (5, 3), 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.grid");
        grid.write(&path).unwrap();
        let back = DensityGrid::read(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn linspace_endpoints() {
        let xs = linspace(-1.0, 1.0, 5);
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(3.0, 9.0, 1), vec![3.0]);
    }
}
