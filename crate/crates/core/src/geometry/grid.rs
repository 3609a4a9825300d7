use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::KVectorField;

/// Uniform parameter axis `start + j·spacing`, `j = 0..nodes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub spacing: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(start: f64, spacing: f64, nodes: usize) -> Self {
        Self {
            start,
            spacing,
            nodes,
        }
    }

    /// `nodes` points spanning `[start, end]` inclusive.
    pub fn spanning(start: f64, end: f64, nodes: usize) -> Self {
        Self::new(start, (end - start) / (nodes.max(2) - 1) as f64, nodes)
    }

    pub fn value(&self, j: usize) -> f64 {
        self.start + j as f64 * self.spacing
    }

    pub fn end(&self) -> f64 {
        self.value(self.nodes.saturating_sub(1))
    }
}

/// A sampled map `φ: U ⊂ ℝ^k → chart` on a rectangular grid, k ∈ {1, 2}.
///
/// Values are stored per coordinate, row-major over the grid with the first
/// parameter axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionGrid {
    axes: Vec<Axis>,
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl SectionGrid {
    pub fn new(axes: Vec<Axis>, names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::InvalidGrid(format!(
                "sections need 1 or 2 parameter axes, got {}",
                axes.len()
            )));
        }
        if let Some(a) = axes.iter().find(|a| !(a.spacing > 0.0) || a.nodes == 0) {
            return Err(Error::InvalidGrid(format!(
                "axis needs positive spacing and nodes, got spacing {} with {} nodes",
                a.spacing, a.nodes
            )));
        }
        if names.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} coordinate names for {} value arrays",
                names.len(),
                values.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidGrid(format!("duplicate coordinate `{n}`")));
            }
            if n == "t1" || n == "t2" {
                return Err(Error::InvalidGrid(format!("`{n}` is reserved for parameter axes")));
            }
        }
        let len: usize = axes.iter().map(|a| a.nodes).product();
        if let Some(i) = values.iter().position(|v| v.len() != len) {
            return Err(Error::InvalidGrid(format!(
                "coordinate `{}` has {} samples, grid has {len} nodes",
                names[i],
                values[i].len()
            )));
        }
        Ok(Self { axes, names, values })
    }

    /// Samples `f(t) -> values in `names` order` at every grid node.
    pub fn from_fn(axes: Vec<Axis>, names: Vec<String>, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let len: usize = axes.iter().map(|a| a.nodes).product();
        let mut values = vec![Vec::with_capacity(len); names.len()];
        let shape: Vec<usize> = axes.iter().map(|a| a.nodes).collect();
        for flat in 0..len {
            let t: Vec<f64> = unflatten(flat, &shape)
                .iter()
                .zip(&axes)
                .map(|(&j, a)| a.value(j))
                .collect();
            let v = f(&t);
            if v.len() != names.len() {
                return Err(Error::InvalidGrid(format!(
                    "sampler returned {} values for {} coordinates",
                    v.len(),
                    names.len()
                )));
            }
            for (dst, x) in values.iter_mut().zip(v) {
                dst.push(x);
            }
        }
        Self::new(axes, names, values)
    }

    pub fn k(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coordinate(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Flat index of a multi-index.
    pub fn index(&self, multi: &[usize]) -> usize {
        flatten(multi, &self.shape())
    }

    /// Parameter values `t` at a flat index.
    pub fn parameters_at(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, &self.shape())
            .iter()
            .zip(&self.axes)
            .map(|(&j, a)| a.value(j))
            .collect()
    }

    /// Values of every coordinate at a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[flat]).collect()
    }

    /// Values of the named coordinates at a flat index.
    pub fn point_in(&self, names: &[String], flat: usize) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| {
                self.coordinate(n)
                    .map(|v| v[flat])
                    .ok_or_else(|| Error::ChartMismatch(format!("section has no coordinate `{n}`")))
            })
            .collect()
    }

    /// True if the node is strictly inside along every axis.
    pub fn is_interior(&self, flat: usize) -> bool {
        unflatten(flat, &self.shape())
            .iter()
            .zip(&self.axes)
            .all(|(&j, a)| j > 0 && j + 1 < a.nodes)
    }

    /// Restriction to one index of the first axis (a 1-D section over the
    /// second axis). Requires k = 2.
    pub fn slice_first_axis(&self, j: usize) -> Result<SectionGrid> {
        if self.k() != 2 || j >= self.axes[0].nodes {
            return Err(Error::InvalidGrid("slice index out of range".into()));
        }
        let m = self.axes[1].nodes;
        let values = self.values.iter().map(|v| v[j * m..(j + 1) * m].to_vec()).collect();
        SectionGrid::new(vec![self.axes[1]], self.names.clone(), values)
    }

    /// CSV with header `t1[,t2],<names>`, one row per node in row-major order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.k())
            .map(|a| format!("t{a}"))
            .chain(self.names.iter().cloned())
            .collect();
        w.write_record(&header)?;
        for flat in 0..self.len() {
            let row: Vec<String> = self
                .parameters_at(flat)
                .into_iter()
                .chain(self.point(flat))
                .map(|v| v.to_string())
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let k = header.iter().take_while(|h| *h == "t1" || *h == "t2").count();
        if k == 0 || header[..k].iter().enumerate().any(|(a, h)| *h != format!("t{}", a + 1)) {
            return Err(Error::InvalidGrid("header must start with t1[,t2]".into()));
        }
        let names = header[k..].to_vec();
        let mut params: Vec<Vec<f64>> = vec![Vec::new(); k];
        let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (row_no, record) in r.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::InvalidGrid(format!("row {} has {} fields", row_no + 2, record.len())));
            }
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidGrid(format!("row {}: `{field}` is not a number", row_no + 2))
                })?;
                if col < k {
                    params[col].push(v);
                } else {
                    values[col - k].push(v);
                }
            }
        }
        let rows = params[0].len();
        let inner = if k == 2 {
            params[0].iter().take_while(|&&t| t == params[0][0]).count()
        } else {
            1
        };
        if rows == 0 || rows % inner != 0 {
            return Err(Error::InvalidGrid("rows do not form a rectangular grid".into()));
        }
        let outer = rows / inner;
        let axis_from = |samples: Vec<f64>, nodes: usize| -> Result<Axis> {
            let spacing = if nodes > 1 { samples[1] - samples[0] } else { 1.0 };
            let axis = Axis::new(samples[0], spacing, nodes);
            let scale = samples.iter().fold(spacing.abs(), |m, v| m.max(v.abs()));
            for (j, s) in samples.iter().enumerate() {
                if (axis.value(j) - s).abs() > 1e-9 * scale {
                    return Err(Error::InvalidGrid("parameter axis is not uniform".into()));
                }
            }
            Ok(axis)
        };
        let mut axes = vec![axis_from((0..outer).map(|j| params[0][j * inner]).collect(), outer)?];
        if k == 2 {
            axes.push(axis_from(params[1][..inner].to_vec(), inner)?);
            for j in 0..rows {
                if params[0][j] != params[0][(j / inner) * inner] || params[1][j] != params[1][j % inner] {
                    return Err(Error::InvalidGrid("rows are not in row-major grid order".into()));
                }
            }
        }
        Self::new(axes, names, values)
    }

    /// Writes the CSV to `path` through a temporary file and rename.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        crate::io::write_atomic(path, &buf)
    }
}

fn flatten(multi: &[usize], shape: &[usize]) -> usize {
    multi.iter().zip(shape).fold(0, |acc, (&j, &n)| acc * n + j)
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (slot, &n) in out.iter_mut().zip(shape).rev() {
        *slot = flat % n;
        flat /= n;
    }
    out
}

/// Derivative along one axis of a row-major array: centered differences in
/// the interior, one-sided second-order stencils at both ends.
pub fn axis_derivative(values: &[f64], shape: &[usize], axis: usize, spacing: f64) -> Result<Vec<f64>> {
    let n = shape[axis];
    if n < 3 {
        return Err(Error::GridTooSmall { axis, nodes: n });
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; values.len()];
    let h2 = 2.0 * spacing;
    for (flat, slot) in out.iter_mut().enumerate() {
        let j = (flat / stride) % n;
        let at = |offset: isize| values[(flat as isize + offset * stride as isize) as usize];
        *slot = if j == 0 {
            (-3.0 * at(0) + 4.0 * at(1) - at(2)) / h2
        } else if j == n - 1 {
            (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / h2
        } else {
            (at(1) - at(-1)) / h2
        };
    }
    Ok(out)
}

/// First prolongation of a sampled section: the point plus one tangent
/// vector per parameter direction at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct Prolongation {
    /// `tangents[α][c][flat]` approximates `∂φ^c/∂t^α`.
    pub tangents: Vec<Vec<Vec<f64>>>,
}

impl Prolongation {
    /// Tangent vector `∂φ/∂t^α` at a node.
    pub fn tangent(&self, alpha: usize, flat: usize) -> Vec<f64> {
        self.tangents[alpha].iter().map(|c| c[flat]).collect()
    }
}

pub fn prolong(section: &SectionGrid) -> Result<Prolongation> {
    let shape = section.shape();
    let tangents = section
        .axes
        .iter()
        .enumerate()
        .map(|(alpha, axis)| {
            section
                .values
                .iter()
                .map(|v| axis_derivative(v, &shape, alpha, axis.spacing))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Prolongation { tangents })
}

/// Residual grids of the integral-section equations `∂φ^c/∂t^α = X_α^c ∘ φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionResidual {
    /// Max over interior nodes, all α and c.
    pub max: f64,
    /// `per_equation[α][c][flat]`, signed, at every node (boundary nodes use
    /// one-sided differences).
    pub per_equation: Vec<Vec<Vec<f64>>>,
    interior: Vec<usize>,
}

impl SectionResidual {
    /// Interior max restricted to the listed coordinate indices.
    pub fn max_over(&self, coordinates: &[usize]) -> f64 {
        let mut m = 0.0_f64;
        for eq in &self.per_equation {
            for &c in coordinates {
                for &flat in &self.interior {
                    m = m.max(eq[c][flat].abs());
                }
            }
        }
        m
    }
}

pub fn integral_section_residual(x: &KVectorField, section: &SectionGrid) -> Result<SectionResidual> {
    if section.names() != x.chart().names() {
        return Err(Error::ChartMismatch(format!(
            "section coordinates ({}) differ from chart {}",
            section.names().join(", "),
            x.chart()
        )));
    }
    if section.k() != x.k() {
        return Err(Error::ChartMismatch(format!(
            "section has {} parameters, field has k = {}",
            section.k(),
            x.k()
        )));
    }
    let prolongation = prolong(section)?;
    let dim = x.chart().dim();
    let len = section.len();
    let mut per_equation = vec![vec![vec![0.0; len]; dim]; x.k()];
    let mut interior = Vec::new();
    let mut max = 0.0_f64;
    for flat in 0..len {
        let point = section.point(flat);
        let inside = section.is_interior(flat);
        if inside {
            interior.push(flat);
        }
        for alpha in 0..x.k() {
            let field = x.evaluate(alpha, &point)?;
            for c in 0..dim {
                let r = prolongation.tangents[alpha][c][flat] - field[c];
                per_equation[alpha][c][flat] = r;
                if inside {
                    max = max.max(r.abs());
                }
            }
        }
    }
    Ok(SectionResidual {
        max,
        per_equation,
        interior,
    })
}
