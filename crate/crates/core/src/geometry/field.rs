use crate::error::{Error, Result};
use crate::expr::{Expr, PointBinding, SliceBinding};

use super::DarbouxChart;

/// Absolute max-norm threshold under which a bracket counts as vanishing.
pub const BRACKET_TOLERANCE: f64 = 1e-10;

pub(crate) fn check_expression(chart: &DarbouxChart, parameters: &PointBinding, e: &Expr) -> Result<()> {
    for v in e.free_variables() {
        if chart.index_of(&v).is_none() && !parameters.contains(&v) {
            return Err(Error::ChartMismatch(format!(
                "free variable `{v}` is neither a coordinate of {chart} nor a parameter"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_parameters(chart: &DarbouxChart, parameters: &PointBinding) -> Result<()> {
    for (name, _) in parameters.iter() {
        if chart.index_of(name).is_some() {
            return Err(Error::InvalidChart(format!(
                "parameter `{name}` shadows a coordinate"
            )));
        }
    }
    Ok(())
}

/// A single vector field given by one component expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: DarbouxChart,
    parameters: PointBinding,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: DarbouxChart, parameters: PointBinding, components: Vec<Expr>) -> Result<Self> {
        check_parameters(&chart, &parameters)?;
        if components.len() != chart.dim() {
            return Err(Error::ChartMismatch(format!(
                "vector field has {} components, chart has dimension {}",
                components.len(),
                chart.dim()
            )));
        }
        for c in &components {
            check_expression(&chart, &parameters, c)?;
        }
        Ok(Self {
            chart,
            parameters,
            components,
        })
    }

    /// Coordinate vector field ∂/∂x^index.
    pub fn coordinate(chart: DarbouxChart, parameters: PointBinding, index: usize) -> Result<Self> {
        let components = (0..chart.dim())
            .map(|c| if c == index { Expr::one() } else { Expr::zero() })
            .collect();
        Self::new(chart, parameters, components)
    }

    pub fn chart(&self) -> &DarbouxChart {
        &self.chart
    }

    pub fn parameters(&self) -> &PointBinding {
        &self.parameters
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, index: usize) -> &Expr {
        &self.components[index]
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<Vec<f64>> {
        let b = binding(&self.chart, &self.parameters, point)?;
        self.components.iter().map(|c| c.evaluate(&b)).collect()
    }
}

fn binding<'a>(chart: &'a DarbouxChart, parameters: &'a PointBinding, point: &'a [f64]) -> Result<SliceBinding<'a>> {
    if point.len() != chart.dim() {
        return Err(Error::ChartMismatch(format!(
            "point has {} coordinates, chart has dimension {}",
            point.len(),
            chart.dim()
        )));
    }
    Ok(SliceBinding {
        names: chart.names(),
        values: point,
        fallback: parameters,
    })
}

/// A k-tuple `(X_1, …, X_k)` of vector fields on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct KVectorField {
    chart: DarbouxChart,
    parameters: PointBinding,
    /// `components[α][c]` is `(X_α)^c`.
    components: Vec<Vec<Expr>>,
}

impl KVectorField {
    pub fn new(chart: DarbouxChart, parameters: PointBinding, components: Vec<Vec<Expr>>) -> Result<Self> {
        check_parameters(&chart, &parameters)?;
        if components.is_empty() {
            return Err(Error::ChartMismatch("k-vector field needs k >= 1 fields".into()));
        }
        for (a, field) in components.iter().enumerate() {
            if field.len() != chart.dim() {
                return Err(Error::ChartMismatch(format!(
                    "X{} has {} components, chart has dimension {}",
                    a + 1,
                    field.len(),
                    chart.dim()
                )));
            }
            for c in field {
                check_expression(&chart, &parameters, c)?;
            }
        }
        Ok(Self {
            chart,
            parameters,
            components,
        })
    }

    pub fn zero(chart: DarbouxChart, parameters: PointBinding, k: usize) -> Result<Self> {
        let components = vec![vec![Expr::zero(); chart.dim()]; k];
        Self::new(chart, parameters, components)
    }

    pub fn from_fields(fields: Vec<VectorField>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::ChartMismatch("k-vector field needs k >= 1 fields".into()))?;
        let chart = first.chart.clone();
        let parameters = first.parameters.clone();
        if fields.iter().any(|f| f.chart != chart) {
            return Err(Error::ChartMismatch("fields live on different charts".into()));
        }
        Self::new(chart, parameters, fields.into_iter().map(|f| f.components).collect())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn chart(&self) -> &DarbouxChart {
        &self.chart
    }

    pub fn parameters(&self) -> &PointBinding {
        &self.parameters
    }

    pub fn component(&self, alpha: usize, index: usize) -> &Expr {
        &self.components[alpha][index]
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.components
    }

    pub fn field(&self, alpha: usize) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            parameters: self.parameters.clone(),
            components: self.components[alpha].clone(),
        }
    }

    /// Copy with `(X_α)^index` replaced.
    pub fn with_component(&self, alpha: usize, index: usize, e: Expr) -> Result<Self> {
        check_expression(&self.chart, &self.parameters, &e)?;
        let mut out = self.clone();
        out.components[alpha][index] = e;
        Ok(out)
    }

    /// Values of X_α at a point given in chart order.
    pub fn evaluate(&self, alpha: usize, point: &[f64]) -> Result<Vec<f64>> {
        let b = binding(&self.chart, &self.parameters, point)?;
        self.components[alpha].iter().map(|c| c.evaluate(&b)).collect()
    }

    /// All k fields at a point, `out[α][c]`.
    pub fn evaluate_all(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.k()).map(|a| self.evaluate(a, point)).collect()
    }
}

/// Symbolic Lie bracket `[X, Y]^c = Σ_d X^d ∂_d Y^c − Y^d ∂_d X^c`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    if x.chart != y.chart {
        return Err(Error::ChartMismatch(format!(
            "bracket of fields on {} and {}",
            x.chart, y.chart
        )));
    }
    let names = x.chart.names();
    let components = (0..names.len())
        .map(|c| {
            names
                .iter()
                .enumerate()
                .flat_map(|(d, var)| {
                    [
                        x.components[d].clone() * y.components[c].differentiate(var),
                        -(y.components[d].clone() * x.components[c].differentiate(var)),
                    ]
                })
                .sum::<Expr>()
                .simplify()
        })
        .collect();
    let mut parameters = x.parameters.clone();
    for (k, v) in y.parameters.iter() {
        parameters.insert(k, v);
    }
    VectorField::new(x.chart.clone(), parameters, components)
}

/// Largest pairwise bracket found by [`is_integrable`].
#[derive(Debug, Clone, PartialEq)]
pub struct BracketWitness {
    pub alpha: usize,
    pub beta: usize,
    pub norm: f64,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityReport {
    pub integrable: bool,
    /// Worst pair over all sample points; `None` when k = 1.
    pub worst: Option<BracketWitness>,
}

/// Checks `[X_α, X_β] = 0` by evaluating every pairwise bracket at the sample
/// points against [`BRACKET_TOLERANCE`].
pub fn is_integrable(x: &KVectorField, samples: &[Vec<f64>]) -> Result<IntegrabilityReport> {
    let mut worst: Option<BracketWitness> = None;
    for a in 0..x.k() {
        for b in a + 1..x.k() {
            let bracket = lie_bracket(&x.field(a), &x.field(b))?;
            for point in samples {
                let norm = bracket
                    .evaluate(point)?
                    .into_iter()
                    .fold(0.0_f64, |m, v| m.max(v.abs()));
                if worst.as_ref().is_none_or(|w| norm > w.norm) {
                    worst = Some(BracketWitness {
                        alpha: a,
                        beta: b,
                        norm,
                        point: point.clone(),
                    });
                }
            }
        }
    }
    let integrable = worst.as_ref().is_none_or(|w| w.norm < BRACKET_TOLERANCE);
    Ok(IntegrabilityReport { integrable, worst })
}
