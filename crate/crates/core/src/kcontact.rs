//! Polarised k-contact Hamiltonian systems in Darboux coordinates.
//!
//! The contact form is `η^α = dz^α − p_i^α dq^i`, so `dη^α = dq^i ∧ dp_i^α`
//! and the Reeb fields are `R_α = ∂/∂z^α`. A k-vector field solves the
//! k-contact HDW equations when, summed over α,
//!
//! ```text
//! ι_{X_α} dη^α = dh − (R_α h) η^α,    ι_{X_α} η^α = −h.
//! ```
//!
//! In coordinates this fixes `(X_α)^{q^i} = ∂h/∂p_i^α` and two traces:
//! `Σ_α (X_α)^{p_i^α} = −(∂h/∂q^i + p_i^α ∂h/∂z^α)` and
//! `Σ_α (X_α)^{z^α} = p_i^α ∂h/∂p_i^α − h`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Expr, PointBinding, SliceBinding};
use crate::gauge::{canonical_diagonal, GaugeSpec};
use crate::geometry::{check_expression, check_parameters, DarbouxChart, KVectorField};
use crate::ksymplectic::{check_trace, gradient, CovectorResidual};
use crate::linalg::{null_space, numerical_rank, vstack, RANK_TOLERANCE};

/// `(M, η, h)` with `η` in Darboux form.
#[derive(Debug, Clone, PartialEq)]
pub struct KContactSystem {
    chart: DarbouxChart,
    hamiltonian: Expr,
    parameters: PointBinding,
}

impl KContactSystem {
    pub fn new(chart: DarbouxChart, hamiltonian: Expr, parameters: PointBinding) -> Result<Self> {
        if !chart.has_z() {
            return Err(Error::InvalidChart(
                "k-contact systems need a chart with z coordinates".into(),
            ));
        }
        check_parameters(&chart, &parameters)?;
        check_expression(&chart, &parameters, &hamiltonian)?;
        Ok(Self {
            chart,
            hamiltonian,
            parameters,
        })
    }

    pub fn chart(&self) -> &DarbouxChart {
        &self.chart
    }

    pub fn hamiltonian(&self) -> &Expr {
        &self.hamiltonian
    }

    pub fn parameters(&self) -> &PointBinding {
        &self.parameters
    }

    /// Same chart and parameters with a different Hamiltonian.
    pub fn with_hamiltonian(&self, hamiltonian: Expr) -> Result<Self> {
        Self::new(self.chart.clone(), hamiltonian, self.parameters.clone())
    }

    fn binding<'a>(&'a self, point: &'a [f64]) -> SliceBinding<'a> {
        SliceBinding {
            names: self.chart.names(),
            values: point,
            fallback: &self.parameters,
        }
    }

    /// `−(∂h/∂q^i + Σ_β p_i^β ∂h/∂z^β)` for each i.
    fn momentum_traces(&self) -> Vec<Expr> {
        let (c, h) = (&self.chart, &self.hamiltonian);
        (0..c.n())
            .map(|i| {
                let damping: Expr = (0..c.k())
                    .map(|b| Expr::var(c.p_name(i, b)) * h.differentiate(c.z_name(b)))
                    .sum();
                (-(h.differentiate(c.q_name(i)) + damping)).simplify()
            })
            .collect()
    }

    /// `Σ_{i,α} p_i^α ∂h/∂p_i^α − h`.
    fn z_trace(&self) -> Expr {
        let (c, h) = (&self.chart, &self.hamiltonian);
        let euler: Expr = (0..c.n())
            .flat_map(|i| (0..c.k()).map(move |a| (i, a)))
            .map(|(i, a)| Expr::var(c.p_name(i, a)) * h.differentiate(c.p_name(i, a)))
            .sum();
        (euler - h.clone()).simplify()
    }

    /// Replaces the last diagonal entries of the explicit tables so both
    /// summed trace conditions hold symbolically.
    pub fn complete_gauge(&self, gauge: &GaugeSpec) -> Result<GaugeSpec> {
        let (n, k) = (self.chart.n(), self.chart.k());
        gauge.check_shapes(n, k, true)?;
        let mut out = gauge.clone();
        if let Some(m) = out.momentum.as_mut() {
            for (i, required) in self.momentum_traces().into_iter().enumerate() {
                let others: Expr = (0..k - 1).map(|a| m[a][a][i].clone()).sum();
                m[k - 1][k - 1][i] = (required - others).simplify();
            }
        }
        if let Some(z) = out.z.as_mut() {
            let others: Expr = (0..k - 1).map(|a| z[a][a].clone()).sum();
            z[k - 1][k - 1] = (self.z_trace() - others).simplify();
        }
        Ok(out)
    }
}

/// `η^α` covectors and `dη^α` matrices at a point, chart order.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormBundle {
    eta: Vec<DVector<f64>>,
    d_eta: Vec<DMatrix<f64>>,
}

impl OneFormBundle {
    pub fn new(eta: Vec<DVector<f64>>, d_eta: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = eta.first().map_or(0, |v| v.len());
        if eta.len() != d_eta.len() {
            return Err(Error::InvalidChart("need one dη^α per η^α".into()));
        }
        for (a, (v, m)) in eta.iter().zip(&d_eta).enumerate() {
            if v.len() != dim || m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidChart(format!("form {} has wrong dimensions", a + 1)));
            }
            if (m + m.transpose()).amax() > 1e-14 {
                return Err(Error::InvalidChart(format!("dη^{} is not skew-symmetric", a + 1)));
            }
        }
        Ok(Self { eta, d_eta })
    }

    pub fn k(&self) -> usize {
        self.eta.len()
    }

    pub fn dim(&self) -> usize {
        self.eta.first().map_or(0, |v| v.len())
    }

    pub fn eta(&self) -> &[DVector<f64>] {
        &self.eta
    }

    pub fn d_eta(&self) -> &[DMatrix<f64>] {
        &self.d_eta
    }
}

/// Contact forms `η^α = dz^α − p_i^α dq^i` evaluated at a point.
pub fn darboux_contact_forms(chart: &DarbouxChart, point: &[f64]) -> Result<OneFormBundle> {
    if !chart.has_z() {
        return Err(Error::InvalidChart("contact forms need z coordinates".into()));
    }
    if point.len() != chart.dim() {
        return Err(Error::ChartMismatch(format!(
            "point has {} coordinates, chart has dimension {}",
            point.len(),
            chart.dim()
        )));
    }
    let dim = chart.dim();
    let mut eta = Vec::with_capacity(chart.k());
    let mut d_eta = Vec::with_capacity(chart.k());
    for a in 0..chart.k() {
        let mut v = DVector::zeros(dim);
        let mut m = DMatrix::zeros(dim, dim);
        v[chart.z(a)] = 1.0;
        for i in 0..chart.n() {
            v[chart.q(i)] = -point[chart.p(i, a)];
            m[(chart.q(i), chart.p(i, a))] = 1.0;
            m[(chart.p(i, a), chart.q(i))] = -1.0;
        }
        eta.push(v);
        d_eta.push(m);
    }
    OneFormBundle::new(eta, d_eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactAxiomReport {
    pub k: usize,
    pub dim: usize,
    /// Codimension of `ker η` (expected k).
    pub ker_eta_corank: usize,
    /// Dimension of `ker dη` (expected k).
    pub ker_d_eta_rank: usize,
    /// Dimension of `ker η ∩ ker dη` (expected 0).
    pub intersection_dim: usize,
    pub pass: bool,
}

impl ContactAxiomReport {
    pub fn triple(&self) -> (usize, usize, usize) {
        (self.ker_eta_corank, self.ker_d_eta_rank, self.intersection_dim)
    }
}

/// Checks the three k-contact conditions by rank computations.
pub fn contact_axiom_check(forms: &OneFormBundle) -> ContactAxiomReport {
    let (k, dim) = (forms.k(), forms.dim());
    let eta_rows: Vec<DMatrix<f64>> = forms
        .eta
        .iter()
        .map(|v| DMatrix::from_row_slice(1, v.len(), v.as_slice()))
        .collect();
    let eta_stack = vstack(&eta_rows);
    let d_eta_stack = vstack(&forms.d_eta);
    let ker_eta_corank = numerical_rank(&eta_stack, RANK_TOLERANCE);
    let ker_d_eta_rank = null_space(&d_eta_stack, RANK_TOLERANCE).ncols();
    let both = vstack(&[eta_stack, d_eta_stack]);
    let intersection_dim = null_space(&both, RANK_TOLERANCE).ncols();
    ContactAxiomReport {
        k,
        dim,
        ker_eta_corank,
        ker_d_eta_rank,
        intersection_dim,
        pass: k > 0 && ker_eta_corank == k && ker_d_eta_rank == k && intersection_dim == 0,
    }
}

/// Reeb fields `R_α = ∂/∂z^α` on a Darboux chart.
pub fn reeb_fields(sys: &KContactSystem) -> Result<KVectorField> {
    reeb_fields_on(&sys.chart, sys.parameters.clone())
}

pub fn reeb_fields_on(chart: &DarbouxChart, parameters: PointBinding) -> Result<KVectorField> {
    if !chart.has_z() {
        return Err(Error::InvalidChart("Reeb fields need z coordinates".into()));
    }
    let components = (0..chart.k())
        .map(|a| {
            (0..chart.dim())
                .map(|c| if c == chart.z(a) { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect();
    KVectorField::new(chart.clone(), parameters, components)
}

/// Deviations of Reeb fields from `ι_{R_α} η^β = δ_α^β` and `ι_{R_α} dη^β = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReebDefect {
    pub eta: f64,
    pub d_eta: f64,
}

pub fn reeb_defect(forms: &OneFormBundle, reeb: &KVectorField, point: &[f64]) -> Result<ReebDefect> {
    let mut eta = 0.0_f64;
    let mut d_eta = 0.0_f64;
    for a in 0..reeb.k() {
        let r = DVector::from_vec(reeb.evaluate(a, point)?);
        for b in 0..forms.k() {
            let delta = if a == b { 1.0 } else { 0.0 };
            eta = eta.max((forms.eta[b].dot(&r) - delta).abs());
            d_eta = d_eta.max(forms.d_eta[b].tr_mul(&r).amax());
        }
    }
    Ok(ReebDefect { eta, d_eta })
}

/// Assembles a k-contact Hamiltonian k-vector field from the component
/// relations and the gauge.
pub fn hamiltonian_kvf_contact(sys: &KContactSystem, gauge: &GaugeSpec) -> Result<KVectorField> {
    let chart = &sys.chart;
    let (n, k) = (chart.n(), chart.k());
    gauge.check_shapes(n, k, true)?;
    for e in gauge.all_expressions() {
        check_expression(chart, &sys.parameters, e)?;
    }
    let momentum_traces = sys.momentum_traces();
    let z_trace = sys.z_trace();
    let diagonal_or_zero = |a: usize, b: usize, value: &Expr| {
        if a == b {
            canonical_diagonal(value, k, gauge.convention)
        } else {
            Expr::zero()
        }
    };
    let momentum: Vec<Vec<Vec<Expr>>> = match &gauge.momentum {
        Some(m) => m.clone(),
        None => (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| (0..n).map(|i| diagonal_or_zero(a, b, &momentum_traces[i])).collect())
                    .collect()
            })
            .collect(),
    };
    let z: Vec<Vec<Expr>> = match &gauge.z {
        Some(z) => z.clone(),
        None => (0..k)
            .map(|a| (0..k).map(|b| diagonal_or_zero(a, b, &z_trace)).collect())
            .collect(),
    };

    let diagonal: Vec<Vec<Expr>> = (0..k).map(|a| momentum[a][a].clone()).collect();
    check_trace(chart, &sys.parameters, &diagonal, &momentum_traces, gauge.convention, |i| {
        format!("momentum trace of {}", chart.q_name(i))
    })?;
    let z_diagonal: Vec<Vec<Expr>> = (0..k).map(|a| vec![z[a][a].clone()]).collect();
    check_trace(
        chart,
        &sys.parameters,
        &z_diagonal,
        std::slice::from_ref(&z_trace),
        gauge.convention,
        |_| "z trace".to_string(),
    )?;

    let h = &sys.hamiltonian;
    let mut components = vec![vec![Expr::zero(); chart.dim()]; k];
    for (a, field) in components.iter_mut().enumerate() {
        for i in 0..n {
            field[chart.q(i)] = h.differentiate(chart.p_name(i, a));
            for b in 0..k {
                field[chart.p(i, b)] = momentum[a][b][i].clone();
            }
        }
        for b in 0..k {
            field[chart.z(b)] = z[a][b].clone();
        }
    }
    KVectorField::new(chart.clone(), sys.parameters.clone(), components)
}

/// Residuals of both k-contact HDW equations at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactResidual {
    /// `Σ_α ι_{X_α} dη^α − dh + Σ_α (R_α h) η^α`
    pub covector: CovectorResidual,
    /// `Σ_α ι_{X_α} η^α + h`
    pub scalar: f64,
}

impl ContactResidual {
    pub fn max_norm(&self) -> f64 {
        self.covector.max_norm.max(self.scalar.abs())
    }
}

pub fn contact_hdw_residual(sys: &KContactSystem, x: &KVectorField, point: &[f64]) -> Result<ContactResidual> {
    if x.chart() != &sys.chart {
        return Err(Error::ChartMismatch(format!(
            "system chart {} differs from field chart {}",
            sys.chart,
            x.chart()
        )));
    }
    let forms = darboux_contact_forms(&sys.chart, point)?;
    let b = sys.binding(point);
    let dim = sys.chart.dim();
    let grad = gradient(&sys.chart, &sys.hamiltonian)
        .iter()
        .map(|e| e.evaluate(&b))
        .collect::<Result<Vec<_>>>()?;
    let h = sys.hamiltonian.evaluate(&b)?;

    let mut lhs = DVector::zeros(dim);
    let mut rhs = DVector::from_vec(grad.clone());
    let mut scalar = h;
    for a in 0..x.k().min(forms.k()) {
        let xa = DVector::from_vec(x.evaluate(a, point)?);
        lhs += forms.d_eta[a].tr_mul(&xa);
        scalar += forms.eta[a].dot(&xa);
        let reeb_h = grad[sys.chart.z(a)];
        rhs -= &forms.eta[a] * reeb_h;
    }
    Ok(ContactResidual {
        covector: CovectorResidual::new((lhs - rhs).iter().copied().collect()),
        scalar,
    })
}
