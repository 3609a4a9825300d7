//! Polarised exact k-symplectic Hamiltonian systems in Darboux coordinates.
//!
//! The k-symplectic form is `ω = dq^i ∧ dp_i^α ⊗ e_α`. A k-vector field `X`
//! is Hamiltonian for `h` when `Σ_α ι_{X_α} ω^α = dh`, which in coordinates
//! fixes `(X_α)^{q^i} = ∂h/∂p_i^α` and only the trace
//! `Σ_α (X_α)^{p_i^α} = −∂h/∂q^i` of the momentum components. The remaining
//! freedom is supplied by a [`GaugeSpec`].
//!
//! Contractions use `(ι_X ω)_c = Σ_d ω_{dc} X^d`, so for k = 1 and
//! `h = p²/2 + V(q)` the field is `q̇ = p`, `ṗ = −V'(q)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{Expr, PointBinding, SliceBinding};
use crate::gauge::{canonical_diagonal, GaugeSpec, TraceConvention};
use crate::geometry::{check_expression, check_parameters, prolong, DarbouxChart, KVectorField, SectionGrid};
use crate::linalg::{numerical_rank, vstack, RANK_TOLERANCE};
use crate::probe::probe_points;

/// Absolute tolerance for gauge trace checks at assembly.
pub const GAUGE_TOLERANCE: f64 = 1e-10;
const GAUGE_PROBES: usize = 8;
const GAUGE_SEED: u64 = 0x6b73_796d;

/// `(P, ω, h)` with `ω` in Darboux form.
#[derive(Debug, Clone, PartialEq)]
pub struct KSymplecticSystem {
    chart: DarbouxChart,
    hamiltonian: Expr,
    parameters: PointBinding,
}

impl KSymplecticSystem {
    pub fn new(chart: DarbouxChart, hamiltonian: Expr, parameters: PointBinding) -> Result<Self> {
        if chart.has_z() {
            return Err(Error::InvalidChart(
                "k-symplectic systems live on charts without z coordinates".into(),
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

    /// The undamped vibrating string on `⊕²T*ℝ` with coordinates
    /// `(u, pt, px)` and `h = pt²/(2ρ) − px²/(2τ)`.
    pub fn vibrating_string(rho: f64, tau: f64) -> Self {
        let chart = DarbouxChart::with_names(
            vec!["u".into()],
            vec![vec!["pt".into(), "px".into()]],
            None,
        )
        .expect("static chart");
        let h = Expr::parse("pt^2/(2*rho) - px^2/(2*tau)").expect("static expression");
        let parameters = PointBinding::new().with("rho", rho).with("tau", tau);
        Self::new(chart, h, parameters).expect("static system")
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

    pub(crate) fn binding<'a>(&'a self, point: &'a [f64]) -> SliceBinding<'a> {
        SliceBinding {
            names: self.chart.names(),
            values: point,
            fallback: &self.parameters,
        }
    }

    /// Replaces the last diagonal momentum entries `(X_k)^{p_i^k}` so that the
    /// summed trace condition holds symbolically.
    pub fn complete_gauge(&self, gauge: &GaugeSpec) -> Result<GaugeSpec> {
        let (n, k) = (self.chart.n(), self.chart.k());
        gauge.check_shapes(n, k, false)?;
        let mut momentum = match &gauge.momentum {
            Some(m) => m.clone(),
            None => return Ok(gauge.clone()),
        };
        for i in 0..n {
            let others: Expr = (0..k - 1).map(|a| momentum[a][a][i].clone()).sum();
            let required = -self.hamiltonian.differentiate(self.chart.q_name(i));
            momentum[k - 1][k - 1][i] = (required - others).simplify();
        }
        Ok(GaugeSpec {
            momentum: Some(momentum),
            ..gauge.clone()
        })
    }
}

/// Coefficient matrices of `ω^α` at a point, in chart order.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFormBundle {
    forms: Vec<DMatrix<f64>>,
}

impl TwoFormBundle {
    pub fn new(forms: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = forms.first().map_or(0, |m| m.nrows());
        for (a, m) in forms.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidChart(format!("ω^{} is not {dim}x{dim}", a + 1)));
            }
            if (m + m.transpose()).amax() > 1e-14 {
                return Err(Error::InvalidChart(format!("ω^{} is not skew-symmetric", a + 1)));
            }
        }
        Ok(Self { forms })
    }

    pub fn k(&self) -> usize {
        self.forms.len()
    }

    pub fn dim(&self) -> usize {
        self.forms.first().map_or(0, |m| m.nrows())
    }

    pub fn forms(&self) -> &[DMatrix<f64>] {
        &self.forms
    }

    /// `ι_X ω^α` as a covector.
    pub fn contract(&self, alpha: usize, x: &[f64]) -> DVector<f64> {
        self.forms[alpha].tr_mul(&DVector::from_column_slice(x))
    }
}

/// `ω^α = dq^i ∧ dp_i^α`: `+1` at `(q^i, p_i^α)`, `−1` transposed.
pub fn darboux_two_forms(chart: &DarbouxChart) -> Result<TwoFormBundle> {
    if chart.has_z() {
        return Err(Error::InvalidChart(
            "k-symplectic forms need a chart without z coordinates".into(),
        ));
    }
    let dim = chart.dim();
    let forms = (0..chart.k())
        .map(|a| {
            let mut m = DMatrix::zeros(dim, dim);
            for i in 0..chart.n() {
                m[(chart.q(i), chart.p(i, a))] = 1.0;
                m[(chart.p(i, a), chart.q(i))] = -1.0;
            }
            m
        })
        .collect();
    TwoFormBundle::new(forms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NondegeneracyReport {
    pub rank: usize,
    pub dim: usize,
    pub nondegenerate: bool,
}

/// `∩_α ker ω^α = {0}`, decided by the column rank of the stacked matrices.
pub fn nondegeneracy_check(forms: &TwoFormBundle) -> NondegeneracyReport {
    let dim = forms.dim();
    let rank = numerical_rank(&vstack(forms.forms()), RANK_TOLERANCE);
    NondegeneracyReport {
        rank,
        dim,
        nondegenerate: dim > 0 && rank == dim,
    }
}

/// Symbolic gradient of `h` in chart order.
pub(crate) fn gradient(chart: &DarbouxChart, h: &Expr) -> Vec<Expr> {
    chart.names().iter().map(|v| h.differentiate(v)).collect()
}

/// Checks `Σ_α diag[α][i] = required[i]` (or per component) at probe points.
pub(crate) fn check_trace(
    chart: &DarbouxChart,
    parameters: &PointBinding,
    diagonal: &[Vec<Expr>],
    required: &[Expr],
    convention: TraceConvention,
    label: impl Fn(usize) -> String,
) -> Result<()> {
    for point in probe_points(chart.dim(), GAUGE_PROBES, GAUGE_SEED, (-1.0, 1.0)) {
        let b = SliceBinding {
            names: chart.names(),
            values: &point,
            fallback: parameters,
        };
        for (slot, target) in required.iter().enumerate() {
            let target = target.evaluate(&b)?;
            let values = diagonal
                .iter()
                .map(|d| d[slot].evaluate(&b))
                .collect::<Result<Vec<_>>>()?;
            let residual = match convention {
                TraceConvention::Summed => (values.iter().sum::<f64>() - target).abs(),
                TraceConvention::PerComponent => values
                    .iter()
                    .map(|v| (v - target).abs())
                    .fold(0.0, f64::max),
            };
            if !(residual <= GAUGE_TOLERANCE) {
                return Err(Error::GaugeConstraintViolated {
                    slot: label(slot),
                    residual,
                });
            }
        }
    }
    Ok(())
}

/// Assembles the Hamiltonian k-vector field
/// `X_α = ∂h/∂p_i^α ∂/∂q^i + g_{αβi} ∂/∂p_i^β`.
pub fn hamiltonian_kvf(sys: &KSymplecticSystem, gauge: &GaugeSpec) -> Result<KVectorField> {
    let chart = &sys.chart;
    let (n, k) = (chart.n(), chart.k());
    gauge.check_shapes(n, k, false)?;
    for e in gauge.all_expressions() {
        check_expression(chart, &sys.parameters, e)?;
    }
    let h = &sys.hamiltonian;
    let required: Vec<Expr> = (0..n).map(|i| -h.differentiate(chart.q_name(i))).collect();
    let momentum = match &gauge.momentum {
        Some(m) => m.clone(),
        None => (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        (0..n)
                            .map(|i| {
                                if a == b {
                                    canonical_diagonal(&required[i], k, gauge.convention)
                                } else {
                                    Expr::zero()
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect(),
    };
    let diagonal: Vec<Vec<Expr>> = (0..k).map(|a| momentum[a][a].clone()).collect();
    check_trace(chart, &sys.parameters, &diagonal, &required, gauge.convention, |i| {
        format!("momentum trace of {}", chart.q_name(i))
    })?;

    let mut components = vec![vec![Expr::zero(); chart.dim()]; k];
    for (a, field) in components.iter_mut().enumerate() {
        for i in 0..n {
            field[chart.q(i)] = h.differentiate(chart.p_name(i, a));
            for b in 0..k {
                field[chart.p(i, b)] = momentum[a][b][i].clone();
            }
        }
    }
    KVectorField::new(chart.clone(), sys.parameters.clone(), components)
}

/// Covector residual of `Σ_α ι_{X_α} ω^α − dh` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorResidual {
    pub values: Vec<f64>,
    pub max_norm: f64,
}

impl CovectorResidual {
    pub(crate) fn new(values: Vec<f64>) -> Self {
        let max_norm = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Self { values, max_norm }
    }
}

fn check_same_chart(sys_chart: &DarbouxChart, field_chart: &DarbouxChart) -> Result<()> {
    if sys_chart != field_chart {
        return Err(Error::ChartMismatch(format!(
            "system chart {sys_chart} differs from field chart {field_chart}"
        )));
    }
    Ok(())
}

pub fn hdw_residual(sys: &KSymplecticSystem, x: &KVectorField, point: &[f64]) -> Result<CovectorResidual> {
    check_same_chart(&sys.chart, x.chart())?;
    if point.len() != sys.chart.dim() {
        return Err(Error::ChartMismatch(format!(
            "point has {} coordinates, chart has dimension {}",
            point.len(),
            sys.chart.dim()
        )));
    }
    let forms = darboux_two_forms(&sys.chart)?;
    let b = sys.binding(point);
    let mut lhs = DVector::zeros(sys.chart.dim());
    for a in 0..x.k().min(forms.k()) {
        lhs += forms.contract(a, &x.evaluate(a, point)?);
    }
    let dh = gradient(&sys.chart, &sys.hamiltonian)
        .iter()
        .map(|e| e.evaluate(&b))
        .collect::<Result<Vec<_>>>()?;
    Ok(CovectorResidual::new(
        lhs.iter().zip(&dh).map(|(l, d)| l - d).collect(),
    ))
}

/// Residuals of the HDW field equations on a sampled section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEquationResidual {
    /// `max |∂ψ^{q^i}/∂t^α − ∂h/∂p_i^α ∘ ψ|`
    pub velocity: f64,
    /// `max |Σ_α ∂ψ^{p_i^α}/∂t^α + ∂h/∂q^i ∘ ψ|`
    pub momentum: f64,
    pub max: f64,
}

/// Evaluates the HDW field equations over the interior nodes of a section.
pub fn hdw_field_equations_residual(sys: &KSymplecticSystem, section: &SectionGrid) -> Result<FieldEquationResidual> {
    let chart = &sys.chart;
    let (n, k) = (chart.n(), chart.k());
    if section.k() != k {
        return Err(Error::ChartMismatch(format!(
            "section has {} parameters, system has k = {k}",
            section.k()
        )));
    }
    let index: Vec<usize> = chart
        .names()
        .iter()
        .map(|name| {
            section
                .names()
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::ChartMismatch(format!("section has no coordinate `{name}`")))
        })
        .collect::<Result<_>>()?;
    let tangents = prolong(section)?.tangents;
    let h = &sys.hamiltonian;
    let dh_dq: Vec<Expr> = (0..n).map(|i| h.differentiate(chart.q_name(i))).collect();
    let dh_dp: Vec<Vec<Expr>> = (0..n)
        .map(|i| (0..k).map(|a| h.differentiate(chart.p_name(i, a))).collect())
        .collect();

    let mut velocity = 0.0_f64;
    let mut momentum = 0.0_f64;
    for flat in (0..section.len()).filter(|&f| section.is_interior(f)) {
        let point = section.point_in(chart.names(), flat)?;
        let b = sys.binding(&point);
        for i in 0..n {
            for a in 0..k {
                let r = tangents[a][index[chart.q(i)]][flat] - dh_dp[i][a].evaluate(&b)?;
                velocity = velocity.max(r.abs());
            }
            let divergence: f64 = (0..k).map(|a| tangents[a][index[chart.p(i, a)]][flat]).sum();
            momentum = momentum.max((divergence + dh_dq[i].evaluate(&b)?).abs());
        }
    }
    Ok(FieldEquationResidual {
        velocity,
        momentum,
        max: velocity.max(momentum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Axis;
    use std::f64::consts::PI;

    fn sys(n: usize, k: usize, h: &str) -> KSymplecticSystem {
        KSymplecticSystem::new(
            DarbouxChart::new(n, k, false).unwrap(),
            Expr::parse(h).unwrap(),
            PointBinding::new(),
        )
        .unwrap()
    }

    #[test]
    fn darboux_forms_small_cases() {
        let f = darboux_two_forms(&DarbouxChart::new(1, 1, false).unwrap()).unwrap();
        assert_eq!(f.forms()[0], DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));

        let c = DarbouxChart::new(1, 2, false).unwrap();
        let f = darboux_two_forms(&c).unwrap();
        assert_eq!(f.dim(), 3);
        assert_eq!(f.forms()[0][(c.q(0), c.p(0, 0))], 1.0);
        assert_eq!(f.forms()[1][(c.q(0), c.p(0, 1))], 1.0);
        assert_eq!(f.forms()[0][(c.q(0), c.p(0, 1))], 0.0);

        let f = darboux_two_forms(&DarbouxChart::new(2, 2, false).unwrap()).unwrap();
        for m in f.forms() {
            assert_eq!(m.iter().filter(|v| **v != 0.0).count(), 2 * 2);
        }
    }

    #[test]
    fn nondegeneracy_examples() {
        for n in 1..=4 {
            for k in 1..=4 {
                let f = darboux_two_forms(&DarbouxChart::new(n, k, false).unwrap()).unwrap();
                assert!(nondegeneracy_check(&f).nondegenerate, "n={n} k={k}");
            }
        }
        let zero = TwoFormBundle::new(vec![DMatrix::zeros(3, 3); 2]).unwrap();
        assert!(!nondegeneracy_check(&zero).nondegenerate);

        let c = DarbouxChart::new(1, 2, false).unwrap();
        let mut forms = darboux_two_forms(&c).unwrap().forms().to_vec();
        forms[1].fill(0.0);
        let bundle = TwoFormBundle::new(forms).unwrap();
        let report = nondegeneracy_check(&bundle);
        assert!(!report.nondegenerate);
        assert_eq!(report.rank, 2);
        // e_{p^2} is a common null vector
        let mut e = vec![0.0; 3];
        e[c.p(0, 1)] = 1.0;
        assert!(bundle.forms().iter().all(|m| (m * DVector::from_vec(e.clone())).norm() == 0.0));
    }

    #[test]
    fn rejects_non_skew_forms() {
        assert!(TwoFormBundle::new(vec![DMatrix::identity(2, 2)]).is_err());
    }

    #[test]
    fn zero_hamiltonian_gives_zero_field() {
        let s = sys(2, 2, "0");
        let x = hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap();
        assert!(x.components().iter().flatten().all(Expr::is_zero));
    }

    #[test]
    fn wave_canonical_field() {
        let s = KSymplecticSystem::vibrating_string(1.5, 0.5);
        let x = hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap();
        assert_eq!(x.component(0, 0).to_string(), "pt/rho");
        assert_eq!(x.component(1, 0).to_string(), "-(px/tau)");
        for a in 0..2 {
            assert!(x.component(a, 1).is_zero() && x.component(a, 2).is_zero());
        }
    }

    #[test]
    fn classical_hamilton_equations_for_k1() {
        let s = sys(1, 1, "q1^2 + p1_1^2/2");
        let x = hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap();
        assert_eq!(x.component(0, 0), &Expr::var("p1_1"));
        assert_eq!(x.component(0, 1).to_string(), "-2*q1");
        for pt in probe_points(2, 10, 1, (-1.0, 1.0)) {
            assert!(hdw_residual(&s, &x, &pt).unwrap().max_norm <= 1e-12);
        }
    }

    #[test]
    fn residuals_of_zero_and_perturbed_fields() {
        let s = sys(1, 2, "q1^2*p1_1 + p1_2^2 - q1*p1_2");
        let pt = [0.3, -0.4, 0.7];
        let zero = KVectorField::zero(s.chart().clone(), PointBinding::new(), 2).unwrap();
        let r = hdw_residual(&s, &zero, &pt).unwrap();
        let dh: Vec<f64> = gradient(s.chart(), s.hamiltonian())
            .iter()
            .map(|e| e.evaluate(&s.binding(&pt)).unwrap())
            .collect();
        for (v, d) in r.values.iter().zip(&dh) {
            assert!((v + d).abs() < 1e-15);
        }

        let x = hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap();
        let c = s.chart().p(0, 0);
        let broken = x
            .with_component(0, c, (x.component(0, c).clone() + Expr::one()).simplify())
            .unwrap();
        let r = hdw_residual(&s, &broken, &pt).unwrap();
        assert!((r.values[s.chart().q(0)].abs() - 1.0).abs() < 1e-12);
        assert!(r.values[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gauge_violations_are_rejected() {
        let s = sys(1, 2, "q1^2");
        let bad = GaugeSpec::explicit(vec![
            vec![vec![Expr::zero()], vec![Expr::zero()]],
            vec![vec![Expr::zero()], vec![Expr::zero()]],
        ]);
        assert!(matches!(
            hamiltonian_kvf(&s, &bad),
            Err(Error::GaugeConstraintViolated { .. })
        ));
        let fixed = s.complete_gauge(&bad).unwrap();
        let x = hamiltonian_kvf(&s, &fixed).unwrap();
        assert_eq!(x.component(1, s.chart().p(0, 1)).to_string(), "-2*q1");
        let wrong_shape = GaugeSpec::explicit(vec![vec![vec![Expr::zero()]]]);
        assert!(matches!(hamiltonian_kvf(&s, &wrong_shape), Err(Error::InvalidGauge(_))));
    }

    #[test]
    fn per_component_convention() {
        let s = sys(1, 2, "q1^2");
        let strict = GaugeSpec::canonical().with_convention(TraceConvention::PerComponent);
        let x = hamiltonian_kvf(&s, &strict).unwrap();
        assert_eq!(x.component(0, 1).to_string(), "-2*q1");
        assert_eq!(x.component(1, 2).to_string(), "-2*q1");
        // the strict reading over-counts −∂h/∂q when k > 1
        let r = hdw_residual(&s, &x, &[0.5, 0.0, 0.0]).unwrap();
        assert!((r.max_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q_components_are_gauge_independent() {
        let s = sys(1, 2, "q1*p1_1^2 + p1_2*q1");
        let free = GaugeSpec::explicit(vec![
            vec![vec![Expr::parse("q1*p1_2").unwrap()], vec![Expr::parse("sin(q1)").unwrap()]],
            vec![vec![Expr::parse("p1_1").unwrap()], vec![Expr::zero()]],
        ]);
        let a = hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap();
        let b = hamiltonian_kvf(&s, &s.complete_gauge(&free).unwrap()).unwrap();
        for alpha in 0..2 {
            assert_eq!(a.component(alpha, 0), b.component(alpha, 0));
        }
        for pt in probe_points(3, 10, 9, (-1.0, 1.0)) {
            assert!(hdw_residual(&s, &a, &pt).unwrap().max_norm <= 1e-10);
            assert!(hdw_residual(&s, &b, &pt).unwrap().max_norm <= 1e-10);
        }
    }

    fn standing_wave(delta: f64, defect: f64) -> SectionGrid {
        let nodes = (1.0 / delta).round() as usize + 1;
        SectionGrid::from_fn(
            vec![Axis::new(0.0, delta, nodes), Axis::new(0.0, delta, nodes)],
            vec!["u".into(), "pt".into(), "px".into()],
            |t| {
                let (tt, x) = (t[0], t[1]);
                let u = (PI * tt).cos() * (PI * x).sin();
                let pt = -PI * (PI * tt).sin() * (PI * x).sin();
                let px = -PI * (PI * tt).cos() * (PI * x).cos();
                vec![u, pt + defect, px]
            },
        )
        .unwrap()
    }

    #[test]
    fn field_equations_on_sections() {
        let s = KSymplecticSystem::vibrating_string(1.0, 1.0);
        let r = hdw_field_equations_residual(&s, &standing_wave(1.0 / 400.0, 0.0)).unwrap();
        assert!(r.max <= 5e-4, "{r:?}");
        let eps = 1e-2;
        let r = hdw_field_equations_residual(&s, &standing_wave(1.0 / 100.0, eps)).unwrap();
        assert!(r.velocity >= eps - 1e-3);

        let constant = sys(1, 2, "3");
        let c = SectionGrid::from_fn(
            vec![Axis::spanning(0.0, 1.0, 5), Axis::spanning(0.0, 1.0, 5)],
            constant.chart().names().to_vec(),
            |_| vec![0.1, 0.2, 0.3],
        )
        .unwrap();
        assert_eq!(hdw_field_equations_residual(&constant, &c).unwrap().max, 0.0);
    }
}
