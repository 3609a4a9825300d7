//! Contactification of exact k-symplectic systems and projection of
//! k-contact Hamiltonian k-vector fields back onto the symplectic factor.
//!
//! Given `(P, θ, h)`, the contactified system lives on `M = P × ℝ^k` with the
//! lifted Hamiltonian `h_M = pr_1^* h`. A solution `X_M` of the k-contact
//! equations whose `(q, p)` components do not depend on `z` pushes forward
//! along `pr_1` to a solution of the k-symplectic equations on `P`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gauge::GaugeSpec;
use crate::geometry::{DarbouxChart, KVectorField};
use crate::kcontact::{hamiltonian_kvf_contact, KContactSystem};
use crate::ksymplectic::{hdw_residual, KSymplecticSystem};
use crate::probe::probe_points;

/// Absolute tolerance for symbolic-then-sampled z-independence.
pub const PROJECTABILITY_TOLERANCE: f64 = 1e-12;
pub const PROJECTABILITY_PROBES: usize = 50;
const PROJECTABILITY_SEED: u64 = 0x7072_6f6a;

/// Default residual tolerance for [`verify_proposition`].
pub const PROPOSITION_TOLERANCE: f64 = 1e-10;

/// A k-symplectic system together with its contactification.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactificationPair {
    source: KSymplecticSystem,
    target: KContactSystem,
}

impl ContactificationPair {
    pub fn source(&self) -> &KSymplecticSystem {
        &self.source
    }

    pub fn target(&self) -> &KContactSystem {
        &self.target
    }

    /// `(q, p) ↦ (q, p, z)`.
    pub fn embed(&self, point: &[f64], z: &[f64]) -> Vec<f64> {
        point.iter().chain(z).copied().collect()
    }

    /// `pr_1: (q, p, z) ↦ (q, p)`.
    pub fn project_point(&self, point: &[f64]) -> Vec<f64> {
        point[self.target.chart().base_indices()].to_vec()
    }

    /// The lift `h_M + γ·z^1`, a Hamiltonian that is not a pull-back.
    pub fn damped_lift(&self, gamma: f64) -> Result<KContactSystem> {
        let z1 = Expr::var(self.target.chart().z_name(0));
        self.target
            .with_hamiltonian(self.target.hamiltonian().clone() + Expr::Const(gamma) * z1)
    }
}

/// Builds `M = P × ℝ^k` with `η^α = dz^α − p_i^α dq^i` and `h_M = pr_1^* h`.
pub fn contactify(sys: &KSymplecticSystem) -> Result<ContactificationPair> {
    let reserved: Vec<String> = sys.parameters().iter().map(|(n, _)| n.to_string()).collect();
    let chart = sys.chart().with_default_z(&reserved)?;
    let target = KContactSystem::new(chart, sys.hamiltonian().clone(), sys.parameters().clone())?;
    Ok(ContactificationPair {
        source: sys.clone(),
        target,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectabilityWitness {
    /// Zero-based field index α.
    pub alpha: usize,
    pub component: String,
    pub z: String,
    pub point: Vec<f64>,
    /// Value of `∂(X_α)^c/∂z^β` at `point`.
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectabilityReport {
    pub projectable: bool,
    pub witness: Option<ProjectabilityWitness>,
}

/// Decides whether the `(q, p)` components of every `X_α` are independent of
/// every `z^β`.
///
/// Each `∂(X_α)^c/∂z^β` is computed symbolically. If it does not simplify to
/// zero it is sampled at seeded points; the field is projectable only if every
/// sample stays within [`PROJECTABILITY_TOLERANCE`].
pub fn is_projectable(x: &KVectorField) -> Result<ProjectabilityReport> {
    let chart = x.chart();
    if !chart.has_z() {
        return Err(Error::InvalidChart("projectability needs a chart with z coordinates".into()));
    }
    let points = probe_points(chart.dim(), PROJECTABILITY_PROBES, PROJECTABILITY_SEED, (-1.0, 1.0));
    for alpha in 0..x.k() {
        for c in chart.base_indices() {
            for beta in 0..chart.k() {
                let z = chart.z_name(beta);
                let d = x.component(alpha, c).differentiate(z);
                if d.is_zero() {
                    continue;
                }
                let probe = VectorFieldProbe { x, expr: &d };
                for point in &points {
                    let value = probe.evaluate(point)?;
                    if !(value.abs() <= PROJECTABILITY_TOLERANCE) {
                        return Ok(ProjectabilityReport {
                            projectable: false,
                            witness: Some(ProjectabilityWitness {
                                alpha,
                                component: chart.name(c).to_string(),
                                z: z.to_string(),
                                point: point.clone(),
                                derivative: value,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(ProjectabilityReport {
        projectable: true,
        witness: None,
    })
}

struct VectorFieldProbe<'a> {
    x: &'a KVectorField,
    expr: &'a Expr,
}

impl VectorFieldProbe<'_> {
    fn evaluate(&self, point: &[f64]) -> Result<f64> {
        self.expr.evaluate(&crate::expr::SliceBinding {
            names: self.x.chart().names(),
            values: point,
            fallback: self.x.parameters(),
        })
    }
}

/// `Tpr_1(X)`: drops the z components. Fails with `NotProjectable` when the
/// remaining components depend on z.
pub fn project(x: &KVectorField) -> Result<KVectorField> {
    let report = is_projectable(x)?;
    if let Some(w) = report.witness {
        return Err(Error::NotProjectable {
            alpha: w.alpha + 1,
            component: w.component,
            z: w.z,
        });
    }
    let chart: DarbouxChart = x.chart().without_z();
    let base = x.chart().base_indices();
    let components = x
        .components()
        .iter()
        .map(|field| field[base.clone()].to_vec())
        .collect();
    KVectorField::new(chart, x.parameters().clone(), components)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResidual {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Outcome of contactify → solve → project → k-symplectic residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropositionReport {
    pub hamiltonian: String,
    pub gauge: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub pass: bool,
    pub probes: Vec<ProbeResidual>,
}

/// Runs the full pipeline on `sys` and evaluates the k-symplectic HDW residual
/// of the projected field at each probe point (source coordinates).
pub fn verify_proposition(
    sys: &KSymplecticSystem,
    gauge: &GaugeSpec,
    probes: &[Vec<f64>],
    tolerance: f64,
) -> Result<PropositionReport> {
    let pair = contactify(sys)?;
    let contact_field = hamiltonian_kvf_contact(pair.target(), gauge)?;
    let projected = project(&contact_field)?;
    let probes = probes
        .iter()
        .map(|point| {
            Ok(ProbeResidual {
                point: point.clone(),
                residual: hdw_residual(sys, &projected, point)?.max_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_residual = probes.iter().fold(0.0_f64, |m, p| m.max(p.residual));
    Ok(PropositionReport {
        hamiltonian: sys.hamiltonian().to_string(),
        gauge: gauge.to_string(),
        tolerance,
        max_residual,
        pass: max_residual <= tolerance,
        probes,
    })
}

/// What happens to the canonical-gauge field of the damped lift `h_M + γ·z^1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeControlReport {
    pub gamma: f64,
    pub hamiltonian: String,
    pub projectability: ProjectabilityReport,
    /// Max k-contact residual of the damped field itself.
    pub contact_residual: f64,
    /// Max k-symplectic residual of its projection against the undamped `h`,
    /// when the projection exists.
    pub projected_symplectic_residual: Option<f64>,
}

pub fn negative_control(sys: &KSymplecticSystem, gamma: f64, probes: &[Vec<f64>]) -> Result<NegativeControlReport> {
    let pair = contactify(sys)?;
    let damped = pair.damped_lift(gamma)?;
    let field = hamiltonian_kvf_contact(&damped, &GaugeSpec::canonical())?;
    let k = sys.chart().k();
    let mut contact_residual = 0.0_f64;
    for point in probes {
        let lifted = pair.embed(point, &vec![0.5; k]);
        contact_residual = contact_residual
            .max(crate::kcontact::contact_hdw_residual(&damped, &field, &lifted)?.max_norm());
    }
    let projectability = is_projectable(&field)?;
    let projected_symplectic_residual = if projectability.projectable {
        let projected = project(&field)?;
        let mut worst = 0.0_f64;
        for point in probes {
            worst = worst.max(hdw_residual(sys, &projected, point)?.max_norm);
        }
        Some(worst)
    } else {
        None
    };
    Ok(NegativeControlReport {
        gamma,
        hamiltonian: damped.hamiltonian().to_string(),
        projectability,
        contact_residual,
        projected_symplectic_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::PointBinding;
    use crate::kcontact::{contact_axiom_check, darboux_contact_forms};
    use crate::ksymplectic::hamiltonian_kvf;

    fn sys(n: usize, k: usize, h: &str) -> KSymplecticSystem {
        KSymplecticSystem::new(
            DarbouxChart::new(n, k, false).unwrap(),
            Expr::parse(h).unwrap(),
            PointBinding::new(),
        )
        .unwrap()
    }

    #[test]
    fn canonical_model_contactifies_to_contact_manifold() {
        let pair = contactify(&sys(1, 2, "0")).unwrap();
        let chart = pair.target().chart();
        assert_eq!(chart.dim(), 5);
        for point in probe_points(5, 20, 4, (-1.0, 1.0)) {
            assert!(contact_axiom_check(&darboux_contact_forms(chart, &point).unwrap()).pass);
        }
        assert!(pair.target().hamiltonian().is_zero());
    }

    #[test]
    fn wave_lift_keeps_hamiltonian_and_adds_z() {
        let s = KSymplecticSystem::vibrating_string(1.0, 1.0);
        let pair = contactify(&s).unwrap();
        assert_eq!(pair.target().chart().names(), ["u", "pt", "px", "z1", "z2"]);
        assert_eq!(pair.target().hamiltonian(), s.hamiltonian());
        assert!(pair.target().hamiltonian().free_variables().iter().all(|v| !v.starts_with('z')));
        assert_eq!(pair.project_point(&pair.embed(&[1.0, 2.0, 3.0], &[4.0, 5.0])), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn projectability_examples() {
        let s = KSymplecticSystem::vibrating_string(1.0, 1.0);
        let pair = contactify(&s).unwrap();
        let x = hamiltonian_kvf_contact(pair.target(), &GaugeSpec::canonical()).unwrap();
        assert!(is_projectable(&x).unwrap().projectable);

        let chart = pair.target().chart().clone();
        let zero = KVectorField::zero(chart.clone(), x.parameters().clone(), 2).unwrap();
        let bad = zero.with_component(0, 0, Expr::parse("u + z1").unwrap()).unwrap();
        let report = is_projectable(&bad).unwrap();
        assert!(!report.projectable);
        let w = report.witness.unwrap();
        assert_eq!((w.alpha, w.component.as_str(), w.z.as_str()), (0, "u", "z1"));
        assert!(matches!(project(&bad), Err(Error::NotProjectable { .. })));
    }

    #[test]
    fn linear_damping_stays_projectable() {
        // The extra momentum term is −γ·p/k, which has no z in it.
        let s = KSymplecticSystem::vibrating_string(1.0, 1.0);
        let probes = probe_points(3, 10, 8, (-1.0, 1.0));
        let r = negative_control(&s, 0.1, &probes).unwrap();
        assert!(r.projectability.projectable);
        assert!(r.contact_residual <= 1e-10);
        let projected = r.projected_symplectic_residual.unwrap();
        assert!(projected > 1e-3, "projection should not solve the undamped equations");
    }

    #[test]
    fn quadratic_z_damping_is_not_projectable() {
        let pair = contactify(&KSymplecticSystem::vibrating_string(1.0, 1.0)).unwrap();
        let damped = pair
            .target()
            .with_hamiltonian(Expr::parse("pt^2/(2*rho) - px^2/(2*tau) + z1^2/20").unwrap())
            .unwrap();
        let x = hamiltonian_kvf_contact(&damped, &GaugeSpec::canonical()).unwrap();
        let r = is_projectable(&x).unwrap();
        assert!(!r.projectable);
        assert_eq!(r.witness.unwrap().z, "z1");
    }

    #[test]
    fn projection_of_zero_and_wave_fields() {
        let pair = contactify(&sys(1, 2, "0")).unwrap();
        let zero = KVectorField::zero(pair.target().chart().clone(), PointBinding::new(), 2).unwrap();
        let p = project(&zero).unwrap();
        assert_eq!(p.chart(), pair.source().chart());
        assert!(p.components().iter().flatten().all(Expr::is_zero));

        let s = KSymplecticSystem::vibrating_string(2.0, 3.0);
        let pair = contactify(&s).unwrap();
        let x = project(&hamiltonian_kvf_contact(pair.target(), &GaugeSpec::canonical()).unwrap()).unwrap();
        assert_eq!(x.component(0, 0).to_string(), "pt/rho");
        assert_eq!(x.component(1, 0).to_string(), "-(px/tau)");
        assert!((1..3).all(|c| x.component(0, c).is_zero() && x.component(1, c).is_zero()));
        assert_eq!(x, hamiltonian_kvf(&s, &GaugeSpec::canonical()).unwrap());
    }

    #[test]
    fn proposition_holds_for_wave_and_zero_systems() {
        let probes = probe_points(3, 50, 1, (-1.0, 1.0));
        let wave = KSymplecticSystem::vibrating_string(1.0, 1.0);
        let r = verify_proposition(&wave, &GaugeSpec::canonical(), &probes, PROPOSITION_TOLERANCE).unwrap();
        assert!(r.pass && r.max_residual <= 1e-10);
        assert_eq!(r.probes.len(), 50);

        let r = verify_proposition(&sys(1, 2, "0"), &GaugeSpec::canonical(), &probes, 1e-10).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn z_dependent_gauge_is_not_projectable() {
        let s = sys(1, 2, "q1*p1_1");
        let pair = contactify(&s).unwrap();
        let gauge = pair
            .target()
            .complete_gauge(&GaugeSpec::explicit(vec![
                vec![vec![Expr::var("z1")], vec![Expr::zero()]],
                vec![vec![Expr::zero()], vec![Expr::zero()]],
            ]))
            .unwrap();
        let probes = probe_points(3, 5, 1, (-1.0, 1.0));
        assert!(matches!(
            verify_proposition(&s, &gauge, &probes, 1e-10),
            Err(Error::NotProjectable { .. })
        ));
    }
}
