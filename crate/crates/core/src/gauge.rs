//! Free components of Hamiltonian k-vector fields.
//!
//! The De Donder–Weyl equations fix the `q`-components of a Hamiltonian
//! k-vector field but only constrain the traces of its momentum (and, in the
//! contact case, `z`) components. A [`GaugeSpec`] supplies those free
//! components, either explicitly or through the canonical choice that splits
//! each trace equally over the diagonal and sets everything else to zero.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// How the diagonal momentum condition is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceConvention {
    /// `Σ_α (X_α)^α_i` equals the required value.
    #[default]
    Summed,
    /// Every diagonal entry `(X_α)^α_i` equals the required value on its own.
    PerComponent,
}

/// Free components of a Hamiltonian k-vector field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaugeSpec {
    /// `momentum[α][β][i]` is `(X_α)^{p_i^β}`; `None` selects the canonical split.
    pub momentum: Option<Vec<Vec<Vec<Expr>>>>,
    /// `z[α][β]` is `(X_α)^{z^β}` (contact systems only); `None` is canonical.
    pub z: Option<Vec<Vec<Expr>>>,
    pub convention: TraceConvention,
}

impl GaugeSpec {
    pub fn canonical() -> Self {
        Self::default()
    }

    pub fn explicit(momentum: Vec<Vec<Vec<Expr>>>) -> Self {
        Self {
            momentum: Some(momentum),
            ..Self::default()
        }
    }

    pub fn with_z(mut self, z: Vec<Vec<Expr>>) -> Self {
        self.z = Some(z);
        self
    }

    pub fn with_convention(mut self, convention: TraceConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn is_canonical(&self) -> bool {
        self.momentum.is_none() && self.z.is_none()
    }

    pub(crate) fn check_shapes(&self, n: usize, k: usize, allow_z: bool) -> Result<()> {
        if let Some(m) = &self.momentum {
            let ok = m.len() == k
                && m.iter()
                    .all(|row| row.len() == k && row.iter().all(|col| col.len() == n));
            if !ok {
                return Err(Error::InvalidGauge(format!(
                    "momentum table must be indexed [alpha][beta][i] with shape {k}x{k}x{n}"
                )));
            }
        }
        if let Some(z) = &self.z {
            if !allow_z {
                return Err(Error::InvalidGauge(
                    "z components given for a system without z coordinates".into(),
                ));
            }
            if z.len() != k || z.iter().any(|row| row.len() != k) {
                return Err(Error::InvalidGauge(format!(
                    "z table must be indexed [alpha][beta] with shape {k}x{k}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn all_expressions(&self) -> impl Iterator<Item = &Expr> {
        self.momentum
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .chain(self.z.iter().flatten().flatten())
    }
}

/// Diagonal assignment for the canonical gauge given the required trace.
pub(crate) fn canonical_diagonal(trace: &Expr, k: usize, convention: TraceConvention) -> Expr {
    match convention {
        TraceConvention::Summed if k > 1 => (Expr::Const(1.0 / k as f64) * trace.clone()).simplify(),
        _ => trace.simplify(),
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let convention = match self.convention {
            TraceConvention::Summed => "summed",
            TraceConvention::PerComponent => "per-component",
        };
        match (&self.momentum, &self.z) {
            (None, None) => write!(f, "canonical ({convention} trace)"),
            (Some(m), z) => {
                write!(f, "explicit ({convention} trace): momentum [")?;
                for (a, row) in m.iter().enumerate() {
                    for (b, col) in row.iter().enumerate() {
                        for (i, e) in col.iter().enumerate() {
                            if a + b + i > 0 {
                                f.write_str("; ")?;
                            }
                            write!(f, "X{}[p{}_{}] = {e}", a + 1, i + 1, b + 1)?;
                        }
                    }
                }
                f.write_str("]")?;
                if z.is_some() {
                    f.write_str(", explicit z")?;
                }
                Ok(())
            }
            (None, Some(_)) => write!(f, "canonical momentum, explicit z ({convention} trace)"),
        }
    }
}
