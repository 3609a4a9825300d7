//! TOML system files.
//!
//! ```toml
//! kind = "symplectic"          # or "contact"
//! n = 1
//! k = 2
//! hamiltonian = "pt^2/(2*rho) - px^2/(2*tau)"
//!
//! [coordinates]                # optional; defaults q1.., p1_1.., z1..
//! q = ["u"]
//! p = [["pt", "px"]]           # p[i][alpha]
//! z = ["z1", "z2"]             # contact only, optional
//!
//! [parameters]
//! rho = 1.0
//! tau = 1.0
//!
//! [gauge]                      # optional; canonical when absent
//! convention = "summed"        # or "per-component"
//! momentum = [[["0"], ["0"]], [["0"], ["0"]]]   # [alpha][beta][i]
//! z = [["0", "0"], ["0", "0"]]                 # [alpha][beta], contact only
//! complete = false             # fill the last diagonal entries from the trace
//!
//! [probes]                     # optional
//! range = [-1.0, 1.0]
//! ```

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::expr::{Expr, PointBinding};
use crate::gauge::{GaugeSpec, TraceConvention};
use crate::geometry::DarbouxChart;
use crate::kcontact::KContactSystem;
use crate::ksymplectic::KSymplecticSystem;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: RawKind,
    n: usize,
    k: usize,
    hamiltonian: Spanned<String>,
    coordinates: Option<RawCoordinates>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    gauge: Option<RawGauge>,
    probes: Option<RawProbes>,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    #[serde(alias = "k-symplectic")]
    Symplectic,
    #[serde(alias = "k-contact")]
    Contact,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoordinates {
    q: Vec<String>,
    p: Vec<Vec<String>>,
    z: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGauge {
    convention: Option<String>,
    momentum: Option<Vec<Vec<Vec<Spanned<String>>>>>,
    z: Option<Vec<Vec<Spanned<String>>>>,
    #[serde(default)]
    complete: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGaugeFile {
    gauge: RawGauge,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbes {
    range: Option<[f64; 2]>,
}

/// A parsed system of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Symplectic(KSymplecticSystem),
    Contact(KContactSystem),
}

impl System {
    pub fn chart(&self) -> &DarbouxChart {
        match self {
            System::Symplectic(s) => s.chart(),
            System::Contact(s) => s.chart(),
        }
    }

    pub fn hamiltonian(&self) -> &Expr {
        match self {
            System::Symplectic(s) => s.hamiltonian(),
            System::Contact(s) => s.hamiltonian(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub system: System,
    pub gauge: GaugeSpec,
    pub probe_range: (f64, f64),
}

impl SystemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&source)
    }

    pub fn parse(source: &str) -> Result<Self> {
        Self::parse_with_gauge(source, None)
    }

    /// Parses a system file, taking the `[gauge]` table from `gauge_source`
    /// instead when one is given.
    pub fn parse_with_gauge(source: &str, gauge_source: Option<&str>) -> Result<Self> {
        let raw: RawSystem = from_toml(source)?;
        let (n, k) = (raw.n, raw.k);
        if n == 0 || k == 0 {
            return Err(Error::InvalidConfig(format!("n and k must be positive, got n = {n}, k = {k}")));
        }
        let contact = raw.kind == RawKind::Contact;
        let chart = match raw.coordinates {
            None => DarbouxChart::new(n, k, contact)?,
            Some(c) => {
                if c.q.len() != n {
                    return Err(Error::InvalidConfig(format!(
                        "coordinates.q declares {} names for n = {n}",
                        c.q.len()
                    )));
                }
                if c.p.len() != n {
                    return Err(Error::InvalidConfig(format!(
                        "coordinates.p declares {} momentum rows for n = {n}",
                        c.p.len()
                    )));
                }
                if let Some((i, row)) = c.p.iter().enumerate().find(|(_, row)| row.len() != k) {
                    return Err(Error::InvalidConfig(format!(
                        "coordinates.p[{i}] declares {} momenta for k = {k}",
                        row.len()
                    )));
                }
                if c.z.is_some() && !contact {
                    return Err(Error::InvalidConfig("coordinates.z is only allowed for contact systems".into()));
                }
                if let Some(z) = c.z.as_ref().filter(|z| z.len() != k) {
                    return Err(Error::InvalidConfig(format!(
                        "coordinates.z declares {} names for k = {k}",
                        z.len()
                    )));
                }
                let chart = DarbouxChart::with_names(c.q, c.p, c.z.clone())?;
                if contact && c.z.is_none() {
                    let reserved: Vec<String> = raw.parameters.keys().cloned().collect();
                    chart.with_default_z(&reserved)?
                } else {
                    chart
                }
            }
        };
        let parameters: PointBinding = raw.parameters.into_iter().collect();
        let hamiltonian = expression(source, &raw.hamiltonian)?;

        let (mut gauge, complete) = match gauge_source {
            Some(g) => build_gauge(g, from_toml::<RawGaugeFile>(g)?.gauge)?,
            None => match raw.gauge {
                Some(g) => build_gauge(source, g)?,
                None => (GaugeSpec::canonical(), false),
            },
        };

        let system = if contact {
            let sys = KContactSystem::new(chart, hamiltonian, parameters)?;
            if complete {
                gauge = sys.complete_gauge(&gauge)?;
            }
            System::Contact(sys)
        } else {
            let sys = KSymplecticSystem::new(chart, hamiltonian, parameters)?;
            if complete {
                gauge = sys.complete_gauge(&gauge)?;
            }
            System::Symplectic(sys)
        };

        let probe_range = match raw.probes.and_then(|p| p.range) {
            Some([lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => (lo, hi),
            Some([lo, hi]) => return Err(Error::InvalidConfig(format!("probe range [{lo}, {hi}] is empty"))),
            None => (-1.0, 1.0),
        };
        Ok(Self {
            system,
            gauge,
            probe_range,
        })
    }
}

fn from_toml<T: serde::de::DeserializeOwned>(source: &str) -> Result<T> {
    toml::from_str(source).map_err(|e| match e.span() {
        Some(span) => syntax(source, span.start, e.message().to_string()),
        None => Error::InvalidConfig(e.message().to_string()),
    })
}

fn build_gauge(source: &str, g: RawGauge) -> Result<(GaugeSpec, bool)> {
    let mut gauge = GaugeSpec::canonical();
    if let Some(c) = g.convention {
        gauge.convention = match c.to_ascii_lowercase().replace('_', "-").as_str() {
            "summed" => TraceConvention::Summed,
            "per-component" => TraceConvention::PerComponent,
            other => return Err(Error::InvalidConfig(format!("unknown trace convention `{other}`"))),
        };
    }
    if let Some(m) = g.momentum {
        gauge.momentum = Some(
            m.iter()
                .map(|a| {
                    a.iter()
                        .map(|b| b.iter().map(|e| expression(source, e)).collect())
                        .collect()
                })
                .collect::<Result<_>>()?,
        );
    }
    if let Some(z) = g.z {
        gauge.z = Some(
            z.iter()
                .map(|a| a.iter().map(|e| expression(source, e)).collect())
                .collect::<Result<_>>()?,
        );
    }
    Ok((gauge, g.complete))
}

fn expression(source: &str, s: &Spanned<String>) -> Result<Expr> {
    Expr::parse(s.get_ref()).map_err(|e| match e {
        Error::Parse { column, message } => {
            let Range { start, .. } = s.span();
            // `start` points at the opening quote.
            syntax(source, start + column, message)
        }
        other => other,
    })
}

/// 1-based line and column of a byte offset.
fn syntax(source: &str, offset: usize, message: String) -> Error {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Error::Syntax { line, column, message }
}
