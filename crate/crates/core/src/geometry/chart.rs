use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::is_identifier;

/// Role of a chart coordinate. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// Base coordinate q^i.
    Q(usize),
    /// Momentum p_i^α.
    P(usize, usize),
    /// Contact coordinate z^α.
    Z(usize),
}

/// Darboux coordinates `(q^i, p_i^α[, z^α])`.
///
/// Coordinates are ordered as all `q`, then all `p` grouped by `i` then `α`,
/// then all `z`. The momentum directions span the polarisation.
#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxChart {
    n: usize,
    k: usize,
    has_z: bool,
    names: Vec<String>,
}

impl DarbouxChart {
    /// Chart with default names `q1.., p1_1.., z1..` (`p{i}_{α}` is p_i^α).
    pub fn new(n: usize, k: usize, has_z: bool) -> Result<Self> {
        let q = (1..=n).map(|i| format!("q{i}")).collect();
        let p = (1..=n)
            .map(|i| (1..=k).map(|a| format!("p{i}_{a}")).collect())
            .collect();
        let z = has_z.then(|| (1..=k).map(|a| format!("z{a}")).collect());
        Self::with_names(q, p, z)
    }

    /// Chart with explicit names; `p[i][α]` names p_i^α.
    pub fn with_names(q: Vec<String>, p: Vec<Vec<String>>, z: Option<Vec<String>>) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::InvalidChart("need at least one q coordinate".into()));
        }
        if p.len() != n {
            return Err(Error::InvalidChart(format!(
                "expected {n} momentum blocks (one per q coordinate), found {}",
                p.len()
            )));
        }
        let k = p[0].len();
        if k == 0 {
            return Err(Error::InvalidChart("need at least one momentum per block".into()));
        }
        if let Some(i) = p.iter().position(|block| block.len() != k) {
            return Err(Error::InvalidChart(format!(
                "momentum block {} has {} entries, expected {k}",
                i + 1,
                p[i].len()
            )));
        }
        if let Some(z) = &z {
            if z.len() != k {
                return Err(Error::InvalidChart(format!(
                    "expected {k} z coordinates, found {}",
                    z.len()
                )));
            }
        }
        let has_z = z.is_some();
        let names: Vec<String> = q
            .into_iter()
            .chain(p.into_iter().flatten())
            .chain(z.into_iter().flatten())
            .collect();
        let mut seen = BTreeSet::new();
        for name in &names {
            if !is_identifier(name) {
                return Err(Error::InvalidChart(format!("invalid coordinate name `{name}`")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidChart(format!("duplicate coordinate name `{name}`")));
            }
        }
        Ok(Self { n, k, has_z, names })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn has_z(&self) -> bool {
        self.has_z
    }

    pub fn dim(&self) -> usize {
        self.n + self.n * self.k + if self.has_z { self.k } else { 0 }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn q(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        i
    }

    pub fn p(&self, i: usize, alpha: usize) -> usize {
        debug_assert!(i < self.n && alpha < self.k);
        self.n + i * self.k + alpha
    }

    /// Index of z^α. Panics if the chart has no z coordinates.
    pub fn z(&self, alpha: usize) -> usize {
        assert!(self.has_z, "chart has no z coordinates");
        debug_assert!(alpha < self.k);
        self.n + self.n * self.k + alpha
    }

    pub fn q_name(&self, i: usize) -> &str {
        &self.names[self.q(i)]
    }

    pub fn p_name(&self, i: usize, alpha: usize) -> &str {
        &self.names[self.p(i, alpha)]
    }

    pub fn z_name(&self, alpha: usize) -> &str {
        &self.names[self.z(alpha)]
    }

    pub fn coordinate(&self, index: usize) -> Coordinate {
        assert!(index < self.dim());
        let np = self.n * self.k;
        if index < self.n {
            Coordinate::Q(index)
        } else if index < self.n + np {
            let j = index - self.n;
            Coordinate::P(j / self.k, j % self.k)
        } else {
            Coordinate::Z(index - self.n - np)
        }
    }

    /// Indices of the `(q, p)` coordinates, i.e. everything except `z`.
    pub fn base_indices(&self) -> std::ops::Range<usize> {
        0..self.n + self.n * self.k
    }

    /// Same chart with `z^α` coordinates appended.
    pub fn with_z(&self, z_names: Vec<String>) -> Result<Self> {
        if self.has_z {
            return Err(Error::InvalidChart("chart already has z coordinates".into()));
        }
        let (q, p) = self.qp_names();
        Self::with_names(q, p, Some(z_names))
    }

    /// Appends `z^α` with default names `z1..zk`, priming them until they do
    /// not collide with existing coordinates or `reserved`.
    pub fn with_default_z(&self, reserved: &[String]) -> Result<Self> {
        let z = (1..=self.k)
            .map(|a| {
                let mut name = format!("z{a}");
                while self.index_of(&name).is_some() || reserved.contains(&name) {
                    name.push('_');
                }
                name
            })
            .collect();
        self.with_z(z)
    }

    /// The chart with `z` coordinates removed.
    pub fn without_z(&self) -> Self {
        let (q, p) = self.qp_names();
        Self::with_names(q, p, None).expect("sub-chart of a valid chart is valid")
    }

    fn qp_names(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let q = (0..self.n).map(|i| self.q_name(i).to_string()).collect();
        let p = (0..self.n)
            .map(|i| (0..self.k).map(|a| self.p_name(i, a).to_string()).collect())
            .collect();
        (q, p)
    }
}

impl fmt::Display for DarbouxChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.names.join(", "))
    }
}
