//! Parameter-grid scans and curvature integration over the (θ, φ) chart.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{curvature_commutator, geometry_report, GeometryReport};
use crate::models::{DiffScheme, ParamPoint, ParametricModel};
use crate::sld::SldSet;
use crate::state::RANK_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    Node,
    #[default]
    Mid,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(Self::Node),
            "mid" => Ok(Self::Mid),
            _ => Err(Error::Parse(format!("sampling must be node or mid, got {s:?}"))),
        }
    }
}

impl Axis {
    /// Sample positions: nodes lo + i·(hi−lo)/(n−1), or cell midpoints lo + (i+½)·(hi−lo)/n.
    pub fn points(&self, sampling: Sampling) -> Vec<f64> {
        let span = self.hi - self.lo;
        (0..self.n)
            .map(|i| match sampling {
                Sampling::Node if self.n == 1 => self.lo,
                Sampling::Node => self.lo + span * i as f64 / (self.n - 1) as f64,
                Sampling::Mid => self.lo + span * (i as f64 + 0.5) / self.n as f64,
            })
            .collect()
    }
}

/// A two-axis grid, written `theta=lo:hi:n,phi=lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub theta: Axis,
    pub phi: Axis,
}

fn parse_axis(text: &str) -> Result<(String, Axis)> {
    let (name, range) = text.split_once('=').ok_or_else(|| Error::Parse(format!("grid axis {text:?} lacks '='")))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid axis {text:?} must be name=lo:hi:n")));
    }
    let number = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("bad number {s:?} in grid")))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("non-finite bound {s:?} in grid")));
        }
        Ok(v)
    };
    let n: usize = parts[2].trim().parse().map_err(|_| Error::Parse(format!("bad count {:?} in grid", parts[2])))?;
    if n == 0 {
        return Err(Error::Parse(format!("grid axis {:?} has no points", name.trim())));
    }
    Ok((name.trim().to_string(), Axis { lo: number(parts[0])?, hi: number(parts[1])?, n }))
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut theta = None;
        let mut phi = None;
        for part in s.split(',') {
            let (name, axis) = parse_axis(part)?;
            let slot = match name.as_str() {
                "theta" => &mut theta,
                "phi" => &mut phi,
                _ => return Err(Error::Parse(format!("unknown grid axis {name:?}"))),
            };
            if slot.replace(axis).is_some() {
                return Err(Error::Parse(format!("grid axis {name:?} given twice")));
            }
        }
        match (theta, phi) {
            (Some(theta), Some(phi)) => Ok(Self { theta, phi }),
            _ => Err(Error::Parse("grid needs both theta and phi axes".into())),
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.theta.n * self.phi.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order: θ outer, φ inner.
    pub fn points(&self, sampling: Sampling) -> Vec<(f64, f64)> {
        let phis = self.phi.points(sampling);
        self.theta.points(sampling).into_iter().flat_map(|t| phis.iter().map(move |&p| (t, p))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Curvature,
    Qfi,
    QgtRe,
    QgtIm,
}

/// One entry of a report table, e.g. `curvature[0][1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantity {
    pub table: Table,
    pub row: usize,
    pub col: usize,
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("quantity {s:?} must look like curvature[0][1]"));
        let open = s.find('[').ok_or_else(bad)?;
        let table = match &s[..open] {
            "curvature" => Table::Curvature,
            "qfi" => Table::Qfi,
            "qgt_re" => Table::QgtRe,
            "qgt_im" => Table::QgtIm,
            other => return Err(Error::Parse(format!("unknown quantity table {other:?}"))),
        };
        let rest = s[open..].strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let (row, col) = rest.split_once("][").ok_or_else(bad)?;
        Ok(Self { table, row: row.parse().map_err(|_| bad())?, col: col.parse().map_err(|_| bad())? })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.table {
            Table::Curvature => "curvature",
            Table::Qfi => "qfi",
            Table::QgtRe => "qgt_re",
            Table::QgtIm => "qgt_im",
        };
        write!(f, "{name}[{}][{}]", self.row, self.col)
    }
}

impl Quantity {
    pub fn pick(&self, report: &GeometryReport) -> f64 {
        let (r, c) = (self.row, self.col);
        match self.table {
            Table::Curvature => report.curvature[(r, c)],
            Table::Qfi => report.qfi[(r, c)],
            Table::QgtRe => report.qgt[(r, c)].re,
            Table::QgtIm => report.qgt[(r, c)].im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

fn require_two_parameters(model: &dyn ParametricModel) -> Result<()> {
    if model.param_count() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: model.param_count() });
    }
    Ok(())
}

/// Evaluates `quantity` at every grid point. Rows come back in grid order
/// whatever the evaluation order.
pub fn scan(
    model: &dyn ParametricModel,
    grid: &Grid,
    sampling: Sampling,
    quantity: Quantity,
    scheme: &DiffScheme,
) -> Result<Vec<ScanRow>> {
    require_two_parameters(model)?;
    if quantity.row >= 2 || quantity.col >= 2 {
        return Err(Error::OutOfRange(format!("{quantity} on a 2-parameter model")));
    }
    if grid.is_empty() {
        return Err(Error::Parse("grid has no points".into()));
    }
    grid.points(sampling)
        .into_par_iter()
        .map(|(theta, phi)| {
            let report = geometry_report(model, &ParamPoint::new(vec![theta, phi])?, scheme)?;
            Ok(ScanRow { theta, phi, value: quantity.pick(&report) })
        })
        .collect()
}

/// Writes `theta,phi,value` rows with 17 significant digits.
pub fn write_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,phi,value")?;
    for r in rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", r.theta, r.phi, r.value)?;
    }
    Ok(())
}

/// (1/2π)·Σ Ω_{θφ}·ΔθΔφ over an n×n midpoint grid of [0, π]×[0, 2π).
pub fn chern(model: &dyn ParametricModel, resolution: usize, scheme: &DiffScheme) -> Result<f64> {
    require_two_parameters(model)?;
    if resolution == 0 {
        return Err(Error::OutOfRange("resolution must be positive".into()));
    }
    let grid = Grid { theta: Axis { lo: 0.0, hi: PI, n: resolution }, phi: Axis { lo: 0.0, hi: TAU, n: resolution } };
    let values: Vec<f64> = grid
        .points(Sampling::Mid)
        .into_par_iter()
        .map(|(theta, phi)| {
            let slds = SldSet::from_model(model, &ParamPoint::new(vec![theta, phi])?, scheme, RANK_TOL)?;
            let ops = slds.operators();
            curvature_commutator(slds.state(), &ops[0], &ops[1])
        })
        .collect::<Result<_>>()?;
    let cell = (PI / resolution as f64) * (TAU / resolution as f64);
    Ok(values.iter().sum::<f64>() * cell / TAU)
}
