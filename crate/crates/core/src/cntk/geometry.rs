use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    OneD,
    TwoD,
}

/// Spatial layout of a single-channel input plus the filter support.
///
/// For `TwoD`, pixel `(a, b)` of an `s × s` image (0-based) is flattened to
/// index `a·s + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConvGeometry {
    kind: GeometryKind,
    p: usize,
    filter_halfwidth: usize,
}

impl ConvGeometry {
    pub fn new(kind: GeometryKind, p: usize, filter_halfwidth: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("geometry needs at least one pixel"));
        }
        if filter_halfwidth != 1 {
            return Err(Error::invalid(format!(
                "only filter half-width 1 (size 3 / 3x3) is supported, got {filter_halfwidth}"
            )));
        }
        if kind == GeometryKind::TwoD {
            let s = isqrt(p);
            if s * s != p {
                return Err(Error::invalid(format!(
                    "2-D geometry needs a perfect-square pixel count, got {p}"
                )));
            }
        }
        Ok(ConvGeometry {
            kind,
            p,
            filter_halfwidth,
        })
    }

    pub fn one_d(p: usize) -> Result<Self> {
        Self::new(GeometryKind::OneD, p, 1)
    }

    pub fn two_d(side: usize) -> Result<Self> {
        Self::new(GeometryKind::TwoD, side * side, 1)
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    /// Total pixel count.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn filter_halfwidth(&self) -> usize {
        self.filter_halfwidth
    }

    /// Extent along one spatial axis: `p` in 1-D, `s` in 2-D.
    pub fn side(&self) -> usize {
        match self.kind {
            GeometryKind::OneD => self.p,
            GeometryKind::TwoD => isqrt(self.p),
        }
    }

    /// Number of shift basis matrices, `(2h + 1)^dim`.
    pub fn basis_len(&self) -> usize {
        let w = 2 * self.filter_halfwidth + 1;
        match self.kind {
            GeometryKind::OneD => w,
            GeometryKind::TwoD => w * w,
        }
    }
}

impl fmt::Display for ConvGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GeometryKind::OneD => write!(f, "1d(p={})", self.p),
            GeometryKind::TwoD => write!(f, "2d({}x{})", self.side(), self.side()),
        }
    }
}

fn isqrt(p: usize) -> usize {
    let mut s = (p as f64).sqrt() as usize;
    while s * s > p {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= p {
        s += 1;
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Padding {
    Zero,
    Circular,
}

impl FromStr for Padding {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Padding::Zero),
            "circular" => Ok(Padding::Circular),
            other => Err(format!(
                "unknown padding `{other}` (expected zero | circular)"
            )),
        }
    }
}

impl fmt::Display for Padding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Padding::Zero => "zero",
            Padding::Circular => "circular",
        })
    }
}

/// Read-out architecture; fixes the initial transform `Θ_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Fully connected layer over all final-layer values: `Θ_0 = I`.
    Flattening,
    /// Global average pooling before the read-out: `Θ_0 = J` (all ones).
    Pooling,
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "flattening" => Ok(Architecture::Flattening),
            "pooling" => Ok(Architecture::Pooling),
            other => Err(format!(
                "unknown architecture `{other}` (expected flattening | pooling)"
            )),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Flattening => "flattening",
            Architecture::Pooling => "pooling",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Depth {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Infinite => f.write_str("inf"),
        }
    }
}
