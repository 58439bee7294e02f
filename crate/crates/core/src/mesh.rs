//! Layer-adapted tensor-product meshes on the unit square.
//!
//! Three families are provided. All of them refine towards the exponential
//! layer at `x = 1` and the two characteristic layers at `y = 0` and `y = 1`:
//!
//! - [`MeshFamily::Shishkin`]: piecewise uniform with transition points
//!   `1 - tau1` in `x` and `tau2`, `1 - tau2` in `y`.
//! - [`MeshFamily::BakhvalovShishkin`] and [`MeshFamily::Bakhvalov`]: the
//!   coarse parts are uniform, the fine parts are graded by a logarithmic
//!   mesh-generating function. The Bakhvalov mesh moves its transition
//!   points to `ln(1/eps)` scaling (see [`transition_params`]).
//!
//! Every node is computed in closed form from its index.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    Shishkin,
    BakhvalovShishkin,
    Bakhvalov,
}

impl MeshFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshFamily::Shishkin => "shishkin",
            MeshFamily::BakhvalovShishkin => "bs",
            MeshFamily::Bakhvalov => "bakhvalov",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shishkin" | "s" => Ok(MeshFamily::Shishkin),
            "bs" | "bakhvalov-shishkin" => Ok(MeshFamily::BakhvalovShishkin),
            "bakhvalov" | "b" => Ok(MeshFamily::Bakhvalov),
            other => Err(Error::Parse(format!("unknown mesh family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshParams {
    pub epsilon: f64,
    /// Number of elements in each coordinate direction.
    pub n: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub family: MeshFamily,
}

impl MeshParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::invalid(format!("N must be at least 4, got {}", self.n)));
        }
        if self.n % 4 != 0 {
            return Err(Error::invalid(format!("N must be divisible by 4, got {}", self.n)));
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("delta", self.delta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Transition parameters `(tau1, tau2)`:
/// `tau1 = min(1/2, sigma*eps/alpha * L1)`, `tau2 = min(1/4, sigma*sqrt(eps)/delta * L2)`
/// with `L1 = L2 = ln N` for the Shishkin and Bakhvalov-Shishkin meshes and
/// `L1 = ln(1/eps)`, `L2 = ln(1/sqrt(eps))` for the Bakhvalov mesh, where the
/// graded part then ends exactly at the transition point.
pub fn transition_params(p: &MeshParams) -> Result<(f64, f64)> {
    let (raw1, raw2) = raw_transition(p)?;
    Ok((raw1.min(0.5), raw2.min(0.25)))
}

/// Unclamped transition parameters.
fn raw_transition(p: &MeshParams) -> Result<(f64, f64)> {
    p.validate()?;
    let (l1, l2) = match p.family {
        MeshFamily::Shishkin | MeshFamily::BakhvalovShishkin => {
            let ln_n = (p.n as f64).ln();
            (ln_n, ln_n)
        }
        MeshFamily::Bakhvalov => {
            if p.epsilon >= 1.0 {
                return Err(Error::invalid(format!(
                    "Bakhvalov mesh requires epsilon < 1, got {}",
                    p.epsilon
                )));
            }
            let l = -p.epsilon.ln();
            (l, 0.5 * l)
        }
    };
    Ok((p.sigma * p.epsilon / p.alpha * l1, p.sigma * p.epsilon.sqrt() / p.delta * l2))
}

/// Subdomain of an element relative to the layer regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Coarse in both directions.
    Omega11,
    /// Characteristic layers at `y = 0` and `y = 1`.
    Omega12,
    /// Exponential layer at `x = 1`.
    Omega21,
    /// Corner layers.
    Omega22,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Omega11, Region::Omega12, Region::Omega21, Region::Omega22];

    pub fn index(self) -> usize {
        match self {
            Region::Omega11 => 0,
            Region::Omega12 => 1,
            Region::Omega21 => 2,
            Region::Omega22 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Omega11 => "omega11",
            Region::Omega12 => "omega12",
            Region::Omega21 => "omega21",
            Region::Omega22 => "omega22",
        }
    }

    /// True in the exponential and corner layer regions.
    pub fn in_exponential_layer(self) -> bool {
        matches!(self, Region::Omega21 | Region::Omega22)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    pub x_nodes: Vec<f64>,
    pub y_nodes: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub family: MeshFamily,
}

impl TensorMesh {
    /// Elements per direction.
    pub fn n(&self) -> usize {
        self.x_nodes.len() - 1
    }

    pub fn hx(&self, ix: usize) -> f64 {
        self.x_nodes[ix + 1] - self.x_nodes[ix]
    }

    pub fn hy(&self, jy: usize) -> f64 {
        self.y_nodes[jy + 1] - self.y_nodes[jy]
    }

    /// Region of element `(ix, jy)` (zero-based), covering
    /// `(x_ix, x_{ix+1}) x (y_jy, y_{jy+1})`.
    pub fn classify_element(&self, ix: usize, jy: usize) -> Result<Region> {
        let n = self.n();
        if ix >= n || jy >= n {
            return Err(Error::OutOfRange(format!("element ({ix}, {jy}) on a {n}x{n} mesh")));
        }
        let in_x_layer = self.x_nodes[ix] >= 1.0 - self.tau1;
        let in_y_layer = self.y_nodes[jy + 1] <= self.tau2 || self.y_nodes[jy] >= 1.0 - self.tau2;
        Ok(match (in_x_layer, in_y_layer) {
            (false, false) => Region::Omega11,
            (false, true) => Region::Omega12,
            (true, false) => Region::Omega21,
            (true, true) => Region::Omega22,
        })
    }

    /// Index of the element column containing `x`; points on an interior node
    /// belong to the element on their left.
    pub fn locate_x(&self, x: f64) -> usize {
        locate(&self.x_nodes, x)
    }

    pub fn locate_y(&self, y: f64) -> usize {
        locate(&self.y_nodes, y)
    }

    /// Two-line text dump: `x: ...` and `y: ...` with 17 significant digits.
    pub fn dump(&self) -> String {
        let line = |v: &[f64]| v.iter().map(|t| format!("{t:.16e}")).collect::<Vec<_>>().join(" ");
        format!("x: {}\ny: {}\n", line(&self.x_nodes), line(&self.y_nodes))
    }

    /// Parses the output of [`TensorMesh::dump`] back into node vectors.
    pub fn parse_dump(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut x = None;
        let mut y = None;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("missing `:` in `{line}`")))?;
            let values = rest
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            match key.trim() {
                "x" => x = Some(values),
                "y" => y = Some(values),
                other => return Err(Error::Parse(format!("unexpected key `{other}`"))),
            }
        }
        match (x, y) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::Parse("mesh dump needs both `x:` and `y:` lines".into())),
        }
    }
}

fn locate(nodes: &[f64], t: f64) -> usize {
    let n = nodes.len() - 1;
    // first node >= t, minus one
    let idx = nodes.partition_point(|&v| v < t);
    idx.saturating_sub(1).min(n - 1)
}

pub fn build_mesh(p: &MeshParams) -> Result<TensorMesh> {
    let (raw1, raw2) = raw_transition(p)?;
    let (tau1, tau2) = (raw1.min(0.5), raw2.min(0.25));
    let n = p.n;
    let nf = n as f64;
    let x_saturated = raw1 > 0.5;
    let y_saturated = raw2 > 0.25;

    let x_nodes: Vec<f64> = (0..=n)
        .map(|i| {
            if 2 * i <= n {
                (1.0 - tau1) * ((2 * i) as f64 / nf)
            } else if i == n {
                1.0
            } else {
                let t = (n - i) as f64 / nf;
                match (p.family, x_saturated) {
                    (MeshFamily::Shishkin, _) | (_, true) => 1.0 - tau1 * (2.0 * t),
                    (family, false) => {
                        let c = match family {
                            MeshFamily::BakhvalovShishkin => 1.0 / nf,
                            _ => p.epsilon,
                        };
                        1.0 - p.sigma * p.epsilon / p.alpha * grading(2.0 * t, c)
                    }
                }
            }
        })
        .collect();

    let sqrt_eps = p.epsilon.sqrt();
    let fine_y = |j: usize| -> f64 {
        // distance from the nearest boundary for a fine-part index j <= N/4
        if j == 0 {
            return 0.0;
        }
        let s = (4 * j) as f64 / nf;
        match (p.family, y_saturated) {
            (MeshFamily::Shishkin, _) | (_, true) => tau2 * s,
            (family, false) => {
                let c = match family {
                    MeshFamily::BakhvalovShishkin => 1.0 / nf,
                    _ => sqrt_eps,
                };
                p.sigma * sqrt_eps / p.delta * grading(s, c)
            }
        }
    };
    let y_nodes: Vec<f64> = (0..=n)
        .map(|j| {
            if 4 * j <= n {
                fine_y(j)
            } else if 4 * j <= 3 * n {
                if 2 * j <= n {
                    tau2 + (1.0 - 2.0 * tau2) * ((4 * j - n) as f64 / (2.0 * nf))
                } else {
                    1.0 - (tau2 + (1.0 - 2.0 * tau2) * ((4 * (n - j) - n) as f64 / (2.0 * nf)))
                }
            } else {
                1.0 - fine_y(n - j)
            }
        })
        .collect();

    check_monotone('x', &x_nodes)?;
    check_monotone('y', &y_nodes)?;
    Ok(TensorMesh {
        x_nodes,
        y_nodes,
        tau1,
        tau2,
        family: p.family,
    })
}

/// `-ln(1 - (1 - c) s)` for `s` in `[0, 1]` and small `c > 0`.
///
/// The argument is rewritten as `(1 - s) + c s` near `s = 1` and passed to
/// `ln_1p` near `s = 0`, so neither end loses digits.
fn grading(s: f64, c: f64) -> f64 {
    let z = (1.0 - c) * s;
    if z < 0.5 {
        -(-z).ln_1p()
    } else {
        -((1.0 - s) + c * s).ln()
    }
}

fn check_monotone(axis: char, nodes: &[f64]) -> Result<()> {
    for (index, w) in nodes.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::NonMonotoneMesh {
                axis,
                index,
                left: w[0],
                right: w[1],
            });
        }
    }
    Ok(())
}
