//! Error norms of a discrete solution against the exact one.

use crate::assembly::{PenaltyParams, SolutionTriple};
use crate::basis::DgSpace;
use crate::error::{Error, Result};
use crate::mesh::{MeshFamily, Region};
use crate::norms::{element_norm_parts, region_parts, Difference, ExactField, NormParts};
use crate::problem::{Coefficients, ExactSolution};
use crate::projection::project_solution;

/// Errors restricted to one mesh region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionErrors {
    pub region: Region,
    pub l2: f64,
    pub sc: f64,
    pub energy: f64,
}

/// Error norms of one run.
///
/// * `l2`: weighted norm of `w - W`;
/// * `sc`: energy norm of `Pi w - W` (supercloseness);
/// * `energy`: energy norm of `w - W`;
/// * `u_l2`: plain `||u - U||`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub family: MeshFamily,
    pub k: usize,
    pub n: usize,
    pub epsilon: f64,
    pub l2: f64,
    pub sc: f64,
    pub energy: f64,
    pub u_l2: f64,
    pub regions: [RegionErrors; 4],
}

pub fn compute_errors<C, E>(
    space: &DgSpace,
    coeffs: &C,
    pen: PenaltyParams,
    solution: &SolutionTriple,
    exact: &E,
) -> Result<ErrorReport>
where
    C: Coefficients + ?Sized,
    E: ExactSolution + ?Sized,
{
    let (ce, ee) = (coeffs.epsilon(), exact.epsilon());
    if (ce - ee).abs() > 1e-14 * ce.abs().max(ee.abs()) {
        return Err(Error::invalid(format!(
            "epsilon mismatch: coefficients use {ce:e}, exact solution uses {ee:e}"
        )));
    }
    let len = space.n_dofs();
    if solution.u.len() != len || solution.p.len() != len || solution.q.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: solution.u.len(),
        });
    }

    let err = element_norm_parts(space, coeffs, pen, &Difference(ExactField(exact), solution));
    let proj = project_solution(space, exact);
    let sc = element_norm_parts(space, coeffs, pen, &proj.sub(solution));

    let total_err = NormParts::sum(&err);
    let total_sc = NormParts::sum(&sc);
    let reg_err = region_parts(space, &err);
    let reg_sc = region_parts(space, &sc);
    let regions = Region::ALL.map(|r| RegionErrors {
        region: r,
        l2: reg_err[r.index()].weighted_l2_sq().sqrt(),
        sc: reg_sc[r.index()].energy_sq().sqrt(),
        energy: reg_err[r.index()].energy_sq().sqrt(),
    });
    Ok(ErrorReport {
        family: space.mesh().family,
        k: space.degree(),
        n: space.n(),
        epsilon: ee,
        l2: total_err.weighted_l2_sq().sqrt(),
        sc: total_sc.energy_sq().sqrt(),
        energy: total_err.energy_sq().sqrt(),
        u_l2: total_err.plain_v.sqrt(),
        regions,
    })
}
