//! Which outcomes can carry mass under the constraints.
//!
//! The I-projection is supported on the largest support of any feasible
//! distribution. Each outcome's maximal feasible mass is found with a small
//! linear program; outcomes that are forced to zero are frozen there, which
//! keeps the dual multipliers finite for boundary targets such as
//! `q(R1 | R) = 1`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::LinearConstraint;
use crate::error::{Error, Result};

/// Mass below which an outcome counts as forced to zero.
const FACE_TOL: f64 = 1e-9;
/// Slack allowed on constraint rows that vanish on the support.
const ROW_TOL: f64 = 1e-9;

/// Returns the indices (into the full space) of outcomes that some feasible
/// distribution supported on `support` charges with positive mass.
pub(super) fn feasible_face(support: &[usize], rows: &[LinearConstraint]) -> Result<Vec<usize>> {
    let mut live_rows = Vec::new();
    for row in rows {
        let restricted: Vec<f64> = support.iter().map(|&j| row.coeffs()[j]).collect();
        if restricted.iter().all(|&c| c == 0.0) {
            if row.rhs().abs() > ROW_TOL {
                return Err(Error::Infeasible);
            }
            continue;
        }
        live_rows.push((restricted, row.rhs()));
    }
    if live_rows.is_empty() {
        return Ok(support.to_vec());
    }

    let max_mass = |objective: Option<usize>| -> Result<Option<f64>> {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..support.len())
            .map(|k| lp.add_var(if Some(k) == objective { 1.0 } else { 0.0 }, (0.0, 1.0)))
            .collect();
        lp.add_constraint(vars.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
        for (coeffs, rhs) in &live_rows {
            let expr: Vec<_> = vars
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(&v, &c)| (v, c))
                .collect();
            lp.add_constraint(expr, ComparisonOp::Eq, *rhs);
        }
        match lp.solve() {
            Ok(sol) => Ok(objective.map(|k| *sol.var_value(vars[k]))),
            Err(microlp::Error::Infeasible) => Err(Error::Infeasible),
            Err(e) => Err(Error::InvalidConstraint(format!("feasibility check failed: {e}"))),
        }
    };

    max_mass(None)?;
    let mut face = Vec::with_capacity(support.len());
    for (k, &j) in support.iter().enumerate() {
        if max_mass(Some(k))?.unwrap_or(0.0) > FACE_TOL {
            face.push(j);
        }
    }
    if face.is_empty() {
        return Err(Error::Infeasible);
    }
    Ok(face)
}
