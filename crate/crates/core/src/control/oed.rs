use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix6, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::fim::InformationMatrix;
use crate::error::Error;

/// Scalarization of an information matrix. All three are minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum OedCriterion {
    /// Trace of the inverse.
    A,
    /// Determinant of the inverse.
    #[default]
    D,
    /// Largest eigenvalue of the inverse.
    E,
}

impl fmt::Display for OedCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OedCriterion::A => "A",
            OedCriterion::D => "D",
            OedCriterion::E => "E",
        })
    }
}

impl FromStr for OedCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "A" | "a" => Ok(Self::A),
            "D" | "d" => Ok(Self::D),
            "E" | "e" => Ok(Self::E),
            other => Err(Error::Config(format!(
                "unknown design criterion {other:?} (expected A, D or E)"
            ))),
        }
    }
}

const RELATIVE_RANK_TOL: f64 = 1e-12;

/// Marginal information on the position: the Schur complement
/// `J_pp - J_pv J_vv⁺ J_vp`. A pseudo-inverse handles velocity directions
/// that carry no information.
pub fn position_information(j: &InformationMatrix) -> Matrix3<f64> {
    let m = j.matrix();
    let jpp = m.fixed_view::<3, 3>(0, 0).clone_owned();
    let jpv = m.fixed_view::<3, 3>(0, 3).clone_owned();
    let jvv = m.fixed_view::<3, 3>(3, 3).clone_owned();
    if jpv.iter().all(|v| *v == 0.0) {
        return jpp;
    }
    let eig = SymmetricEigen::new(jvv);
    let top = eig.eigenvalues.amax();
    if top == 0.0 {
        return jpp;
    }
    let inv_vals = eig.eigenvalues.map(|l| {
        if l > RELATIVE_RANK_TOL * top {
            1.0 / l
        } else {
            0.0
        }
    });
    let pinv = eig.eigenvectors * Matrix3::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    let schur = jpp - jpv * pinv * jpv.transpose();
    (schur + schur.transpose()) * 0.5
}

/// Design cost of `j` (on the position marginal when `position_only`).
/// Singular information yields `+∞`.
pub fn oed_cost(j: &InformationMatrix, criterion: OedCriterion, position_only: bool) -> f64 {
    if position_only {
        cost3(position_information(j), criterion)
    } else {
        cost6(*j.matrix(), criterion)
    }
}

macro_rules! cost_fn {
    ($name:ident, $mat:ty) => {
        fn $name(m: $mat, criterion: OedCriterion) -> f64 {
            if !m.iter().all(|v| v.is_finite()) {
                return f64::INFINITY;
            }
            let eig = SymmetricEigen::new(m);
            let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
            if !(hi > 0.0) || lo <= RELATIVE_RANK_TOL * hi {
                return f64::INFINITY;
            }
            let Some(chol) = m.cholesky() else {
                return f64::INFINITY;
            };
            match criterion {
                OedCriterion::A => chol.inverse().trace(),
                OedCriterion::D => {
                    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                    (-log_det).exp()
                }
                OedCriterion::E => 1.0 / lo,
            }
        }
    };
}

cost_fn!(cost3, Matrix3<f64>);
cost_fn!(cost6, Matrix6<f64>);

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn from_position(p: Matrix3<f64>) -> InformationMatrix {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&p);
        InformationMatrix(m)
    }

    #[test]
    fn identity_costs() {
        let j = from_position(Matrix3::identity());
        assert!((oed_cost(&j, OedCriterion::A, true) - 3.0).abs() < 1e-15);
        assert!((oed_cost(&j, OedCriterion::D, true) - 1.0).abs() < 1e-15);
        assert!((oed_cost(&j, OedCriterion::E, true) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_costs() {
        let j = from_position(Matrix3::from_diagonal(&Vector3::new(4.0, 1.0, 1.0)));
        // trace(diag(1/4, 1, 1))
        assert!((oed_cost(&j, OedCriterion::A, true) - 2.25).abs() < 1e-12);
        assert!((oed_cost(&j, OedCriterion::D, true) - 0.25).abs() < 1e-12);
        assert!((oed_cost(&j, OedCriterion::E, true) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_infinite() {
        let j = from_position(Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)));
        for c in [OedCriterion::A, OedCriterion::D, OedCriterion::E] {
            assert_eq!(oed_cost(&j, c, true), f64::INFINITY);
        }
        assert_eq!(
            oed_cost(&InformationMatrix::zeros(), OedCriterion::D, false),
            f64::INFINITY
        );
    }

    #[test]
    fn schur_complement_marginalizes_velocity() {
        // Information on (px, vx) = [[2, 1], [1, 1]]: marginal on px is 2 - 1 = 1.
        let mut m = Matrix6::identity();
        m[(0, 0)] = 2.0;
        m[(0, 3)] = 1.0;
        m[(3, 0)] = 1.0;
        let pos = position_information(&InformationMatrix(m));
        assert!((pos[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((pos[(1, 1)] - 1.0).abs() < 1e-14);
        // Equals the inverse of the position block of the covariance.
        let cov = m.try_inverse().unwrap();
        let via_cov = cov
            .fixed_view::<3, 3>(0, 0)
            .clone_owned()
            .try_inverse()
            .unwrap();
        assert!((pos - via_cov).abs().max() < 1e-12);
    }

    #[test]
    fn criterion_parsing() {
        assert_eq!("D".parse::<OedCriterion>().unwrap(), OedCriterion::D);
        assert_eq!(OedCriterion::default(), OedCriterion::D);
        assert!("X".parse::<OedCriterion>().is_err());
    }

    fn arb_spd3() -> impl Strategy<Value = Matrix3<f64>> {
        (prop::array::uniform9(-2.0..2.0f64), 0.05..1.0f64).prop_map(|(a, eps)| {
            let a = Matrix3::from_row_slice(&a);
            a * a.transpose() + Matrix3::identity() * eps
        })
    }

    proptest! {
        #[test]
        fn d_cost_matches_log_det(p in arb_spd3()) {
            let d = oed_cost(&from_position(p), OedCriterion::D, true);
            let log_det = p.determinant().ln();
            prop_assert!((d.ln() + log_det).abs() < 1e-10);
        }

        #[test]
        fn more_information_never_costs_more(p in arb_spd3(), v in prop::array::uniform3(-1.0..1.0f64), w in 0.0..5.0f64) {
            let v = Vector3::from_row_slice(&v);
            let more = p + v * v.transpose() * w;
            for c in [OedCriterion::A, OedCriterion::D, OedCriterion::E] {
                let before = oed_cost(&from_position(p), c, true);
                let after = oed_cost(&from_position(more), c, true);
                prop_assert!(after <= before * (1.0 + 1e-12), "{c}: {after} > {before}");
            }
        }
    }
}
