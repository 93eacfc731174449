use nalgebra::Matrix6;

use crate::fusion::Belief;
use crate::sensing::{channel_variance, measurement_jacobian, SensingMode, SensorParams};
use crate::world::{line_of_sight, Aabb, Vec3};

/// Fisher information on `(px, py, pz, vx, vy, vz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationMatrix(pub Matrix6<f64>);

impl InformationMatrix {
    pub fn zeros() -> Self {
        Self(Matrix6::zeros())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }
}

impl std::ops::Add<&Matrix6<f64>> for InformationMatrix {
    type Output = InformationMatrix;

    fn add(self, rhs: &Matrix6<f64>) -> Self::Output {
        InformationMatrix(self.0 + rhs)
    }
}

/// A radar position contributing to the information sum. `noise_scale`
/// multiplies every channel variance (hop-age inflation for peers).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSite {
    pub position: Vec3,
    pub noise_scale: f64,
}

impl SensorSite {
    pub fn own(position: Vec3) -> Self {
        Self {
            position,
            noise_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FimOptions<'a> {
    /// Add the inverse predicted covariance to the measurement information.
    pub include_prior: bool,
    /// Sites without line of sight to the predicted target contribute nothing.
    pub obstacles: &'a [Aabb],
}

impl Default for FimOptions<'_> {
    fn default() -> Self {
        Self {
            include_prior: true,
            obstacles: &[],
        }
    }
}

/// Inverse of the predicted covariance, regularized with `1e-9 I` when the
/// covariance is numerically singular.
pub fn prior_information(predicted: &Belief) -> Matrix6<f64> {
    let c = predicted.covariance;
    let inv = c
        .cholesky()
        .or_else(|| (c + Matrix6::identity() * 1e-9).cholesky())
        .map(|ch| ch.inverse())
        .unwrap_or_else(Matrix6::zeros);
    (inv + inv.transpose()) * 0.5
}

/// `Hᵀ R⁻¹ H` of one site at the predicted mean, or `None` when the site is
/// occluded or the geometry is singular.
pub fn sensor_information(
    site: &SensorSite,
    predicted: &Belief,
    mode: SensingMode,
    params: &SensorParams,
    obstacles: &[Aabb],
) -> Option<Matrix6<f64>> {
    let target = predicted.mean.fixed_rows::<3>(0).clone_owned();
    if !obstacles.is_empty() && !line_of_sight(&site.position, &target, obstacles) {
        return None;
    }
    let h = match measurement_jacobian(&predicted.mean, &site.position, mode) {
        Ok(h) => h,
        Err(e) => {
            log::trace!(
                "skipping sensor term at {:?}: {e}",
                site.position.as_slice()
            );
            return None;
        }
    };
    let range = (target - site.position).norm();
    let mut info = Matrix6::zeros();
    for (row, c) in mode.channels().enumerate() {
        let var = channel_variance(c, range, params).ok()? * site.noise_scale;
        let r = h.row(row);
        info += r.transpose() * r / var;
    }
    Some(info)
}

/// Expected information after sensing from `candidate` with peers held at
/// their last known sites: `P⁻¹ + Σ Hᵀ R⁻¹ H`, summed as prior, then peers in
/// order, then the candidate.
pub fn fim(
    candidate: &Vec3,
    peers: &[SensorSite],
    predicted: &Belief,
    mode: SensingMode,
    params: &SensorParams,
    options: &FimOptions<'_>,
) -> InformationMatrix {
    let mut j = peer_information(peers, predicted, mode, params, options);
    if let Some(term) = sensor_information(
        &SensorSite::own(*candidate),
        predicted,
        mode,
        params,
        options.obstacles,
    ) {
        j = j + &term;
    }
    j
}

/// The candidate-independent part of [`fim`].
pub(crate) fn peer_information(
    peers: &[SensorSite],
    predicted: &Belief,
    mode: SensingMode,
    params: &SensorParams,
    options: &FimOptions<'_>,
) -> InformationMatrix {
    let mut j = InformationMatrix::zeros();
    if options.include_prior {
        j = j + &prior_information(predicted);
    }
    for p in peers {
        if let Some(term) = sensor_information(p, predicted, mode, params, options.obstacles) {
            j = j + &term;
        }
    }
    j
}
