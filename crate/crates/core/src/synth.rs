//! Gaussian mixture generators: the built-in 2-D datasets and the
//! mean-shift / covariance-scale perturbations used for shift experiments.

use std::f64::consts::PI;

use nalgebra::DVector;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::metrics::GaussianSpec;
use crate::rng::Rng;
use crate::types::Dataset;

/// Covariance scale factors available to the scaled-covariance experiment.
pub const SCALE_FACTORS: [f64; 13] = [
    0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5,
];

/// Names accepted by [`builtin_spec`].
pub const BUILTIN_NAMES: [&str; 5] = ["c2", "c3-default", "c4", "c6", "extreme"];

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub gaussian: GaussianSpec,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidParameter("mixture without components".into()));
        };
        let dim = first.gaussian.dim();
        for c in &components {
            if c.count == 0 {
                return Err(Error::InvalidParameter(
                    "mixture component with zero points".into(),
                ));
            }
            if c.gaussian.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.gaussian.dim(),
                });
            }
        }
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components[0].gaussian.dim()
    }

    pub fn n_points(&self) -> usize {
        self.components.iter().map(|c| c.count).sum()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn gaussians(&self) -> Vec<GaussianSpec> {
        self.components.iter().map(|c| c.gaussian.clone()).collect()
    }
}

fn component(mean: [f64; 2], cov: [[f64; 2]; 2], count: usize) -> MixtureComponent {
    MixtureComponent {
        gaussian: GaussianSpec::new(mean.to_vec(), cov.iter().map(|r| r.to_vec()).collect())
            .expect("built-in covariances are positive definite"),
        count,
    }
}

/// One of the built-in datasets. `c3` is accepted as an alias of `c3-default`.
pub fn builtin_spec(name: &str) -> Result<MixtureSpec> {
    const N: usize = 200;
    let c2a = [[0.65, 0.35], [0.35, 0.65]];
    let c2b = [[0.65, -0.35], [-0.35, 0.65]];
    let flat = [[1.0, 0.0], [0.0, 0.3]];
    let tilt_a = [[0.475, 0.303], [0.303, 0.825]];
    let tilt_b = [[0.475, -0.303], [-0.303, 0.825]];
    let c4a = [[0.55, 0.45], [0.45, 0.55]];
    let c4b = [[0.55, -0.45], [-0.45, 0.55]];
    let components = match name {
        "c2" => vec![
            component([1.0, 0.0], c2a, N),
            component([-1.0, 0.0], c2b, N),
        ],
        "c3-default" | "c3" => vec![
            component([1.0, 0.0], flat, N),
            component([-0.578, -1.0], tilt_a, N),
            component([-0.578, 1.0], tilt_b, N),
        ],
        "c4" => vec![
            component([1.0, 1.0], c4a, N),
            component([1.0, -1.0], c4b, N),
            component([-1.0, -1.0], c4a, N),
            component([-1.0, 1.0], c4b, N),
        ],
        "c6" => vec![
            component([0.5, 0.867], tilt_a, N),
            component([-0.5, 0.867], tilt_b, N),
            component([-1.0, 0.0], flat, N),
            component([-0.5, -0.867], tilt_a, N),
            component([0.5, -0.867], tilt_b, N),
            component([1.0, 0.0], flat, N),
        ],
        "extreme" => vec![
            component([1.0, 0.0], [[0.8, 0.4], [0.4, 0.8]], 2),
            component([8.0, 0.0], [[0.8, 0.4], [0.4, 0.8]], 100),
            component([4.0, 8.0], [[0.8, -0.4], [-0.4, 0.8]], 2),
        ],
        other => return Err(Error::UnknownDataset(other.to_string())),
    };
    MixtureSpec::new(components)
}

/// Draws every component's points as `μ + L z`, rows ordered by component.
/// Returns the dataset and the component index of each row.
pub fn sample_mixture(spec: &MixtureSpec, rng: &mut Rng) -> Result<(Dataset, Vec<usize>)> {
    let dim = spec.dim();
    let mut data = Array2::zeros((spec.n_points(), dim));
    let mut labels = Vec::with_capacity(spec.n_points());
    let mut row = 0;
    let mut z = DVector::zeros(dim);
    for (k, c) in spec.components.iter().enumerate() {
        let l = c.gaussian.cholesky_factor();
        for _ in 0..c.count {
            for v in z.iter_mut() {
                *v = rng.standard_normal();
            }
            let x = c.gaussian.mean() + &l * &z;
            for (s, v) in x.iter().enumerate() {
                data[[row, s]] = *v;
            }
            labels.push(k);
            row += 1;
        }
    }
    Ok((Dataset::new(data)?, labels))
}

/// A perturbation of a mixture's components.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSpec {
    /// Component `k` moves to `μ_k + radius·(cos φ, sin φ)` with
    /// `φ = 2π·angle_indices[k]/n_angles`; covariances are unchanged.
    MeanTranslation {
        radius: f64,
        n_angles: usize,
        angle_indices: Vec<usize>,
    },
    /// Component `k`'s covariance is multiplied by `factors[k]`.
    CovarianceScale { factors: Vec<f64> },
}

impl ShiftSpec {
    pub fn apply(&self, spec: &MixtureSpec) -> Result<MixtureSpec> {
        match self {
            ShiftSpec::MeanTranslation {
                radius,
                n_angles,
                angle_indices,
            } => translate(spec, *radius, *n_angles, angle_indices),
            ShiftSpec::CovarianceScale { factors } => scaled_cov_specs(spec, factors),
        }
    }
}

fn translate(
    spec: &MixtureSpec,
    radius: f64,
    n_angles: usize,
    angles: &[usize],
) -> Result<MixtureSpec> {
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift radius must be ≥ 0, got {radius}"
        )));
    }
    if n_angles == 0 {
        return Err(Error::InvalidParameter("need at least one angle".into()));
    }
    if angles.len() != spec.len() {
        return Err(Error::LengthMismatch {
            left: spec.len(),
            right: angles.len(),
        });
    }
    if spec.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: spec.dim(),
        });
    }
    let components = spec
        .components
        .iter()
        .zip(angles)
        .map(|(c, &a)| {
            if a >= n_angles {
                return Err(Error::InvalidParameter(format!(
                    "angle index {a} out of range for {n_angles} angles"
                )));
            }
            let phi = 2.0 * PI * a as f64 / n_angles as f64;
            let mut mean = c.gaussian.mean().clone();
            mean[0] += radius * phi.cos();
            mean[1] += radius * phi.sin();
            Ok(MixtureComponent {
                gaussian: c.gaussian.with_mean(mean)?,
                count: c.count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureSpec::new(components)
}

/// Number of cells in the mean-shift grid.
pub fn shift_grid_size(n_components: usize, n_angles: usize) -> Option<usize> {
    n_angles.checked_pow(u32::try_from(n_components).ok()?)
}

/// Angle indices of grid cell `cell`, last component varying fastest.
pub fn shift_grid_angles(n_components: usize, n_angles: usize, mut cell: usize) -> Vec<usize> {
    let mut out = vec![0; n_components];
    for slot in out.iter_mut().rev() {
        *slot = cell % n_angles;
        cell /= n_angles;
    }
    out
}

/// Every combination of per-component translations by `radius` at
/// `n_angles` equally spaced angles (starting at angle 0), in the order of
/// [`shift_grid_angles`].
pub fn shifted_mean_specs(
    spec: &MixtureSpec,
    radius: f64,
    n_angles: usize,
) -> Result<Vec<MixtureSpec>> {
    if n_angles == 0 {
        return Err(Error::InvalidParameter("need at least one angle".into()));
    }
    let cells = shift_grid_size(spec.len(), n_angles)
        .ok_or_else(|| Error::InvalidParameter("shift grid too large".into()))?;
    (0..cells)
        .map(|cell| {
            translate(
                spec,
                radius,
                n_angles,
                &shift_grid_angles(spec.len(), n_angles, cell),
            )
        })
        .collect()
}

/// Multiplies each component's covariance by its factor; means are unchanged.
pub fn scaled_cov_specs(spec: &MixtureSpec, factors: &[f64]) -> Result<MixtureSpec> {
    if factors.len() != spec.len() {
        return Err(Error::LengthMismatch {
            left: spec.len(),
            right: factors.len(),
        });
    }
    let components = spec
        .components
        .iter()
        .zip(factors)
        .map(|(c, &f)| {
            Ok(MixtureComponent {
                gaussian: c.gaussian.scaled(f)?,
                count: c.count,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureSpec::new(components)
}
