use nalgebra::{DMatrix, DVector};

use crate::geometry::Position;

use super::{PositionEstimate, PositioningError, RangeObservation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Starting point; the anchor centroid when absent.
    pub init: Option<Position>,
    /// Fix `z` and solve only for `(x, y)`.
    pub known_height: Option<f64>,
    pub max_iterations: usize,
    pub step_tolerance_m: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { init: None, known_height: None, max_iterations: 100, step_tolerance_m: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Model {
    Spatial,
    Planar(f64),
    /// Position plus a common clock bias, carried in meters of the first
    /// observation's propagation speed.
    Hybrid,
}

impl Model {
    fn dim(self) -> usize {
        match self {
            Model::Spatial => 3,
            Model::Planar(_) => 2,
            Model::Hybrid => 4,
        }
    }

    fn position(self, theta: &DVector<f64>) -> Position {
        match self {
            Model::Planar(z) => Position::new(theta[0], theta[1], z),
            _ => Position::new(theta[0], theta[1], theta[2]),
        }
    }
}

const RANK_TOL: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e16;

/// Range-only trilateration.
pub fn trilaterate_ls(obs: &[RangeObservation], config: &SolverConfig) -> Result<PositionEstimate, PositioningError> {
    let model = match config.known_height {
        Some(z) => Model::Planar(z),
        None => Model::Spatial,
    };
    let needed = model.dim() + 1;
    if obs.len() < needed {
        return Err(PositioningError::TooFewObservations { needed, got: obs.len() });
    }
    if anchors_collinear(obs, model) {
        return Err(PositioningError::DegenerateGeometry);
    }
    let (theta, iterations, cost) = solve(obs, model, config)?;
    Ok(estimate(obs, model, &theta, iterations, cost))
}

/// Joint position and device clock bias from TOAs that share one unknown
/// offset.
pub fn trilaterate_hybrid(
    obs: &[RangeObservation],
    config: &SolverConfig,
) -> Result<PositionEstimate, PositioningError> {
    if obs.len() < 5 || anchors_collinear(obs, Model::Spatial) {
        return Err(PositioningError::UnobservableBias);
    }
    match solve(obs, Model::Hybrid, config) {
        Ok((theta, iterations, cost)) => Ok(estimate(obs, Model::Hybrid, &theta, iterations, cost)),
        Err(PositioningError::DegenerateGeometry) => Err(PositioningError::UnobservableBias),
        Err(e) => Err(e),
    }
}

fn estimate(obs: &[RangeObservation], model: Model, theta: &DVector<f64>, iterations: usize, cost: f64) -> PositionEstimate {
    PositionEstimate {
        position: model.position(theta),
        residual_rms_m: (cost / obs.len() as f64).sqrt(),
        iterations,
        inliers: (0..obs.len()).collect(),
        clock_bias_s: (model == Model::Hybrid).then(|| theta[3] / obs[0].speed_m_s),
    }
}

fn anchors_collinear(obs: &[RangeObservation], model: Model) -> bool {
    let n = obs.len() as f64;
    let centroid = obs.iter().map(|o| o.anchor).sum::<Position>() / n;
    let rows = match model {
        Model::Planar(_) => 2,
        _ => 3,
    };
    let m = DMatrix::from_fn(obs.len(), rows, |i, j| obs[i].anchor[j] - centroid[j]);
    let sv = m.singular_values();
    let max = sv.max();
    let mut sorted: Vec<f64> = sv.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    max == 0.0 || sorted[1] <= RANK_TOL * max
}

/// Runs the damped solver from the configured start and from the
/// linearized closed-form start, keeping the lower-cost result.
fn solve(
    obs: &[RangeObservation],
    model: Model,
    config: &SolverConfig,
) -> Result<(DVector<f64>, usize, f64), PositioningError> {
    let centroid = obs.iter().map(|o| o.anchor).sum::<Position>() / obs.len() as f64;
    let start = config.init.unwrap_or(centroid);
    if !start.iter().all(|v| v.is_finite()) {
        return Err(PositioningError::InvalidInput { name: "init", value: f64::NAN });
    }
    let mut theta0 = DVector::zeros(model.dim());
    for i in 0..model.dim().min(3) {
        theta0[i] = start[i];
    }
    let primary = levenberg_marquardt(obs, model, theta0, config);
    let best = match (primary, linear_start(obs, model)) {
        (Ok(p), Some(lin)) => match levenberg_marquardt(obs, model, lin, config) {
            Ok(s) if s.2 < p.2 => Ok(s),
            _ => Ok(p),
        },
        (Err(e), Some(lin)) => levenberg_marquardt(obs, model, lin, config).map_err(|_| e),
        (p, None) => p,
    }?;
    let (_, jac) = residuals(obs, model, &best.0);
    let sv = jac.singular_values();
    if sv.min() <= RANK_TOL * sv.max() {
        return Err(PositioningError::DegenerateGeometry);
    }
    Ok(best)
}

fn residuals(obs: &[RangeObservation], model: Model, theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let x = model.position(theta);
    let dim = model.dim();
    let spatial = if matches!(model, Model::Planar(_)) { 2 } else { 3 };
    let c0 = obs[0].speed_m_s;
    let mut r = DVector::zeros(obs.len());
    let mut jac = DMatrix::zeros(obs.len(), dim);
    for (i, o) in obs.iter().enumerate() {
        let diff = x - o.anchor;
        let d = diff.norm();
        r[i] = d - o.range_m;
        if d > 0.0 {
            for j in 0..spatial {
                jac[(i, j)] = diff[j] / d;
            }
        }
        if model == Model::Hybrid {
            let k = o.speed_m_s / c0;
            r[i] += k * theta[3];
            jac[(i, 3)] = k;
        }
    }
    (r, jac)
}

fn levenberg_marquardt(
    obs: &[RangeObservation],
    model: Model,
    mut theta: DVector<f64>,
    config: &SolverConfig,
) -> Result<(DVector<f64>, usize, f64), PositioningError> {
    let mut lambda = 1e-3;
    let (mut r, mut jac) = residuals(obs, model, &theta);
    let mut cost = r.norm_squared();
    for iteration in 1..=config.max_iterations {
        if cost == 0.0 {
            return Ok((theta, iteration - 1, cost));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        loop {
            let mut a = jtj.clone();
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                if lambda > MAX_DAMPING {
                    return Ok((theta, iteration, cost));
                }
                continue;
            };
            let step = chol.solve(&(-&g));
            let candidate = &theta + &step;
            let (r_new, jac_new) = residuals(obs, model, &candidate);
            let cost_new = r_new.norm_squared();
            let small = step.norm() < config.step_tolerance_m;
            if cost_new <= cost {
                theta = candidate;
                r = r_new;
                jac = jac_new;
                cost = cost_new;
                lambda = (lambda / 10.0).max(1e-12);
                if small {
                    return Ok((theta, iteration, cost));
                }
                break;
            }
            if small {
                return Ok((theta, iteration, cost));
            }
            lambda *= 10.0;
            if lambda > MAX_DAMPING {
                return Ok((theta, iteration, cost));
            }
        }
    }
    // The iteration cap is a stopping rule, not a failure; only a state that
    // left the finite range is reported.
    if cost.is_finite() && theta.iter().all(|v| v.is_finite()) {
        Ok((theta, config.max_iterations, cost))
    } else {
        Err(PositioningError::NoConvergence(config.max_iterations))
    }
}

/// Closed-form start from differencing squared range equations:
/// `-2 b.x + 2 rho s + (|x|^2 - s^2) = rho^2 - |b|^2`, linear in
/// `(x, s, w)`. `s` is only present in hybrid mode.
fn linear_start(obs: &[RangeObservation], model: Model) -> Option<DVector<f64>> {
    let spatial = match model {
        Model::Planar(_) => 2,
        _ => 3,
    };
    let hybrid = model == Model::Hybrid;
    let cols = spatial + usize::from(hybrid) + 1;
    if obs.len() < cols {
        return None;
    }
    let c0 = obs[0].speed_m_s;
    let mut a = DMatrix::zeros(obs.len(), cols);
    let mut y = DVector::zeros(obs.len());
    for (i, o) in obs.iter().enumerate() {
        let b = o.anchor;
        let rho = o.range_m;
        for j in 0..spatial {
            a[(i, j)] = -2.0 * b[j];
        }
        let mut rhs = rho * rho - b.norm_squared();
        if let Model::Planar(z) = model {
            // |x|^2 includes the fixed z^2, which stays inside w
            rhs += 2.0 * b.z * z;
        }
        if hybrid {
            a[(i, spatial)] = 2.0 * rho * (o.speed_m_s / c0);
        }
        a[(i, cols - 1)] = 1.0;
        y[i] = rhs;
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= RANK_TOL * sv.max() {
        return None;
    }
    let sol = svd.solve(&y, 0.0).ok()?;
    let mut theta = DVector::zeros(model.dim());
    for j in 0..spatial {
        theta[j] = sol[j];
    }
    if hybrid {
        theta[3] = sol[spatial];
    }
    theta.iter().all(|v| v.is_finite()).then_some(theta)
}
