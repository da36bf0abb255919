use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{ComplexGain, PhyError};

/// One over-the-air exchange between tiles `a` and `b`.
///
/// `forward` is what `b` received when `a` transmitted (`r_b h t_a`),
/// `reverse` the opposite direction (`r_a h t_b`). Their ratio is
/// `c_a / c_b` with `c = t / r`, independent of the shared channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocityMeasurement {
    pub a: usize,
    pub b: usize,
    pub forward: ComplexGain,
    pub reverse: ComplexGain,
}

const PHASE_SWEEPS: usize = 200;
const PHASE_TOL: f64 = 1e-14;

/// Recovers per-tile coefficients `c_i = t_i / r_i` up to a common complex
/// factor, normalised so `c[reference] == 1`.
///
/// A BFS spanning tree from the reference gives a first solution. Extra
/// measurements then refine it: log-magnitudes by least squares on the
/// graph Laplacian, phases by repeated circular averaging.
pub fn reciprocity_calibrate(
    n: usize,
    measurements: &[ReciprocityMeasurement],
    reference: usize,
) -> Result<Vec<ComplexGain>, PhyError> {
    if reference >= n {
        return Err(PhyError::IndexOutOfRange(reference));
    }
    let mut ratios = Vec::with_capacity(measurements.len());
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, m) in measurements.iter().enumerate() {
        for idx in [m.a, m.b] {
            if idx >= n {
                return Err(PhyError::IndexOutOfRange(idx));
            }
        }
        let ok = |z: ComplexGain| z.norm() > 0.0 && z.is_finite();
        if !ok(m.forward) || !ok(m.reverse) || m.a == m.b {
            return Err(PhyError::ZeroMeasurement(k));
        }
        ratios.push(m.forward / m.reverse);
        adjacency[m.a].push((m.b, k));
        adjacency[m.b].push((m.a, k));
    }

    let mut coeff: Vec<Option<ComplexGain>> = vec![None; n];
    coeff[reference] = Some(ComplexGain::new(1.0, 0.0));
    let mut queue = VecDeque::from([reference]);
    while let Some(u) = queue.pop_front() {
        let cu = coeff[u].expect("queued nodes are solved");
        for &(v, k) in &adjacency[u] {
            if coeff[v].is_some() {
                continue;
            }
            // ratio_k = c_a / c_b
            let cv = if measurements[k].a == u { cu / ratios[k] } else { cu * ratios[k] };
            coeff[v] = Some(cv);
            queue.push_back(v);
        }
    }
    if let Some(missing) = coeff.iter().position(Option::is_none) {
        return Err(PhyError::InsufficientMeasurements(missing));
    }
    let tree: Vec<ComplexGain> = coeff.into_iter().map(Option::unwrap).collect();
    if measurements.len() < n {
        return Ok(tree);
    }

    let log_mag = refine_magnitudes(n, measurements, &ratios, reference);
    let phase = refine_phases(&tree, measurements, &ratios, &adjacency, reference);
    Ok(log_mag
        .iter()
        .zip(&phase)
        .map(|(&l, &p)| ComplexGain::from_polar(l.exp(), p))
        .collect())
}

/// Least-squares solution of `L_a - L_b = ln|ratio|` with `L_ref = 0`.
fn refine_magnitudes(
    n: usize,
    measurements: &[ReciprocityMeasurement],
    ratios: &[ComplexGain],
    reference: usize,
) -> Vec<f64> {
    // unknowns are every node except the reference
    let col = |i: usize| if i < reference { i } else { i - 1 };
    let dim = n - 1;
    let mut lap = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (m, r) in measurements.iter().zip(ratios) {
        let y = r.norm().ln();
        for (node, other, sign) in [(m.a, m.b, 1.0), (m.b, m.a, -1.0)] {
            if node == reference {
                continue;
            }
            let i = col(node);
            lap[(i, i)] += 1.0;
            rhs[i] += sign * y;
            if other != reference {
                lap[(i, col(other))] -= 1.0;
            }
        }
    }
    let mut out = vec![0.0; n];
    if dim == 0 {
        return out;
    }
    let sol = lap
        .cholesky()
        .expect("reduced Laplacian of a connected graph is positive definite")
        .solve(&rhs);
    for i in 0..n {
        if i != reference {
            out[i] = sol[col(i)];
        }
    }
    out
}

fn refine_phases(
    tree: &[ComplexGain],
    measurements: &[ReciprocityMeasurement],
    ratios: &[ComplexGain],
    adjacency: &[Vec<(usize, usize)>],
    reference: usize,
) -> Vec<f64> {
    let mut phase: Vec<f64> = tree.iter().map(|c| c.arg()).collect();
    phase[reference] = 0.0;
    for _ in 0..PHASE_SWEEPS {
        let mut largest = 0.0f64;
        for i in 0..tree.len() {
            if i == reference {
                continue;
            }
            let mut acc = ComplexGain::new(0.0, 0.0);
            for &(j, k) in &adjacency[i] {
                let psi = ratios[k].arg();
                let implied = if measurements[k].a == i { phase[j] + psi } else { phase[j] - psi };
                acc += ComplexGain::from_polar(1.0, implied);
            }
            let new = acc.arg();
            let step = ComplexGain::from_polar(1.0, new - phase[i]).arg().abs();
            largest = largest.max(step);
            phase[i] = new;
        }
        if largest < PHASE_TOL {
            break;
        }
    }
    phase
}
