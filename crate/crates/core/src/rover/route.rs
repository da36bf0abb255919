use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::plan::{drive_energy_wh, path_length};
use super::{Point2, RoverConfig, RoverError, SamplePlan};

/// Occupancy grid pitch.
pub const GRID_CELL_M: f64 = 0.05;

/// Axis-aligned obstacle footprint on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Obstacle {
    /// True when a rover centred at `p` would come closer than
    /// `inflation` to the box along both axes.
    pub fn blocks(&self, p: Point2, inflation: [f64; 2]) -> bool {
        (0..2).all(|k| p[k] > self.min[k] - inflation[k] && p[k] < self.max[k] + inflation[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedPlan {
    /// Reachable waypoints in visiting order; distance and energy follow
    /// the routed path.
    pub plan: SamplePlan,
    /// Polyline actually driven, corners only.
    pub path: Vec<Point2>,
    /// Grid distance between consecutive kept waypoints.
    pub segment_lengths_m: Vec<f64>,
    pub unreachable: Vec<Point2>,
}

struct Grid {
    nx: usize,
    ny: usize,
    free: Vec<bool>,
}

impl Grid {
    fn build(length_m: f64, width_m: f64, obstacles: &[Obstacle], inflation: [f64; 2]) -> Self {
        let nx = (length_m / GRID_CELL_M).round() as usize + 1;
        let ny = (width_m / GRID_CELL_M).round() as usize + 1;
        let mut free = vec![true; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let p = Point2::new(i as f64 * GRID_CELL_M, j as f64 * GRID_CELL_M);
                free[j * nx + i] = !obstacles.iter().any(|o| o.blocks(p, inflation));
            }
        }
        Grid { nx, ny, free }
    }

    fn snap(&self, p: Point2) -> usize {
        let i = ((p.x / GRID_CELL_M).round().max(0.0) as usize).min(self.nx - 1);
        let j = ((p.y / GRID_CELL_M).round().max(0.0) as usize).min(self.ny - 1);
        j * self.nx + i
    }

    fn point(&self, idx: usize) -> Point2 {
        Point2::new((idx % self.nx) as f64 * GRID_CELL_M, (idx / self.nx) as f64 * GRID_CELL_M)
    }

    fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = (idx % self.nx, idx / self.nx);
        [
            (i + 1 < self.nx).then(|| idx + 1),
            (i > 0).then(|| idx - 1),
            (j + 1 < self.ny).then(|| idx + self.nx),
            (j > 0).then(|| idx - self.nx),
        ]
        .into_iter()
        .flatten()
        .filter(|&n| self.free[n])
    }

    /// Shortest 4-connected path from `src` to `dst`, both inclusive.
    fn shortest(&self, src: usize, dst: usize) -> Option<Vec<usize>> {
        if !self.free[dst] {
            return None;
        }
        let mut parent = vec![usize::MAX; self.free.len()];
        parent[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if u == dst {
                let mut path = vec![dst];
                let mut v = dst;
                while v != src {
                    v = parent[v];
                    path.push(v);
                }
                path.reverse();
                return Some(path);
            }
            for n in self.neighbors(u) {
                if parent[n] == usize::MAX {
                    parent[n] = u;
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

/// Re-routes `plan` around obstacle boxes on a grid of [`GRID_CELL_M`]
/// cells. Waypoints are snapped to the nearest grid node; waypoints that
/// are blocked or cut off are dropped and listed in `unreachable`.
pub fn route_avoiding(
    plan: &SamplePlan,
    obstacles: &[Obstacle],
    length_m: f64,
    width_m: f64,
    config: &RoverConfig,
) -> Result<RoutedPlan, RoverError> {
    let Some(&start) = plan.waypoints.first() else {
        return Err(RoverError::EmptyPlan);
    };
    let grid = Grid::build(length_m, width_m, obstacles, config.inflation_m());
    let mut current = grid.snap(start);
    if !grid.free[current] {
        return Err(RoverError::StartBlocked(start.x, start.y));
    }
    let mut kept = vec![start];
    let mut path = vec![start];
    let mut segment_lengths_m = Vec::new();
    let mut unreachable = Vec::new();
    let mut total_steps = 0usize;
    for &wp in &plan.waypoints[1..] {
        let target = grid.snap(wp);
        let Some(cells) = grid.shortest(current, target) else {
            unreachable.push(wp);
            continue;
        };
        let steps = cells.len() - 1;
        total_steps += steps;
        segment_lengths_m.push(steps as f64 * GRID_CELL_M);
        // corners of the cell path, then the exact waypoint
        for k in 1..cells.len().saturating_sub(1) {
            let (a, b, c) = (cells[k - 1], cells[k], cells[k + 1]);
            if b as isize - a as isize != c as isize - b as isize {
                path.push(grid.point(b));
            }
        }
        if steps > 0 {
            path.push(wp);
        }
        kept.push(wp);
        current = target;
    }
    let drive_distance_m = total_steps as f64 * GRID_CELL_M;
    debug_assert!(unreachable.len() + kept.len() == plan.waypoints.len());
    debug_assert!((path_length(&path) - drive_distance_m).abs() < 1e-6 || !on_lattice(&kept));
    Ok(RoutedPlan {
        plan: SamplePlan {
            waypoints: kept,
            heights: plan.heights.clone(),
            drive_distance_m,
            energy_wh: drive_energy_wh(drive_distance_m, config),
        },
        path,
        segment_lengths_m,
        unreachable,
    })
}

fn on_lattice(points: &[Point2]) -> bool {
    points.iter().all(|p| {
        let q = p / GRID_CELL_M;
        (q.x - q.x.round()).abs() < 1e-9 && (q.y - q.y.round()).abs() < 1e-9
    })
}
