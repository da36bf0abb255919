//! Shared 3D geometry aliases.

use nalgebra::Vector3;

/// World position in meters. `x` runs along the room length, `y` along its
/// width and `z` up from the floor.
pub type Position = Vector3<f64>;

/// Unit direction vector.
pub type Direction = Vector3<f64>;

pub fn pos(x: f64, y: f64, z: f64) -> Position {
    Position::new(x, y, z)
}
