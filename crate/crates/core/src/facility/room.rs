use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Direction, Position};

/// Tile footprint, long edge.
pub const TILE_LONG_M: f64 = 1.2;
/// Tile footprint, short edge.
pub const TILE_SHORT_M: f64 = 0.6;
/// Pitch of the threaded-insert lattice on every tile.
pub const MOUNT_PITCH_M: f64 = 0.05;
/// Last lattice index along the long edge (inclusive).
pub const MOUNT_U_MAX: u32 = 24;
/// Last lattice index along the short edge (inclusive).
pub const MOUNT_V_MAX: u32 = 12;

const FIT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoomError {
    #[error("room dimension `{name}` must be positive, got {value}")]
    InvalidDimension { name: &'static str, value: f64 },
    #[error("{surface} holds at most {capacity} tiles, {requested} requested")]
    CountExceedsSurface {
        surface: Surface,
        requested: u32,
        capacity: u32,
    },
    #[error("mount ({u}, {v}) is outside the 0..={MOUNT_U_MAX} x 0..={MOUNT_V_MAX} lattice")]
    OutOfGrid { u: i64, v: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    WallA,
    WallB,
    Ceiling,
    Floor,
}

impl Surface {
    pub const ALL: [Surface; 4] = [Surface::WallA, Surface::WallB, Surface::Ceiling, Surface::Floor];

    pub fn name(self) -> &'static str {
        match self {
            Surface::WallA => "wall_a",
            Surface::WallB => "wall_b",
            Surface::Ceiling => "ceiling",
            Surface::Floor => "floor",
        }
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceCounts {
    pub wall_a: u32,
    pub wall_b: u32,
    pub ceiling: u32,
    pub floor: u32,
}

impl SurfaceCounts {
    pub fn get(&self, surface: Surface) -> u32 {
        match surface {
            Surface::WallA => self.wall_a,
            Surface::WallB => self.wall_b,
            Surface::Ceiling => self.ceiling,
            Surface::Floor => self.floor,
        }
    }

    /// `count` tiles on `surface` and none elsewhere.
    pub fn only(surface: Surface, count: u32) -> Self {
        let mut c = SurfaceCounts { wall_a: 0, wall_b: 0, ceiling: 0, floor: 0 };
        match surface {
            Surface::WallA => c.wall_a = count,
            Surface::WallB => c.wall_b = count,
            Surface::Ceiling => c.ceiling = count,
            Surface::Floor => c.floor = count,
        }
        c
    }

    /// Derived total. The per-surface figures are the source of truth.
    pub fn total(&self) -> u32 {
        self.wall_a + self.wall_b + self.ceiling + self.floor
    }
}

impl Default for SurfaceCounts {
    fn default() -> Self {
        SurfaceCounts {
            wall_a: 28,
            wall_b: 28,
            ceiling: 42,
            floor: 52,
        }
    }
}

/// Where the occupied block of tiles sits on its surface.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileAlignment {
    /// First tile at the surface corner.
    #[default]
    Corner,
    /// Leftover margin split equally at both ends of each axis.
    Centered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomSpec {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub counts: SurfaceCounts,
    pub alignment: TileAlignment,
}

impl Default for RoomSpec {
    fn default() -> Self {
        RoomSpec {
            length_m: 8.0,
            width_m: 4.0,
            height_m: 2.4,
            counts: SurfaceCounts::default(),
            alignment: TileAlignment::Corner,
        }
    }
}

impl RoomSpec {
    pub fn contains(&self, p: &Position) -> bool {
        (0.0..=self.length_m).contains(&p.x)
            && (0.0..=self.width_m).contains(&p.y)
            && (0.0..=self.height_m).contains(&p.z)
    }

    fn validate(&self) -> Result<(), RoomError> {
        for (name, value) in [
            ("length_m", self.length_m),
            ("width_m", self.width_m),
            ("height_m", self.height_m),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(RoomError::InvalidDimension { name, value });
            }
        }
        Ok(())
    }

    /// Plane frame of a surface: corner, long axis, short axis, inward normal,
    /// and the extents along both axes.
    fn frame(&self, surface: Surface) -> SurfaceFrame {
        let (l, w, h) = (self.length_m, self.width_m, self.height_m);
        let x = Direction::x();
        let y = Direction::y();
        let z = Direction::z();
        let (corner, a, b, normal, ea, eb) = match surface {
            Surface::WallA => (Position::zeros(), x, z, y, l, h),
            Surface::WallB => (Position::new(0.0, w, 0.0), x, z, -y, l, h),
            Surface::Ceiling => (Position::new(0.0, 0.0, h), x, y, -z, l, w),
            Surface::Floor => (Position::zeros(), x, y, z, l, w),
        };
        // long tile edge follows the longer surface axis
        if ea >= eb {
            SurfaceFrame { corner, long_axis: a, short_axis: b, normal, long_extent: ea, short_extent: eb }
        } else {
            SurfaceFrame { corner, long_axis: b, short_axis: a, normal, long_extent: eb, short_extent: ea }
        }
    }
}

struct SurfaceFrame {
    corner: Position,
    long_axis: Direction,
    short_axis: Direction,
    normal: Direction,
    long_extent: f64,
    short_extent: f64,
}

impl SurfaceFrame {
    fn columns(&self) -> u32 {
        (self.long_extent / TILE_LONG_M + FIT_EPS).floor() as u32
    }

    fn rows(&self) -> u32 {
        (self.short_extent / TILE_SHORT_M + FIT_EPS).floor() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TileId(pub u32);

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tile{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub id: TileId,
    pub surface: Surface,
    /// Row-major index on its surface.
    pub index: u32,
    pub row: u32,
    pub column: u32,
    /// World position of the tile corner with lattice coordinate (0, 0).
    pub origin: Position,
    /// Inward surface normal.
    pub orientation: Direction,
    pub long_axis: Direction,
    pub short_axis: Direction,
}

impl Tile {
    pub fn center(&self) -> Position {
        self.origin + self.long_axis * (TILE_LONG_M / 2.0) + self.short_axis * (TILE_SHORT_M / 2.0)
    }
}

pub type TileGrid = Vec<Tile>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Sdr,
    Edge,
    Microphone,
    Speaker,
    Led,
    Photodiode,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MountPoint {
    pub tile: TileId,
    pub u: u32,
    pub v: u32,
    pub kind: ResourceKind,
}

/// Maximum number of tiles the packing rule fits on `surface`.
pub fn surface_capacity(spec: &RoomSpec, surface: Surface) -> u32 {
    let frame = spec.frame(surface);
    frame.columns() * frame.rows()
}

/// Lay out tiles on every surface, ordered by (surface, row, column).
pub fn build_room(spec: &RoomSpec) -> Result<TileGrid, RoomError> {
    spec.validate()?;
    let mut tiles = Vec::with_capacity(spec.counts.total() as usize);
    for surface in Surface::ALL {
        let requested = spec.counts.get(surface);
        if requested == 0 {
            continue;
        }
        let frame = spec.frame(surface);
        let columns = frame.columns();
        let capacity = columns * frame.rows();
        if requested > capacity {
            return Err(RoomError::CountExceedsSurface { surface, requested, capacity });
        }
        let (long_margin, short_margin) = match spec.alignment {
            TileAlignment::Corner => (0.0, 0.0),
            TileAlignment::Centered => {
                let used_cols = requested.min(columns);
                let used_rows = requested.div_ceil(columns);
                (
                    (frame.long_extent - used_cols as f64 * TILE_LONG_M) / 2.0,
                    (frame.short_extent - used_rows as f64 * TILE_SHORT_M) / 2.0,
                )
            }
        };
        for index in 0..requested {
            let row = index / columns;
            let column = index % columns;
            let origin = frame.corner
                + frame.long_axis * (long_margin + column as f64 * TILE_LONG_M)
                + frame.short_axis * (short_margin + row as f64 * TILE_SHORT_M);
            tiles.push(Tile {
                id: TileId(tiles.len() as u32),
                surface,
                index,
                row,
                column,
                origin,
                orientation: frame.normal,
                long_axis: frame.long_axis,
                short_axis: frame.short_axis,
            });
        }
    }
    Ok(tiles)
}

/// World position of lattice point (u, v) on `tile`.
pub fn mount_world_position(tile: &Tile, u: i64, v: i64) -> Result<Position, RoomError> {
    if !(0..=MOUNT_U_MAX as i64).contains(&u) || !(0..=MOUNT_V_MAX as i64).contains(&v) {
        return Err(RoomError::OutOfGrid { u, v });
    }
    Ok(tile.origin
        + tile.long_axis * (u as f64 * MOUNT_PITCH_M)
        + tile.short_axis * (v as f64 * MOUNT_PITCH_M))
}
