//! Geometric and electrical model of the room.
//!
//! The room is an axis-aligned box: `x` along its length, `y` along its
//! width, `z` up. Tiles are placed on four surfaces (two long walls, the
//! ceiling and the floor), each tile carries a 5 cm mount lattice, and the
//! whole installation is powered over Ethernet from a shared budget.

mod adc;
mod power;
mod room;

pub use adc::{dequantize_adc, quantize_adc, AdcCapture, AdcSpec};
pub use power::{plan_power, plan_power_draws, PowerError, PowerLimits, PowerPlan};
pub use room::{
    build_room, mount_world_position, surface_capacity, MountPoint, ResourceKind, RoomError,
    RoomSpec, Surface, SurfaceCounts, Tile, TileAlignment, TileGrid, TileId, MOUNT_PITCH_M,
    MOUNT_U_MAX, MOUNT_V_MAX, TILE_LONG_M, TILE_SHORT_M,
};
