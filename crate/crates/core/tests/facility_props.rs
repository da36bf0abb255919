use proptest::prelude::*;
use weave::facility::*;
use weave::Position;

// Tile rectangle in its surface plane, as (long, short) intervals relative to
// the surface corner it shares with every other tile on that surface.
fn footprint(t: &Tile, corner: Position) -> [(f64, f64); 2] {
    let d = t.origin - corner;
    let a = d.dot(&t.long_axis);
    let b = d.dot(&t.short_axis);
    [(a, a + TILE_LONG_M), (b, b + TILE_SHORT_M)]
}

fn overlap(p: [(f64, f64); 2], q: [(f64, f64); 2]) -> bool {
    const EPS: f64 = 1e-9;
    (0..2).all(|k| p[k].0 < q[k].1 - EPS && q[k].0 < p[k].1 - EPS)
}

fn room_and_counts() -> impl Strategy<Value = RoomSpec> {
    (2.0..12.0f64, 1.5..8.0f64, 1.5..4.0f64, any::<bool>(), prop::array::uniform4(0.0..=1.0f64)).prop_map(
        |(length_m, width_m, height_m, centered, frac)| {
            let mut spec = RoomSpec {
                length_m,
                width_m,
                height_m,
                counts: SurfaceCounts { wall_a: 0, wall_b: 0, ceiling: 0, floor: 0 },
                alignment: if centered { TileAlignment::Centered } else { TileAlignment::Corner },
            };
            let caps: Vec<u32> = Surface::ALL.iter().map(|&s| surface_capacity(&spec, s)).collect();
            let pick = |i: usize| (caps[i] as f64 * frac[i]).floor() as u32;
            spec.counts = SurfaceCounts { wall_a: pick(0), wall_b: pick(1), ceiling: pick(2), floor: pick(3) };
            spec
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tiles_never_overlap_and_stay_inside(spec in room_and_counts()) {
        let tiles = build_room(&spec).unwrap();
        prop_assert_eq!(tiles.len() as u32, spec.counts.total());
        for (i, t) in tiles.iter().enumerate() {
            prop_assert_eq!(t.id, TileId(i as u32));
            for (u, v) in [(0, 0), (MOUNT_U_MAX as i64, 0), (0, MOUNT_V_MAX as i64), (MOUNT_U_MAX as i64, MOUNT_V_MAX as i64)] {
                let p = mount_world_position(t, u, v).unwrap();
                let dims = [spec.length_m, spec.width_m, spec.height_m];
                prop_assert!((0..3).all(|k| p[k] > -1e-9 && p[k] < dims[k] + 1e-9), "{:?} outside room", p);
            }
        }
        for surface in Surface::ALL {
            let on: Vec<&Tile> = tiles.iter().filter(|t| t.surface == surface).collect();
            let Some(first) = on.first() else { continue };
            // every tile on a surface shares the plane and axes of the first
            let corner = first.origin;
            for t in &on {
                prop_assert!((t.origin - corner).dot(&t.orientation).abs() < 1e-9);
            }
            for (i, a) in on.iter().enumerate() {
                for b in &on[i + 1..] {
                    prop_assert!(!overlap(footprint(a, corner), footprint(b, corner)), "{} overlaps {}", a.id, b.id);
                }
            }
        }
    }

    #[test]
    fn mount_lattice_is_injective_and_on_tile(spec in room_and_counts(), pick in any::<prop::sample::Index>()) {
        let tiles = build_room(&spec).unwrap();
        prop_assume!(!tiles.is_empty());
        let t = &tiles[pick.index(tiles.len())];
        let mut seen = Vec::new();
        for u in 0..=MOUNT_U_MAX as i64 {
            for v in 0..=MOUNT_V_MAX as i64 {
                let p = mount_world_position(t, u, v).unwrap();
                let d = p - t.origin;
                prop_assert!(d.dot(&t.orientation).abs() < 1e-12);
                prop_assert!((-1e-12..=TILE_LONG_M + 1e-12).contains(&d.dot(&t.long_axis)));
                prop_assert!((-1e-12..=TILE_SHORT_M + 1e-12).contains(&d.dot(&t.short_axis)));
                seen.push(p);
            }
        }
        for (i, a) in seen.iter().enumerate() {
            for b in &seen[i + 1..] {
                prop_assert!((a - b).norm() > MOUNT_PITCH_M - 1e-9);
            }
        }
        prop_assert!(mount_world_position(t, -1, 0).is_err());
        prop_assert!(mount_world_position(t, 0, MOUNT_V_MAX as i64 + 1).is_err());
    }
}

#[test]
fn overfull_surface_is_rejected() {
    let spec = RoomSpec::default();
    let cap = surface_capacity(&spec, Surface::Floor);
    let spec = RoomSpec { counts: SurfaceCounts::only(Surface::Floor, cap + 1), ..spec };
    assert!(matches!(build_room(&spec), Err(RoomError::CountExceedsSurface { requested, capacity, .. }) if requested == cap + 1 && capacity == cap));
}
