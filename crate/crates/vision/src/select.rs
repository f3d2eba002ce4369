use swarm_core::GridPosition;

use crate::contours::Contour;

/// Equivalent diameters accepted as a swarm.
pub const SWARM_DIAMETER_UM: (f64, f64) = (50.0, 200.0);

/// The largest-area contour whose equivalent diameter (at `um_per_px`) lies
/// within the swarm range. Ties keep the first.
pub fn select_contour(contours: &[Contour], um_per_px: f64) -> Option<&Contour> {
    assert!(um_per_px > 0.0, "scale must be positive");
    let (lo, hi) = SWARM_DIAMETER_UM;
    contours.iter().filter(|c| (lo..=hi).contains(&(c.equivalent_diameter() * um_per_px))).fold(
        None,
        |best: Option<&Contour>, c| match best {
            Some(b) if b.m00 >= c.m00 => Some(b),
            _ => Some(c),
        },
    )
}

/// Centroid, in pixel coordinates, of the selected contour.
pub fn select_swarm(contours: &[Contour], um_per_px: f64) -> Option<GridPosition> {
    select_contour(contours, um_per_px).map(|c| {
        let (x, y) = c.centroid();
        GridPosition::new(x, y)
    })
}
