//! Box and point geometry shared by every pipeline stage.
//!
//! Coordinates are continuous `f64` pixels with the origin at the top-left
//! corner and y growing downward. Rounding to integer pixel indices happens
//! only at crop/draw time, so expansion and clamping do not accumulate
//! rasterization error.

use serde::{Deserialize, Serialize};

/// Width and height of a raster in whole pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub width: u32,
    pub height: u32,
}

impl FrameDims {
    pub fn new(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "frame dims must be >= 1");
        Self { width, height }
    }

    /// Number of pixels in the raster.
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Length of the raster diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        let w = self.width as f64;
        let h = self.height as f64;
        (w * w + h * h).sqrt()
    }
}

impl std::fmt::Display for FrameDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Axis-aligned rectangle; `(x, y)` is the top-left corner, `w`/`h` are
/// nonnegative extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        debug_assert!(w >= 0.0 && h >= 0.0, "box extents must be nonnegative");
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0.0 || self.h <= 0.0
    }

    /// Center point of the box. A degenerate box yields its corner.
    pub fn centroid(&self) -> Point2D {
        Point2D {
            x: self.x + self.w / 2.0,
            y: self.y + self.h / 2.0,
        }
    }
}

/// A point in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn distance(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Intersects `b` with `[0, width] x [0, height]`.
///
/// Total: a box fully outside the raster collapses to a zero-area box on the
/// nearest edge instead of going negative.
pub fn clamp_box(b: &BoundingBox, dims: FrameDims) -> BoundingBox {
    let w = dims.width as f64;
    let h = dims.height as f64;
    let x0 = b.x.clamp(0.0, w);
    let y0 = b.y.clamp(0.0, h);
    let x1 = (b.x + b.w).clamp(0.0, w);
    let y1 = (b.y + b.h).clamp(0.0, h);
    BoundingBox {
        x: x0,
        y: y0,
        w: (x1 - x0).max(0.0),
        h: (y1 - y0).max(0.0),
    }
}

/// Center of `b`; see [`BoundingBox::centroid`].
pub fn centroid(b: &BoundingBox) -> Point2D {
    b.centroid()
}

/// Intersection-over-union of two boxes, in `[0, 1]`. Zero when the union
/// has no area.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix0 = a.x.max(b.x);
    let iy0 = a.y.max(b.y);
    let ix1 = (a.x + a.w).min(b.x + b.w);
    let iy1 = (a.y + a.h).min(b.y + b.h);
    let iw = (ix1 - ix0).max(0.0);
    let ih = (iy1 - iy0).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HD: FrameDims = FrameDims {
        width: 1920,
        height: 1080,
    };

    #[test]
    fn clamp_negative_corner() {
        let b = BoundingBox::new(-10.0, -10.0, 120.0, 120.0);
        let c = clamp_box(&b, HD);
        assert_eq!(c, BoundingBox::new(0.0, 0.0, 110.0, 110.0));
    }

    #[test]
    fn clamp_interior_unchanged() {
        let b = BoundingBox::new(100.0, 100.0, 50.0, 50.0);
        assert_eq!(clamp_box(&b, HD), b);
    }

    #[test]
    fn clamp_fully_outside_collapses_to_edge() {
        let b = BoundingBox::new(2000.0, 0.0, 50.0, 50.0);
        let c = clamp_box(&b, HD);
        assert_eq!(c, BoundingBox::new(1920.0, 0.0, 0.0, 50.0));
    }

    #[test]
    fn centroid_cases() {
        assert_eq!(
            centroid(&BoundingBox::new(0.0, 0.0, 10.0, 10.0)),
            Point2D { x: 5.0, y: 5.0 }
        );
        assert_eq!(
            centroid(&BoundingBox::new(90.0, 90.0, 120.0, 120.0)),
            Point2D { x: 150.0, y: 150.0 }
        );
        // Degenerate box: centroid is the corner itself.
        assert_eq!(
            centroid(&BoundingBox::new(3.0, 7.0, 0.0, 0.0)),
            Point2D { x: 3.0, y: 7.0 }
        );
    }

    #[test]
    fn iou_identical_is_one() {
        let b = BoundingBox::new(5.0, 6.0, 30.0, 40.0);
        assert_eq!(iou(&b, &b), 1.0);
    }

    #[test]
    fn iou_disjoint_is_zero() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BoundingBox::new(100.0, 100.0, 10.0, 10.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BoundingBox::new(5.0, 0.0, 10.0, 10.0);
        let v = iou(&a, &b);
        assert!((v - 1.0 / 3.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn iou_degenerate_boxes() {
        let a = BoundingBox::new(1.0, 1.0, 0.0, 0.0);
        let b = BoundingBox::new(1.0, 1.0, 0.0, 0.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_symmetric_and_bounded_over_ten_thousand_pairs() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(17);
        let mut random_box = |rng: &mut StdRng| {
            BoundingBox::new(
                rng.random_range(-500.0..2500.0),
                rng.random_range(-500.0..1500.0),
                rng.random_range(0.0..800.0),
                rng.random_range(0.0..800.0),
            )
        };
        for _ in 0..10_000 {
            let a = random_box(&mut rng);
            let b = random_box(&mut rng);
            let ab = iou(&a, &b);
            assert_eq!(ab, iou(&b, &a));
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (
            -500.0f64..2500.0,
            -500.0f64..1500.0,
            0.0f64..800.0,
            0.0f64..800.0,
        )
            .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(b in arb_box()) {
            let once = clamp_box(&b, HD);
            let twice = clamp_box(&once, HD);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn clamp_never_increases_area(b in arb_box()) {
            prop_assert!(clamp_box(&b, HD).area() <= b.area() + 1e-9);
        }

        #[test]
        fn clamped_centroid_inside_raster(b in arb_box()) {
            let c = centroid(&clamp_box(&b, HD));
            prop_assert!(c.x >= 0.0 && c.x <= 1920.0);
            prop_assert!(c.y >= 0.0 && c.y <= 1080.0);
        }

        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            let ba = iou(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
