//! Boxes, detections, and the box <-> measurement conversion.

use nalgebra::Vector4;

/// Measurement vector `[cx, cy, w, h]`.
pub type Measurement = Vector4<f64>;

/// Minimum extent, in pixels, of any box handed to IoU after prediction.
pub const MIN_EXTENT: f64 = 1.0;

/// Axis-aligned box in pixels, `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    /// Same center, with width and height raised to at least [`MIN_EXTENT`].
    pub fn clamped(&self) -> Self {
        if self.w >= MIN_EXTENT && self.h >= MIN_EXTENT {
            return *self;
        }
        let (cx, cy) = self.center();
        Self::from_center(cx, cy, self.w.max(MIN_EXTENT), self.h.max(MIN_EXTENT))
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0
    }
}

/// One detector output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// 1-based frame index.
    pub frame: u32,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// Intersection over union. Zero for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn box_to_measurement(b: &BoundingBox) -> Measurement {
    let (cx, cy) = b.center();
    Vector4::new(cx, cy, b.w, b.h)
}

pub fn measurement_to_box(z: &Measurement) -> BoundingBox {
    BoundingBox::from_center(z[0], z[1], z[2], z[3])
}
