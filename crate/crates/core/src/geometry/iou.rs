//! Axis-aligned and rotated-rectangle intersection over union.

use alloc::vec::Vec;

use crate::fmath;

use super::{Box2D, RotatedBoxBEV};

/// Intersection areas below this count as no overlap (degenerate slivers
/// from shared edges).
const MIN_INTERSECTION: f64 = 1e-12;

/// IoU of two axis-aligned boxes; 0 when disjoint.
pub fn iou_aabb(a: &Box2D, b: &Box2D) -> f64 {
    let ix = f64::min(a.x_max, b.x_max) - f64::max(a.x_min, b.x_min);
    let iy = f64::min(a.y_max, b.y_max) - f64::max(a.y_min, b.y_min);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// The four corners of a rotated BEV box, counterclockwise starting from the
/// `(+l/2, +w/2)` corner.
pub fn rotated_corners(b: &RotatedBoxBEV) -> [[f64; 2]; 4] {
    let (s, c) = (fmath::sin(b.yaw), fmath::cos(b.yaw));
    let offsets = [
        (0.5 * b.l, 0.5 * b.w),
        (-0.5 * b.l, 0.5 * b.w),
        (-0.5 * b.l, -0.5 * b.w),
        (0.5 * b.l, -0.5 * b.w),
    ];
    let mut out = [[0.0; 2]; 4];
    for (i, &(dl, dw)) in offsets.iter().enumerate() {
        out[i] = [b.cx + c * dl - s * dw, b.cy + s * dl + c * dw];
    }
    out
}

/// Signed shoelace area; positive for counterclockwise polygons.
pub fn polygon_area(points: &[[f64; 2]]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        acc += points[i][0] * points[j][1] - points[j][0] * points[i][1];
    }
    fmath::abs(acc) / 2.0
}

/// Clips a polygon against the half-plane left of the directed edge a -> b
/// (Sutherland-Hodgman step; clip polygon must be counterclockwise).
fn clip_edge(subject: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(subject.len() + 2);
    let inside = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0;
    let n = subject.len();
    for i in 0..n {
        let cur = subject[i];
        let prev = subject[(i + n - 1) % n];
        let cur_in = inside(cur);
        let prev_in = inside(prev);
        if cur_in != prev_in {
            // Segment crosses the clip line; add the intersection point.
            let dx = cur[0] - prev[0];
            let dy = cur[1] - prev[1];
            let denom = (b[0] - a[0]) * dy - (b[1] - a[1]) * dx;
            if denom != 0.0 {
                let t = ((b[0] - a[0]) * (a[1] - prev[1]) - (b[1] - a[1]) * (a[0] - prev[0]))
                    / denom;
                out.push([prev[0] + t * dx, prev[1] + t * dy]);
            }
        }
        if cur_in {
            out.push(cur);
        }
    }
    out
}

/// Intersection area of two rotated rectangles by Sutherland-Hodgman
/// clipping and the shoelace formula. For the unit square against itself
/// rotated 45 degrees this is the classic octagon area `2(sqrt(2) - 1)`.
pub fn rotated_intersection_area(a: &RotatedBoxBEV, b: &RotatedBoxBEV) -> f64 {
    let mut poly: Vec<[f64; 2]> = rotated_corners(a).to_vec();
    let clip = rotated_corners(b);
    for i in 0..4 {
        if poly.len() < 3 {
            return 0.0;
        }
        poly = clip_edge(&poly, clip[i], clip[(i + 1) % 4]);
    }
    polygon_area(&poly)
}

/// IoU of two rotated BEV rectangles via convex polygon clipping.
///
/// Exactly symmetric in its arguments: operands are ordered by a canonical
/// key before clipping so both call orders run the identical float path.
pub fn iou_rotated(a: &RotatedBoxBEV, b: &RotatedBoxBEV) -> f64 {
    let key = |r: &RotatedBoxBEV| (r.cx, r.cy, r.w, r.l, r.yaw);
    let (first, second) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    let inter = rotated_intersection_area(first, second);
    if inter < MIN_INTERSECTION {
        return 0.0;
    }
    let union = first.area() + second.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}
