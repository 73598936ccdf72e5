//! Ray-cast RGB-D scenes built from textured axis-aligned rectangles.
//!
//! Used by the examples and tests as a stand-in for real RGB-D captures.

use image::{Rgb, RgbImage};
use nalgebra::{Matrix3, Vector3};

use crate::frame::{DepthMap, RgbdFrame};
use crate::geometry::{CameraIntrinsics, Pose};

/// Axis-aligned rectangle `x[axis] = coord` spanning `lo..hi` on the two
/// remaining axes (in cyclic order `axis+1`, `axis+2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub axis: usize,
    pub coord: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub color: [f64; 3],
    /// Checker cell size in meters.
    pub cell: f64,
}

impl Quad {
    fn texture(&self, a: f64, b: f64) -> [u8; 3] {
        let checker =
            ((a / self.cell).floor() as i64 + (b / self.cell).floor() as i64).rem_euclid(2) as f64;
        let wave = 0.5 + 0.5 * (3.1 * a + 1.7 * b).sin() * (2.3 * b - 0.9 * a).cos();
        let shade = 0.55 + 0.25 * checker + 0.2 * wave;
        let mut out = [0u8; 3];
        for (o, c) in out.iter_mut().zip(self.color) {
            *o = (255.0 * c * shade).round().clamp(0.0, 255.0) as u8;
        }
        out
    }

    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, [u8; 3])> {
        let d = dir[self.axis];
        if d.abs() < 1e-12 {
            return None;
        }
        let t = (self.coord - origin[self.axis]) / d;
        if t <= 1e-6 {
            return None;
        }
        let hit = origin + dir * t;
        let (i, j) = ((self.axis + 1) % 3, (self.axis + 2) % 3);
        let (a, b) = (hit[i], hit[j]);
        const EDGE: f64 = 1e-9;
        if a < self.lo[0] - EDGE
            || a > self.hi[0] + EDGE
            || b < self.lo[1] - EDGE
            || b > self.hi[1] + EDGE
        {
            return None;
        }
        Some((t, self.texture(a, b)))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub quads: Vec<Quad>,
}

fn quad(axis: usize, coord: f64, lo: [f64; 2], hi: [f64; 2], color: [f64; 3]) -> Quad {
    Quad {
        axis,
        coord,
        lo,
        hi,
        color,
        cell: 0.3,
    }
}

/// `[min, max]` bounds per axis in x, y, z order.
type Aabb = [[f64; 2]; 3];

/// Rectangle bounds of an AABB face on `axis`, in that quad's cyclic axis order.
fn face_bounds(b: &Aabb, axis: usize) -> ([f64; 2], [f64; 2]) {
    let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
    ([b[i][0], b[j][0]], [b[i][1], b[j][1]])
}

impl Scene {
    /// Six faces of a box; visible from inside or outside alike.
    pub fn add_box(&mut self, b: Aabb, colors: [[f64; 3]; 3]) {
        for axis in 0..3 {
            let (lo, hi) = face_bounds(&b, axis);
            for coord in b[axis] {
                self.quads.push(quad(axis, coord, lo, hi, colors[axis]));
            }
        }
    }

    /// A 6 m x 3 m x 8 m room (y down, floor at y = 1.5) with two crates,
    /// viewed from the origin looking down +z.
    pub fn textured_room() -> Self {
        let mut s = Scene::default();
        s.add_box(
            [[-3.0, 3.0], [-1.5, 1.5], [-2.0, 6.0]],
            [[0.85, 0.55, 0.45], [0.6, 0.75, 0.9], [0.7, 0.85, 0.55]],
        );
        s.add_box(
            [[-1.6, -0.5], [0.5, 1.5], [2.4, 3.4]],
            [[0.9, 0.3, 0.3], [0.95, 0.8, 0.3], [0.4, 0.4, 0.9]],
        );
        s.add_box(
            [[0.7, 1.9], [-0.1, 1.5], [3.3, 4.4]],
            [[0.35, 0.8, 0.7], [0.8, 0.45, 0.85], [0.95, 0.65, 0.35]],
        );
        s
    }

    /// Two rooms split by a partition at `x = 0` that starts 3 m in front of
    /// the origin; the near half of the hall is shared.
    pub fn two_rooms() -> Self {
        let mut s = Scene::default();
        s.add_box(
            [[-5.0, 5.0], [-1.5, 1.5], [-1.0, 8.0]],
            [[0.8, 0.6, 0.5], [0.6, 0.7, 0.9], [0.75, 0.8, 0.6]],
        );
        // partition, slightly thick so both faces exist
        s.add_box(
            [[-0.05, 0.05], [-1.5, 1.5], [3.0, 8.0]],
            [[0.9, 0.9, 0.6], [0.5, 0.5, 0.5], [0.6, 0.6, 0.6]],
        );
        s.add_box(
            [[-3.5, -2.3], [0.4, 1.5], [5.0, 6.2]],
            [[0.9, 0.3, 0.3], [0.9, 0.8, 0.3], [0.3, 0.4, 0.9]],
        );
        s.add_box(
            [[2.0, 3.4], [0.0, 1.5], [5.5, 6.5]],
            [[0.3, 0.8, 0.6], [0.8, 0.4, 0.8], [0.9, 0.6, 0.3]],
        );
        s
    }

    /// Nearest hit along a world ray: `(t, color)`.
    pub fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, [u8; 3])> {
        self.quads
            .iter()
            .filter_map(|q| q.intersect(origin, dir))
            .fold(None, |best, hit| match best {
                Some((t, _)) if t <= hit.0 => best,
                _ => Some(hit),
            })
    }

    /// Ray-cast RGB and z-depth from a world-to-camera pose.
    pub fn render(
        &self,
        id: &str,
        k: &CameraIntrinsics,
        pose_w2c: &Pose,
        width: u32,
        height: u32,
    ) -> RgbdFrame {
        let c2w = pose_w2c.inverse();
        let origin = pose_w2c.camera_center();
        let r = *c2w.rotation();
        let mut rgb = RgbImage::new(width, height);
        let depth = DepthMap::from_fn(width as usize, height as usize, |x, y| {
            // camera-frame ray with unit z, so the hit parameter is the depth
            let d_cam = Vector3::new((x as f64 - k.cx) / k.fx, (y as f64 - k.cy) / k.fy, 1.0);
            match self.cast(&origin, &(r * d_cam)) {
                Some((t, c)) => {
                    rgb.put_pixel(x as u32, y as u32, Rgb(c));
                    t
                }
                None => 0.0,
            }
        });
        RgbdFrame {
            id: id.to_string(),
            rgb,
            depth,
            intrinsics: *k,
            pose_c2w: Some(c2w),
        }
    }
}

/// Default synthetic camera: 640x480, f = 500 px, centered principal point.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0).expect("valid constants")
}

/// World-to-camera pose of a camera at `center` turned by `yaw_deg` about the
/// vertical (y) axis and `pitch_deg` about its x axis. Zero yaw looks down +z.
pub fn look_pose(center: Vector3<f64>, yaw_deg: f64, pitch_deg: f64) -> Pose {
    let (sy, cy) = yaw_deg.to_radians().sin_cos();
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let yaw = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
    let pitch = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    let r_c2w = yaw * pitch;
    Pose::new_orthonormalized(r_c2w, center, 1e-9)
        .expect("product of rotations")
        .inverse()
}

/// The textured room seen from the origin, unposed (camera frame = world).
pub fn textured_room_frame() -> RgbdFrame {
    let mut f = Scene::textured_room().render(
        "textured_room",
        &default_intrinsics(),
        &Pose::identity(),
        640,
        480,
    );
    f.pose_c2w = None;
    f
}

/// Twenty posed frames in the two-room scene: frames 0..10 look into the
/// left room, frames 10..20 into the right one, each group drifting slowly.
pub fn two_room_trajectory() -> Vec<RgbdFrame> {
    let scene = Scene::two_rooms();
    let k = default_intrinsics();
    (0..20)
        .map(|i| {
            let (group, j) = (i / 10, (i % 10) as f64);
            let yaw = if group == 0 { -17.5 } else { 17.5 } + 0.3 * j;
            let center = Vector3::new(0.02 * j - 0.1, 0.0, 0.03 * j);
            scene.render(
                &format!("frame_{i:03}"),
                &k,
                &look_pose(center, yaw, 3.0),
                640,
                480,
            )
        })
        .collect()
}
