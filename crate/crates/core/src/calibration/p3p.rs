//! Three-point absolute pose (Grunert's elimination) and a four-point
//! disambiguating wrapper used as the RANSAC minimal solver.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::geometry::{nearest_rotation, Pose};

/// Real roots of `coeffs[0] x^n + ... + coeffs[n]`, polished with Newton steps.
pub(crate) fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let mut c: Vec<f64> = coeffs.iter().map(|v| v / scale).collect();
    while c.len() > 1 && c[0].abs() < 1e-12 {
        c.remove(0);
    }
    let degree = c.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    if degree == 1 {
        return vec![-c[1] / c[0]];
    }
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for j in 0..degree {
        companion[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    let eig = companion.complex_eigenvalues();
    let eval = |x: f64| c.iter().fold(0.0, |acc, &k| acc * x + k);
    let deriv = |x: f64| {
        c.iter()
            .enumerate()
            .take(degree)
            .fold(0.0, |acc, (i, &k)| acc * x + k * (degree - i) as f64)
    };
    let mut roots = Vec::new();
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut x = z.re;
        for _ in 0..8 {
            let d = deriv(x);
            if d == 0.0 {
                break;
            }
            let step = eval(x) / d;
            x -= step;
            if step.abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        if x.is_finite() {
            roots.push(x);
        }
    }
    roots
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    // Coefficients ordered lowest degree first.
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64], scale_b: f64) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + scale_b * b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Least-squares rigid alignment `dst ≈ R src + t`.
pub(crate) fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> Option<Pose> {
    let n = src.len() as f64;
    let cs = src.iter().sum::<Vector3<f64>>() / n;
    let cd = dst.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = nearest_rotation(&(v * d * u.transpose()));
    let t = cd - r * cs;
    if !(r.iter().all(|x| x.is_finite()) && t.iter().all(|x| x.is_finite())) {
        return None;
    }
    Some(Pose::from_parts_unchecked(r, t))
}

/// All world-to-camera poses consistent with three world points and their
/// unit bearing vectors.
pub fn p3p(world: &[Vector3<f64>; 3], bearings: &[Vector3<f64>; 3]) -> Vec<Pose> {
    let [x1, x2, x3] = world;
    let [j1, j2, j3] = bearings;
    let a2 = (x2 - x3).norm_squared();
    let b2 = (x1 - x3).norm_squared();
    let c2 = (x1 - x2).norm_squared();
    if a2 < 1e-18 || b2 < 1e-18 || c2 < 1e-18 {
        return Vec::new();
    }
    let ca = j2.dot(j3);
    let cb = j1.dot(j3);
    let cg = j1.dot(j2);
    let k = (a2 - c2) / b2;
    let c_ratio = c2 / b2;

    // With s2 = u s1 and s3 = v s1, eliminating u from the law-of-cosines
    // system gives u = N(v) / D(v) and a quartic in v.
    let num = [1.0 + k, -2.0 * k * cb, k - 1.0];
    let den = [2.0 * cg, -2.0 * ca];
    let q = [1.0, -2.0 * cb, 1.0];
    let den2 = poly_mul(&den, &den);
    let mut quartic = poly_add(&den2, &poly_mul(&num, &num), 1.0);
    quartic = poly_add(&quartic, &poly_mul(&num, &den), -2.0 * cg);
    quartic = poly_add(&quartic, &poly_mul(&q, &den2), -c_ratio);
    let highest_first: Vec<f64> = quartic.iter().rev().copied().collect();

    let mut poses = Vec::new();
    for v in real_roots(&highest_first) {
        let d = den[0] + den[1] * v;
        if d.abs() < 1e-12 {
            continue;
        }
        let u = (num[0] + num[1] * v + num[2] * v * v) / d;
        let qv = 1.0 + v * v - 2.0 * v * cb;
        if qv <= 0.0 || u <= 0.0 || v <= 0.0 {
            continue;
        }
        let s1 = (b2 / qv).sqrt();
        let cam = [j1 * s1, j2 * (u * s1), j3 * (v * s1)];
        // reject spurious roots that break the first distance constraint
        let a_fit = (cam[1] - cam[2]).norm_squared();
        if (a_fit - a2).abs() > 1e-6 * a2.max(1e-12) {
            continue;
        }
        if let Some(p) = kabsch(world, &cam) {
            poses.push(p);
        }
    }
    poses
}

/// Minimal four-point solver: P3P on the first three points, disambiguated
/// by the angular error of the fourth.
pub fn p4p(world: &[Vector3<f64>; 4], bearings: &[Vector3<f64>; 4]) -> Option<Pose> {
    let poses = p3p(
        &[world[0], world[1], world[2]],
        &[bearings[0], bearings[1], bearings[2]],
    );
    poses
        .into_iter()
        .filter_map(|p| {
            let c = p.transform_point(&world[3]);
            if c.z <= 0.0 {
                return None;
            }
            let err = 1.0 - c.normalize().dot(&bearings[3]);
            Some((err, p))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rodrigues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quartic_roots() {
        // (x-1)(x-2)(x+3)(x^2+1) has three real roots.
        let c = [1.0, 0.0, -6.0, 6.0, -7.0, 6.0];
        let mut r = real_roots(&c);
        r.sort_by(f64::total_cmp);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn recovers_planted_pose() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        for _ in 0..200 {
            let axis = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let truth = Pose::new(
                rodrigues(&axis, rng.random_range(0.0..3.0)).unwrap(),
                Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ),
            )
            .unwrap();
            let inv = truth.inverse();
            let mut world = [Vector3::zeros(); 4];
            let mut bearings = [Vector3::zeros(); 4];
            for i in 0..4 {
                let cam = Vector3::new(
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(2.0..6.0),
                );
                world[i] = inv.transform_point(&cam);
                bearings[i] = cam.normalize();
            }
            let est = p4p(&world, &bearings).expect("solution");
            let rot_err = est.rotation_angle_to(&truth);
            let t_err = (est.translation() - truth.translation()).norm();
            if rot_err < 1e-6 && t_err < 1e-6 {
                hits += 1;
            }
        }
        assert!(hits >= 195, "only {hits}/200 exact recoveries");
    }
}
