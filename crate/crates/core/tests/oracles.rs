//! Independent reference computations checked against the library.

use mfdepth::costvolume::{depth_hints, make_depth_bins, CostVolume, DEFAULT_BINS};
use mfdepth::distill::robust_mask;
use mfdepth::dynmask::ground_mask;
use mfdepth::fusion::{
    conv2d_forward, msfusion_forward, resblock_forward, upsample_bilinear_2x, Activation, ConvBlockWeights,
    FusionConfig, FusionWeights, ResBlockWeights,
};
use mfdepth::geometry::{backproject, bilinear_sample, fit_ground_plane, CorrespondenceGrid, GroundPlane, Pixel};
use mfdepth::metrics::median_scale;
use mfdepth::photometric::{photometric_error, smoothness, ssim, LossMap};
use mfdepth::synth::{render, BoxSpec, SceneSpec};
use mfdepth::{CameraIntrinsics, DepthMap, ImagePlane, RigidPose};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_plane(r: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> ImagePlane {
    ImagePlane::from_fn(h, w, c, |_, _, _| r.random::<f32>()).unwrap()
}

fn random_depth(r: &mut ChaCha8Rng, h: usize, w: usize) -> DepthMap {
    DepthMap::from_depths(h, w, (0..h * w).map(|_| r.random_range(0.5..40.0f32)).collect()).unwrap()
}

fn sorted_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 { -i } else if i >= n { 2 * n - 2 - i } else { i };
    j as usize
}

fn naive_ssim(a: &ImagePlane, b: &ImagePlane, row: usize, col: usize) -> f64 {
    let (h, w) = a.dims();
    let c = a.channels();
    let mut total = 0.0;
    for ch in 0..c {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for dr in -1..=1 {
            for dc in -1..=1 {
                let r = mirror(row as isize + dr, h);
                let q = mirror(col as isize + dc, w);
                xs.push(a.get(r, q, ch) as f64);
                ys.push(b.get(r, q, ch) as f64);
            }
        }
        let mx = xs.iter().sum::<f64>() / 9.0;
        let my = ys.iter().sum::<f64>() / 9.0;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / 9.0;
        let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / 9.0;
        let cov = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / 9.0;
        let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
        total += (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    total / c as f64
}

#[test]
fn ssim_matches_windowed_definition() {
    let mut r = rng(11);
    for channels in [1, 3] {
        let a = random_plane(&mut r, 16, 16, channels);
        let b = random_plane(&mut r, 16, 16, channels);
        let s = ssim(&a, &b).unwrap();
        for row in 0..16 {
            for col in 0..16 {
                let want = naive_ssim(&a, &b, row, col);
                assert!((s.get(row, col, 0) as f64 - want).abs() < 1e-6, "({row},{col})");
            }
        }
    }
}

#[test]
fn photometric_error_composes_ssim_and_l1() {
    let mut r = rng(12);
    let a = random_plane(&mut r, 9, 13, 3);
    let b = random_plane(&mut r, 9, 13, 3);
    let pe = photometric_error(&a, &b, 0.85).unwrap();
    let s = ssim(&a, &b).unwrap();
    for row in 0..9 {
        for col in 0..13 {
            let l1 = (0..3).map(|c| (a.get(row, col, c) - b.get(row, col, c)).abs() as f64).sum::<f64>() / 3.0;
            let want = 0.425 * (1.0 - s.get(row, col, 0) as f64) + 0.15 * l1;
            assert!((pe.get(row, col) as f64 - want).abs() < 1e-6);
        }
    }
}

fn brute_smoothness(depth: &DepthMap, image: &ImagePlane) -> f64 {
    let (h, w) = depth.dims();
    let c = image.channels();
    let inv: Vec<f64> = depth.data().iter().map(|&d| 1.0 / d as f64).collect();
    let mean = inv.iter().sum::<f64>() / (h * w) as f64;
    let grad = |r0: usize, c0: usize, r1: usize, c1: usize| {
        let g = (0..c).map(|k| (image.get(r0, c0, k) as f64 - image.get(r1, c1, k) as f64).abs()).sum::<f64>();
        let dd = (inv[r0 * w + c0] / mean - inv[r1 * w + c1] / mean).abs();
        dd * (-g / c as f64).exp()
    };
    let mut x = 0.0;
    for row in 0..h {
        for col in 0..w - 1 {
            x += grad(row, col, row, col + 1);
        }
    }
    let mut y = 0.0;
    for row in 0..h - 1 {
        for col in 0..w {
            y += grad(row, col, row + 1, col);
        }
    }
    x / (h * (w - 1)) as f64 + y / ((h - 1) * w) as f64
}

#[test]
fn smoothness_matches_formula_on_inverse_depth_ramp() {
    let (h, w) = (6, 10);
    let ramp = DepthMap::from_depths(h, w, (0..h * w).map(|i| 1.0 / (0.1 + 0.05 * (i % w) as f32)).collect()).unwrap();
    let flat = ImagePlane::new(h, w, 3, 0.5).unwrap();
    let got = smoothness(&ramp, &flat).unwrap();
    assert!((got - brute_smoothness(&ramp, &flat)).abs() < 1e-9);
    // Inverse depth 0.1 + 0.05·col has mean 0.325, so every x step is 0.05 / 0.325.
    assert!((got - 0.05 / 0.325).abs() < 1e-6);

    let edges = ImagePlane::from_fn(h, w, 3, |_, col, _| if col % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
    let edged = smoothness(&ramp, &edges).unwrap();
    assert!((edged - brute_smoothness(&ramp, &edges)).abs() < 1e-9);
    assert!(edged < got);
}

#[test]
fn depth_hints_match_exhaustive_argmin() {
    let mut r = rng(13);
    let bins = make_depth_bins(1.0, 9.0, 9).unwrap();
    let (h, w) = (7, 8);
    let n = bins.count() * h * w;
    // Coarse costs so ties occur.
    let cost: Vec<f32> = (0..n).map(|_| r.random_range(0..6) as f32).collect();
    let valid: Vec<bool> = (0..n).map(|_| r.random::<f64>() > 0.2).collect();
    let vol = CostVolume::from_parts(bins.clone(), h, w, cost.clone(), valid.clone()).unwrap();
    let hints = depth_hints(&vol);
    for p in 0..h * w {
        let mut best: Option<(f32, usize)> = None;
        for b in 0..bins.count() {
            let i = b * h * w + p;
            if valid[i] && best.is_none_or(|(c, _)| cost[i] < c) {
                best = Some((cost[i], b));
            }
        }
        assert_eq!(hints.at(p), best.map(|(_, b)| bins.values()[b] as f32));
    }
}

#[test]
fn default_bin_count_spans_range() {
    assert_eq!(DEFAULT_BINS, 96);
    let bins = make_depth_bins(1.0, 96.0, DEFAULT_BINS).unwrap();
    assert_eq!(bins.values()[0], 1.0);
    assert_eq!(bins.values()[95], 96.0);
}

#[test]
fn median_scale_equalises_medians() {
    let mut r = rng(14);
    for _ in 0..20 {
        let pred = random_depth(&mut r, 5, 9);
        let gt = random_depth(&mut r, 5, 9);
        let (scaled, s) = median_scale(&pred, &gt).unwrap();
        let m_gt = sorted_median(gt.valid_values().map(f64::from).collect());
        let m_pred = sorted_median(pred.valid_values().map(f64::from).collect());
        assert!((s - m_gt / m_pred).abs() < 1e-12);
        assert!((sorted_median(scaled.valid_values().map(f64::from).collect()) - m_gt).abs() < 1e-9);
    }
}

#[test]
fn robust_mask_matches_elementwise_comparison() {
    let mut r = rng(15);
    let a: Vec<f32> = (0..120).map(|_| r.random_range(0..4) as f32 * 0.1).collect();
    let b: Vec<f32> = (0..120).map(|_| r.random_range(0..4) as f32 * 0.1).collect();
    let m = robust_mask(&LossMap::from_vec(10, 12, a.clone()).unwrap(), &LossMap::from_vec(10, 12, b.clone()).unwrap()).unwrap();
    for i in 0..120 {
        assert_eq!(m.data()[i], a[i] < b[i]);
    }
}

fn naive_conv(x: &ImagePlane, wt: &ConvBlockWeights) -> ImagePlane {
    let (h, w) = x.dims();
    let (k, s) = (wt.kernel(), wt.stride());
    let (ci, co) = (wt.c_in(), wt.c_out());
    let (oh, ow) = (h.div_ceil(s), w.div_ceil(s));
    let pad = (k / 2) as isize;
    ImagePlane::from_fn(oh, ow, co, |orow, ocol, o| {
        let mut acc = wt.biases()[o] as f64;
        for c in 0..ci {
            for ky in 0..k {
                for kx in 0..k {
                    let y = (orow * s) as isize + ky as isize - pad;
                    let xx = (ocol * s) as isize + kx as isize - pad;
                    if y < 0 || xx < 0 || y >= h as isize || xx >= w as isize {
                        continue;
                    }
                    let wi = ((o * ci + c) * k + ky) * k + kx;
                    acc += wt.weights()[wi] as f64 * x.get(y as usize, xx as usize, c) as f64;
                }
            }
        }
        match wt.activation() {
            Activation::Linear => acc as f32,
            Activation::Elu => (if acc > 0.0 { acc } else { acc.exp() - 1.0 }) as f32,
        }
    })
    .unwrap()
}

#[test]
fn resblock_matches_composed_naive_convolutions() {
    let mut r = rng(16);
    for (h, w, ci, co) in [(8, 8, 3, 5), (7, 10, 2, 4), (5, 3, 4, 4)] {
        let x = ImagePlane::from_fn(h, w, ci, |_, _, _| r.random_range(-1.0..1.0f32)).unwrap();
        let wt = ResBlockWeights::random(ci, co, &mut r).unwrap();
        let main = naive_conv(&naive_conv(&x, &wt.conv1), &wt.conv2);
        let skip = naive_conv(&x, &wt.projection);
        let got = resblock_forward(&x, &wt).unwrap();
        assert_eq!(got.dims(), (h.div_ceil(2), w.div_ceil(2)));
        for ((g, a), b) in got.data().iter().zip(main.data()).zip(skip.data()) {
            assert!((g - (a + b)).abs() < 1e-5);
        }
    }
}

#[test]
fn upsample_matches_half_pixel_bilinear_grid() {
    let mut r = rng(17);
    let x = random_plane(&mut r, 4, 4, 2);
    let (oh, ow) = (8, 8);
    let half = |i: usize| ((i as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, 3.0);
    let mut u = Vec::new();
    let mut v = Vec::new();
    for row in 0..oh {
        for col in 0..ow {
            u.push(half(col));
            v.push(half(row));
        }
    }
    let grid = CorrespondenceGrid::from_coords(oh, ow, u, v, vec![true; oh * ow]).unwrap();
    let (want, mask) = bilinear_sample(&x, &grid);
    assert_eq!(mask.count(), oh * ow);
    let got = upsample_bilinear_2x(&x);
    for (g, w) in got.data().iter().zip(want.data()) {
        assert!((g - w).abs() < 1e-6);
    }
}

#[test]
fn fused_slices_equal_independent_branches() {
    let mut r = rng(18);
    let f1 = random_plane(&mut r, 16, 32, 3);
    let f2 = random_plane(&mut r, 8, 16, 6);
    let cfg = FusionConfig { down_width: 5, f12_channels: 7, f32_channels: 4, ..FusionConfig::with_inputs(3, 6) };
    let weights = FusionWeights::seeded(&cfg, 99).unwrap();
    let out = msfusion_forward(&f1, &f2, &weights).unwrap();
    assert_eq!(out.fms.dims(), (8, 16));
    assert_eq!(out.fms.channels(), 6 + 7 + 4);

    let down = conv2d_forward(&f1, &weights.down).unwrap();
    let f12 = conv2d_forward(&ImagePlane::concat(&[&down, &f2]).unwrap(), &weights.fuse).unwrap();
    let f32_ = upsample_bilinear_2x(&resblock_forward(&f2, &weights.res).unwrap());
    assert_eq!(out.fms.channel_slice(0, 6).unwrap(), f2);
    assert_eq!(out.fms.channel_slice(6, 7).unwrap(), f12);
    assert_eq!(out.fms.channel_slice(13, 4).unwrap(), f32_);
}

fn flat_ground_scene() -> SceneSpec {
    SceneSpec {
        ground_height: 1.5,
        boxes: vec![
            BoxSpec::new([-1.0, 0.0, 7.0], [1.0, 1.0, 1.0], [0.0; 3], 1),
            BoxSpec::new([1.5, -2.2, 9.0], [1.0, 1.0, 1.0], [0.0; 3], 2),
        ],
        texture_frequency: 1.0,
        backdrop_depth: None,
        texture_seed: 0,
    }
}

#[test]
fn rendered_flat_ground_gives_camera_height() {
    let k = CameraIntrinsics::centered(96, 128, 80.0).unwrap();
    let f = render(&flat_ground_scene(), &RigidPose::identity(), &k, 96, 128, 0.0).unwrap();
    let plane = fit_ground_plane(&f.depth, &k, 1.0 / 3.0, &mut rng(1)).unwrap();
    assert!((plane.camera_height - 1.5).abs() < 0.015, "{}", plane.camera_height);
    assert!((plane.normal.norm() - 1.0).abs() < 1e-9);
}

fn least_squares_plane(points: &[Vector3<f64>]) -> (Vector3<f64>, f64) {
    let n = points.len() as f64;
    let c = points.iter().sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let i = eig.eigenvalues.imin();
    let mut normal: Vector3<f64> = eig.eigenvectors.column(i).into();
    if normal.y < 0.0 {
        normal = -normal;
    }
    (normal, -normal.dot(&c))
}

#[test]
fn ransac_ignores_outliers() {
    // Tilted ground seen by a camera 1.6 above it, plus 10% of pixels at random depths.
    let (h, w) = (60, 80);
    let k = CameraIntrinsics::centered(h, w, 60.0).unwrap();
    let normal = Vector3::new(0.05, 1.0, -0.08).normalize();
    let offset = -1.6;
    let mut r = rng(19);
    let mut depth = vec![0f32; h * w];
    let mut valid = vec![false; h * w];
    let mut inliers = Vec::new();
    for row in 2 * h / 3..h {
        for col in 0..w {
            let ray = backproject(Pixel::new(col as f64, row as f64), 1.0, &k).unwrap();
            let d = -offset / normal.dot(&ray);
            let i = row * w + col;
            valid[i] = true;
            if r.random::<f64>() < 0.1 {
                depth[i] = r.random_range(0.5..30.0);
            } else {
                depth[i] = d as f32;
                inliers.push(ray * depth[i] as f64);
            }
        }
    }
    let map = DepthMap::from_parts(h, w, depth, valid).unwrap();
    let plane = fit_ground_plane(&map, &k, 1.0 / 3.0, &mut r).unwrap();
    let (n_ls, o_ls) = least_squares_plane(&inliers);
    assert!((plane.camera_height - o_ls.abs()).abs() < 0.02 * o_ls.abs());
    assert!((plane.normal - n_ls).norm() < 0.02);
    assert!((plane.camera_height - 1.6).abs() < 0.02 * 1.6);
}

#[test]
fn ground_band_matches_scene_geometry() {
    let k = CameraIntrinsics::centered(96, 128, 80.0).unwrap();
    let f = render(&flat_ground_scene(), &RigidPose::identity(), &k, 96, 128, 0.0).unwrap();
    // Box 1 spans y ∈ [-0.5, 0.5]; box 2 spans y ∈ [-2.7, -1.7]; ground sits at y = 1.5.
    let above = ground_mask(&f.depth, &k, &GroundPlane::level(1.6).unwrap());
    let below = ground_mask(&f.depth, &k, &GroundPlane::level(1.4).unwrap());
    let mut counts = [0usize; 3];
    for i in 0..96 * 128 {
        if f.depth.at(i).is_none() {
            assert!(!above.data()[i] && !below.data()[i]);
            continue;
        }
        let id = f.object_id[i] as usize;
        counts[id] += 1;
        let (a, b) = (above.data()[i], below.data()[i]);
        match id {
            0 => assert!(a && !b),
            1 => assert!(a && b),
            _ => assert!(!a && !b),
        }
    }
    assert!(counts.iter().all(|&c| c > 50), "{counts:?}");
}
