//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mfdepth::costvolume::{build_cost_volume, consistency_mask, depth_hints, make_depth_bins, ChannelReduction};
use mfdepth::distill::{total_loss, LossInputs, DEFAULT_BETA};
use mfdepth::dynmask::{generate_masks, MaskConfig};
use mfdepth::fusion::{msfusion_forward, Activation, ConvBlockWeights, FusionConfig, FusionWeights};
use mfdepth::geometry::{backproject, inverse_warp, overfit_depth, project, warp_grid, Pixel};
use mfdepth::io::{depth_to_pfm, image_to_pnm, mask_to_pgm, write_file, write_json};
use mfdepth::metrics::{evaluate, EvalReport};
use mfdepth::photometric::{photometric_error, LossMap, DEFAULT_ALPHA};
use mfdepth::synth::{demo_scene, overfit_depth_map, render, BoxSpec, DemoVariant, RenderedFrame, SceneSpec};
use mfdepth::{BinaryMask, CameraIntrinsics, DepthMap, ImagePlane, ObjectMotion, RigidPose};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, f64, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unit(r: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

// 1 ---------------------------------------------------------------------

fn geometry_round_trip() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let k = CameraIntrinsics::new(
            r.random_range(20.0..2000.0),
            r.random_range(20.0..2000.0),
            r.random_range(-50.0..1000.0),
            r.random_range(-50.0..600.0),
        )
        .unwrap();
        let px = Pixel::new(r.random_range(-100.0..2000.0), r.random_range(-100.0..1200.0));
        let depth = 10f64.powf(r.random_range(-2.0..3.0));
        let back = project(&backproject(px, depth, &k).unwrap(), &k).unwrap();
        worst = worst.max((back.u - px.u).abs()).max((back.v - px.v).abs());
    }
    check(worst < 1e-9, format!("max |Δpx| = {worst:.2e} over 10^4 samples"))
}

// 2 ---------------------------------------------------------------------

const W: usize = 256;
const H: usize = 128;

/// Texture and depth range are chosen so the point-sampled renderer does not
/// alias, even on the grazing ground near the horizon.
fn rigid_scene() -> SceneSpec {
    SceneSpec {
        ground_height: 1.5,
        boxes: vec![
            BoxSpec::new([-1.8, 0.75, 8.0], [1.5, 1.5, 1.5], [0.0; 3], 21),
            BoxSpec::new([2.6, 0.5, 12.0], [2.0, 2.0, 2.0], [0.0; 3], 22),
        ],
        texture_frequency: 0.25,
        backdrop_depth: Some(15.0),
        texture_seed: 5,
    }
}

fn k_rigid() -> CameraIntrinsics {
    CameraIntrinsics::centered(H, W, 128.0).unwrap()
}

/// Target pixels whose source correspondence is inside the image, not
/// occluded, and whose four bilinear taps all lie on the same object, with
/// the whole 3×3 neighbourhood satisfying the same.
fn visible(target: &RenderedFrame, source: &RenderedFrame, pose: &RigidPose, k: &CameraIntrinsics) -> BinaryMask {
    let grid = warp_grid(&target.depth, pose, k);
    let mask = BinaryMask::from_fn(H, W, |row, col| {
        let (Some(px), Some(z)) = (grid.get(row, col), grid.source_depth(row, col)) else { return false };
        let id = target.object_id[row * W + col];
        let (x0, y0) = (px.u.floor() as usize, px.v.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(W - 1), (y0 + 1).min(H - 1));
        let same = [(y0, x0), (y0, x1), (y1, x0), (y1, x1)]
            .iter()
            .all(|&(y, x)| source.object_id[y * W + x] == id);
        let (sr, sc) = (px.v.round() as usize, px.u.round() as usize);
        same && source.depth.get(sr, sc).is_some_and(|d| ((d as f64 - z) / z).abs() < 0.05)
    })
    .unwrap();
    mask.eroded()
}

fn rigid_warp_consistency() -> Outcome {
    let scene = rigid_scene();
    let k = k_rigid();
    let pose = RigidPose::from_axis_angle(Vector3::new(0.2, 1.0, 0.1), 0.03, Vector3::new(0.25, -0.03, 0.4)).unwrap();
    let target = render(&scene, &RigidPose::identity(), &k, H, W, 0.0).unwrap();
    let source = render(&scene, &pose, &k, H, W, 0.0).unwrap();
    let (recon, _) = inverse_warp(&source.image, &target.depth, &pose, &k).unwrap();
    let pe = photometric_error(&target.image, &recon, DEFAULT_ALPHA).unwrap();
    let eval = visible(&target, &source, &pose, &k);
    let (mut sum, mut n) = (0.0, 0usize);
    for (&v, &ok) in pe.data().iter().zip(eval.data()) {
        if ok {
            sum += v as f64;
            n += 1;
        }
    }
    let mean = sum / n as f64;
    check(
        mean < 1e-3 && n > H * W / 2,
        format!("mean PE {mean:.2e} over {n} valid static pixels"),
    )
}

// 3 ---------------------------------------------------------------------

fn plane_sweep_correctness() -> Outcome {
    let scene = rigid_scene();
    let k = k_rigid();
    let pose = RigidPose::from_translation(Vector3::new(-0.8, 0.0, 0.0));
    let target = render(&scene, &RigidPose::identity(), &k, H, W, 0.0).unwrap();
    let source = render(&scene, &pose, &k, H, W, 0.0).unwrap();
    let (lo, hi) = (target.depth.min_valid().unwrap() as f64, target.depth.max_valid().unwrap() as f64);
    let bins = make_depth_bins(lo, hi, 96).unwrap();
    let volume = build_cost_volume(&target.image, &source.image, &pose, &k, &bins, ChannelReduction::Sum).unwrap();
    let hints = depth_hints(&volume);
    let vis = visible(&target, &source, &pose, &k);
    let img = &target.image;
    let (mut good, mut n) = (0usize, 0usize);
    for row in 0..H {
        for col in 1..W - 1 {
            if !vis.get(row, col) {
                continue;
            }
            let grad: f32 = (0..img.channels())
                .map(|c| (img.get(row, col + 1, c) - img.get(row, col - 1, c)).abs() / 2.0)
                .sum();
            if grad < 0.01 {
                continue;
            }
            let (Some(t), Some(h)) = (target.depth.get(row, col), hints.get(row, col)) else { continue };
            n += 1;
            good += usize::from(bins.nearest(h as f64).abs_diff(bins.nearest(t as f64)) <= 1);
        }
    }
    let frac = good as f64 / n as f64;
    check(
        frac >= 0.95 && n > 1000,
        format!("{:.2}% of {n} textured valid pixels within 1 bin (D=96, [{lo:.2}, {hi:.2}])", 100.0 * frac),
    )
}

// 4 ---------------------------------------------------------------------

/// Straight re-projection residual, written out component by component.
fn oracle_residual(px: (f64, f64), d: f64, k: &CameraIntrinsics, r: &Matrix3<f64>, t: &Vector3<f64>, target: (f64, f64)) -> f64 {
    let x = (px.0 - k.cx) / k.fx * d;
    let y = (px.1 - k.cy) / k.fy * d;
    let q = [
        r[(0, 0)] * x + r[(0, 1)] * y + r[(0, 2)] * d + t[0],
        r[(1, 0)] * x + r[(1, 1)] * y + r[(1, 2)] * d + t[1],
        r[(2, 0)] * x + r[(2, 1)] * y + r[(2, 2)] * d + t[2],
    ];
    if q[2] <= 1e-6 {
        return f64::INFINITY;
    }
    let u = k.fx * q[0] / q[2] + k.cx;
    let v = k.fy * q[1] / q[2] + k.cy;
    ((u - target.0).powi(2) + (v - target.1).powi(2)).sqrt()
}

fn overfit_direction_law() -> Outcome {
    let mut r = rng(4);
    let (mut cases, mut co, mut contra, mut ill) = (0usize, 0usize, 0usize, 0usize);
    let samples = 100_000;
    for _ in 0..160 {
        let fx = r.random_range(60.0..400.0);
        let k = CameraIntrinsics::new(fx, fx * r.random_range(0.9..1.1), r.random_range(40.0..320.0), r.random_range(30.0..200.0))
            .unwrap();
        let px = Pixel::new(r.random_range(0.0..2.0 * k.cx), r.random_range(0.0..2.0 * k.cy));
        let z = r.random_range(2.0..40.0);
        let t = random_unit(&mut r) * r.random_range(0.2..2.0);
        let pose = RigidPose::from_axis_angle(random_unit(&mut r), r.random_range(0.0..0.1), t).unwrap();
        let lambda = r.random_range(0.1..0.8) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let motion = ObjectMotion::new(-lambda * t).unwrap();

        let p = backproject(px, z, &k).unwrap();
        let moved = pose.apply(&p) + motion.translation;
        let Some(goal) = project(&moved, &k) else {
            ill += 1;
            continue;
        };
        let Ok(sol) = overfit_depth(px, z, &pose, &k, &motion) else {
            ill += 1;
            continue;
        };
        if sol.residual >= 0.5 || sol.at_boundary {
            ill += 1;
            continue;
        }
        let (lo, hi) = ((z / 10.0).ln(), (z * 10.0).ln());
        let (mut best_d, mut best_r) = (f64::NAN, f64::INFINITY);
        for i in 0..samples {
            let d = (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
            let res = oracle_residual((px.u, px.v), d, &k, pose.rotation(), pose.translation(), (goal.u, goal.v));
            if res < best_r {
                best_r = res;
                best_d = d;
            }
        }
        let expect_deeper = lambda > 0.0;
        let agrees = (sol.depth > z) == expect_deeper && (best_d > z) == expect_deeper && sol.residual <= best_r + 1e-6;
        if !agrees {
            return Err(format!(
                "λ={lambda:.3} z={z:.3}: solver {:.5} (res {:.2e}), scan {best_d:.5} (res {best_r:.2e})",
                sol.depth, sol.residual
            ));
        }
        cases += 1;
        if expect_deeper {
            co += 1;
        } else {
            contra += 1;
        }
    }
    check(
        cases >= 100 && co > 0 && contra > 0,
        format!("{cases} well-posed configurations ({co} co, {contra} contra, {ill} ill-posed skipped), all obey the law"),
    )
}

// 5 ---------------------------------------------------------------------

fn mask_pipeline() -> Outcome {
    let demo = demo_scene(DemoVariant::Default);
    let (k, h, w) = (demo.intrinsics, demo.height, demo.width);
    let over = overfit_depth_map(&demo.scene, &demo.pose_t_to_prev, &k, h, w).unwrap();
    let d_ref = &over.truth.depth;
    let report = generate_masks(&over.depth, d_ref, &k, &MaskConfig::default(), &mut rng(5)).unwrap();
    let m_i = report.masks.m_i();

    // movers whose aligned depth ratio leaves [0.85, 2]
    let mut movers = vec![false; h * w];
    for (id, b) in demo.scene.boxes.iter().enumerate() {
        let id = id as u32 + 1;
        if b.motion.is_zero() {
            continue;
        }
        let mut ratios: Vec<f64> = (0..h * w)
            .filter(|&i| over.truth.object_id[i] == id)
            .filter_map(|i| Some(report.aligned.depth.at(i)? as f64 / d_ref.at(i)? as f64))
            .collect();
        ratios.sort_by(f64::total_cmp);
        let med = ratios[ratios.len() / 2];
        if !(0.85..=2.0).contains(&med) {
            for (i, m) in movers.iter_mut().enumerate() {
                *m |= over.truth.object_id[i] == id && d_ref.at(i).is_some();
            }
        }
    }
    let tp = (0..h * w).filter(|&i| movers[i] && m_i.data()[i]).count();
    let recall = tp as f64 / movers.iter().filter(|&&m| m).count() as f64;
    let precision = tp as f64 / m_i.count() as f64;

    let still = demo_scene(DemoVariant::Static);
    let truth = render(&still.scene, &RigidPose::identity(), &k, h, w, 0.0).unwrap();
    let mut r = rng(55);
    let noisy: Vec<f32> = truth
        .depth
        .data()
        .iter()
        .map(|&d| d * (1.0 + r.random_range(-0.01..0.01)) as f32)
        .collect();
    let noisy = DepthMap::from_parts(h, w, noisy, truth.depth.validity().to_vec()).unwrap();
    let fp_noisy = generate_masks(&noisy, &truth.depth, &k, &MaskConfig::default(), &mut rng(5))
        .unwrap()
        .masks
        .m_i()
        .count();
    let fp_exact = generate_masks(&truth.depth, &truth.depth, &k, &MaskConfig::default(), &mut rng(5))
        .unwrap()
        .masks
        .m_i()
        .count();
    let fpr = fp_noisy.max(fp_exact) as f64 / (h * w) as f64;
    check(
        recall >= 0.9 && precision >= 0.9 && fpr <= 1e-3,
        format!("recall {recall:.4}, precision {precision:.4}, static false-positive rate {:.4}%", 100.0 * fpr),
    )
}

// 6 ---------------------------------------------------------------------

fn mask_scale_invariance() -> Outcome {
    let demo = demo_scene(DemoVariant::Default);
    let (k, h, w) = (demo.intrinsics, demo.height, demo.width);
    let over = overfit_depth_map(&demo.scene, &demo.pose_t_to_prev, &k, h, w).unwrap();
    let run = |d: &DepthMap| generate_masks(d, &over.truth.depth, &k, &MaskConfig::default(), &mut rng(6)).unwrap().masks;
    let base = run(&over.depth);
    for factor in [0.1, 3.0, 42.0] {
        let m = run(&over.depth.scaled(factor).unwrap());
        if m != base {
            return Err(format!("masks changed under k = {factor}"));
        }
    }
    check(base.m_i().count() > 0, format!("all four masks bit-identical for k ∈ {{0.1, 3, 42}} ({} M_i pixels)", base.m_i().count()))
}

// 7 ---------------------------------------------------------------------

fn consistency_equivalence() -> Outcome {
    let n = 1_000_000;
    let mut r = rng(7);
    let mut draw = || 10f32.powf(r.random_range(-2.0f32..2.0));
    let a: Vec<f32> = (0..n).map(|_| draw()).collect();
    let b: Vec<f32> = (0..n)
        .map(|i| if i % 4 == 0 { a[i] * 2.0 } else { draw() })
        .collect();
    let da = DepthMap::from_depths(1000, 1000, a.clone()).unwrap();
    let db = DepthMap::from_depths(1000, 1000, b.clone()).unwrap();
    let m = consistency_mask(&da, &db, 1.0).unwrap();
    let mismatches = (0..n)
        .filter(|&i| {
            let (x, y) = (a[i] as f64, b[i] as f64);
            m.data()[i] != (x.max(y) / x.min(y) > 2.0)
        })
        .count();
    check(mismatches == 0, format!("{mismatches} mismatches over 10^6 pairs"))
}

// 8 ---------------------------------------------------------------------

fn oracle_metrics(pred: &[f64], gt: &[f64], max_depth: f64, scale: bool) -> [f64; 7] {
    let pairs: Vec<(f64, f64)> = pred
        .iter()
        .zip(gt)
        .filter(|(p, g)| **p > 0.0 && **g > 0.0 && **g <= max_depth)
        .map(|(p, g)| (*p, *g))
        .collect();
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    };
    let s = if scale {
        median(pairs.iter().map(|p| p.1).collect()) / median(pairs.iter().map(|p| p.0).collect())
    } else {
        1.0
    };
    let n = pairs.len() as f64;
    let p: Vec<(f64, f64)> = pairs.iter().map(|&(p, g)| ((p * s).max(1e-3).min(max_depth), g)).collect();
    let mean = |f: &dyn Fn(f64, f64) -> f64| p.iter().map(|&(a, b)| f(a, b)).sum::<f64>() / n;
    [
        mean(&|a, b| (a - b).abs() / b),
        mean(&|a, b| (a - b) * (a - b) / b),
        mean(&|a, b| (a - b).powi(2)).sqrt(),
        mean(&|a, b| (a.ln() - b.ln()).powi(2)).sqrt(),
        mean(&|a, b| f64::from(u8::from((a / b).max(b / a) < 1.25))),
        mean(&|a, b| f64::from(u8::from((a / b).max(b / a) < 1.25 * 1.25))),
        mean(&|a, b| f64::from(u8::from((a / b).max(b / a) < 1.25 * 1.25 * 1.25))),
    ]
}

fn as_array(r: &EvalReport) -> [f64; 7] {
    [r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.delta1, r.delta2, r.delta3]
}

fn metrics_oracle() -> Outcome {
    let mut r = rng(8);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let (h, w) = (r.random_range(4..24), r.random_range(4..24));
        let gt: Vec<f32> = (0..h * w)
            .map(|_| if r.random_bool(0.1) { 0.0 } else { r.random_range(0.5f32..100.0) })
            .collect();
        let pred: Vec<f32> = gt
            .iter()
            .map(|&g| if r.random_bool(0.05) { 0.0 } else { (g.max(1.0) * r.random_range(0.3f32..3.0)).max(1e-4) })
            .collect();
        let scale = trial % 2 == 0;
        let report = evaluate(
            &DepthMap::from_depths(h, w, pred.clone()).unwrap(),
            &DepthMap::from_depths(h, w, gt.clone()).unwrap(),
            80.0,
            scale,
        );
        let pred64: Vec<f64> = pred.iter().map(|&v| v as f64).collect();
        let gt64: Vec<f64> = gt.iter().map(|&v| v as f64).collect();
        let expected = oracle_metrics(&pred64, &gt64, 80.0, scale);
        let got = as_array(&report.map_err(|e| format!("trial {trial}: {e}"))?);
        for (a, b) in got.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
    }
    let one = |v: &[f32]| DepthMap::from_depths(1, 2, v.to_vec()).unwrap();
    let hand = evaluate(&one(&[2.0, 4.0]), &one(&[1.0, 4.0]), 80.0, false).unwrap();
    let hand_ok = (hand.abs_rel - 0.5).abs() < 1e-12
        && (hand.sq_rel - 0.5).abs() < 1e-12
        && (hand.rmse - 0.5f64.sqrt()).abs() < 1e-12
        && hand.delta1 == 0.5;
    check(
        worst <= 1e-9 && hand_ok,
        format!(
            "max deviation {worst:.1e} over 100 pairs; hand case AbsRel {} SqRel {} RMSE {:.4} δ1 {}",
            hand.abs_rel, hand.sq_rel, hand.rmse, hand.delta1
        ),
    )
}

// 9 ---------------------------------------------------------------------

fn loss_composition() -> Outcome {
    let mut r = rng(9);
    let (h, w) = (16, 16);
    let n = h * w;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let l_ph: Vec<f32> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let l_ph_s: Vec<f32> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let m: Vec<bool> = (0..n).map(|_| r.random_bool(0.2)).collect();
        let m_i: Vec<bool> = (0..n).map(|_| r.random_bool(0.3)).collect();
        let (l_c, l_sm, l_sm_s) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let lp = LossMap::from_vec(h, w, l_ph.clone()).unwrap();
        let lps = LossMap::from_vec(h, w, l_ph_s.clone()).unwrap();
        let mm = BinaryMask::from_vec(h, w, m.clone()).unwrap();
        let mi = BinaryMask::from_vec(h, w, m_i.clone()).unwrap();
        let inputs = LossInputs { l_ph: &lp, l_ph_s: &lps, m: &mm, m_i: &mi, valid: None, l_c, l_sm, l_sm_s };
        let got = total_loss(&inputs, DEFAULT_BETA).unwrap().total;

        let gated = |l: &[f32], keep: &dyn Fn(usize) -> bool| {
            let idx: Vec<usize> = (0..n).filter(|&i| keep(i)).collect();
            if idx.is_empty() {
                0.0
            } else {
                idx.iter().map(|&i| l[i] as f64).sum::<f64>() / idx.len() as f64
            }
        };
        let expected = gated(&l_ph, &|i| !m[i] && !m_i[i])
            + l_c
            + DEFAULT_BETA * l_sm
            + gated(&l_ph_s, &|i| !m_i[i])
            + DEFAULT_BETA * l_sm_s;
        worst = worst.max((got - expected).abs());

        // perturbing flagged pixels must not move the total
        let bumped: Vec<f32> = l_ph.iter().zip(&m_i).map(|(&v, &f)| if f { v + 5.0 } else { v }).collect();
        let bumped_s: Vec<f32> = l_ph_s.iter().zip(&m_i).map(|(&v, &f)| if f { v + 5.0 } else { v }).collect();
        let (bp, bps) = (LossMap::from_vec(h, w, bumped).unwrap(), LossMap::from_vec(h, w, bumped_s).unwrap());
        let again = total_loss(&LossInputs { l_ph: &bp, l_ph_s: &bps, ..inputs }, DEFAULT_BETA).unwrap().total;
        if again != got {
            return Err(format!("flagged pixels changed the total: {got} vs {again}"));
        }

        let all = BinaryMask::new(h, w, true).unwrap();
        let b = total_loss(&LossInputs { m_i: &all, ..inputs }, DEFAULT_BETA).unwrap();
        if b.l_ph != 0.0 || b.l_ph_s != 0.0 || b.total != l_c + DEFAULT_BETA * l_sm + DEFAULT_BETA * l_sm_s {
            return Err(format!("M_i all-true left photometric terms {} / {}", b.l_ph, b.l_ph_s));
        }
    }
    check(worst <= 1e-9, format!("max |total − recomposition| = {worst:.1e}; M_i all-true zeroes both photometric terms"))
}

// 10 --------------------------------------------------------------------

fn naive_conv(x: &ImagePlane, wt: &ConvBlockWeights) -> Vec<f64> {
    let (h, w, cin) = (x.height() as isize, x.width() as isize, x.channels());
    let (k, s, cout) = (wt.kernel() as isize, wt.stride() as isize, wt.c_out());
    let (oh, ow) = ((h + s - 1) / s, (w + s - 1) / s);
    let mut out = vec![0.0; (oh * ow) as usize * cout];
    for o in 0..cout {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = wt.biases()[o] as f64;
                for i in 0..cin {
                    for ky in 0..k {
                        for kx in 0..k {
                            let (iy, ix) = (oy * s + ky - k / 2, ox * s + kx - k / 2);
                            if iy >= 0 && iy < h && ix >= 0 && ix < w {
                                let wi = ((o * cin + i) * k as usize + ky as usize) * k as usize + kx as usize;
                                acc += wt.weights()[wi] as f64 * x.get(iy as usize, ix as usize, i) as f64;
                            }
                        }
                    }
                }
                if wt.activation() == Activation::Elu && acc <= 0.0 {
                    acc = acc.exp() - 1.0;
                }
                out[((oy * ow + ox) as usize) * cout + o] = acc;
            }
        }
    }
    out
}

fn plane(h: usize, w: usize, c: usize, v: Vec<f64>) -> ImagePlane {
    ImagePlane::from_vec(h, w, c, v.into_iter().map(|x| x as f32).collect()).unwrap()
}

fn naive_upsample(x: &ImagePlane) -> Vec<f64> {
    let (h, w, c) = (x.height(), x.width(), x.channels());
    let mut out = vec![0.0; 4 * h * w * c];
    for oy in 0..2 * h {
        for ox in 0..2 * w {
            let sy = ((oy as f64 + 0.5) * 0.5 - 0.5).max(0.0).min((h - 1) as f64);
            let sx = ((ox as f64 + 0.5) * 0.5 - 0.5).max(0.0).min((w - 1) as f64);
            let (y0, x0) = (sy as usize, sx as usize);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
            let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
            for ch in 0..c {
                let g = |y, xx| x.get(y, xx, ch) as f64;
                let top = g(y0, x0) * (1.0 - fx) + g(y0, x1) * fx;
                let bottom = g(y1, x0) * (1.0 - fx) + g(y1, x1) * fx;
                out[(oy * 2 * w + ox) * c + ch] = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    out
}

fn fusion_forward() -> Outcome {
    let mut r = rng(10);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let config = FusionConfig {
            f1_channels: r.random_range(1..5),
            f2_channels: r.random_range(1..5),
            down_width: r.random_range(1..6),
            f12_channels: r.random_range(1..6),
            f32_channels: r.random_range(1..6),
        };
        let weights = FusionWeights::seeded(&config, 1000 + trial).unwrap();
        let (h2, w2) = (2 * r.random_range(1..6), 2 * r.random_range(1..6));
        let mut noise = |h: usize, w: usize, c: usize| {
            ImagePlane::from_fn(h, w, c, |_, _, _| r.random_range(-1.0f32..1.0)).unwrap()
        };
        let f1 = noise(2 * h2, 2 * w2, config.f1_channels);
        let f2 = noise(h2, w2, config.f2_channels);
        let out = msfusion_forward(&f1, &f2, &weights).unwrap();

        let down = naive_conv(&f1, &weights.down);
        let down = plane(h2, w2, config.down_width, down);
        let f12 = naive_conv(&ImagePlane::concat(&[&down, &f2]).unwrap(), &weights.fuse);
        let res = &weights.res;
        let a = plane(h2 / 2, w2 / 2, config.f32_channels, naive_conv(&f2, &res.conv1));
        let main = naive_conv(&a, &res.conv2);
        let skip = naive_conv(&f2, &res.projection);
        let sum: Vec<f64> = main.iter().zip(&skip).map(|(x, y)| x + y).collect();
        let f32_ = naive_upsample(&plane(h2 / 2, w2 / 2, config.f32_channels, sum));

        for (got, want) in [(&out.f12, &f12), (&out.f32, &f32_)] {
            if got.data().len() != want.len() {
                return Err(format!("trial {trial}: shape mismatch"));
            }
            for (g, w) in got.data().iter().zip(want) {
                worst = worst.max((*g as f64 - w).abs());
            }
        }
        let c2 = config.f2_channels;
        let slices = [
            (out.fms.channel_slice(0, c2).unwrap(), &f2),
            (out.fms.channel_slice(c2, config.f12_channels).unwrap(), &out.f12),
            (out.fms.channel_slice(c2 + config.f12_channels, config.f32_channels).unwrap(), &out.f32),
        ];
        if slices.iter().any(|(s, want)| s != *want) {
            return Err(format!("trial {trial}: F_ms is not [F_2 | F_12 | F_32]"));
        }
    }
    check(worst <= 1e-5, format!("max deviation from naive loops {worst:.1e}; channel slices exact on 20 weight sets"))
}

// 11 --------------------------------------------------------------------

fn write_inputs(dir: &Path) {
    let demo = demo_scene(DemoVariant::Co);
    let (k, h, w) = (demo.intrinsics, demo.height, demo.width);
    let target = demo.target().unwrap();
    let source = demo.source().unwrap();
    let over = overfit_depth_map(&demo.scene, &demo.pose_t_to_prev, &k, h, w).unwrap();
    write_json(&dir.join("k.json"), &k).unwrap();
    write_json(&dir.join("pose.json"), &demo.pose_t_to_prev).unwrap();
    write_file(&dir.join("target.ppm"), &image_to_pnm(&target.image).unwrap()).unwrap();
    write_file(&dir.join("source.ppm"), &image_to_pnm(&source.image).unwrap()).unwrap();
    write_file(&dir.join("depth.pfm"), &depth_to_pfm(&target.depth).unwrap()).unwrap();
    write_file(&dir.join("d_over.pfm"), &depth_to_pfm(&over.depth).unwrap()).unwrap();
    write_file(&dir.join("movers.pgm"), &mask_to_pgm(&target.dynamic_mask(&demo.scene)).unwrap()).unwrap();
    for sub in ["pred", "gt"] {
        fs::create_dir_all(dir.join(sub)).unwrap();
    }
    for (i, f) in [1.0, 2.0, 0.5].iter().enumerate() {
        let name = format!("{i:03}.pfm");
        write_file(&dir.join("gt").join(&name), &depth_to_pfm(&target.depth).unwrap()).unwrap();
        write_file(&dir.join("pred").join(&name), &depth_to_pfm(&over.depth.scaled(*f).unwrap()).unwrap()).unwrap();
    }
}

fn run_cli(dir: &Path, out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_mfdepth"))
        .current_dir(dir)
        .args(["--intrinsics", "k.json", "--seed", "11", "--workers", "3", "--out"])
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&status.stderr)))
    }
}

fn dir_contents(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    write_inputs(dir);
    let commands: [(&str, Vec<&str>); 5] = [
        ("warp", vec!["warp", "--target", "target.ppm", "--source", "source.ppm", "--depth", "depth.pfm", "--pose", "pose.json"]),
        (
            "costvol",
            vec![
                "costvol", "--target", "target.ppm", "--source", "source.ppm", "--pose", "pose.json", "--d-min", "2",
                "--d-max", "40", "--single-depth", "depth.pfm", "--gt-depth", "depth.pfm",
            ],
        ),
        ("mask", vec!["mask", "--d-over", "d_over.pfm", "--d-ref", "depth.pfm", "--dynamic-gt", "movers.pgm"]),
        ("eval", vec!["eval", "--pred-dir", "pred", "--gt-dir", "gt", "--median-scale"]),
        ("demo-dynamic", vec!["demo-dynamic"]),
    ];
    let mut files = 0;
    for (name, args) in &commands {
        let (a, b) = (dir.join(format!("{name}-a")), dir.join(format!("{name}-b")));
        run_cli(dir, &a, args)?;
        run_cli(dir, &b, args)?;
        let (ca, cb) = (dir_contents(&a), dir_contents(&b));
        if ca.is_empty() || ca != cb {
            return Err(format!("{name}: outputs differ between runs"));
        }
        files += ca.len();
    }
    Ok(format!("5 subcommands, {files} output files byte-identical across two runs"))
}

// -----------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 11] = [
        ("geometry round-trip", 1.0, geometry_round_trip),
        ("rigid-warp consistency", 5.0, rigid_warp_consistency),
        ("plane-sweep correctness", 30.0, plane_sweep_correctness),
        ("over-fit direction law", 30.0, overfit_direction_law),
        ("mask pipeline end-to-end", 10.0, mask_pipeline),
        ("mask scale invariance", 5.0, mask_scale_invariance),
        ("consistency-mask equivalence", 1.0, consistency_equivalence),
        ("metrics oracle", 5.0, metrics_oracle),
        ("loss composition", 1.0, loss_composition),
        ("fusion forward", 10.0, fusion_forward),
        ("CLI determinism", 60.0, cli_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match result {
            Ok(d) if secs < *limit => (true, d),
            Ok(d) => (false, format!("{d}; took {secs:.2} s, limit {limit} s")),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} [{}] {name}: {detail} ({secs:.2} s)",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
