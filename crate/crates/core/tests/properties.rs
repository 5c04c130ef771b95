use lccf_core::datasets::{add_gaussian_noise, add_occlusion};
use lccf_core::evaluation::{
    format_curves, localization_curve, parse_curves, precision_curve, success_curve, Curve, CurveKind,
};
use lccf_core::features::extract_hog;
use lccf_core::kernel_cf::blend_weights;
use lccf_core::linear_cf::FilterSpectrum;
use lccf_core::sadmm::{project_subspace, projection_weights};
use lccf_core::signal::{fft2, gaussian_response, ifft2};
use lccf_core::{BBox, FeatureConfig, ImagePlane, PenaltyMode, PenaltySchedule, Spectrum, SubspaceHistory};
use num_complex::Complex64;
use proptest::prelude::*;
use std::path::Path;

fn plane(w: usize, h: usize) -> impl Strategy<Value = ImagePlane> {
    prop::collection::vec(-1.0f64..1.0, w * h).prop_map(move |d| ImagePlane::new(w, h, d).unwrap())
}

fn sized_plane() -> impl Strategy<Value = ImagePlane> {
    (1usize..9, 1usize..9).prop_flat_map(|(w, h)| plane(w, h))
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn boxes() -> impl Strategy<Value = BBox> {
    (0.0f64..50.0, 0.0f64..50.0, 1.0f64..20.0, 1.0f64..20.0).prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

proptest! {
    #[test]
    fn fft_round_trip_and_parseval(x in sized_plane()) {
        let spec = fft2(&x).unwrap();
        let back = ifft2(&spec).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let energy = spec.squared_norm() / x.len() as f64;
        prop_assert!((energy - x.squared_norm()).abs() < 1e-9 * (1.0 + x.squared_norm()));
    }

    #[test]
    fn projection_stays_in_convex_hull(
        current in cvec(6),
        entries in prop::collection::vec(cvec(6), 1..6),
    ) {
        let mut history = SubspaceHistory::new();
        for e in &entries {
            history.push(e.clone()).unwrap();
        }
        let w = projection_weights(&current, &history).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let g = project_subspace(&current, &history).unwrap();
        let farthest = entries.iter().map(|e| dist(e, &current)).fold(0.0, f64::max);
        prop_assert!(dist(&g, &current) <= farthest + 1e-9);
    }

    #[test]
    fn penalty_never_decreases(
        sigma in 0.0f64..10.0,
        eta in 0.05f64..1.0,
        growth in 1.01f64..4.0,
        residuals in prop::collection::vec(0.0f64..5.0, 1..30),
        strict in any::<bool>(),
    ) {
        let mode = if strict { PenaltyMode::Strict } else { PenaltyMode::Scaled };
        let mut sched = PenaltySchedule::new(sigma, eta, growth).unwrap();
        for eps in residuals {
            let (next, improved) = sched.update(eps, mode).unwrap();
            prop_assert!(next.sigma >= sched.sigma);
            prop_assert!(next.eps_best <= sched.eps_best);
            if improved {
                prop_assert_eq!(next.sigma, sched.sigma);
            }
            sched = next;
        }
    }

    #[test]
    fn blend_weight_in_unit_interval(
        k in prop::collection::vec(0.0f64..1e3, 1..20),
        lambda in 1e-6f64..1.0,
        sigma in 0.0f64..1e3,
    ) {
        let n = k.len();
        let kxx = Spectrum::new(n, 1, k.into_iter().map(|v| Complex64::new(v, 0.0)).collect()).unwrap();
        for e in blend_weights(&kxx, lambda, sigma).unwrap() {
            prop_assert!(e.re > 0.0 && e.re <= 1.0);
            prop_assert!(e.im.abs() < 1e-15);
        }
    }

    #[test]
    fn hog_ignores_constant_offset(x in plane(15, 10), offset in -5.0f64..5.0) {
        let cfg = FeatureConfig::hog();
        let shifted = ImagePlane::from_fn(15, 10, |r, c| x.get(r, c) + offset);
        let a = extract_hog(&x, &cfg).unwrap();
        let b = extract_hog(&shifted, &cfg).unwrap();
        for (pa, pb) in a.channels().iter().zip(b.channels()) {
            for (u, v) in pa.data().iter().zip(pb.data()) {
                prop_assert!((u - v).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn hog_commutes_with_half_turn(x in plane(15, 10)) {
        let cfg = FeatureConfig::hog();
        let rotated = ImagePlane::from_fn(15, 10, |r, c| x.get(9 - r, 14 - c));
        let a = extract_hog(&x, &cfg).unwrap();
        let b = extract_hog(&rotated, &cfg).unwrap();
        let (gw, gh) = (a.width(), a.height());
        for (pa, pb) in a.channels().iter().zip(b.channels()) {
            for r in 0..gh {
                for c in 0..gw {
                    prop_assert!((pa.get(r, c) - pb.get(gh - 1 - r, gw - 1 - c)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn localization_curve_is_monotone(d in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let thr: Vec<f64> = (1..=15).map(|i| i as f64 * 0.02).collect();
        let curve = localization_curve(&d, &thr).unwrap();
        prop_assert!(curve.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(curve.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn tracking_curves_are_monotone(pairs in prop::collection::vec((boxes(), boxes()), 1..20)) {
        let (pred, truth): (Vec<BBox>, Vec<BBox>) = pairs.into_iter().unzip();
        let px: Vec<f64> = (1..=50).map(f64::from).collect();
        let prec = precision_curve(&pred, &truth, &px).unwrap();
        prop_assert!(prec.values.windows(2).all(|w| w[0] <= w[1]));
        let iou: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let (succ, auc) = success_curve(&pred, &truth, &iou).unwrap();
        prop_assert!(succ.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn iou_is_symmetric_and_bounded(a in boxes(), b in boxes()) {
        let ab = a.iou(&b);
        prop_assert!((ab - b.iou(&a)).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert!((a.iou(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn curve_file_round_trip(values in prop::collection::vec(0.0f64..1.0, 1..16), tag in "[a-z]{1,8}") {
        let thresholds: Vec<f64> = (0..values.len()).map(|i| 0.1 + i as f64 * 0.37).collect();
        let curve = Curve { kind: CurveKind::Localization, thresholds, values };
        let meta = vec![("method".to_string(), tag)];
        let text = format_curves(std::slice::from_ref(&curve), &meta);
        let (meta2, curves) = parse_curves(&text, Path::new("mem.csv")).unwrap();
        prop_assert_eq!(meta2, meta);
        prop_assert_eq!(curves, vec![curve]);
    }

    #[test]
    fn filter_binary_round_trip(data in cvec(24), hog in any::<bool>()) {
        let feature = if hog { FeatureConfig::hog() } else { FeatureConfig::gray() };
        let filter = FilterSpectrum::from_flat(&data, 2, 4, 3, feature).unwrap();
        let mut buf = Vec::new();
        filter.write_to(&mut buf).unwrap();
        let back = FilterSpectrum::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, filter);
    }

    #[test]
    fn gaussian_response_peaks_at_target(w in 1usize..20, h in 1usize..20, var in 0.2f64..10.0, seed in any::<u64>()) {
        let peak = ((seed as usize) % h, (seed as usize / 7) % w);
        let y = gaussian_response(w, h, peak, var).unwrap().plane;
        prop_assert_eq!(y.get(peak.0, peak.1), 1.0);
        prop_assert!(y.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn corruptions_are_deterministic(x in plane(12, 9), seed in any::<u64>()) {
        let x = ImagePlane::from_fn(12, 9, |r, c| 0.5 + 0.5 * x.get(r, c));
        prop_assert_eq!(add_gaussian_noise(&x, 0.1, seed).unwrap(), add_gaussian_noise(&x, 0.1, seed).unwrap());
        prop_assert_eq!(add_occlusion(&x, 0.3, seed).unwrap(), add_occlusion(&x, 0.3, seed).unwrap());
    }
}
