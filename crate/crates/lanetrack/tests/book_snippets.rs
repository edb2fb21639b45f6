//! Keeps the guide's code snippets honest: each test mirrors a snippet in
//! book/src verbatim.

use lanetrack::*;

#[test]
fn probability_maps_chapter() {
    let map = ProbabilityMap::new(4, 2, 1, vec![0.0; 8]).unwrap();
    assert_eq!(map.get(0, 3, 1), 0.0);
    assert!(ProbabilityMap::new(4, 2, 1, vec![2.0; 8]).is_err());

    let map = ProbabilityMap::new(2, 2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
    let mid = map.sample(0, 0.5, 0.5).unwrap();
    assert!((mid - 0.5).abs() < 1e-6);
    assert!(map.sample(0, -1.0, 0.0).is_err());
}

#[test]
fn point_variance_chapter() {
    let mut values = vec![0.0f32; 5 * 8];
    for y in 0..8 {
        values[y * 5 + 2] = 0.9;
    }
    let map = ProbabilityMap::new(5, 8, 1, values).unwrap();
    let cfg = ExtractionConfig {
        row_stride: 1,
        horizon_frac: 0.0,
        ..Default::default()
    };
    let raw = extract_points(&map, 0, &cfg).unwrap();
    assert!(raw.points.iter().all(|&(x, _, _)| (x - 2.0).abs() < 0.5));

    let w = 200usize;
    let mut values = vec![0.0f32; w * 4];
    for y in 0..4 {
        for x in 0..w {
            let d = x as f64 - 100.0;
            values[y * w + x] = (0.8 * (-d * d / 18.0).exp()) as f32;
        }
    }
    let map = ProbabilityMap::new(w as u32, 4, 1, values).unwrap();
    let c = map.sample(0, 100.0, 2.0).unwrap();
    let sigma = estimate_point_sigma(
        &map,
        0,
        100.0,
        2.0,
        c,
        (1.0, 0.0),
        &VarianceConfig::default(),
    )
    .unwrap();
    assert!((sigma - 3.0).abs() < 0.1);
}

#[test]
fn fitting_chapter() {
    let points = vec![
        LanePoint {
            x: 10.0,
            y: 0.0,
            c: 0.9,
            sigma: 1.0,
        },
        LanePoint {
            x: 12.0,
            y: 10.0,
            c: 0.9,
            sigma: 1.0,
        },
        LanePoint {
            x: 40.0,
            y: 20.0,
            c: 0.05,
            sigma: 8.0,
        },
        LanePoint {
            x: 14.0,
            y: 20.0,
            c: 0.9,
            sigma: 1.0,
        },
    ];
    let fit = fit_weighted(&points).unwrap();
    assert!((fit.m - 0.2).abs() < 0.02);
    assert!((fit.b - 10.0).abs() < 0.3);

    let points: Vec<LanePoint> = (0..5)
        .map(|i| LanePoint {
            x: 100.0,
            y: i as f64 * 10.0,
            c: 0.9,
            sigma: 1.0,
        })
        .collect();
    let fit = fit_weighted(&points).unwrap();
    let (r, theta) = (fit.r, fit.theta);
    assert!((r - 100.0).abs() < 1e-9);
    assert!(theta.abs() < 1e-9);
    let _ = to_hesse;
}

#[test]
fn tracking_chapter() {
    let mut w = None;
    for _ in 0..4 {
        w = Some(update_weight(1.0, w, 0.5));
    }
    assert_eq!(w, Some(0.9375));

    let d = line_distance((0.2, 100.0), (0.2, 105.0), (50.0, 250.0)).unwrap();
    assert!((d - 5.0).abs() < 1e-12);
}

#[test]
fn merging_chapter() {
    assert_eq!(merge_zeta(2.0, 1.0, 1.0, 2.0), 0.8);
    assert_eq!(merge_zeta(1.0, 3.0, 1.0, 3.0), 0.5);
}

#[test]
fn evaluation_chapter() {
    let lane = LanePolyline::new(vec![(400.0, 0.0), (400.0, 287.0)]).unwrap();
    let iou = lane_iou(&lane, &lane, (800, 288));
    assert!((iou - 16.0 / 30.0).abs() < 0.02);
    let far = LanePolyline::new(vec![(0.0, 0.0), (0.0, 287.0)]).unwrap();
    assert_eq!(lane_iou(&lane, &far, (800, 288)), 0.0);
}

#[test]
fn scenarios_chapter() {
    let s = Scenario::parse("frames = 2\nwidth = 8\nheight = 8\n").unwrap();
    let (a, _) = s.render(1).unwrap();
    let (b, _) = s.render(1).unwrap();
    assert_eq!(a, b);
}
