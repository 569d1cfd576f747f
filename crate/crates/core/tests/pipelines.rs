//! End-to-end runs across module boundaries.

use radon_lens::dataset::{load_csv, sample_gaussian, sample_halfmoon, save_csv};
use radon_lens::density::{normal_cdf, DensityMethod};
use radon_lens::empirical_radon::{rvt_pushforward, sinogram, slice, PushforwardMap};
use radon_lens::grid_radon::{
    fbp_reconstruct, forward_radon_grid, relative_l1_in_disk, GridGeometry,
};
use radon_lens::levelset::{marching_squares, surface_grid, Bounds};
use radon_lens::train::{classifier_from_arch, fit, Classifier, TrainConfig};
use radon_lens::{
    DefiningFunction, EmpiricalDistribution, GridImage, LabeledDataset, Linear, RampFilterSpec,
    Surface,
};

#[test]
fn dataset_csv_round_trip_with_and_without_header() {
    let ds = sample_halfmoon(50, 0.1, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for header in [false, true] {
        let path = dir.path().join(format!("moons_{header}.csv"));
        save_csv(&ds, &path, header).unwrap();
        let back = load_csv(&path, header).unwrap();
        assert_eq!(back, ds);
    }
}

#[test]
fn gaussian_sinogram_columns_follow_standard_normal() {
    let dist = sample_gaussian(20_000, &[0.0, 0.0], 1.0, 11).unwrap();
    let sino = sinogram(&dist, 8, 256).unwrap();
    for k in 0..sino.n_thetas() {
        let d = sino.column_density(k).unwrap();
        let ks = d.ks_distance_to(normal_cdf);
        assert!(ks <= 0.01, "angle {k}: KS {ks}");
    }
}

#[test]
fn mixture_slice_is_concatenation_of_component_values() {
    let a = sample_gaussian(300, &[-1.0, 0.0], 0.5, 1).unwrap();
    let b = sample_gaussian(300, &[1.0, 0.5], 0.5, 2).unwrap();
    let mix = EmpiricalDistribution::mixture(&a, &b, 0.5).unwrap();
    let g = DefiningFunction::Linear(Linear::from_angle(0.3));
    let sa = slice(&a, &g, "a", DensityMethod::Kde, 128).unwrap();
    let sb = slice(&b, &g, "b", DensityMethod::Kde, 128).unwrap();
    let sm = slice(&mix, &g, "mix", DensityMethod::Kde, 128).unwrap();
    let mut want: Vec<f64> = sa.values.iter().chain(&sb.values).copied().collect();
    let mut got = sm.values.clone();
    want.sort_by(f64::total_cmp);
    got.sort_by(f64::total_cmp);
    assert_eq!(got, want);
}

#[test]
fn label_pushforward_puts_class_mass_on_labels() {
    let ds = sample_halfmoon(400, 0.1, 9).unwrap();
    let d = rvt_pushforward(
        &ds.to_distribution(),
        PushforwardMap::Labels(ds.labels()),
        DensityMethod::Kde,
        256,
    )
    .unwrap();
    // Balanced classes: half the mass on each side of 0.5.
    assert!((d.cdf(0.5) - 0.5).abs() <= 1e-3, "{}", d.cdf(0.5));
}

#[test]
fn fbp_survives_csv_round_trip() {
    let img = GridImage::gaussian(GridGeometry::square(64, 1.0), [0.1, -0.2], 0.2).unwrap();
    let img = GridImage::from_csv(&img.to_csv()).unwrap();
    let sino = forward_radon_grid(&img, 90, 91).unwrap();
    let recon = fbp_reconstruct(&sino, img.geometry(), &RampFilterSpec::default()).unwrap();
    let recon = GridImage::from_csv(&recon.to_csv()).unwrap();
    let err = relative_l1_in_disk(&recon, &img).unwrap();
    assert!(err <= 0.05, "rel L1 {err}");
}

#[test]
fn trained_classifier_round_trips_and_separates() {
    let data = sample_halfmoon(300, 0.1, 2).unwrap();
    let start = classifier_from_arch("2-16-1:tanh", 5, false).unwrap();
    let cfg = TrainConfig {
        lr: 0.3,
        epochs: 150,
        batch: Some(32),
        seed: 5,
        ..TrainConfig::default()
    };
    let (model, trace) = fit(&start, &data, &cfg).unwrap();
    assert!(trace.last().unwrap().accuracy >= 0.9, "{:?}", trace.last());

    let back = Classifier::from_json(&model.to_json().unwrap()).unwrap();
    for x in data.points().iter().take(20) {
        assert_eq!(back.value(x).unwrap(), model.value(x).unwrap());
    }

    // Every decision-curve vertex sits where the model reads 0.5.
    let bounds = Bounds::around(data.points(), 0.25).unwrap();
    let img = surface_grid(&model, &bounds, [80, 80]).unwrap();
    let curves = marching_squares(&img, &[0.5]);
    assert!(curves.vertices().count() > 10);
    let dx = (bounds.x[1] - bounds.x[0]) / 79.0;
    for (_, p) in curves.vertices() {
        let g = model.gradient(&p).unwrap();
        let slack = (g[0].abs() + g[1].abs()) * dx;
        assert!((model.value(&p).unwrap() - 0.5).abs() <= slack + 1e-9);
    }
}

#[test]
fn unlabeled_pushforward_rejects_label_mismatch() {
    let ds = LabeledDataset::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0, 1]).unwrap();
    let err = rvt_pushforward(
        &ds.to_distribution(),
        PushforwardMap::Labels(&[0]),
        DensityMethod::Kde,
        64,
    );
    assert!(err.is_err());
}
