use std::f64::consts::{PI, TAU};

use echoid::descriptor::{
    apply_band, farfield_from_msr, farfield_from_w, magnitude_difference, shape_descriptor, DescriptorSlice,
    DescriptorSource, DescriptorTensor,
};
use echoid::forward::{simulate_msr, AcquisitionConfig, Medium};
use echoid::geometry::{make_shape, transform, RigidTransform, ShapeName};
use echoid::sct::compute_w;
use echoid::Complex64;

fn max_relative(a: &DescriptorSlice, b: &DescriptorSlice) -> f64 {
    let scale = a.values.iter().copied().fold(0.0, f64::max);
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn disk_pattern_depends_on_the_angle_difference_only() {
    let b = make_shape(ShapeName::Disk, 256).unwrap();
    let w = compute_w(&b, &Medium::default(), TAU, 20).unwrap();
    let a = farfield_from_w(&w, 64);
    let scale = a.values[(0, 0)].norm();
    for shift in 0..64 {
        let reference = a.values[(0, shift)];
        for i in 1..64 {
            let v = a.values[(i, (i + shift) % 64)];
            assert!((v - reference).norm() < 1e-8 * scale.max(reference.norm()));
        }
    }
}

#[test]
fn synthesis_converges_in_the_order() {
    let med = Medium::default();
    for name in [ShapeName::Flower, ShapeName::Square] {
        let b = make_shape(name, 256).unwrap();
        let w = compute_w(&b, &med, 4.0 * PI, 30).unwrap();
        let a30 = farfield_from_w(&w, 64);
        let a20 = farfield_from_w(&w.truncate(20), 64);
        let scale = (0..64).map(|i| a30.values[(i, i)].norm()).fold(0.0, f64::max);
        let mut diff: f64 = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                diff = diff.max((a30.values[(i, j)] - a20.values[(i, j)]).norm());
            }
        }
        assert!(diff < 1e-4 * scale, "{name}: {diff}");
    }
}

#[test]
fn measured_magnitudes_approximate_the_far_field() {
    let med = Medium::default();
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let from_w = farfield_from_w(&compute_w(&b, &med, TAU, 30).unwrap(), 128);
    let diff = |radius: f64| {
        let acq = AcquisitionConfig::full_view(radius, 128, 128);
        let v = simulate_msr(&b, &med, &acq, TAU).unwrap();
        let from_msr = farfield_from_msr(&v, med.k0(TAU));
        assert!(from_msr.mask.is_none() && from_msr.magnitude_only);
        magnitude_difference(&from_msr, &from_w).unwrap()
    };
    let (d10, d20) = (diff(10.0), diff(20.0));
    assert!(d10 < 5e-2, "{d10}");
    // the neglected terms of the Hankel asymptotics fall off like 1/R
    assert!((d10 / d20 - 2.0).abs() < 0.1, "{d10} {d20}");
}

#[test]
fn limited_view_mask_covers_the_band() {
    let b = make_shape(ShapeName::Ellipse, 128).unwrap();
    let acq = AcquisitionConfig::limited_view(10.0, 96, 96, PI / 3.0, 96);
    let v = simulate_msr(&b, &Medium::default(), &acq, PI).unwrap();
    let a = farfield_from_msr(&v, PI);
    assert!((a.valid_fraction() - 1.0 / 3.0).abs() < 0.02);
}

#[test]
fn descriptor_is_rotation_and_translation_invariant() {
    let med = Medium::default();
    let flower = make_shape(ShapeName::Flower, 256).unwrap();
    let reference = shape_descriptor(&farfield_from_w(&compute_w(&flower, &med, TAU, 30).unwrap(), 128));
    for t in [
        RigidTransform::rotation(PI / 3.0),
        RigidTransform::translation([-0.5, 0.5]),
        RigidTransform::new([0.3, 0.2], 1.0, 2.0).unwrap(),
    ] {
        let moved = transform(&flower, &t);
        // translation pushes energy to higher orders
        let w = compute_w(&moved, &med, TAU, 40).unwrap();
        let s = shape_descriptor(&farfield_from_w(&w, 128));
        let err = max_relative(&reference, &s);
        assert!(err < 1e-6, "{t:?}: {err}");
    }
}

#[test]
fn band_descriptor_is_rotation_invariant() {
    let med = Medium::default();
    let flower = make_shape(ShapeName::Flower, 256).unwrap();
    let rotated = transform(&flower, &RigidTransform::rotation(PI / 3.0));
    let band = |b| {
        let a = farfield_from_w(&compute_w(b, &med, TAU, 30).unwrap(), 120);
        shape_descriptor(&apply_band(&a, PI / 3.0).unwrap())
    };
    let (s0, s1) = (band(&flower), band(&rotated));
    assert_eq!(s0.valid, s1.valid);
    let err = max_relative(&s0, &s1);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn descriptor_scales_against_frequency() {
    let med = Medium::default();
    let flower = make_shape(ShapeName::Flower, 256).unwrap();
    let scaled = transform(&flower, &RigidTransform::scaling(1.5));
    let s_scaled = shape_descriptor(&farfield_from_w(&compute_w(&scaled, &med, TAU, 30).unwrap(), 96));
    let s_freq = shape_descriptor(&farfield_from_w(&compute_w(&flower, &med, 3.0 * PI, 30).unwrap(), 96));
    let err = max_relative(&s_scaled, &s_freq);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn magnitude_only_pattern_gives_the_same_descriptor() {
    let w = compute_w(
        &make_shape(ShapeName::Ellipse, 128).unwrap(),
        &Medium::default(),
        PI,
        15,
    )
    .unwrap();
    let a = farfield_from_w(&w, 48);
    let mut mags = a.clone();
    for i in 0..48 {
        for j in 0..48 {
            mags.values[(i, j)] = Complex64::new(a.values[(i, j)].norm(), 0.0);
        }
    }
    mags.magnitude_only = true;
    assert_eq!(shape_descriptor(&a).values, shape_descriptor(&mags).values);
}

#[test]
fn tensor_persistence_round_trip() {
    let w = compute_w(&make_shape(ShapeName::Square, 128).unwrap(), &Medium::default(), PI, 10).unwrap();
    let a = farfield_from_w(&w, 32);
    let slices = vec![
        shape_descriptor(&a),
        shape_descriptor(&apply_band(&a, PI / 6.0).unwrap()),
    ];
    let tensor =
        DescriptorTensor::new(Some("square".into()), PI / 6.0, DescriptorSource::Coefficients, slices).unwrap();
    let dir = std::env::temp_dir().join(format!("echoid-descriptor-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let stem = dir.join("square");
    tensor.save(&stem).unwrap();
    let back = DescriptorTensor::load(&stem).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back.slices[0].values, tensor.slices[0].values);
    assert_eq!(back.slices[1].valid, tensor.slices[1].valid);
    assert!(back.slices[0].valid.as_ref().unwrap().iter().all(|&v| v));
    assert_eq!(back.shape.as_deref(), Some("square"));
}
