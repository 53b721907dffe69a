use std::f64::consts::{PI, TAU};

use echoid::descriptor::{descriptor_from_coefficients, DescriptorSource, DescriptorTensor};
use echoid::dictionary::{build_dictionary, identify, match_error, scale_cost, Dictionary, DictionaryConfig};
use echoid::forward::Medium;
use echoid::geometry::{make_shape, transform, Boundary, RigidTransform, ShapeName};
use echoid::sct::compute_w;
use echoid::Error;

/// Dictionary step `π/4` and data step `π/4`, so unscaled data frequencies
/// land on dictionary nodes; `s = 1` is the scale sample `t = 2`.
fn small_config() -> DictionaryConfig {
    let mut c = DictionaryConfig::standard(32, 14, 4, 6);
    c.order = 20;
    c
}

fn target(b: &Boundary, config: &DictionaryConfig) -> DescriptorTensor {
    let slices = config
        .data_frequencies
        .samples()
        .into_iter()
        .map(|w| {
            let coeffs = compute_w(b, &Medium::default(), w, config.order + 10).unwrap();
            descriptor_from_coefficients(&coeffs, config.grid, config.band_alpha).unwrap()
        })
        .collect();
    DescriptorTensor::new(None, config.band_alpha, DescriptorSource::Coefficients, slices).unwrap()
}

fn shapes(names: &[ShapeName]) -> Vec<Boundary> {
    names.iter().map(|&n| make_shape(n, 192).unwrap()).collect()
}

#[test]
fn self_match_at_unit_scale_vanishes() {
    let config = small_config();
    let flower = shapes(&[ShapeName::Flower]);
    let dict = build_dictionary(&flower, &config).unwrap();
    let t = target(&flower[0], &config);
    let at_one = scale_cost(2, &t, &dict.entries[0].tensor, &config).unwrap().unwrap();
    let total: f64 = t.slices.iter().map(|s| s.values.iter().sum::<f64>()).sum();
    assert!(at_one < 1e-16 * total * total, "{at_one}");
    let m = match_error(&t, &dict.entries[0].tensor, &config).unwrap().unwrap();
    assert_eq!(m.scale_index, 2);
    assert!((m.scale - 1.0).abs() < 1e-15);
}

#[test]
fn single_entry_dictionary_returns_it() {
    let config = small_config();
    let dict = build_dictionary(&shapes(&[ShapeName::Square]), &config).unwrap();
    let t = target(&make_shape(ShapeName::Triangle, 192).unwrap(), &config);
    let result = identify(&t, &dict).unwrap();
    assert_eq!(result.best_index, 0);
    assert_eq!(result.best_name, "square");
}

#[test]
fn scale_is_recovered_near_its_true_value() {
    let mut config = DictionaryConfig::standard(32, 55, 9, 30);
    config.order = 20;
    let flower = shapes(&[ShapeName::Flower]);
    let dict = build_dictionary(&flower, &config).unwrap();
    let scaled = transform(&flower[0], &RigidTransform::scaling(1.5));
    let t = target(&scaled, &config);
    let m = match_error(&t, &dict.entries[0].tensor, &config).unwrap().unwrap();
    // one scale step is 0.05
    assert!((m.scale - 1.5).abs() <= 0.05 + 1e-12, "{}", m.scale);
    let truth = scale_cost(m.scale_index, &t, &dict.entries[0].tensor, &config)
        .unwrap()
        .unwrap();
    for far in [0, 30] {
        let j = scale_cost(far, &t, &dict.entries[0].tensor, &config).unwrap().unwrap();
        assert!(j > truth, "t={far}: {j} <= {truth}");
    }
}

#[test]
fn identification_ignores_rotation_and_translation() {
    let config = small_config();
    let names = [
        ShapeName::Ellipse,
        ShapeName::Flower,
        ShapeName::Square,
        ShapeName::Triangle,
    ];
    let bs = shapes(&names);
    let dict = build_dictionary(&bs, &config).unwrap();
    let moves = [
        RigidTransform::new([-0.5, 0.5], 1.0, PI / 3.0).unwrap(),
        RigidTransform::new([0.6, 0.0], 1.0, 2.5).unwrap(),
    ];
    for (i, b) in bs.iter().enumerate() {
        for m in &moves {
            let result = identify(&target(&transform(b, m), &config), &dict).unwrap();
            assert_eq!(result.best_index, i, "{} under {m:?}: {:?}", b.name, result.errors);
            assert!(result.errors.iter().flatten().all(|&e| e >= 0.0));
        }
    }
}

#[test]
fn band_mismatch_is_rejected() {
    let config = small_config();
    let dict = build_dictionary(&shapes(&[ShapeName::Disk]), &config).unwrap();
    let partial = config.with_band(PI / 3.0);
    let t = target(&make_shape(ShapeName::Disk, 192).unwrap(), &partial);
    assert!(matches!(identify(&t, &dict), Err(Error::BandMismatch { .. })));
}

#[test]
fn partial_dictionary_identifies_partial_targets() {
    let config = small_config().with_band(PI / 3.0);
    let bs = shapes(&[ShapeName::Ellipse, ShapeName::LetterE, ShapeName::Disk]);
    let dict = build_dictionary(&bs, &config).unwrap();
    for (i, b) in bs.iter().enumerate() {
        let moved = transform(b, &RigidTransform::new([0.2, -0.3], 1.0, 1.0).unwrap());
        assert_eq!(identify(&target(&moved, &config), &dict).unwrap().best_index, i);
    }
}

#[test]
fn building_is_deterministic_and_persists() {
    let config = small_config();
    let bs = shapes(&[ShapeName::LetterA, ShapeName::Rectangle]);
    let first = build_dictionary(&bs, &config).unwrap();
    let second = build_dictionary(&bs, &config).unwrap();
    assert_eq!(first, second);
    let dir = std::env::temp_dir().join(format!("echoid-dictionary-{}", std::process::id()));
    first.save(&dir).unwrap();
    let back = Dictionary::load(&dir).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back, first);
    let t = target(&bs[1], &config);
    assert_eq!(identify(&t, &first).unwrap(), identify(&t, &back).unwrap());
}

#[test]
fn inconsistent_ranges_are_rejected() {
    let mut config = small_config();
    config.frequencies.max = TAU;
    assert!(build_dictionary(&shapes(&[ShapeName::Disk]), &config).is_err());
}
