//! Library-level walkthrough: generate data, train a target, extract a
//! fingerprint, round-trip it through JSON, and verify suspects against it.

use bmk_core::data::{generate, split, Kind, SyntheticSpec};
use bmk_core::fingerprint::{extract, load_fingerprint, save_fingerprint, ExtractConfig, Method};
use bmk_core::nn::{accuracy, train, Network, TrainConfig};
use bmk_core::suspects::fine_tune_all_layers;
use bmk_core::verify::{matching_rate, verify};

#[test]
fn extract_verify_round_trip() {
    let data = generate(&SyntheticSpec {
        kind: Kind::Blobs,
        n_per_class: 80,
        classes: 4,
        dim: 8,
        noise_sigma: 0.08,
        seed: 11,
    })
    .unwrap();
    let (train_data, test_data) = split(&data, 0.75, 12).unwrap();
    let target = train(
        &Network::small_mlp(8, 4, 13).unwrap(),
        &train_data,
        &TrainConfig::adam(0.01, 30, 32, 14),
    )
    .unwrap();
    assert!(accuracy(&target, &test_data).unwrap() > 0.9, "fixture failed to train");

    let mut cfg = ExtractConfig::new(15);
    cfg.n = 40;
    cfg.k = 0.5;
    let fp = extract(&target, Some(&train_data), Method::IpGuard, &cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fp.json");
    save_fingerprint(&fp, &path).unwrap();
    let loaded = load_fingerprint(&path).unwrap();
    assert_eq!(fp, loaded, "fingerprint JSON round trip must be lossless");

    // The target always reproduces its own labels.
    assert_eq!(matching_rate(&loaded, &target).unwrap().value(), 1.0);

    // A fine-tuned copy keeps most of the boundary; a fresh model does not.
    let derived =
        fine_tune_all_layers(&target, &train_data, &TrainConfig::adam(0.001, 5, 32, 16)).unwrap();
    let fresh = train(
        &Network::small_mlp(8, 4, 77).unwrap(),
        &train_data,
        &TrainConfig::adam(0.01, 30, 32, 78),
    )
    .unwrap();
    let r_derived = matching_rate(&loaded, &derived).unwrap().value();
    let r_fresh = matching_rate(&loaded, &fresh).unwrap().value();
    assert!(
        r_derived > r_fresh,
        "derived copy ({r_derived}) should outscore an independent model ({r_fresh})"
    );

    let verdict = verify(&loaded, &derived, 0.5).unwrap();
    assert_eq!(verdict.total, 40);
    assert_eq!(verdict.decision, u8::from(verdict.matching_rate >= 0.5));
}
