mod common;

use common::{max_principal_angle, reference_svd, uniform_matrix};
use topic_score::spectral::{normalization_diag, scaled_matrix, truncated_svd};
use topic_score::{SvdMethod, SvdOptions};

fn check_against_reference(rows: usize, cols: usize, k: usize, seed: u64, method: SvdMethod) {
    let freq = uniform_matrix(rows, cols, seed);
    let m = normalization_diag(&freq);
    let b = scaled_matrix(&freq, &m).unwrap();
    let (want_sv, want_u) = reference_svd(&b, k);
    let opts = SvdOptions {
        method,
        seed,
        ..Default::default()
    };
    let sd = truncated_svd(&freq, &m, k, &opts).unwrap();
    for (got, want) in sd.singular_values.iter().zip(&want_sv) {
        assert!(
            ((got - want) / want).abs() <= 1e-10,
            "seed {seed} {method:?}: {got} vs {want}"
        );
    }
    let angle = max_principal_angle(&sd.left_vectors, &want_u);
    assert!(angle <= 1e-8, "seed {seed} {method:?}: angle {angle}");
}

#[test]
fn dense_matches_reference() {
    for seed in 0..8 {
        check_against_reference(50, 40, 5, seed, SvdMethod::Dense);
    }
}

#[test]
fn randomized_matches_reference() {
    for seed in 0..8 {
        check_against_reference(50, 40, 5, seed, SvdMethod::Randomized);
    }
}

#[test]
fn tall_and_wide_shapes() {
    check_against_reference(60, 12, 4, 1, SvdMethod::Dense);
    check_against_reference(12, 60, 4, 2, SvdMethod::Dense);
    check_against_reference(60, 12, 4, 3, SvdMethod::Randomized);
}

#[test]
fn reference_recovers_known_spectrum() {
    // diag(5, 3, 1) padded with zeros.
    let mut b = topic_score::DMatrix::zeros(4, 3);
    b[(0, 0)] = 5.0;
    b[(1, 1)] = 3.0;
    b[(2, 2)] = 1.0;
    let (sv, _) = reference_svd(&b, 3);
    for (got, want) in sv.iter().zip([5.0, 3.0, 1.0]) {
        assert!((got - want).abs() < 1e-13);
    }
}
