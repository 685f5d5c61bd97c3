#[path = "support/gradcheck.rs"]
mod gradcheck;

#[test]
fn layer_gradients_match_finite_differences() {
    for check in gradcheck::layer_suite(100, 11) {
        assert_eq!(check.trials, 100);
        assert!(check.max_rel_err < 1e-5, "{check:?}");
    }
}

#[test]
fn reduced_network_gradients_match_finite_differences() {
    let check = gradcheck::end_to_end(100, 5);
    assert!(check.max_rel_err < 1e-4, "{check:?}");
    assert!(
        check.skipped < check.trials,
        "too many kink crossings: {check:?}"
    );
}
