mod common;

use common::{gradient_checks, reference_loss};
use slc::{forward_backward, init_params, Matrix, NetworkSpec, SelectorKind};

#[test]
fn analytic_gradients_match_central_differences() {
    let checks = gradient_checks(1, 24);
    let kinds: Vec<_> = checks.iter().map(|c| c.spec.selector).collect();
    assert!(kinds.contains(&SelectorKind::Identity));
    assert!(kinds.contains(&SelectorKind::ForwardDifference));
    for lambda in [0.0, 1.0, 10.0] {
        assert!(checks.iter().any(|c| c.spec.lambda == lambda));
    }
    for c in &checks {
        assert!(
            c.max_rel_err < 1e-5,
            "{:?}: relative error {:.3e}",
            c.spec,
            c.max_rel_err
        );
    }
}

#[test]
fn batched_loss_matches_scalar_reference_at_full_shape_ratios() {
    let spec = NetworkSpec::from_ratios(49, 2.0, 4.0, 3.0, SelectorKind::ForwardDifference, 5).unwrap();
    let params = init_params(&spec).unwrap();
    let x = Matrix::from_vec(49, 7, (0..49 * 7).map(|i| ((i * 37) % 101) as f64 / 100.0).collect()).unwrap();
    let got = forward_backward(&x, &params, &spec).unwrap().loss.total;
    let want = reference_loss(&x, &params, spec.selector, spec.lambda);
    assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
}
