use fraclap::halflap::{quadratic_form_kernel, sample_on, seminorm, Order};
use fraclap::SpectralField;

/// Relative error of the kernel form against the spectral Ḣ^{1/2} value.
fn kernel_error(u: &SpectralField, m: usize) -> f64 {
    let exact = seminorm(u, Order::Half);
    (quadratic_form_kernel(&sample_on(u, m).unwrap()) - exact).abs() / exact
}

#[test]
fn converges_at_first_order_on_mixed_modes() {
    let u = SpectralField::new(vec![2.0, 0.7, -0.4, 0.25, 0.0, 0.1]).unwrap();
    let errs: Vec<f64> = [256, 512, 1024, 2048].iter().map(|&m| kernel_error(&u, m)).collect();
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((0.8..=1.2).contains(&rate), "rate {rate} from {errs:?}");
    }
    assert!(errs[3] < 5e-3, "{errs:?}");
}

#[test]
fn constants_have_zero_form() {
    let u = SpectralField::constant(3.0, 4);
    assert_eq!(quadratic_form_kernel(&sample_on(&u, 64).unwrap()), 0.0);
}
