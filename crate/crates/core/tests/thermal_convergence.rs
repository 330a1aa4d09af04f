mod common;

#[test]
fn manufactured_solution_converges_at_second_order() {
    let errors = common::manufactured_thermal_errors(&[8, 16, 32]);
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio >= 3.5, "errors {errors:?}");
    }
}
