mod common;

#[test]
fn staggered_step_matches_dense_monolithic_solve() {
    for seed in 0..5 {
        let r = common::mech_dense_oracle(seed);
        assert!(r.max_u_error < 1e-9, "seed {seed}: u error {:e}", r.max_u_error);
        assert!(r.max_z_error < 1e-9, "seed {seed}: z error {:e}", r.max_z_error);
    }
}
