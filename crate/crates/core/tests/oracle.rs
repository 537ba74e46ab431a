//! Values computed independently of this crate and frozen here.

use starforms::{Mollifier, Variant};

/// `‖∂₁²θ‖_{L¹}` for the unit-radius bump in the plane. Computed with 40-digit
/// adaptive quadrature: the angular integral of `|a cos²φ + b|` in closed form
/// between its sign changes, then the radial integral split where the sign
/// pattern changes (`|x|² = 1/2` and the root near `|x| ≈ 0.7598`).
const D11_THETA_L1: f64 = 8.746_757_165_761_334;

/// Mass of the unnormalised profile `exp(−1/(1−|x|²))` on the unit disk.
const PROFILE_MASS: f64 = 0.466_512_393_178_330_07;

#[test]
fn second_derivative_norm_matches_the_oracle() {
    let m = Mollifier::new(&[0.0, 0.0], 1.0).unwrap();
    let got = m.l1_norm(Variant::Theta, &[1, 1]);
    assert!((got - D11_THETA_L1).abs() < 1e-6 * D11_THETA_L1, "{got}");
}

#[test]
fn c_phi_on_the_unit_disk_matches_the_oracle() {
    let m = Mollifier::new(&[0.0, 0.0], 1.0).unwrap();
    let got = m.c_phi_constant(Variant::Theta, 1, 1.0).unwrap();
    assert!(
        (got - (1.0 + D11_THETA_L1)).abs() < 1e-6 * D11_THETA_L1,
        "{got}"
    );
}

#[test]
fn normalisation_matches_the_oracle() {
    let m = Mollifier::new(&[0.0, 0.0], 1.0).unwrap();
    assert!((m.normalization() * PROFILE_MASS - 1.0).abs() < 1e-12);
}
