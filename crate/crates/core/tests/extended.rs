//! Extended-precision enclosure against an independent high-precision root.

use origami_entropy::extended::{extended_entropy_enclosure, ExtendedMatrix};
use origami_entropy::{builtin_surface, check_hypothesis, Family};

/// Root of `f^{(100)} = 1/2` for the L-shape at the equilateral point,
/// computed separately with 50-digit arithmetic and Newton's method.
const REFERENCE: &str = "4.34934504614150288209950550977587953";

#[test]
fn equilateral_l_shape_to_thirty_digits() {
    let x = check_hypothesis(&builtin_surface(Family::L, 0).unwrap()).unwrap();
    let start = std::time::Instant::now();
    let enc = extended_entropy_enclosure(&x, &ExtendedMatrix::equilateral(), 100).unwrap();
    let lo = enc.h_lo_digits(32).unwrap();
    let hi = enc.h_hi_digits(32).unwrap();
    eprintln!(
        "lo {lo}\nhi {hi}\nevals {} in {:?}",
        enc.evaluations,
        start.elapsed()
    );
    let shared = |s: &str| {
        s.chars()
            .zip(REFERENCE.chars())
            .take_while(|(a, b)| a == b)
            .count()
    };
    // Leading "4." plus 29 decimals is 30 significant digits.
    assert!(shared(&lo) >= 31, "{lo}");
    assert!(shared(&hi) >= 31, "{hi}");
    assert!(enc.width().unwrap() < 1e-30);
}
