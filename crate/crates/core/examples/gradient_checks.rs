//! Finite-difference checks of every layer's analytic gradient.

use stateinfer::nn::gradcheck;

fn main() {
    let checks: [(&str, fn(u64) -> f64); 6] = [
        ("conv1d", gradcheck::check_conv1d),
        ("gru", gradcheck::check_gru),
        ("dense", gradcheck::check_dense),
        ("leaky_relu", gradcheck::check_leaky_relu),
        ("softmax", gradcheck::check_softmax),
        ("dice", gradcheck::check_dice),
    ];
    for (name, check) in checks {
        let worst = (0..20).map(check).fold(0.0f64, f64::max);
        println!("{name:<11} worst relative error {worst:.2e}");
    }
}
