/// `(e^(a t) - e^(b t)) / (a - b)`, continuous at `a = b` (value `t e^(b t)`).
///
/// Factoring out the larger exponential keeps the result finite when `a`
/// and `b` are far apart.
pub(crate) fn exp_divided_difference(a: f64, b: f64, t: f64) -> f64 {
    let d = a - b;
    if d == 0.0 {
        t * (b * t).exp()
    } else if d > 0.0 {
        (a * t).exp() * -(-d * t).exp_m1() / d
    } else {
        (b * t).exp() * (d * t).exp_m1() / d
    }
}
