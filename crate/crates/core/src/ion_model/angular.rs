//! Clebsch-Gordan coefficients with Condon-Shortley phases.
//!
//! Angular momenta are passed doubled (`two_j = 2j`, `two_m = 2m`) so that
//! half-integer values stay exact integers.

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn is_integer_half(two_x: i32) -> bool {
    two_x % 2 == 0
}

/// `<j1 m1; j2 m2 | J M>` via the Racah closed form.
pub fn clebsch_gordan(two_j1: i32, two_m1: i32, two_j2: i32, two_m2: i32, two_j: i32, two_m: i32) -> f64 {
    if two_m1 + two_m2 != two_m {
        return 0.0;
    }
    if two_m1.abs() > two_j1 || two_m2.abs() > two_j2 || two_m.abs() > two_j {
        return 0.0;
    }
    if two_j < (two_j1 - two_j2).abs() || two_j > two_j1 + two_j2 {
        return 0.0;
    }
    if !is_integer_half(two_j1 + two_j2 + two_j)
        || !is_integer_half(two_j1 + two_m1)
        || !is_integer_half(two_j2 + two_m2)
        || !is_integer_half(two_j + two_m)
    {
        return 0.0;
    }

    let h = |x: i32| x / 2;
    let jsum = h(two_j1 + two_j2 + two_j);
    let a = h(two_j + two_j1 - two_j2);
    let b = h(two_j - two_j1 + two_j2);
    let cc = h(two_j1 + two_j2 - two_j);

    let prefactor = ((two_j + 1) as f64 * factorial(a) * factorial(b) * factorial(cc)
        / factorial(jsum + 1))
    .sqrt();
    let norm = (factorial(h(two_j + two_m))
        * factorial(h(two_j - two_m))
        * factorial(h(two_j1 - two_m1))
        * factorial(h(two_j1 + two_m1))
        * factorial(h(two_j2 - two_m2))
        * factorial(h(two_j2 + two_m2)))
    .sqrt();

    let mut sum = 0.0;
    for k in 0..=jsum {
        let d = [
            k,
            cc - k,
            h(two_j1 - two_m1) - k,
            h(two_j2 + two_m2) - k,
            h(two_j - two_j2 + two_m1) + k,
            h(two_j - two_j1 - two_m2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / d.iter().map(|&x| factorial(x)).product::<f64>();
    }
    prefactor * norm * sum
}
