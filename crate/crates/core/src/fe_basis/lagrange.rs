/// Values and derivatives of the `k + 1` equispaced Lagrange polynomials on
/// `[0,1]` at `t`.
pub(crate) fn lagrange_1d(k: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=k).map(|a| a as f64 / k as f64).collect();
    let mut vals = vec![0.0; k + 1];
    let mut ders = vec![0.0; k + 1];
    for a in 0..=k {
        let mut denom = 1.0;
        for b in 0..=k {
            if b != a {
                denom *= nodes[a] - nodes[b];
            }
        }
        let mut v = 1.0;
        for b in 0..=k {
            if b != a {
                v *= t - nodes[b];
            }
        }
        // Derivative: sum over the omitted factor.
        let mut d = 0.0;
        for skip in 0..=k {
            if skip == a {
                continue;
            }
            let mut prod = 1.0;
            for b in 0..=k {
                if b != a && b != skip {
                    prod *= t - nodes[b];
                }
            }
            d += prod;
        }
        vals[a] = v / denom;
        ders[a] = d / denom;
    }
    (vals, ders)
}

/// Monomial exponents `(a, b)` with `a + b <= degree`, ordered by total
/// degree and then by the power of the second variable.
pub(crate) fn monomial_exponents(degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for d in 0..=degree {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// `x^a y^b` and its gradient.
pub(crate) fn monomial(a: usize, b: usize, x: f64, y: f64) -> (f64, [f64; 2]) {
    let pa = x.powi(a as i32);
    let pb = y.powi(b as i32);
    let da = if a == 0 { 0.0 } else { a as f64 * x.powi(a as i32 - 1) };
    let db = if b == 0 { 0.0 } else { b as f64 * y.powi(b as i32 - 1) };
    (pa * pb, [da * pb, pa * db])
}
