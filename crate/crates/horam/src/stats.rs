//! Small statistics kit: log-gamma, regularized incomplete gamma, and the
//! chi-square goodness-of-fit p-value used by the uniformity audit and by
//! distribution tests.

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    debug_assert!(x > 0.0);
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for g in G {
        y += 1.0;
        ser += g / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x) by series expansion.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let gln = ln_gamma(a);
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - gln).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let gln = ln_gamma(a);
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - gln).exp() * h
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Upper-tail p-value of a chi-square statistic with `df` degrees of freedom.
pub fn chi_square_pvalue(stat: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, stat / 2.0)
}

/// Chi-square goodness-of-fit statistic of observed counts against a uniform
/// expectation.
pub fn chi_square_uniform(counts: &[u64], total: u64) -> f64 {
    let e = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&o| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_matches_factorials() {
        // ln Γ(n+1) = ln n!
        let mut lf = 0.0f64;
        for n in 1..20u32 {
            lf += (n as f64).ln();
            assert!((ln_gamma(n as f64 + 1.0) - lf).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn chi_square_known_points() {
        // Q(k/2, x/2) spot values: chi2 cdf with df=2 is 1-exp(-x/2).
        let p = chi_square_pvalue(2.0, 2.0);
        assert!((p - (-1.0f64).exp()).abs() < 1e-12);
        // df=1, x=3.841: p close to 0.05
        let p = chi_square_pvalue(3.841, 1.0);
        assert!((p - 0.05).abs() < 2e-4);
        // df=10, x=23.209: p close to 0.01
        let p = chi_square_pvalue(23.209, 10.0);
        assert!((p - 0.01).abs() < 2e-4);
    }
}
