//! Small numeric helpers shared by the source model and the exact-moment
//! engine: log-factorials, compensated summation and closed-form binomial
//! raw moments.

/// ln(n!) — exact table for n ≤ 20, Stirling series with three correction
/// terms above (relative error below 1e-13 for n > 20).
pub fn ln_factorial(n: u64) -> f64 {
    const LN_FACT_SMALL: [f64; 21] = [
        0.0,
        0.0,
        std::f64::consts::LN_2,
        1.791759469228055,
        3.1780538303479458,
        4.787491742782046,
        6.579251212010101,
        8.525161361065415,
        10.60460290274525,
        12.80182748008147,
        15.104412573075516,
        17.502307845873887,
        19.98721449566189,
        22.552163853123425,
        25.19122118273868,
        27.899271383840894,
        30.671860106080675,
        33.50507345013689,
        36.39544520803305,
        39.339884187199495,
        42.335616460753485,
    ];
    if n <= 20 {
        return LN_FACT_SMALL[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv3 = inv * inv * inv;
    let inv5 = inv3 * inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + inv / 12.0 - inv3 / 360.0
        + inv5 / 1260.0
}

/// Kahan–Babuška compensated accumulator for long sums of small terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Falling factorial (k)_r = k (k-1) ... (k-r+1) evaluated in f64.
fn falling_factorial(k: f64, r: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..r {
        acc *= k - i as f64;
    }
    acc
}

/// Stirling numbers of the second kind S(j, r) for j ≤ 4, indexed [j][r].
const STIRLING2: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 1.0, 0.0, 0.0],
    [0.0, 1.0, 3.0, 1.0, 0.0],
    [0.0, 1.0, 7.0, 6.0, 1.0],
];

/// Raw moment E[X^j] of X ~ Binomial(k, p), exact closed form for j ≤ 4.
///
/// Uses E[(X)_r] = (k)_r p^r together with x^j = Σ_r S(j,r) (x)_r, so the
/// result is exact for non-negative integer k (no truncation involved).
pub fn binomial_raw_moment(k: f64, p: f64, j: u32) -> f64 {
    assert!(j <= 4, "binomial raw moments implemented up to order 4");
    if j == 0 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut p_pow = 1.0;
    for r in 1..=j {
        p_pow *= p;
        acc += STIRLING2[j as usize][r as usize] * falling_factorial(k, r) * p_pow;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_factorial_matches_direct_product() {
        for n in [0u64, 1, 5, 20, 21, 30, 100] {
            let direct: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
            assert_relative_eq!(
                ln_factorial(n),
                direct,
                epsilon = 1e-10,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn binomial_moments_match_enumeration() {
        // Brute-force enumeration of the Binomial(k, p) pmf.
        let k = 9u32;
        let p: f64 = 0.37;
        for j in 0..=4u32 {
            let mut expected = 0.0;
            for l in 0..=k {
                let pmf = ((ln_factorial(k as u64)
                    - ln_factorial(l as u64)
                    - ln_factorial((k - l) as u64))
                    + l as f64 * p.ln()
                    + (k - l) as f64 * (1.0 - p).ln())
                .exp();
                expected += pmf * (l as f64).powi(j as i32);
            }
            assert_relative_eq!(
                binomial_raw_moment(k as f64, p, j),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn binomial_second_moment_closed_form() {
        // E[X^2] = kp - k p^2 + k^2 p^2
        let (k, p) = (7.0, 0.3);
        assert_relative_eq!(
            binomial_raw_moment(k, p, 2),
            k * p - k * p * p + k * k * p * p,
            max_relative = 1e-14
        );
    }

    #[test]
    fn kahan_sum_recovers_small_terms() {
        let mut s = KahanSum::new();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        assert_relative_eq!(s.value(), 1.0 + 1e-10, max_relative = 1e-12);
    }
}
