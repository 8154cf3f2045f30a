//! Special functions used by the statistical verdicts.
//!
//! The chi quantile and the normal tail are computed in-house from the
//! regularized incomplete gamma function. The incomplete beta function
//! behind the Clopper–Pearson bounds comes from `statrs`.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
///
/// Series expansion below `x < a + 1`, modified Lentz continued fraction
/// for the complement above.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    reg_gamma_pair(a, x).0
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x), accurate in
/// the far tail.
pub fn reg_upper_gamma(a: f64, x: f64) -> f64 {
    reg_gamma_pair(a, x).1
}

fn reg_gamma_pair(a: f64, x: f64) -> (f64, f64) {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        let lower = (sum * log_prefactor.exp()).min(1.0);
        (lower, 1.0 - lower)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let upper = (log_prefactor.exp() * h).clamp(0.0, 1.0);
        (1.0 - upper, upper)
    }
}

/// CDF of the chi distribution with `dof` degrees of freedom.
pub fn chi_cdf(dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        reg_lower_gamma(dof as f64 / 2.0, x * x / 2.0)
    }
}

/// Quantile of the chi distribution (the law of ‖Z‖ for Z ~ N(0, I_dof)),
/// by bisection to absolute tolerance 1e-10.
pub fn chi_quantile(dof: usize, prob: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::arg("chi quantile needs at least one degree of freedom"));
    }
    if !(0.0..1.0).contains(&prob) {
        return Err(Error::arg(format!("probability {prob} outside [0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = (dof as f64).sqrt() + 10.0;
    while chi_cdf(dof, hi) < prob {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if chi_cdf(dof, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper tail P(N(0,1) >= x).
pub fn normal_sf(x: f64) -> f64 {
    // erfc(z) = Q(1/2, z²)
    let q = 0.5 * reg_upper_gamma(0.5, 0.5 * x * x);
    if x >= 0.0 {
        q
    } else {
        1.0 - q
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}

/// Standard normal quantile, by bisection on the CDF.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// P(Bin(trials, p) >= successes).
fn binomial_upper_tail(successes: u64, trials: u64, p: f64) -> f64 {
    if successes == 0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    beta_reg(successes as f64, (trials - successes + 1) as f64, p)
}

/// One-sided Clopper–Pearson lower confidence bound for a binomial
/// proportion at the given confidence level.
pub fn clopper_pearson_lower(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(successes <= trials && trials > 0);
    if successes == 0 {
        return 0.0;
    }
    let alpha = 1.0 - confidence;
    // smallest p with P(X >= k | p) >= alpha; the tail is increasing in p
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binomial_upper_tail(successes, trials, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    lo
}

/// One-sided Clopper–Pearson upper confidence bound.
pub fn clopper_pearson_upper(successes: u64, trials: u64, confidence: f64) -> f64 {
    assert!(successes <= trials && trials > 0);
    1.0 - clopper_pearson_lower(trials - successes, trials, confidence)
}
