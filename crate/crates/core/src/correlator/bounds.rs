use serde::{Deserialize, Serialize};

use super::g2::G2Estimate;

/// Classical fields obey g²(τ) ≥ 1 and g²(0) ≥ g²(τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOptions {
    /// Significance in standard errors.
    #[serde(default = "default_k")]
    pub k_sigma: f64,
    /// Half-width of the pooled g²(0) window, ps. 0 uses the central bin.
    #[serde(default)]
    pub zero_window_ps: u64,
    /// Raise the per-bin threshold so that the chance of any false flag
    /// across all bins equals that of a single one-sided k-sigma test.
    #[serde(default = "default_true")]
    pub family_wise: bool,
}

fn default_k() -> f64 {
    3.0
}

fn default_true() -> bool {
    true
}

impl Default for BoundsOptions {
    fn default() -> Self {
        BoundsOptions {
            k_sigma: 3.0,
            zero_window_ps: 0,
            family_wise: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// g²(0) + kσ < 0.5.
    SinglePhoton,
    /// g²(0) + kσ < 1.
    Nonclassical,
    Classical,
}

impl Verdict {
    /// Classify a g²(0) estimate by its upper `k`-sigma bound.
    pub fn classify(g2_zero: f64, stderr: f64, k: f64) -> Verdict {
        let upper = g2_zero + k * stderr;
        if upper < 0.5 {
            Verdict::SinglePhoton
        } else if upper < 1.0 {
            Verdict::Nonclassical
        } else {
            Verdict::Classical
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub g2_zero: f64,
    pub g2_zero_stderr: f64,
    /// Per-bin threshold in standard errors actually applied.
    pub bin_threshold_sigma: f64,
    /// Delays (ps) of bins with g² < 1 beyond the threshold.
    pub below_one: Vec<i64>,
    /// Delays (ps) of bins exceeding g²(0) beyond the threshold.
    pub above_zero_delay: Vec<i64>,
    pub verdict: Verdict,
}

impl BoundsReport {
    pub fn violates_classical_bounds(&self) -> bool {
        !self.below_one.is_empty() || !self.above_zero_delay.is_empty()
    }
}

pub fn classical_bounds_check(g2: &G2Estimate, opts: &BoundsOptions) -> BoundsReport {
    let (g0, s0) = if opts.zero_window_ps == 0 {
        let c = g2.center();
        (c.g2, c.stderr)
    } else {
        g2.window(opts.zero_window_ps)
    };
    let threshold = if opts.family_wise {
        family_wise_threshold(opts.k_sigma, g2.len())
    } else {
        opts.k_sigma
    };
    let mut below_one = Vec::new();
    let mut above_zero_delay = Vec::new();
    for b in &g2.bins {
        if 1.0 - b.g2 > threshold * b.stderr {
            below_one.push(b.tau_ps);
        }
        let zero_bin = b.tau_ps.unsigned_abs() <= opts.zero_window_ps;
        if !zero_bin && b.g2 - g0 > threshold * (b.stderr * b.stderr + s0 * s0).sqrt() {
            above_zero_delay.push(b.tau_ps);
        }
    }
    let verdict = Verdict::classify(g0, s0, opts.k_sigma);
    BoundsReport {
        g2_zero: g0,
        g2_zero_stderr: s0,
        bin_threshold_sigma: threshold,
        below_one,
        above_zero_delay,
        verdict,
    }
}

/// Šidák-corrected one-sided threshold for `m` simultaneous tests.
fn family_wise_threshold(k: f64, m: usize) -> f64 {
    if m <= 1 {
        return k;
    }
    let alpha = upper_tail(k);
    let per_test = 1.0 - (1.0 - alpha).powf(1.0 / m as f64);
    inverse_upper_tail(per_test).max(k)
}

/// P(Z > z) for a standard normal.
fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn inverse_upper_tail(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if upper_tail(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Complementary error function (Numerical Recipes erfcc, |rel err| < 1.2e-7).
pub(crate) fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::g2::G2Bin;

    fn estimate(values: &[(i64, u64)], acc: f64) -> G2Estimate {
        G2Estimate {
            bin_width_ps: 100,
            accidentals_per_bin: acc,
            bins: values
                .iter()
                .map(|&(tau_ps, c)| G2Bin {
                    tau_ps,
                    g2: c as f64 / acc,
                    stderr: (c.max(1) as f64).sqrt() / acc,
                    counts: c,
                })
                .collect(),
        }
    }

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-7);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-7);
        assert!((upper_tail(3.0) - 0.001_349_898).abs() < 1e-8);
    }

    #[test]
    fn threshold_grows_with_bins() {
        assert_eq!(family_wise_threshold(3.0, 1), 3.0);
        let t = family_wise_threshold(3.0, 2703);
        assert!(t > 4.5 && t < 5.2, "{t}");
    }

    #[test]
    fn flat_data_no_violation() {
        let e = estimate(&[(-200, 1000), (-100, 1010), (0, 995), (100, 990), (200, 1003)], 1000.0);
        let r = classical_bounds_check(&e, &BoundsOptions::default());
        assert!(!r.violates_classical_bounds());
        assert_eq!(r.verdict, Verdict::Classical);
    }

    #[test]
    fn antibunched_data_flagged() {
        let e = estimate(&[(-200, 1000), (-100, 600), (0, 20), (100, 610), (200, 1003)], 1000.0);
        let r = classical_bounds_check(&e, &BoundsOptions::default());
        assert!(r.below_one.contains(&0));
        assert!(r.above_zero_delay.contains(&200));
        assert_eq!(r.verdict, Verdict::SinglePhoton);
        let e = estimate(&[(-100, 1000), (0, 700), (100, 1000)], 1000.0);
        assert_eq!(
            classical_bounds_check(&e, &BoundsOptions::default()).verdict,
            Verdict::Nonclassical
        );
    }
}
