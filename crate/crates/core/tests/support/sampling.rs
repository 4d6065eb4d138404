//! Exact binomial sampling for Monte-Carlo checks.
//!
//! Successes are located by jumping over geometric runs of failures, so the
//! cost per draw is proportional to the smaller of n*p and n*(1-p). Each gap
//! comes from inverting the geometric CDF of a single uniform, which keeps the
//! sampler exact in the tails.

use rand::Rng;

pub fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if p <= 0.0 || n == 0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - binomial(rng, n, 1.0 - p);
    }
    let log_q = (1.0 - p).ln();
    let mut position = 0u64;
    let mut hits = 0u64;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let gap = (u.ln() / log_q).floor();
        if gap >= (n - position) as f64 {
            return hits;
        }
        position += gap as u64 + 1;
        hits += 1;
        if position >= n {
            return hits;
        }
    }
}
