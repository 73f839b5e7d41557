//! Slow exact reference implementations of the consensus, association and
//! depth metrics.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deliberate::metrics::consensus::{BalanceBand, DifficultyBand};
use deliberate::rationale::{Polarity, StatementKind, StructuredRationale};

pub fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn tenths(t: [i64; 3]) -> ([f64; 3], [BigRational; 3]) {
    (t.map(|k| k as f64 / 10.0), t.map(|k| q(k, 10)))
}

pub fn ref_variance(x: &[BigRational; 3]) -> BigRational {
    let mean = (&x[0] + &x[1] + &x[2]) / q(3, 1);
    x.iter().map(|v| (v - &mean) * (v - &mean)).fold(BigRational::zero(), |a, b| a + b) / q(3, 1)
}

pub fn ref_spread(x: &[BigRational; 3]) -> BigRational {
    let hi = x.iter().max().unwrap();
    let lo = x.iter().min().unwrap();
    hi - lo
}

pub fn ref_difficulty(v: &BigRational) -> DifficultyBand {
    if *v <= q(4, 100) {
        DifficultyBand::Unanimous
    } else if *v <= q(25, 100) {
        DifficultyBand::StrongConsensus
    } else if *v <= q(1, 1) {
        DifficultyBand::ModerateDivergence
    } else {
        DifficultyBand::HighDivergence
    }
}

pub fn ref_balance(d: &BigRational) -> BalanceBand {
    if *d <= q(1, 2) {
        BalanceBand::Aligned
    } else if *d <= q(1, 1) {
        BalanceBand::MinorVariation
    } else if *d <= q(2, 1) {
        BalanceBand::Moderate
    } else {
        BalanceBand::HighVariation
    }
}

pub fn nearest(x: &BigRational) -> f64 {
    x.to_f64().unwrap()
}

pub fn sample_triples() -> Vec<[i64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out: Vec<[i64; 3]> = (0..1000)
        .map(|_| {
            let base = rng.random_range(0..=100i64);
            let spread = *[3i64, 8, 15, 30, 100].get(rng.random_range(0..5)).unwrap();
            [0, 1, 2].map(|_| (base + rng.random_range(-spread..=spread)).clamp(0, 100))
        })
        .collect();
    // exact band edges and their neighbours
    out.extend([
        [50, 50, 50],
        [50, 55, 50],
        [50, 55, 56],
        [50, 60, 50],
        [50, 60, 61],
        [50, 70, 50],
        [50, 70, 71],
        [70, 82, 94],
        [0, 100, 50],
        [0, 0, 100],
    ]);
    out
}

pub fn ref_cramers_v_squared(table: &[Vec<u64>]) -> BigRational {
    let n: u64 = table.iter().flatten().sum();
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = BigRational::zero();
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            if rows[i] == 0 || cols[j] == 0 {
                continue;
            }
            let e = q((rows[i] * cols[j]) as i64, n as i64);
            let diff = q(o as i64, 1) - &e;
            chi2 += &diff * &diff / e;
        }
    }
    let k = rows.iter().filter(|t| **t > 0).count().min(cols.iter().filter(|t| **t > 0).count()) - 1;
    chi2 / q((n * k as u64) as i64, 1)
}

/// Longest path by explicit enumeration of every path.
pub fn ref_depth(supports: &[Vec<usize>]) -> usize {
    let mut best = 0;
    let mut stack: Vec<(usize, usize)> = (0..supports.len()).map(|i| (i, 1)).collect();
    while let Some((node, len)) = stack.pop() {
        best = best.max(len);
        for &t in &supports[node] {
            stack.push((t, len + 1));
        }
    }
    best
}

/// Random backward-support DAGs of 1 to 10 statements.
pub fn random_dags(seed: u64, count: usize) -> Vec<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=10);
            let density = rng.random_range(0.05..0.6);
            (0..n).map(|i| (0..i).filter(|_| rng.random_bool(density)).collect()).collect()
        })
        .collect()
}

pub fn rationale_from(supports: &[Vec<usize>]) -> StructuredRationale {
    let mut r = StructuredRationale::new();
    for (i, s) in supports.iter().enumerate() {
        let kind = if s.is_empty() { StatementKind::Evidence } else { StatementKind::Inference };
        r.push(kind, format!("statement {i}"), Polarity::Neutral, s.iter().copied());
    }
    r
}
