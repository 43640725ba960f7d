//! Statistical primitives: block means, empirical central absolute
//! p-moments with residuals, unbiased variance, and median-of-blocks
//! amplification.

use crate::error::{Error, Result};

/// Neumaier-compensated summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `|x|^p`, guarded at `x = 0` so non-integer orders never hit `ln(0)`.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = x.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// Arithmetic mean with compensated summation.
pub fn empirical_mean(block: &[f64]) -> Result<f64> {
    if block.is_empty() {
        return Err(Error::EmptyBlock);
    }
    Ok(stable_sum(block.iter().copied()) / block.len() as f64)
}

/// `(1/m) sum |Y_i - mean|^p` over the block's own empirical mean.
/// Nonnegative; zero iff all values are equal.
pub fn empirical_central_p_moment(block: &[f64], p: f64) -> Result<f64> {
    let mean = empirical_mean(block)?;
    Ok(stable_sum(block.iter().map(|&y| abs_pow(y - mean, p))) / block.len() as f64)
}

/// Sample variance with divisor `m - 1`; requires `m >= 2`.
pub fn unbiased_variance(block: &[f64]) -> Result<f64> {
    if block.len() < 2 {
        return Err(Error::VarianceNeedsTwo(block.len()));
    }
    let mean = empirical_mean(block)?;
    let ss = stable_sum(block.iter().map(|&y| (y - mean) * (y - mean)));
    Ok(ss / (block.len() - 1) as f64)
}

/// Middle order statistic of an odd-length collection, found by selection
/// rather than a full sort.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() || values.len() % 2 == 0 {
        return Err(Error::MedianNeedsOddLength(values.len()));
    }
    let mut work = values.to_vec();
    let mid = work.len() / 2;
    let (_, pivot, _) = work.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    Ok(*pivot)
}

/// Per-block statistic usable inside the median-of-blocks scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BlockStatistic {
    Mean,
    CentralMoment(f64),
    UnbiasedVariance,
}

impl BlockStatistic {
    pub fn eval(&self, block: &[f64]) -> Result<f64> {
        match self {
            BlockStatistic::Mean => empirical_mean(block),
            BlockStatistic::CentralMoment(p) => empirical_central_p_moment(block, *p),
            BlockStatistic::UnbiasedVariance => unbiased_variance(block),
        }
    }
}

/// Partition `samples` into `k` consecutive blocks of size `m` (input
/// order), apply `statistic` per block, return the median of the `k`
/// block values.
pub fn median_of_block_statistic(
    samples: &[f64],
    k: usize,
    m: usize,
    statistic: BlockStatistic,
) -> Result<f64> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::MedianNeedsOddLength(k));
    }
    if samples.len() != k * m {
        return Err(Error::BlockLengthMismatch {
            expected: k * m,
            got: samples.len(),
        });
    }
    let per_block: Vec<f64> = samples
        .chunks_exact(m)
        .map(|b| statistic.eval(b))
        .collect::<Result<_>>()?;
    median(&per_block)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_examples() {
        assert_eq!(empirical_mean(&[5.0, 5.0, 5.0]).unwrap(), 5.0);
        assert_eq!(empirical_mean(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(empirical_mean(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(empirical_mean(&[]), Err(Error::EmptyBlock));
    }

    #[test]
    fn central_moment_examples() {
        for p in [1.0, 1.7, 2.0, 3.0] {
            assert_eq!(empirical_central_p_moment(&[5.0, 5.0, 5.0], p).unwrap(), 0.0);
        }
        assert_eq!(empirical_central_p_moment(&[0.0, 2.0], 1.0).unwrap(), 1.0);
        assert_eq!(empirical_central_p_moment(&[0.0, 0.0, 3.0], 2.0).unwrap(), 2.0);
    }

    #[test]
    fn variance_examples() {
        assert_eq!(unbiased_variance(&[0.0, 2.0]).unwrap(), 2.0);
        assert_eq!(unbiased_variance(&[4.0; 6]).unwrap(), 0.0);
        assert_eq!(unbiased_variance(&[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(unbiased_variance(&[1.0]), Err(Error::VarianceNeedsTwo(1)));
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0]).unwrap(), 3.0);
        assert_eq!(median(&[1.0, 5.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[7.0, 7.0, 1.0, 9.0, 7.0]).unwrap(), 7.0);
        assert_eq!(median(&[1.0, 2.0]), Err(Error::MedianNeedsOddLength(2)));
        assert_eq!(median(&[]), Err(Error::MedianNeedsOddLength(0)));
    }

    #[test]
    fn median_of_blocks_examples() {
        let xs = [0.0, 2.0, 10.0, 10.0, 0.0, 0.0];
        assert_eq!(
            median_of_block_statistic(&xs, 3, 2, BlockStatistic::Mean).unwrap(),
            1.0
        );
        let ys = [0.0, 2.0, 5.0, 5.0, 0.0, 4.0];
        assert_eq!(
            median_of_block_statistic(&ys, 3, 2, BlockStatistic::CentralMoment(1.0)).unwrap(),
            1.0
        );
        // k = 1 equals the plain statistic on the whole collection.
        let zs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            median_of_block_statistic(&zs, 1, 4, BlockStatistic::Mean).unwrap(),
            empirical_mean(&zs).unwrap()
        );
        assert!(matches!(
            median_of_block_statistic(&zs, 3, 2, BlockStatistic::Mean),
            Err(Error::BlockLengthMismatch { .. })
        ));
    }

    #[test]
    fn shift_invariance_on_dyadic_inputs_is_exact() {
        // Dyadic values, dyadic shift, power-of-two block length: every
        // intermediate is exactly representable, so the residuals cancel
        // the shift bit-for-bit.
        let block = [0.25, 1.5, -0.75, 2.0, 0.0, -1.25, 3.5, 0.5];
        for c in [1.0, -2.5, 0.125, 1024.0] {
            let shifted: Vec<f64> = block.iter().map(|y| y + c).collect();
            for p in [1.0, 2.0] {
                assert_eq!(
                    empirical_central_p_moment(&block, p).unwrap(),
                    empirical_central_p_moment(&shifted, p).unwrap(),
                    "p = {p}, c = {c}"
                );
            }
        }
    }
}
