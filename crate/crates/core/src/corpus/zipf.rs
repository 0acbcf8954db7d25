//! Power-law fit of part-level word frequencies against frequency rank.

use super::FrequencyTable;
use crate::{Error, Result};

/// Result of the log-log least-squares fit `log f = C - H log r` over part
/// ranks, where `f` is the mean word frequency of the part with rank `r`
/// (rank 1 holding the most frequent words).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfFit {
    /// Intercept of the log-log line.
    pub c: f64,
    /// Magnitude of the slope; positive for any corpus whose part-level
    /// frequencies actually decrease.
    pub h: f64,
    /// Coefficient of determination of the linear fit, in [0, 1].
    pub r_squared: f64,
}

/// Fits the rank/frequency power law over `n_points` rank groups.
///
/// The rank positions are grouped into `n_points` contiguous blocks exactly
/// as [`partition_vocab`](crate::schedule::partition_vocab) splits the
/// vocabulary, and each block contributes one point: `(rank, mean frequency)`.
/// Blocks with zero mean frequency are excluded from the regression.
pub fn fit_zipf(ft: &FrequencyTable, n_points: usize) -> Result<ZipfFit> {
    if n_points < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {n_points}")));
    }
    if n_points > ft.rank_order().len() {
        return Err(Error::Fit(format!(
            "{n_points} points requested for a vocabulary of {}",
            ft.rank_order().len()
        )));
    }
    let order = ft.rank_order();
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for (i, block) in ft.rank_blocks(n_points).into_iter().enumerate() {
        let len = block.len() as f64;
        let sum: u64 = order[block].iter().map(|&w| ft.freq(w)).sum();
        let mean = sum as f64 / len;
        if mean > 0.0 {
            xs.push(((i + 1) as f64).ln());
            ys.push(mean.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Fit("fewer than 2 usable points".into()));
    }
    let (slope, intercept, r_squared) = least_squares(&xs, &ys)?;
    Ok(ZipfFit { c: intercept, h: -slope, r_squared })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("all points share one rank".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 {
        let mut sse = 0.0;
        for (&x, &y) in xs.iter().zip(ys) {
            let e = y - (intercept + slope * x);
            sse += e * e;
        }
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((slope, intercept, r_squared))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{word_frequencies, SparseCorpus};

    /// One word per rank position, frequency chosen per position, so part
    /// means are fully controlled by the caller.
    fn corpus_with_freqs(freqs: &[u32]) -> SparseCorpus {
        let docs = vec![freqs
            .iter()
            .enumerate()
            .map(|(w, &f)| (w as u32, f))
            .collect::<Vec<_>>()];
        SparseCorpus::from_docs(docs, freqs.len(), Vec::new()).unwrap()
    }

    #[test]
    fn exact_power_law_is_recovered() {
        // One part per word, so part mean frequencies are exactly 840 / r
        // (840 = lcm 1..8 keeps every frequency integral).
        let freqs: Vec<u32> = (1..=8u32).map(|r| 840 / r).collect();
        assert!(freqs.iter().zip(1u32..).all(|(&f, r)| f * r == 840));
        let c = corpus_with_freqs(&freqs);
        let ft = word_frequencies(&c);
        let fit = fit_zipf(&ft, freqs.len()).unwrap();
        assert!((fit.h - 1.0).abs() < 1e-9, "h = {}", fit.h);
        assert!((fit.c - 840f64.ln()).abs() < 1e-9, "c = {}", fit.c);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_slope_by_hand() {
        // Ranks (1, 2) with mean frequencies (100, 25): slope of log f on
        // log r is -log4/log2, so h = 2.
        let c = corpus_with_freqs(&[100, 25]);
        let ft = word_frequencies(&c);
        let fit = fit_zipf(&ft, 2).unwrap();
        assert!((fit.h - 2.0).abs() < 1e-12, "h = {}", fit.h);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_fit_error() {
        let c = corpus_with_freqs(&[10, 5]);
        let ft = word_frequencies(&c);
        assert!(matches!(fit_zipf(&ft, 1), Err(crate::Error::Fit(_))));
        assert!(matches!(fit_zipf(&ft, 3), Err(crate::Error::Fit(_))));
    }

    #[test]
    fn h_positive_for_decreasing_frequencies() {
        let c = corpus_with_freqs(&[9, 7, 7, 3, 2, 1]);
        let ft = word_frequencies(&c);
        let fit = fit_zipf(&ft, 3).unwrap();
        assert!(fit.h > 0.0);
    }
}
