//! Classical temporal pre-alignment: linear timestamp regression,
//! normalized cross-correlation, and banded dynamic time warping.

use crate::error::{Error, Result};
use crate::signal::ScalarSeries;

/// Least-squares fit of `t_video = slope · t_imu + offset`.
pub fn linear_time_fit(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::InvalidData("need at least 2 time pairs".into()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 1e-18 {
        return Err(Error::InvalidData("degenerate fit: all source times equal".into()));
    }
    let slope = sxy / sxx;
    let offset = my - slope * mx;
    Ok((offset, slope))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XcorrResult {
    /// Lag maximizing the normalized correlation of a[t] against b[t + lag].
    pub lag: i64,
    /// Peak correlation; 0 flags a degenerate (constant) input.
    pub confidence: f64,
}

fn pearson_overlap(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 3 {
        return None;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = a[i] - ma;
        let dy = b[i] - mb;
        num += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 1e-18 || vb <= 1e-18 {
        return None;
    }
    Some(num / (va * vb).sqrt())
}

/// Best integer lag within ±`max_lag` frames; ties break to the smallest
/// |lag|. Constant inputs return lag 0 with zero confidence.
pub fn xcorr_align(a: &ScalarSeries, b: &ScalarSeries, max_lag: usize) -> Result<XcorrResult> {
    if (a.rate - b.rate).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "mismatched rates {} vs {}",
            a.rate, b.rate
        )));
    }
    let mut best: Option<(i64, f64)> = None;
    // 0, +1, −1, +2, −2, …: first strict maximum keeps the smallest |lag|.
    let mut lags = vec![0i64];
    for l in 1..=max_lag as i64 {
        lags.push(l);
        lags.push(-l);
    }
    for lag in lags {
        let corr = if lag >= 0 {
            let l = lag as usize;
            if l >= b.values.len() {
                continue;
            }
            pearson_overlap(&a.values, &b.values[l..])
        } else {
            let l = (-lag) as usize;
            if l >= a.values.len() {
                continue;
            }
            pearson_overlap(&a.values[l..], &b.values)
        };
        if let Some(c) = corr {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((lag, c));
            }
        }
    }
    match best {
        Some((lag, confidence)) => Ok(XcorrResult { lag, confidence }),
        None => Ok(XcorrResult { lag: 0, confidence: 0.0 }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwResult {
    /// Monotone, boundary-complete warp path of (a index, b index) pairs.
    pub path: Vec<(usize, usize)>,
    pub cost: f64,
    /// Set when the requested band was too narrow to connect the corners.
    pub band_widened: bool,
}

/// Banded DTW with absolute-difference local cost and the symmetric step
/// set {(1,0), (0,1), (1,1)}. A band too small for the length difference is
/// widened automatically.
pub fn dtw_align(a: &[f64], b: &[f64], band: Option<usize>) -> Result<DtwResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidData("empty sequence in DTW".into()));
    }
    let (n, m) = (a.len(), b.len());
    let diff = n.abs_diff(m);
    let (band, band_widened) = match band {
        None => (n.max(m), false),
        Some(bd) if bd < diff => (diff, true),
        Some(bd) => (bd, false),
    };

    const INF: f64 = f64::INFINITY;
    let mut cost = vec![INF; n * m];
    let mut back = vec![0u8; n * m]; // 1 = (i-1,j), 2 = (i,j-1), 3 = diag
    let idx = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        let lo = i.saturating_sub(band);
        let hi = (i + band).min(m - 1);
        for j in lo..=hi {
            let local = (a[i] - b[j]).abs();
            if i == 0 && j == 0 {
                cost[idx(0, 0)] = local;
                continue;
            }
            let mut best = INF;
            let mut dir = 0u8;
            if i > 0 && cost[idx(i - 1, j)] < best {
                best = cost[idx(i - 1, j)];
                dir = 1;
            }
            if j > 0 && cost[idx(i, j - 1)] < best {
                best = cost[idx(i, j - 1)];
                dir = 2;
            }
            if i > 0 && j > 0 && cost[idx(i - 1, j - 1)] <= best {
                best = cost[idx(i - 1, j - 1)];
                dir = 3;
            }
            if best < INF {
                cost[idx(i, j)] = best + local;
                back[idx(i, j)] = dir;
            }
        }
    }

    let total = cost[idx(n - 1, m - 1)];
    if !total.is_finite() {
        return Err(Error::InvalidData("DTW band disconnected the corners".into()));
    }
    let mut path = Vec::new();
    let (mut i, mut j) = (n - 1, m - 1);
    loop {
        path.push((i, j));
        if i == 0 && j == 0 {
            break;
        }
        match back[idx(i, j)] {
            1 => i -= 1,
            2 => j -= 1,
            _ => {
                i -= 1;
                j -= 1;
            }
        }
    }
    path.reverse();
    Ok(DtwResult { path, cost: total, band_widened })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn linear_fit_recovers_offset_and_slope() {
        let pairs: Vec<(f64, f64)> = (0..20).map(|i| {
            let t = i as f64 * 0.1;
            (t, t + 0.3)
        }).collect();
        let (offset, slope) = linear_time_fit(&pairs).unwrap();
        assert!((offset - 0.3).abs() < 1e-12);
        assert!((slope - 1.0).abs() < 1e-12);

        let pairs2: Vec<(f64, f64)> = (0..20).map(|i| {
            let t = i as f64 * 0.1;
            (t, 1.02 * t)
        }).collect();
        let (_, slope2) = linear_time_fit(&pairs2).unwrap();
        assert!((slope2 - 1.02).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_matches_normal_equations_on_noise() {
        let mut rng = Rng::new(4);
        let pairs: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, 0.97 * t - 0.2 + 0.01 * rng.gaussian())
            })
            .collect();
        let (offset, slope) = linear_time_fit(&pairs).unwrap();
        // Direct normal equations.
        let n = pairs.len() as f64;
        let sx: f64 = pairs.iter().map(|p| p.0).sum();
        let sy: f64 = pairs.iter().map(|p| p.1).sum();
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        let slope_ref = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let offset_ref = (sy - slope_ref * sx) / n;
        assert!((slope - slope_ref).abs() < 1e-12);
        assert!((offset - offset_ref).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_rejects_degenerate() {
        assert!(linear_time_fit(&[(1.0, 2.0), (1.0, 3.0)]).is_err());
    }

    fn series(values: Vec<f64>) -> ScalarSeries {
        ScalarSeries::new(0.0, 30.0, values)
    }

    #[test]
    fn xcorr_identity_and_shift() {
        let mut rng = Rng::new(9);
        let base: Vec<f64> = (0..90).map(|i| (i as f64 * 0.3).sin() + 0.1 * rng.gaussian()).collect();
        let a = series(base.clone());
        assert_eq!(xcorr_align(&a, &a, 10).unwrap().lag, 0);

        // b delayed by 3 frames: b[t] = a[t − 3].
        let mut delayed = vec![0.0; 3];
        delayed.extend_from_slice(&base[..87]);
        let b = series(delayed);
        let r = xcorr_align(&a, &b, 10).unwrap();
        assert_eq!(r.lag, 3, "confidence {}", r.confidence);
    }

    #[test]
    fn xcorr_brute_force_oracle() {
        let mut rng = Rng::new(21);
        for trial in 0..20 {
            let base: Vec<f64> = (0..60).map(|_| rng.gaussian()).collect();
            let shift = (trial % 9) as i64 - 4;
            let b: Vec<f64> = (0..60)
                .map(|i| {
                    let j = i as i64 - shift;
                    if (0..60).contains(&j) { base[j as usize] } else { rng.gaussian() }
                })
                .collect();
            let r = xcorr_align(&series(base), &series(b), 8).unwrap();
            assert_eq!(r.lag, shift, "trial {trial}");
        }
    }

    #[test]
    fn xcorr_constant_series_flagged() {
        let a = series(vec![1.0; 50]);
        let b = series(vec![2.0; 50]);
        let r = xcorr_align(&a, &b, 5).unwrap();
        assert_eq!(r.lag, 0);
        assert_eq!(r.confidence, 0.0);
    }

    #[test]
    fn negated_signal_returns_best_positive_corr_lag() {
        let base: Vec<f64> = (0..80).map(|i| (i as f64 * 0.37).sin()).collect();
        let neg: Vec<f64> = base.iter().map(|v| -v).collect();
        let r = xcorr_align(&series(base.clone()), &series(neg), 12).unwrap();
        // Brute force over signed correlations, scanning lags in the same
        // smallest-|lag|-first order the implementation uses for ties.
        let mut best = (0i64, f64::NEG_INFINITY);
        let a = series(base.clone());
        let mut order = vec![0i64];
        for l in 1..=12i64 {
            order.push(l);
            order.push(-l);
        }
        for lag in order {
            let c = if lag >= 0 {
                pearson_overlap(&a.values, &base.iter().map(|v| -v).collect::<Vec<_>>()[lag as usize..])
            } else {
                pearson_overlap(&a.values[(-lag) as usize..], &base.iter().map(|v| -v).collect::<Vec<_>>())
            };
            if let Some(c) = c {
                if c > best.1 {
                    best = (lag, c);
                }
            }
        }
        assert_eq!(r.lag, best.0);
    }

    #[test]
    fn dtw_identity_is_diagonal() {
        let a: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = dtw_align(&a, &a, None).unwrap();
        assert_eq!(r.cost, 0.0);
        assert_eq!(r.path, (0..10).map(|i| (i, i)).collect::<Vec<_>>());
    }

    #[test]
    fn dtw_singletons() {
        let r = dtw_align(&[2.0], &[5.5], None).unwrap();
        assert!((r.cost - 3.5).abs() < 1e-12);
    }

    #[test]
    fn dtw_band_widens_when_too_small() {
        let a = vec![0.0; 12];
        let b = vec![0.0; 4];
        let r = dtw_align(&a, &b, Some(1)).unwrap();
        assert!(r.band_widened);
        assert_eq!(r.path.first(), Some(&(0, 0)));
        assert_eq!(r.path.last(), Some(&(11, 3)));
    }

    fn exhaustive_dtw(a: &[f64], b: &[f64]) -> f64 {
        fn go(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
            let local = (a[i] - b[j]).abs();
            if i == 0 && j == 0 {
                return local;
            }
            let mut best = f64::INFINITY;
            if i > 0 {
                best = best.min(go(a, b, i - 1, j));
            }
            if j > 0 {
                best = best.min(go(a, b, i, j - 1));
            }
            if i > 0 && j > 0 {
                best = best.min(go(a, b, i - 1, j - 1));
            }
            best + local
        }
        go(a, b, a.len() - 1, b.len() - 1)
    }

    #[test]
    fn dtw_matches_exhaustive_path_enumeration() {
        let mut rng = Rng::new(31);
        for _ in 0..100 {
            let n = 1 + rng.below(8);
            let m = 1 + rng.below(8);
            let a: Vec<f64> = (0..n).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let r = dtw_align(&a, &b, None).unwrap();
            let oracle = exhaustive_dtw(&a, &b);
            assert!((r.cost - oracle).abs() < 1e-12, "{} vs {oracle}", r.cost);
        }
    }

    #[test]
    fn dtw_symmetric_and_zero_iff_equal() {
        let mut rng = Rng::new(8);
        let a: Vec<f64> = (0..12).map(|_| rng.gaussian()).collect();
        let b: Vec<f64> = (0..9).map(|_| rng.gaussian()).collect();
        let ab = dtw_align(&a, &b, None).unwrap().cost;
        let ba = dtw_align(&b, &a, None).unwrap().cost;
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab > 0.0);
        assert_eq!(dtw_align(&a, &a, None).unwrap().cost, 0.0);
    }

    #[test]
    fn dtw_path_is_monotone_and_boundary_complete() {
        let mut rng = Rng::new(13);
        let a: Vec<f64> = (0..20).map(|_| rng.gaussian()).collect();
        let b: Vec<f64> = (0..15).map(|_| rng.gaussian()).collect();
        let r = dtw_align(&a, &b, Some(6)).unwrap();
        assert_eq!(*r.path.first().unwrap(), (0, 0));
        assert_eq!(*r.path.last().unwrap(), (19, 14));
        for w in r.path.windows(2) {
            let (i0, j0) = w[0];
            let (i1, j1) = w[1];
            assert!(i1 >= i0 && j1 >= j0 && (i1 + j1) > (i0 + j0));
            assert!(i1 - i0 <= 1 && j1 - j0 <= 1);
        }
    }
}
