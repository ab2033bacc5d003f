/// Least-squares projection onto nondecreasing sequences (pool adjacent
/// violators, unit weights), clipped to `[0, 1]` afterwards.
pub fn isotonize(values: &[f64]) -> Vec<f64> {
    let mut out = pava(values);
    out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    out
}

/// Unclipped pool-adjacent-violators fit.
pub fn pava(values: &[f64]) -> Vec<f64> {
    // blocks of (sum, count); a block's level is sum / count
    let mut sums: Vec<f64> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        sums.push(v);
        counts.push(1);
        while sums.len() > 1 {
            let k = sums.len() - 1;
            if sums[k - 1] / counts[k - 1] as f64 > sums[k] / counts[k] as f64 {
                sums[k - 1] += sums[k];
                counts[k - 1] += counts[k];
                sums.pop();
                counts.pop();
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (s, c) in sums.into_iter().zip(counts) {
        let level = if c == 1 { s } else { s / c as f64 };
        out.extend(std::iter::repeat_n(level, c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_violators() {
        let out = isotonize(&[0.3, 0.1, 0.5]);
        assert!((out[0] - 0.2).abs() < 1e-15 && (out[1] - 0.2).abs() < 1e-15);
        assert_eq!(out[2], 0.5);
    }

    #[test]
    fn fixed_points() {
        assert_eq!(isotonize(&[0.1, 0.2, 0.2, 0.9]), vec![0.1, 0.2, 0.2, 0.9]);
        assert_eq!(isotonize(&[0.4; 5]), vec![0.4; 5]);
        assert!(isotonize(&[]).is_empty());
    }

    #[test]
    fn clips_after_projection() {
        assert_eq!(isotonize(&[-0.5, 1.5]), vec![0.0, 1.0]);
        assert_eq!(pava(&[1.5, -0.5]), vec![0.5, 0.5]);
    }
}
