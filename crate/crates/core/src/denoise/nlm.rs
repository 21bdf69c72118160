//! Non-local means: weighted patch averaging with Gaussian weights on
//! patch distances. Stands in for heavier patch-based denoisers when no
//! external plugin is configured.

use ndarray::Array2;

#[inline]
fn clamp_index(i: i64, len: usize) -> usize {
    i.clamp(0, len as i64 - 1) as usize
}

/// Mean squared difference between the patches centered at `a` and `b`,
/// with replicate boundary handling.
fn patch_distance_sq(
    image: &Array2<f64>,
    a: (usize, usize),
    b: (usize, usize),
    patch_radius: usize,
) -> f64 {
    let (n1, n2) = image.dim();
    let pr = patch_radius as i64;
    let mut acc = 0.0;
    for di in -pr..=pr {
        for dj in -pr..=pr {
            let va = image[[
                clamp_index(a.0 as i64 + di, n1),
                clamp_index(a.1 as i64 + dj, n2),
            ]];
            let vb = image[[
                clamp_index(b.0 as i64 + di, n1),
                clamp_index(b.1 as i64 + dj, n2),
            ]];
            let d = va - vb;
            acc += d * d;
        }
    }
    let patch_len = (2 * patch_radius + 1) * (2 * patch_radius + 1);
    acc / patch_len as f64
}

/// Non-local means denoising at strength `sigma`. Weights follow
/// `exp(-d^2 / (filtering_strength * sigma)^2)`; the center pixel gets the
/// largest neighbor weight. `sigma = 0` returns the input unchanged.
pub fn nlm_denoise(
    image: &Array2<f64>,
    sigma: f64,
    patch_radius: usize,
    window_radius: usize,
    filtering_strength: f64,
) -> Array2<f64> {
    if sigma == 0.0 {
        return image.clone();
    }
    let (n1, n2) = image.dim();
    let h2 = (filtering_strength * sigma) * (filtering_strength * sigma);
    let wr = window_radius as i64;
    let mut out = Array2::<f64>::zeros((n1, n2));
    for i in 0..n1 {
        for j in 0..n2 {
            let mut weight_sum = 0.0;
            let mut value_sum = 0.0;
            let mut max_weight = 0.0f64;
            for di in -wr..=wr {
                for dj in -wr..=wr {
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    if ni < 0 || nj < 0 || ni >= n1 as i64 || nj >= n2 as i64 {
                        continue;
                    }
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let nb = (ni as usize, nj as usize);
                    let d2 = patch_distance_sq(image, (i, j), nb, patch_radius);
                    let w = (-d2 / h2).exp();
                    max_weight = max_weight.max(w);
                    weight_sum += w;
                    value_sum += w * image[[nb.0, nb.1]];
                }
            }
            // Center weight: max over neighbors, or 1 when there are none.
            let self_weight = if max_weight > 0.0 { max_weight } else { 1.0 };
            weight_sum += self_weight;
            value_sum += self_weight * image[[i, j]];
            out[[i, j]] = value_sum / weight_sum;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Plainly written reference: recompute everything per output pixel with
    /// independent loops.
    fn nlm_reference(
        image: &Array2<f64>,
        sigma: f64,
        pr: usize,
        wr: usize,
        strength: f64,
    ) -> Array2<f64> {
        let (n1, n2) = image.dim();
        let clamp = |v: i64, hi: usize| v.max(0).min(hi as i64 - 1) as usize;
        let patch_d2 = |ai: usize, aj: usize, bi: usize, bj: usize| -> f64 {
            let mut acc = 0.0;
            let mut count = 0usize;
            for di in -(pr as i64)..=(pr as i64) {
                for dj in -(pr as i64)..=(pr as i64) {
                    let va = image[[clamp(ai as i64 + di, n1), clamp(aj as i64 + dj, n2)]];
                    let vb = image[[clamp(bi as i64 + di, n1), clamp(bj as i64 + dj, n2)]];
                    acc += (va - vb) * (va - vb);
                    count += 1;
                }
            }
            acc / count as f64
        };
        let h2 = (strength * sigma).powi(2);
        let mut out = Array2::zeros((n1, n2));
        for i in 0..n1 {
            for j in 0..n2 {
                let mut wsum = 0.0;
                let mut vsum = 0.0;
                let mut wmax = 0.0f64;
                for bi in i.saturating_sub(wr)..(i + wr + 1).min(n1) {
                    for bj in j.saturating_sub(wr)..(j + wr + 1).min(n2) {
                        if bi == i && bj == j {
                            continue;
                        }
                        let w = (-patch_d2(i, j, bi, bj) / h2).exp();
                        wmax = wmax.max(w);
                        wsum += w;
                        vsum += w * image[[bi, bj]];
                    }
                }
                let selfw = if wmax > 0.0 { wmax } else { 1.0 };
                out[[i, j]] = (vsum + selfw * image[[i, j]]) / (wsum + selfw);
            }
        }
        out
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = Array2::from_elem((6, 6), 2.5);
        let out = nlm_denoise(&img, 0.3, 1, 2, 1.0);
        for v in out.iter() {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let img = Array2::from_shape_fn((5, 5), |_| rng.random_range(-1.0..1.0));
        let out = nlm_denoise(&img, 0.0, 1, 2, 1.0);
        assert!(out
            .iter()
            .zip(img.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn matches_double_loop_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let img = Array2::from_shape_fn((8, 8), |_| rng.random_range(0.0..1.0));
        let ours = nlm_denoise(&img, 0.2, 1, 3, 0.8);
        let reference = nlm_reference(&img, 0.2, 1, 3, 0.8);
        for (a, b) in ours.iter().zip(reference.iter()) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn iteration_order_does_not_leak() {
        // Neighbor weighting must read the input image, not the output
        // being built: a one-pixel spike only affects its search window.
        let mut img = Array2::zeros((9, 9));
        img[[4, 4]] = 1.0;
        let out = nlm_denoise(&img, 0.5, 1, 1, 1.0);
        assert_eq!(out[[0, 8]], 0.0);
        assert!(out[[4, 4]] < 1.0);
    }
}
