/// Euclidean projection onto the ascending cone `{s : s_1 <= ... <= s_Q}`
/// by pool-adjacent-violators.
///
/// Ascending input is returned unchanged, and the result is always ascending.
pub fn rho_pav(x: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &value in x {
        blocks.push((value, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 <= s1 / c1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, c0 + c1);
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (sum, count) in blocks {
        if count == 1 {
            out.push(sum);
        } else {
            let mean = sum / count as f64;
            out.extend(std::iter::repeat_n(mean, count));
        }
    }
    out
}
