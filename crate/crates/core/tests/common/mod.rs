//! Brute-force references shared by the integration tests. Nothing here uses
//! the library's encoder or trellis.

#![allow(dead_code)]

/// `i` with its `n` low bits reversed, via string manipulation.
pub fn bit_reverse(i: usize, n: u32) -> usize {
    if n == 0 {
        return 0;
    }
    let s = format!("{:0width$b}", i, width = n as usize);
    usize::from_str_radix(&s.chars().rev().collect::<String>(), 2).unwrap()
}

/// `F^{(x)n}` with `F = [[1, 0], [1, 1]]`, as a dense 0/1 matrix.
pub fn kernel_power(n: u32) -> Vec<Vec<u8>> {
    let mut g = vec![vec![1u8]];
    for _ in 0..n {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                next[r][c] = g[r][c];
                next[m + r][c] = g[r][c];
                next[m + r][m + c] = g[r][c];
            }
        }
        g = next;
    }
    g
}

/// `x = u B G` by dense GF(2) multiplication.
pub fn matrix_encode(u: &[u8]) -> Vec<u8> {
    let len = u.len();
    let n = len.trailing_zeros();
    let g = kernel_power(n);
    let permuted: Vec<u8> = (0..len).map(|k| u[bit_reverse(k, n)]).collect();
    (0..len)
        .map(|c| (0..len).fold(0u8, |acc, r| acc ^ (permuted[r] & g[r][c])))
        .collect()
}

/// `ln Pr(y | x)` up to an additive constant that does not depend on `x`.
pub fn log_likelihood(x: &[u8], llr: &[f64]) -> f64 {
    x.iter()
        .zip(llr)
        .map(|(&b, &l)| if b == 0 { l / 2.0 } else { -l / 2.0 })
        .sum()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `(ln Pr(u_i = 0 | y, prefix), ln Pr(u_i = 1 | y, prefix))` where
/// `i = prefix.len()`, marginalizing every suffix with uniform priors.
pub fn bit_posteriors(llr: &[f64], prefix: &[u8]) -> (f64, f64) {
    let len = llr.len();
    let i = prefix.len();
    let tail = len - i - 1;
    let mut terms = [Vec::new(), Vec::new()];
    for b in 0..2u8 {
        for suffix in 0..(1usize << tail) {
            let mut u = prefix.to_vec();
            u.push(b);
            u.extend((0..tail).map(|t| ((suffix >> t) & 1) as u8));
            terms[b as usize].push(log_likelihood(&matrix_encode(&u), llr));
        }
    }
    let l0 = log_sum_exp(&terms[0]);
    let l1 = log_sum_exp(&terms[1]);
    let total = log_sum_exp(&[l0, l1]);
    (l0 - total, l1 - total)
}

/// Successive cancellation by exhaustive marginalization.
pub fn sc_reference(llr: &[f64], frozen: &[bool]) -> Vec<u8> {
    let mut u = Vec::with_capacity(llr.len());
    for &f in frozen {
        let bit = if f {
            0
        } else {
            let (l0, l1) = bit_posteriors(llr, &u);
            u8::from(l1 > l0)
        };
        u.push(bit);
    }
    u
}

/// Maximum-likelihood message over all `2^K` codewords.
pub fn ml_reference(llr: &[f64], info: &[usize]) -> Vec<u8> {
    let len = llr.len();
    let mut best = (f64::NEG_INFINITY, vec![0u8; len]);
    for data in 0..(1usize << info.len()) {
        let mut u = vec![0u8; len];
        for (t, &pos) in info.iter().enumerate() {
            u[pos] = ((data >> t) & 1) as u8;
        }
        let ll = log_likelihood(&matrix_encode(&u), llr);
        if ll > best.0 {
            best = (ll, u);
        }
    }
    best.1
}
