//! Deterministic samples of the unit sphere in the risky coordinates.
//!
//! Samples are nested: the first `k` directions of a larger request equal a
//! smaller request of size `k`, so a minimum over the sample can only go
//! down as the count grows.

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// Unit directions in `R^n`.
///
/// `n = 1` gives exactly `{+1, -1}`; `n = 2` gives `count` equally spaced
/// angles on a nested dyadic schedule; `n >= 3` gives the `2n` signed axes
/// followed by antipodal pairs of normalized Halton points.
pub fn sphere_sample(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => circle(count.max(4)),
        _ => higher(n, count.max(2 * n)),
    }
}

/// Angles in bit-reversed dyadic order, so prefixes of length `2^j` are the
/// uniform `2^j`-gons. Counts that are not powers of two take a prefix.
fn circle(count: usize) -> Vec<Vec<f64>> {
    (0..count as u64)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * radical_inverse(k, 2);
            vec![a.cos(), a.sin()]
        })
        .collect()
}

fn higher(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            out.push(e);
        }
    }
    let mut k = 1u64;
    while out.len() < count {
        let p: Vec<f64> = (0..n)
            .map(|j| 2.0 * radical_inverse(k, PRIMES[j % PRIMES.len()] as u64) - 1.0)
            .collect();
        k += 1;
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r < 1e-6 {
            continue;
        }
        let u: Vec<f64> = p.iter().map(|x| x / r).collect();
        out.push(u.iter().map(|x| -x).collect());
        out.push(u);
    }
    out.truncate(count);
    out
}
