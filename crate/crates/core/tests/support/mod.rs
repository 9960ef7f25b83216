//! Deliberately naive reference implementations shared by the oracle and
//! acceptance tests. Each favours obviousness over speed.
#![allow(dead_code)]

use kanbun_core::metrics::Smoothing;

pub fn brute_tau(gold: &[usize], pred: &[usize]) -> f64 {
    let n = gold.len();
    if n < 2 {
        return 1.0;
    }
    let slot = |o: &[usize], p: usize| o.iter().position(|&x| x == p).unwrap();
    let mut inv = 0;
    for a in 1..=n {
        for b in a + 1..=n {
            let g = slot(gold, a) < slot(gold, b);
            let q = slot(pred, a) < slot(pred, b);
            if g != q {
                inv += 1;
            }
        }
    }
    1.0 - 4.0 * inv as f64 / (n * (n - 1)) as f64
}

/// Clipped n-gram matches counted by scanning substrings.
pub fn brute_ngrams(c: &[char], r: &[char], n: usize) -> (usize, usize) {
    if c.len() < n {
        return (0, 0);
    }
    let grams: Vec<&[char]> = c.windows(n).collect();
    let mut seen: Vec<&[char]> = Vec::new();
    let mut matched = 0;
    for g in &grams {
        if seen.contains(g) {
            continue;
        }
        seen.push(g);
        let in_c = grams.iter().filter(|x| *x == g).count();
        let in_r = r.windows(n).filter(|x| x == g).count();
        matched += in_c.min(in_r);
    }
    (matched, grams.len())
}

pub fn brute_bleu(cands: &[String], refs: &[String], smoothing: Smoothing) -> f64 {
    let cs: Vec<Vec<char>> = cands.iter().map(|s| s.chars().collect()).collect();
    let rs: Vec<Vec<char>> = refs.iter().map(|s| s.chars().collect()).collect();
    let longest = cs.iter().map(Vec::len).max().unwrap();
    let orders = longest.min(4);
    if orders == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    let mut zeros = 0;
    for n in 1..=orders {
        let (mut m, mut t) = (0, 0);
        for (c, r) in cs.iter().zip(&rs) {
            let (a, b) = brute_ngrams(c, r, n);
            m += a;
            t += b;
        }
        if m == 0 {
            if n == 1 || smoothing == Smoothing::None {
                return 0.0;
            }
            zeros += 1;
            product *= 1.0 / (2f64.powi(zeros) * t as f64);
        } else {
            product *= m as f64 / t as f64;
        }
    }
    let c: usize = cs.iter().map(Vec::len).sum();
    let r: usize = rs.iter().map(Vec::len).sum();
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    bp * product.powf(1.0 / orders as f64)
}

pub fn brute_lcs(a: &[char], b: &[char]) -> usize {
    // Memoized recursion from the front, unlike the table in the library.
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

pub fn brute_rouge(c: &str, r: &str) -> f64 {
    let (c, r): (Vec<char>, Vec<char>) = (c.chars().collect(), r.chars().collect());
    let l = brute_lcs(&c, &r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (p, rec) = (l / c.len() as f64, l / r.len() as f64);
    2.0 * p * rec / (p + rec)
}

pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn brute_fleiss(t: &[Vec<usize>]) -> f64 {
    let items = t.len() as f64;
    let n: usize = t[0].iter().sum();
    let n = n as f64;
    let mut p_bar = 0.0;
    for row in t {
        let mut agree = 0.0;
        for &c in row {
            agree += c as f64 * (c as f64 - 1.0);
        }
        p_bar += agree / (n * (n - 1.0));
    }
    p_bar /= items;
    let mut p_e = 0.0;
    for j in 0..t[0].len() {
        let total: usize = t.iter().map(|r| r[j]).sum();
        let pj = total as f64 / (items * n);
        p_e += pj * pj;
    }
    (p_bar - p_e) / (1.0 - p_e)
}
