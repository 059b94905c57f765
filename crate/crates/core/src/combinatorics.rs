//! Factorials, binomials and small multiset utilities shared by the kernel
//! and contraction code.

use statrs::function::factorial::ln_factorial;

/// `n!` as a float. Exact for `n <= 20`; above that it goes through the
/// log-gamma function.
pub fn factorial(n: usize) -> f64 {
    if n <= 20 {
        (1..=n as u64).product::<u64>() as f64
    } else {
        ln_factorial(n as u64).exp()
    }
}

/// `n! / (n - k)!`, the number of ordered `k`-tuples of distinct elements.
pub fn falling_factorial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    ((n - k + 1)..=n).map(|v| v as f64).product()
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    // the running product is an integer at every step; undo division rounding
    if acc < 9.0e15 {
        acc.round()
    } else {
        acc
    }
}

/// Number of distinct orderings of a sorted multiset.
pub fn orderings(sorted: &[u32]) -> f64 {
    let mut denom = 1.0;
    let mut run = 1usize;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            denom *= run as f64;
        } else {
            run = 1;
        }
    }
    factorial(sorted.len()) / denom
}

/// True when the slice has no repeated entry.
pub fn all_distinct(idx: &[u32]) -> bool {
    match idx.len() {
        0 | 1 => true,
        2 => idx[0] != idx[1],
        _ => {
            let mut v = idx.to_vec();
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        }
    }
}

/// Sorted union of two sorted multisets.
pub fn merge_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Removes the sub-multiset `sub` from the sorted multiset `full`.
/// Returns `None` if `sub` is not contained in `full`.
pub fn sorted_difference(full: &[u32], sub: &[u32]) -> Option<Vec<u32>> {
    let mut out = Vec::with_capacity(full.len().saturating_sub(sub.len()));
    let mut j = 0;
    for &x in full {
        if j < sub.len() && sub[j] == x {
            j += 1;
        } else {
            if j < sub.len() && sub[j] < x {
                return None;
            }
            out.push(x);
        }
    }
    (j == sub.len()).then_some(out)
}

/// Product over distinct values `v` of `C(mult_full(v), mult_sub(v))` for
/// sorted multisets `sub ⊆ full`.
pub fn multiset_choose(full: &[u32], sub: &[u32]) -> f64 {
    let counts = |s: &[u32]| {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for &x in s {
            match out.last_mut() {
                Some((v, c)) if *v == x => *c += 1,
                _ => out.push((x, 1)),
            }
        }
        out
    };
    let full_counts = counts(full);
    let sub_counts = counts(sub);
    let mut acc = 1.0;
    for (v, k) in sub_counts {
        let n = full_counts
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, c)| *c)
            .unwrap_or(0);
        acc *= binomial(n, k);
    }
    acc
}

/// Calls `f` with every `k`-element subset of `items` (positions taken in
/// increasing order, so sorted input gives sorted subsets) together with its
/// complement.
pub fn for_each_split<F: FnMut(&[u32], &[u32])>(items: &[u32], k: usize, mut f: F) {
    let n = items.len();
    if k > n {
        return;
    }
    let mut chosen = Vec::with_capacity(k);
    let mut rest = Vec::with_capacity(n - k);
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        chosen.clear();
        rest.clear();
        let mut p = 0;
        for (i, &x) in items.iter().enumerate() {
            if p < k && pick[p] == i {
                chosen.push(x);
                p += 1;
            } else {
                rest.push(x);
            }
        }
        f(&chosen, &rest);
        // advance to the next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pick[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        pick[i] += 1;
        for j in (i + 1)..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Calls `f` with every strictly increasing `k`-tuple drawn from `1..=n`.
pub fn for_each_increasing<F: FnMut(&[u32])>(n: usize, k: usize, mut f: F) {
    let items: Vec<u32> = (1..=n as u32).collect();
    for_each_split(&items, k, |chosen, _| f(chosen));
}

/// Calls `f` with every permutation of `items` (Heap's algorithm). Meant for
/// brute-force checks at small sizes.
pub fn for_each_permutation<F: FnMut(&[u32])>(items: &[u32], mut f: F) {
    let mut a = items.to_vec();
    let n = a.len();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Product `z^α = Π z_{α_i}` with 1-based indices into `z`.
pub fn monomial(z: &[f64], idx: &[u32]) -> f64 {
    idx.iter().map(|&i| z[i as usize - 1]).product()
}
