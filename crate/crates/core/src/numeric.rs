//! Small numerical building blocks shared by the oracles: deterministic
//! pairwise summation, adaptive Gauss-Kronrod quadrature and polynomial
//! extrapolation to zero.

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so the result is reproducible bit-for-bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Maps `f` over `0..n` and returns the results in index order. Runs on the
/// rayon pool when the `parallel` feature is enabled; the output is identical
/// either way.
pub fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

// Gauss-Kronrod 10/21 nodes and weights on [-1, 1] (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452498,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// One 21-point Kronrod panel. Returns `(kronrod, |kronrod - gauss|)`.
pub fn gauss_kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let (v, e, _) = kronrod_panel(f, a, b);
    (v, e)
}

/// Kronrod value, Gauss-Kronrod difference and the Kronrod integral of `|f|`.
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (lo, hi) = (f(center - dx), f(center + dx));
        let pair = lo + hi;
        kronrod += WGK[j] * pair;
        abs += WGK[j] * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), abs * half.abs())
}

/// Recursive bisection until each leaf meets its share of `abs_tol`, or the
/// Gauss-Kronrod difference reaches the rounding floor of the panel.
/// Returns `(value, error_estimate)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
        let (v, e, abs) = kronrod_panel(f, a, b);
        let floor = 50.0 * f64::EPSILON * abs;
        if e <= tol.max(floor) || depth >= 30 {
            return (v, e);
        }
        let m = 0.5 * (a + b);
        let (v1, e1) = recurse(f, a, m, 0.5 * tol, depth + 1);
        let (v2, e2) = recurse(f, m, b, 0.5 * tol, depth + 1);
        (v1 + v2, e1 + e2)
    }
    recurse(f, a, b, abs_tol, 0)
}

/// Neville extrapolation of the polynomial through `(xs[i], ys[i])` to
/// `x = 0`. The error estimate is the difference between the extrapolant
/// from all points and the one that drops `xs[0]`.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 1);
    if n == 1 {
        return (ys[0], f64::INFINITY);
    }
    let full = neville_at_zero(xs, ys);
    let reduced = neville_at_zero(&xs[1..], &ys[1..]);
    (full, (full - reduced).abs())
}

fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Central first and second differences of `f` at `x` with step `h`,
/// refined by `levels` Richardson halvings.
pub fn central_derivatives<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64, levels: usize) -> (f64, f64) {
    let f0 = f(x);
    let estimate = |h: f64| {
        let (fp, fm) = (f(x + h), f(x - h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    };
    let mut d1 = Vec::with_capacity(levels + 1);
    let mut d2 = Vec::with_capacity(levels + 1);
    let mut step = h;
    for _ in 0..=levels {
        let (a, b) = estimate(step);
        d1.push(a);
        d2.push(b);
        step *= 0.5;
    }
    (richardson_even(&d1), richardson_even(&d2))
}

/// Richardson tableau for a sequence computed at steps h, h/2, h/4, ...
/// whose error expands in even powers of h.
pub(crate) fn richardson_even(seq: &[f64]) -> f64 {
    let mut t = seq.to_vec();
    let mut factor = 4.0;
    for level in 1..seq.len() {
        for i in 0..seq.len() - level {
            t[i] = (factor * t[i + 1] - t[i]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    t[0]
}
