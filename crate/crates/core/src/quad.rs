//! Quadrature rules: adaptive Gauss–Kronrod on intervals, Gauss on edges,
//! symmetric rules on triangles.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive 15-point Gauss–Kronrod integration to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (v, err) = whole;
        if err <= tol || depth > 40 || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        let l = gk15(f, a, m);
        let r = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, l, depth + 1) + rec(f, m, b, 0.5 * tol, r, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 0)
}

/// Three-point Gauss rule on [0, 1] (exact through degree 5): (node, weight).
pub const GAUSS3_UNIT: [(f64, f64); 3] =
    [(0.112_701_665_379_258_31, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)];

/// Six-point symmetric triangle rule, exact through degree 4. Barycentric
/// coordinates and weights summing to 1 (multiply by the area).
pub const TRI6: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_965;
    const B1: f64 = 0.108_103_018_168_070;
    const W1: f64 = 0.223_381_589_678_011;
    const A2: f64 = 0.091_576_213_509_771;
    const B2: f64 = 0.816_847_572_980_459;
    const W2: f64 = 0.109_951_743_655_322;
    [
        ([B1, A1, A1], W1),
        ([A1, B1, A1], W1),
        ([A1, A1, B1], W1),
        ([B2, A2, A2], W2),
        ([A2, B2, A2], W2),
        ([A2, A2, B2], W2),
    ]
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_handles_kinks() {
        let v = integrate(|x| (x - 0.3).abs().sqrt(), 0.0, 1.0, 1e-10);
        let exact = 2.0 / 3.0 * (0.3f64.powf(1.5) + 0.7f64.powf(1.5));
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn triangle_rule_is_degree_four() {
        // ∫ over the reference triangle of x^a y^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let q: f64 = TRI6.iter().map(|(l, w)| w * 0.5 * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-14, "x^{a} y^{b}");
            }
        }
    }

    #[test]
    fn gauss3_is_degree_five() {
        for p in 0..=5 {
            let q: f64 = GAUSS3_UNIT.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
