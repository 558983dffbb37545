#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfmew::MoebiusStructure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `P_ab = x_(a eps_b)c x^c` on the flat plane.
pub fn twisted() -> MoebiusStructure {
    MoebiusStructure::parse("0", "x*y", "(y*y - x*x)/2", "-x*y").unwrap()
}

/// `P_ab = x_a x_b - ½ delta_ab r` on the flat plane.
pub fn radial() -> MoebiusStructure {
    MoebiusStructure::parse("0", "(x*x - y*y)/2", "x*y", "(y*y - x*x)/2").unwrap()
}

/// `P_ab = ½ delta_ab r - x_a x_b` on the flat plane.
pub fn antiradial() -> MoebiusStructure {
    MoebiusStructure::parse("0", "(y*y - x*x)/2", "-x*y", "(x*x - y*y)/2").unwrap()
}

pub fn examples() -> [(&'static str, MoebiusStructure); 3] {
    [
        ("twisted", twisted()),
        ("radial", radial()),
        ("antiradial", antiradial()),
    ]
}

fn constant(r: &mut ChaCha8Rng) -> String {
    format!("{:.3}", r.gen_range(-2.0..2.0))
}

/// A random expression in `x` and `y` that is smooth everywhere.
pub fn smooth_expr(r: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || r.gen_bool(0.2) {
        return match r.gen_range(0..3) {
            0 => "x".into(),
            1 => "y".into(),
            _ => constant(r),
        };
    }
    let a = smooth_expr(r, depth - 1);
    match r.gen_range(0..11) {
        0 => format!("({a} + {})", smooth_expr(r, depth - 1)),
        1 => format!("({a} - {})", smooth_expr(r, depth - 1)),
        2 | 3 => format!("({a} * {})", smooth_expr(r, depth - 1)),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(0.3 * {a})"),
        7 => format!("ln(2 + ({a})^2)"),
        8 => format!("sqrt(1 + ({a})^2)"),
        9 => format!("({a}) / (1.5 + ({})^2)", smooth_expr(r, depth - 1)),
        _ => format!("({a})^{}", r.gen_range(2..4)),
    }
}

/// A random conformal rescaling factor of moderate size.
pub fn random_omega(r: &mut ChaCha8Rng) -> String {
    let mut c = || r.gen_range(-0.4..0.4);
    format!(
        "{:.4}*x + {:.4}*y + {:.4}*x*y + {:.4}*sin({:.4}*x) + {:.4}*cos({:.4}*y)",
        c(),
        c(),
        c(),
        c(),
        1.0 + c(),
        c(),
        1.0 + c()
    )
}

pub fn random_point(r: &mut ChaCha8Rng, half: f64) -> [f64; 2] {
    [r.gen_range(-half..half), r.gen_range(-half..half)]
}

/// Random point with `lo <= |p| <= hi`.
pub fn random_annulus_point(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> [f64; 2] {
    let rad = r.gen_range(lo..hi);
    let th = r.gen_range(0.0..std::f64::consts::TAU);
    [rad * th.cos(), rad * th.sin()]
}

pub fn rel_err(got: f64, expect: f64) -> f64 {
    if expect == 0.0 {
        got.abs()
    } else {
        (got - expect).abs() / expect.abs()
    }
}

pub fn vec_rel_err(got: &[f64], expect: &[f64]) -> f64 {
    let diff: f64 = got
        .iter()
        .zip(expect)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = expect.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// Fourth-order central difference of `f` at 0 with step `h`.
pub fn diff4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

/// `[f_x, f_y, f_xx, f_xy, f_yy]` by central differences.
pub fn fd_partials(f: impl Fn([f64; 2]) -> f64, p: [f64; 2], h: f64) -> [f64; 5] {
    let at = |dx: f64, dy: f64| f([p[0] + dx, p[1] + dy]);
    let second = |g: &dyn Fn(f64) -> f64| {
        (-g(2.0 * h) + 16.0 * g(h) - 30.0 * g(0.0) + 16.0 * g(-h) - g(-2.0 * h)) / (12.0 * h * h)
    };
    [
        diff4(|s| at(s, 0.0), h),
        diff4(|s| at(0.0, s), h),
        second(&|s| at(s, 0.0)),
        diff4(|s| diff4(|t| at(s, t), h), h),
        second(&|s| at(0.0, s)),
    ]
}

/// Two polynomials given as `(leading, roots)` whose roots are pairwise at
/// least 0.1 apart across the pair.
pub type RootForm = (f64, Vec<f64>);

pub fn spaced_root_pair(r: &mut ChaCha8Rng) -> (RootForm, RootForm) {
    loop {
        let side = |r: &mut ChaCha8Rng| -> RootForm {
            let n = r.gen_range(1..=4);
            let lead = r.gen_range(0.5..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            (lead, (0..n).map(|_| r.gen_range(-2.0..2.0)).collect())
        };
        let a = side(r);
        let b = side(r);
        if a.1.iter().all(|x| b.1.iter().all(|y| (x - y).abs() >= 0.1)) {
            return (a, b);
        }
    }
}

/// `a^m b^n prod (alpha_i - beta_j)`.
pub fn resultant_from_roots(a: f64, alpha: &[f64], b: f64, beta: &[f64]) -> f64 {
    let mut out = a.powi(beta.len() as i32) * b.powi(alpha.len() as i32);
    for x in alpha {
        for y in beta {
            out *= x - y;
        }
    }
    out
}

/// `Y^a Y^b E_ab(F)` on a flat-metric structure, where `E_ab` is the defect
/// of `nabla_a alpha_b + alpha_a alpha_b + P_ab - ½ alpha^2 g_ab - ½ eps_ab F`
/// after substituting the first-order formula for `alpha` and the prolonged
/// equation `nabla_a F = -2 alpha_a F - Y_a`. Derivatives are taken by
/// central differences.
pub fn weyl_defect_yy(s: &MoebiusStructure, p: [f64; 2], f: f64) -> f64 {
    let tol = sfmew::Tolerances::default();
    let alpha = |q: [f64; 2], f: f64| {
        let inv = sfmew::compute_invariants(s, q, &tol).unwrap();
        sfmew::analyzer::alpha_from_f(&inv, f, &tol).unwrap().alpha
    };
    let inv = sfmew::compute_invariants(s, p, &tol).unwrap();
    let a = alpha(p, f);
    let h = 1e-3;
    let hf = 1e-4 * f.abs().max(1.0);
    let mut e = [[0.0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        let df = -2.0 * a[i] * f - inv.y[i];
        for (j, v) in row.iter_mut().enumerate() {
            let dx = diff4(
                |s| {
                    let mut q = p;
                    q[i] += s;
                    alpha(q, f)[j]
                },
                h,
            );
            let d_f = diff4(|s| alpha(p, f + s)[j], hf);
            let eps = match (i, j) {
                (0, 1) => 1.0,
                (1, 0) => -1.0,
                _ => 0.0,
            };
            let delta = if i == j { 1.0 } else { 0.0 };
            *v = dx + d_f * df + a[i] * a[j] + inv.p[i][j]
                - 0.5 * (a[0] * a[0] + a[1] * a[1]) * delta
                - 0.5 * eps * f;
        }
    }
    let y = inv.y;
    (0..2)
        .map(|i| (0..2).map(|j| y[i] * y[j] * e[i][j]).sum::<f64>())
        .sum()
}
