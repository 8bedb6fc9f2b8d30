//! Adaptive 1-D integration on top of tanh-sinh.

const MAX_DEPTH: u32 = 16;

/// Integrates `f` over `[a, b]`, splitting at `breaks` and bisecting any
/// piece whose error estimate exceeds its share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let share = tol / (pts.len() - 1) as f64;
    pts.windows(2).map(|w| piece(f, w[0], w[1], share, 0)).sum()
}

fn piece<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let whole = quadrature::double_exponential::integrate(f, a, b, tol);
    if whole.error_estimate <= tol || depth >= MAX_DEPTH {
        return whole.integral;
    }
    split(f, a, b, whole.integral, tol, depth)
}

fn split<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let l = quadrature::double_exponential::integrate(f, a, m, tol);
    let r = quadrature::double_exponential::integrate(f, m, b, tol);
    let sum = l.integral + r.integral;
    // halves agreeing with the whole means the estimate was pessimistic
    if (sum - whole).abs() <= tol.max(4.0 * f64::EPSILON * sum.abs()) || depth + 1 >= MAX_DEPTH {
        return sum;
    }
    let left = if l.error_estimate <= tol { l.integral } else { split(f, a, m, l.integral, tol, depth + 1) };
    let right = if r.error_estimate <= tol { r.integral } else { split(f, m, b, r.integral, tol, depth + 1) };
    left + right
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mass() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(&f, -40.0, 40.0, &[0.0], 1e-13);
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn kink_split() {
        let f = |x: f64| (-(x - 0.3).abs()).exp();
        let v = integrate(&f, -50.0, 50.0, &[0.3], 1e-13);
        assert!((v - 2.0).abs() < 1e-11, "{v}");
    }
}
