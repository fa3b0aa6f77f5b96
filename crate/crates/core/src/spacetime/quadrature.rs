//! Adaptive Simpson quadrature with interval bisection.

use super::{Result, SpacetimeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subintervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// Panels are bisected until the Richardson difference of each panel is below
/// its share of the tolerance. Fails if more than `max_subintervals` panels are
/// needed or a panel shrinks below floating-point resolution.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_subintervals: usize,
) -> Result<QuadratureResult> {
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            subintervals: 0,
        });
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    // the single-panel estimate can be far off; refine the target once the
    // integral itself is known
    let mut target = whole.abs();
    for _ in 0..4 {
        let r = bisect(&f, a, b, [fa, fm, fb], whole, rel_tol * target, max_subintervals)?;
        if r.error_estimate <= rel_tol * r.value.abs() || r.value.abs() >= target {
            return Ok(r);
        }
        target = r.value.abs();
    }
    bisect(&f, a, b, [fa, fm, fb], whole, rel_tol * target, max_subintervals)
}

fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    [fa, fm, fb]: [f64; 3],
    whole: f64,
    tol: f64,
    max_subintervals: usize,
) -> Result<QuadratureResult> {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut accepted = 0usize;
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: 0,
    }];
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        if !delta.is_finite() {
            return Err(non_convergence(a, b, accepted, value, f64::INFINITY));
        }
        if delta.abs() <= 15.0 * p.tol || p.depth >= 200 || m <= p.a || m >= p.b {
            if delta.abs() > 15.0 * p.tol {
                return Err(non_convergence(a, b, accepted, value, error + delta.abs()));
            }
            value += left + right + delta / 15.0;
            error += delta.abs() / 15.0;
            accepted += 1;
            continue;
        }
        if accepted + stack.len() + 2 > max_subintervals {
            return Err(non_convergence(a, b, accepted + stack.len() + 2, value, error));
        }
        let half = 0.5 * p.tol;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: half,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: half,
            depth: p.depth + 1,
        });
    }
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        subintervals: accepted,
    })
}

fn non_convergence(a: f64, b: f64, subintervals: usize, estimate: f64, error: f64) -> SpacetimeError {
    SpacetimeError::Quadrature {
        a,
        b,
        subintervals,
        estimate,
        error_estimate: error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let r = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12, 1000).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert_eq!(r.subintervals, 1);
    }

    #[test]
    fn log_integral() {
        let r = adaptive_simpson(|x| 1.0 / x, 1.0, 1e6, 1e-12, 1_000_000).unwrap();
        assert!((r.value / 1e6f64.ln() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let r = adaptive_simpson(|x| (1.0 / x).sin(), 1e-9, 1.0, 1e-12, 50);
        assert!(matches!(r, Err(SpacetimeError::Quadrature { .. })));
    }

    #[test]
    fn zero_integrand() {
        let r = adaptive_simpson(|_| 0.0, 1.0, 5.0, 1e-12, 10).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
