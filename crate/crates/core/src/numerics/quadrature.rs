//! Gauss–Legendre rules mapped to the unit interval.

use std::f64::consts::PI;

/// A quadrature node on `[0, 1]` with its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub w: f64,
}

/// `order`-point Gauss–Legendre rule on `[0, 1]`, exact for polynomials of
/// degree `2 * order - 1`. Weights sum to one.
pub fn gauss_legendre_nodes(order: usize) -> Vec<Node> {
    assert!(order >= 1, "quadrature order must be at least 1");
    let n = order;
    let mut nodes = Vec::with_capacity(n);
    // Roots are symmetric; compute the upper half on [-1, 1] by Newton.
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        // Map [-1, 1] -> [0, 1]; halve the weight.
        nodes.push(Node { x: 0.5 * (1.0 + t), w: 0.5 * w });
        if 2 * i + 1 != n {
            nodes.push(Node { x: 0.5 * (1.0 - t), w: 0.5 * w });
        } else {
            // middle root of an odd rule is exactly zero
            let last = nodes.last_mut().unwrap();
            last.x = 0.5;
        }
    }
    nodes.sort_by(|a, b| a.x.total_cmp(&b.x));
    nodes
}

/// Number of nodes that integrates the derivative of a degree-`degree`
/// polynomial along a straight segment exactly.
pub fn nodes_for_degree(degree: u32) -> usize {
    (degree as usize).div_ceil(2).max(1)
}

/// Legendre polynomial `P_n(t)` and its derivative by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Applies a rule to a scalar integrand.
pub fn integrate_unit<F: FnMut(f64) -> f64>(nodes: &[Node], mut f: F) -> f64 {
    nodes.iter().map(|n| n.w * f(n.x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_midpoint() {
        let r = gauss_legendre_nodes(1);
        assert_eq!(r.len(), 1);
        assert!((r[0].x - 0.5).abs() < 1e-16);
        assert!((r[0].w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn order_two_integrates_cubic() {
        let r = gauss_legendre_nodes(2);
        assert!((integrate_unit(&r, |x| x.powi(3)) - 0.25).abs() < 1e-15);
        assert!((integrate_unit(&r, |_| 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn monomials_exact_up_to_design_degree() {
        for order in 1..=16 {
            let r = gauss_legendre_nodes(order);
            assert_eq!(r.len(), order);
            for k in 0..(2 * order) {
                let q = integrate_unit(&r, |x| x.powi(k as i32));
                let exact = 1.0 / (k as f64 + 1.0);
                assert!((q - exact).abs() < 1e-14, "order {order}, k {k}: {q} vs {exact}");
            }
            assert!(r.iter().all(|n| n.x > 0.0 && n.x < 1.0 && n.w > 0.0));
        }
    }

    #[test]
    fn degree_to_node_count() {
        assert_eq!(nodes_for_degree(1), 1);
        assert_eq!(nodes_for_degree(2), 1);
        assert_eq!(nodes_for_degree(3), 2);
        assert_eq!(nodes_for_degree(4), 2);
        assert_eq!(nodes_for_degree(7), 4);
    }
}
