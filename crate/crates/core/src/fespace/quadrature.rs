//! Quadrature rules and tabulated P2 shape functions.

use std::sync::OnceLock;

/// Barycentric points and weights normalised to sum to one (multiply by the
/// element area).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// `phi[q][i]`: P2 shape function `i` at point `q`.
    pub phi: Vec<[f64; 6]>,
    /// `dphi[q][i][m]`: coefficient of `grad lambda_m` in `grad phi_i` at point `q`.
    pub dphi: Vec<[[f64; 3]; 6]>,
}

/// Points on `[0, 1]` with weights summing to one (multiply by the edge length).
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// P2 edge shape functions `[start, end, midpoint]` at each point.
    pub phi: Vec<[f64; 3]>,
}

/// P2 shape functions in the local order `[v0, v1, v2, e01, e12, e20]`.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Gradients of the P2 shape functions as combinations of `grad lambda_m`.
pub fn p2_gradient_coefficients(l: [f64; 3]) -> [[f64; 3]; 6] {
    let mut c = [[0.0; 3]; 6];
    for i in 0..3 {
        c[i][i] = 4.0 * l[i] - 1.0;
    }
    for k in 0..3 {
        let k1 = (k + 1) % 3;
        c[3 + k][k] = 4.0 * l[k1];
        c[3 + k][k1] = 4.0 * l[k];
    }
    c
}

pub fn p2_edge_values(s: f64) -> [f64; 3] {
    [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
}

fn tabulate(points: Vec<[f64; 3]>, weights: Vec<f64>) -> TriangleRule {
    let phi = points.iter().map(|&l| p2_values(l)).collect();
    let dphi = points.iter().map(|&l| p2_gradient_coefficients(l)).collect();
    TriangleRule {
        points,
        weights,
        phi,
        dphi,
    }
}

/// Seven-point rule, exact for polynomials of degree 5.
pub fn triangle_rule() -> &'static TriangleRule {
    static RULE: OnceLock<TriangleRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let s15 = 15f64.sqrt();
        let a = (6.0 - s15) / 21.0;
        let b = (6.0 + s15) / 21.0;
        let wa = (155.0 - s15) / 1200.0;
        let wb = (155.0 + s15) / 1200.0;
        let third = 1.0 / 3.0;
        let points = vec![
            [third, third, third],
            [a, a, 1.0 - 2.0 * a],
            [a, 1.0 - 2.0 * a, a],
            [1.0 - 2.0 * a, a, a],
            [b, b, 1.0 - 2.0 * b],
            [b, 1.0 - 2.0 * b, b],
            [1.0 - 2.0 * b, b, b],
        ];
        let weights = vec![9.0 / 40.0, wa, wa, wa, wb, wb, wb];
        tabulate(points, weights)
    })
}

/// Four-point Gauss rule on `[0, 1]`, exact for degree 7.
pub fn edge_rule() -> &'static EdgeRule {
    static RULE: OnceLock<EdgeRule> = OnceLock::new();
    RULE.get_or_init(|| {
        let nodes = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        let w = [
            0.347_854_845_137_453_8,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_8,
        ];
        let points: Vec<f64> = nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let weights = w.iter().map(|w| 0.5 * w).collect();
        let phi = points.iter().map(|&s| p2_edge_values(s)).collect();
        EdgeRule {
            points,
            weights,
            phi,
        }
    })
}
