//! Symmetric quadrature rules on triangles, in barycentric coordinates.
//!
//! Weights are normalised to sum to one; multiply by the element area.

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: u32,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[b, a, a], [a, b, a], [a, a, b]]
}

fn orbit6(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]]
}

impl TriangleRule {
    pub fn centroid() -> Self {
        TriangleRule {
            degree: 1,
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }
    }

    /// Edge-midpoint rule, exact for quadratics.
    pub fn edge_midpoints() -> Self {
        TriangleRule {
            degree: 2,
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Six-point Dunavant rule.
    pub fn degree4() -> Self {
        let mut points = Vec::with_capacity(6);
        let mut weights = Vec::with_capacity(6);
        for (a, w) in [
            (0.445_948_490_915_965, 0.223_381_589_678_011),
            (0.091_576_213_509_771, 0.109_951_743_655_322),
        ] {
            points.extend(orbit3(a));
            weights.extend([w; 3]);
        }
        TriangleRule {
            degree: 4,
            points,
            weights,
        }
    }

    /// Thirteen-point Dunavant rule (one negative weight).
    pub fn degree7() -> Self {
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![-0.149_570_044_467_682];
        for (a, w) in [
            (0.260_345_966_079_040, 0.175_615_257_433_208),
            (0.065_130_102_902_216, 0.053_347_235_608_838),
        ] {
            points.extend(orbit3(a));
            weights.extend([w; 3]);
        }
        points.extend(orbit6(0.048_690_315_425_316, 0.312_865_496_004_874));
        weights.extend([0.077_113_760_890_257; 6]);
        TriangleRule {
            degree: 7,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cartesian quadrature points for the triangle `p`.
    pub fn map_points(&self, p: &[[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 2], f64, [f64; 3])> + '_ {
        let p = *p;
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0];
            let y = l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1];
            ([x, y], w, *l)
        })
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Largest error of `rule` over all monomials `x^a y^b` with `a + b ≤ degree`
/// on the unit right triangle (area-normalised).
pub fn max_monomial_error(rule: &TriangleRule) -> f64 {
    let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let mut worst = 0.0f64;
    for total in 0..=rule.degree {
        for a in 0..=total {
            let b = total - a;
            let q: f64 = rule
                .map_points(&tri)
                .map(|(p, w, _)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                .sum();
            let exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
            worst = worst.max((q - exact).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_exactness(rule: &TriangleRule, tol: f64) {
        let err = max_monomial_error(rule);
        assert!(err < tol, "degree {} rule error {err}", rule.degree);
    }

    #[test]
    fn rules_are_exact_to_their_degree() {
        check_exactness(&TriangleRule::centroid(), 1e-15);
        check_exactness(&TriangleRule::edge_midpoints(), 1e-15);
        check_exactness(&TriangleRule::degree4(), 1e-14);
        check_exactness(&TriangleRule::degree7(), 1e-14);
    }

    #[test]
    fn barycentric_points_sum_to_one() {
        for rule in [TriangleRule::degree4(), TriangleRule::degree7()] {
            for p in &rule.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
        assert_eq!(TriangleRule::degree4().len(), 6);
        assert_eq!(TriangleRule::degree7().len(), 13);
    }
}
