//! Degree-2 exact quadrature on reference cells.

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates; barycentric `(l1, l2)` for triangles, where the
    /// third coordinate is `1 - l1 - l2`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Two-point Gauss rule on `[0, 1]`.
    pub fn interval() -> Self {
        let d = 0.5 / 3f64.sqrt();
        Self {
            points: vec![[0.5 - d, 0.0], [0.5 + d, 0.0]],
            weights: vec![0.5, 0.5],
        }
    }

    /// Edge-midpoint rule on the unit right triangle (measure 1/2).
    pub fn triangle() -> Self {
        Self {
            points: vec![[0.5, 0.5], [0.0, 0.5], [0.5, 0.0]],
            weights: vec![1.0 / 6.0; 3],
        }
    }

    /// 2x2 Gauss rule on `[0, 1]^2`.
    pub fn quad() -> Self {
        let d = 0.5 / 3f64.sqrt();
        let g = [0.5 - d, 0.5 + d];
        let mut points = Vec::with_capacity(4);
        for &y in &g {
            for &x in &g {
                points.push([x, y]);
            }
        }
        Self {
            points,
            weights: vec![0.25; 4],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
