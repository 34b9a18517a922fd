use crate::error::{Error, Result};

/// Quadrature on a reference cell.
///
/// Triangle rules use barycentric points and weights summing to the
/// reference area 1/2; segment rules use points in `[0, 1]` and weights
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Iterates `(point, weight)` with weights normalized to sum 1, so that
    /// `∫_K f ≈ |K| Σ w f(x)` on a triangle or `|e| Σ w f(x)` on a segment.
    pub fn normalized(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        let total: f64 = self.weights.iter().sum();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(p, w)| (*p, w / total))
    }
}

fn orbit3(a: f64, b: f64, c: f64) -> Vec<[f64; 3]> {
    if a == b && b == c {
        vec![[a, a, a]]
    } else if b == c {
        vec![[a, b, b], [b, a, b], [b, b, a]]
    } else {
        vec![
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ]
    }
}

/// Symmetric triangle rules with positive weights, exact to `degree`.
pub fn triangle_quadrature(degree: usize) -> Result<QuadratureRule> {
    let third = 1.0 / 3.0;
    let (points, weights): (Vec<[f64; 3]>, Vec<f64>) = match degree {
        1 => (vec![[third; 3]], vec![1.0]),
        2 => {
            let p = orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0);
            let w = vec![third; p.len()];
            (p, w)
        }
        3 => {
            // Strang-Fix six-point rule
            let p = orbit3(0.659_027_622_374_092, 0.231_933_368_553_031, 0.109_039_009_072_877);
            let w = vec![1.0 / 6.0; p.len()];
            (p, w)
        }
        4 => {
            let mut p = orbit3(0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965);
            let mut w = vec![0.223_381_589_678_011; 3];
            p.extend(orbit3(0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771));
            w.extend([0.109_951_743_655_322; 3]);
            (p, w)
        }
        5 => {
            let mut p = vec![[third; 3]];
            let mut w = vec![0.225];
            p.extend(orbit3(0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115));
            w.extend([0.132_394_152_788_506; 3]);
            p.extend(orbit3(0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456));
            w.extend([0.125_939_180_544_827; 3]);
            (p, w)
        }
        _ => {
            return Err(Error::invalid(format!(
                "triangle quadrature degree {degree} unsupported (1..=5)"
            )))
        }
    };
    let total: f64 = weights.iter().sum();
    let weights = weights.iter().map(|w| 0.5 * w / total).collect();
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Gauss-Legendre rules on `[0, 1]`; the first barycentric slot holds the
/// parameter `s`.
pub fn segment_quadrature(degree: usize) -> Result<QuadratureRule> {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match degree {
        1 => (vec![0.0], vec![2.0]),
        2 | 3 => {
            let x = 1.0 / 3f64.sqrt();
            (vec![-x, x], vec![1.0, 1.0])
        }
        4 | 5 => {
            let x = (3.0f64 / 5.0).sqrt();
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => {
            return Err(Error::invalid(format!(
                "segment quadrature degree {degree} unsupported (1..=5)"
            )))
        }
    };
    Ok(QuadratureRule {
        points: nodes.iter().map(|x| [0.5 * (x + 1.0), 0.0, 0.0]).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}
