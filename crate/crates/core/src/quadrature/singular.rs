use nalgebra::DMatrix;

use crate::dense::Mat;

use super::IntegrationBox;

/// Relative threshold below which singular values and normal components count as zero.
const RANK_TOL: f64 = 1e-12;

/// Affine set `{y : M y = t}` near which the integrand behaves like
/// `dist(y, set)^{-s}`.
///
/// When `t` is not in the range of `M` the set is empty and `|t - M y|` is
/// bounded below by the residual; the set of least-squares solutions is used
/// as the location of the (now finite) peak.
#[derive(Clone, Debug)]
pub struct SingularSet {
    exponent: f64,
    rank: usize,
    /// Least-squares solution `M^+ t`.
    base: Vec<f64>,
    /// Orthonormal basis of the row space of `M`, one vector per row.
    row_space: Vec<Vec<f64>>,
    residual: f64,
    width: f64,
    plane: Option<Plane>,
}

/// Codimension-one case: `{y : normal . y = offset}` with a unit normal.
#[derive(Clone, Debug)]
pub struct Plane {
    pub normal: Vec<f64>,
    pub offset: f64,
    /// Innermost coordinate with a nonzero normal component; the line rule
    /// resolves the plane while integrating this coordinate.
    pub level: usize,
    pub exponent: f64,
    /// Residual measured along the normal, `|t - P t| / sigma`; the peak has this width.
    pub width: f64,
}

impl SingularSet {
    pub fn affine(matrix: &Mat, target: &[f64], exponent: f64) -> Self {
        let d = matrix.cols();
        let m = DMatrix::from_row_slice(matrix.rows(), d, matrix.data());
        let svd = m.svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let mut base = vec![0.0; d];
        let mut row_space = Vec::new();
        let mut projected = vec![0.0; matrix.rows()];
        let mut sigma_min = f64::INFINITY;
        for (k, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma <= RANK_TOL * smax || sigma == 0.0 {
                continue;
            }
            let uk = u.column(k);
            let ut: f64 = uk.iter().zip(target).map(|(a, b)| a * b).sum();
            let vk: Vec<f64> = v_t.row(k).iter().copied().collect();
            for (b, v) in base.iter_mut().zip(&vk) {
                *b += ut / sigma * v;
            }
            for (p, a) in projected.iter_mut().zip(uk.iter()) {
                *p += ut * a;
            }
            row_space.push(vk);
            sigma_min = sigma_min.min(sigma);
        }
        let residual = target
            .iter()
            .zip(&projected)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let rank = row_space.len();
        let width = if rank == 0 { f64::INFINITY } else { residual / sigma_min };
        let plane = (rank == 1).then(|| {
            let mut normal = row_space[0].clone();
            let big = normal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for c in normal.iter_mut() {
                if c.abs() <= RANK_TOL * big {
                    *c = 0.0;
                }
            }
            let offset = normal.iter().zip(&base).map(|(a, b)| a * b).sum();
            let level = normal.iter().rposition(|c| *c != 0.0).expect("nonzero normal");
            Plane {
                normal,
                offset,
                level,
                exponent,
                width,
            }
        });
        Self {
            exponent,
            rank,
            base,
            row_space,
            residual,
            width,
            plane,
        }
    }

    /// The point `{y = x}`: `M = I`.
    pub fn point(x: &[f64], exponent: f64) -> Self {
        Self::affine(&Mat::identity(x.len()), x, exponent)
    }

    /// The hyperplane `{y : y_axis = value}` in `R^dim`.
    pub fn axis_plane(dim: usize, axis: usize, value: f64, exponent: f64) -> Self {
        let mut data = vec![0.0; dim];
        data[axis] = 1.0;
        Self::affine(&Mat::new(1, dim, data), &[value], exponent)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Codimension of the set; zero means the matrix vanished and there is no singularity.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn plane(&self) -> Option<&Plane> {
        self.plane.as_ref()
    }

    /// Euclidean distance from `y` to the (least-squares) set.
    pub fn distance(&self, y: &[f64]) -> f64 {
        self.row_space
            .iter()
            .map(|v| {
                let c: f64 = v.iter().zip(y.iter().zip(&self.base)).map(|(a, (p, q))| a * (p - q)).sum();
                c * c
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Whether the set passes within one cell diameter of `bx`.
    pub fn touches(&self, bx: &IntegrationBox) -> bool {
        if self.rank == 0 {
            return false;
        }
        if let Some(p) = &self.plane {
            let center = bx.center();
            let c: f64 = p.normal.iter().zip(&center).map(|(a, b)| a * b).sum();
            let extent: f64 = p
                .normal
                .iter()
                .zip(bx.lower.iter().zip(&bx.upper))
                .map(|(a, (l, u))| a.abs() * 0.5 * (u - l))
                .sum();
            return (c - p.offset).abs() <= 2.0 * extent && p.width <= 2.0 * extent;
        }
        let h = bx.half_diagonal() * (1.0 + 1e-12);
        self.width <= h && self.distance(&bx.center()) <= h
    }
}

impl Plane {
    /// Crossing of the line through `prefix` along coordinate `self.level`.
    pub fn crossing(&self, prefix: &[f64]) -> f64 {
        let partial: f64 = self.normal[..self.level].iter().zip(prefix).map(|(a, b)| a * b).sum();
        (self.offset - partial) / self.normal[self.level]
    }

    /// Where this plane's crossing meets `y_level = edge`, the integral over the
    /// line has a `|.|^{1-s}` kink in the outer coordinates. Returns that kink
    /// set as a plane one level further out, or `None` for axis-aligned planes.
    pub fn edge_plane(&self, edge: f64) -> Option<Plane> {
        let mut normal = self.normal.clone();
        normal[self.level] = 0.0;
        let level = normal.iter().rposition(|c| *c != 0.0)?;
        Some(Plane {
            offset: self.offset - self.normal[self.level] * edge,
            normal,
            level,
            exponent: self.exponent - 1.0,
            width: self.width,
        })
    }

    /// Grading power `k = m / (1 - s)` with the smallest integer `m` giving `k >= 2`.
    pub fn grading(&self) -> f64 {
        grading_power(self.exponent)
    }
}

pub fn grading_power(s: f64) -> f64 {
    let one_minus = (1.0 - s).max(1e-3);
    let m = (2.0 * one_minus - 1e-12).ceil().max(1.0);
    m / one_minus
}
