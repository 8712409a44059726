//! The step-function block slide in exact rational arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{representatives, Cells, ConjugacyRequest, ConjugacyResult};
use crate::geom::Point;

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `h(a,b) = (a - s_beta(b - s_alpha(a)), b - s_alpha(a))` with step profiles.
#[derive(Debug, Clone)]
pub struct ExactStepSlide {
    pub alpha: Vec<BigRational>,
    pub beta: Vec<BigRational>,
    pub q: u64,
    pub n: usize,
}

pub type ExactPoint = [BigRational; 2];

impl ExactStepSlide {
    /// Profiles recomputed exactly from the representative `x` and the cells.
    pub fn from_cells(x: Point, cells: &Cells, n: usize, q: u64) -> Self {
        let nq = n as u64 * q;
        let (x1, x2) = (rat(x[0]), rat(x[1]));
        let Cells { i2, j1, j2, .. } = *cells;
        let nn = n as u64;
        let mut beta = vec![BigRational::zero(); n];
        beta[(i2 % nn) as usize] = ratio(2 * j1 + 3, 2 * nq) - x1;
        let mut alpha = vec![BigRational::zero(); n];
        alpha[((j1 + 1) % nn) as usize] = ratio(2 * j2 + 1, 2 * nq) - x2;
        Self { alpha, beta, q, n }
    }

    fn step<'a>(&self, prof: &'a [BigRational], x: &BigRational) -> &'a BigRational {
        let nq = BigInt::from(self.n as u64 * self.q);
        // floor(frac(x) * Nq) mod N equals floor(x * Nq) mod N
        let j = (x * BigRational::from_integer(nq)).floor().to_integer();
        let idx = j.mod_floor(&BigInt::from(self.n as u64));
        &prof[idx.to_usize().expect("index below N")]
    }

    pub fn forward(&self, [a, b]: &ExactPoint) -> ExactPoint {
        let b1 = b - self.step(&self.alpha, a);
        let a1 = a - self.step(&self.beta, &b1);
        [a1, b1]
    }

    pub fn inverse(&self, [a, b]: &ExactPoint) -> ExactPoint {
        let a1 = a + self.step(&self.beta, b);
        let b1 = b + self.step(&self.alpha, &a1);
        [a1, b1]
    }

    /// Number of cell centers `((i+1/2)/(Nq), (j+1/2)/(Nq))`, sampled with the given
    /// stride, on which `h(h^{-1} p) != p` or `h^{-1}(h p) != p`.
    pub fn involution_failures(&self, stride: usize) -> usize {
        let nq = self.n as u64 * self.q;
        let mut bad = 0;
        for i in (0..nq).step_by(stride.max(1)) {
            for j in (0..nq).step_by(stride.max(1)) {
                let p = [ratio(2 * i + 1, 2 * nq), ratio(2 * j + 1, 2 * nq)];
                if self.forward(&self.inverse(&p)) != p || self.inverse(&self.forward(&p)) != p {
                    bad += 1;
                }
            }
        }
        bad
    }
}

fn exact_dist(p: &ExactPoint, q: &ExactPoint) -> f64 {
    let d0 = &p[0] - &q[0];
    let d1 = &p[1] - &q[1];
    let s = &d0 * &d0 + &d1 * &d1;
    s.to_f64().unwrap_or(f64::INFINITY).sqrt()
}

/// Checkpoints of the step-function stage of the construction, in exact arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DryRun {
    /// `h^{-1}(x~) = ((j1+3/2)/(Nq), (j2+1/2)/(Nq))` exactly.
    pub preimage_of_x_matches: bool,
    /// `h^{-1}(y~) = y~` exactly.
    pub preimage_of_y_fixed: bool,
    pub preimage_distance: f64,
    /// `h` fixes both translated preimages `T_(2/(Nq),0) h^{-1}(x~), T h^{-1}(y~)`.
    pub fixes_shifted: bool,
    pub shifted_distance: f64,
    pub involution_failures: usize,
}

pub fn step_dry_run(req: &ConjugacyRequest, res: &ConjugacyResult) -> DryRun {
    let (xt, yt) = representatives(req, res.shift);
    let slide = ExactStepSlide::from_cells(xt, &res.cells, res.n, req.q);
    let nq = res.n as u64 * req.q;
    let x = [rat(xt[0]), rat(xt[1])];
    let y = [rat(yt[0]), rat(yt[1])];
    let hx = slide.inverse(&x);
    let hy = slide.inverse(&y);
    let c = &res.cells;
    let expect = [ratio(2 * c.j1 + 3, 2 * nq), ratio(2 * c.j2 + 1, 2 * nq)];
    let t = BigRational::new(BigInt::from(2), BigInt::from(nq));
    let shift = |p: &ExactPoint| [&p[0] + &t, p[1].clone()];
    let (sx, sy) = (shift(&hx), shift(&hy));
    let fixes = slide.forward(&sx) == sx && slide.forward(&sy) == sy;
    let (fx, fy) = (slide.forward(&sx), slide.forward(&sy));
    let stride = (nq as usize / 64).max(1);
    DryRun {
        preimage_of_x_matches: hx == expect,
        preimage_of_y_fixed: hy == y,
        preimage_distance: exact_dist(&hx, &hy),
        fixes_shifted: fixes,
        shifted_distance: exact_dist(&fx, &fy),
        involution_failures: slide.involution_failures(stride),
    }
}
