use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::feasibility::FeasibilityReport;
use super::rational::{decimal, decimal_opt, RationalVector};
use super::schedule::Mode;
use crate::conjugacy::{Cells, ConjugacyRequest, ConjugacyResult};
use crate::error::{Error, Result};
use crate::geom::{add, reduce, Point};
use crate::maps::{BlockSlide, Mapping, PlaneMap};
use crate::report::VerificationReport;

/// The data of the conjugacy construction behind `h_n`, without the map itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub request: ConjugacyRequest,
    pub x_prime: Point,
    pub y_prime: Point,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub cells: Cells,
    pub shift: [u64; 2],
    pub perturb_steps: [u32; 2],
}

impl LemmaRecord {
    pub fn new(request: ConjugacyRequest, res: &ConjugacyResult) -> Self {
        Self {
            request,
            x_prime: res.x_prime,
            y_prime: res.y_prime,
            n: res.n,
            delta: res.delta,
            epsilon: res.epsilon,
            a: res.a,
            cells: res.cells,
            shift: res.shift,
            perturb_steps: res.perturb_steps,
        }
    }

    pub fn result(&self, h: BlockSlide) -> ConjugacyResult {
        ConjugacyResult {
            h,
            x_prime: self.x_prime,
            y_prime: self.y_prime,
            n: self.n,
            delta: self.delta,
            epsilon: self.epsilon,
            a: self.a,
            cells: self.cells,
            shift: self.shift,
            perturb_steps: self.perturb_steps,
        }
    }
}

/// Which iterates were searched for the separation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lattice {
    /// `m = k q_n`, with `f^m = G^gamma` exactly.
    MultiplesOfQ,
    /// Any `m`; valid while `H_n` is the identity, where `f^m` equals `G^gamma`
    /// up to a translation by `(1/q_n) Z^2`, an isometry.
    AllIterates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub k: u64,
    pub m: u64,
    pub lattice: Lattice,
    /// `gamma` reduced to the fundamental domain centered at 0.
    pub gamma: Point,
    /// Distance of the witness images after `m` steps of direct iteration.
    pub distance: f64,
    /// The same distance through the closed form `H(H^-1 z + m omega)`.
    pub closed_form_distance: f64,
    pub candidates_tried: u32,
}

/// One rung of the induction, `f_n = H_n T_(omega_n) H_n^-1` with `H_n = h_1 ... h_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub n: u32,
    pub mode: Mode,
    pub h_list: Vec<BlockSlide>,
    pub omega: RationalVector,
    #[serde(with = "decimal")]
    pub q: BigInt,
    /// `N_n` of the last conjugacy; absent at the first stage.
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub x_n: Point,
    pub y_n: Point,
    pub x_sup: Point,
    pub y_sup: Point,
    pub m_n: u64,
    pub eps_n: f64,
    /// Values this stage was built from: `sigma_(n-1)`, `kappa`, `r_n`, `v_n`.
    pub sigma: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(with = "decimal_opt", default)]
    pub r: Option<BigInt>,
    #[serde(with = "decimal_opt", default)]
    pub v: Option<BigInt>,
    pub lemma: Option<LemmaRecord>,
    pub separation: Option<Separation>,
    /// Paper-safe requirement on `r_n` for the values actually used.
    pub feasibility: Option<FeasibilityReport>,
    pub notes: Vec<String>,
    pub audit: VerificationReport,
}

impl Stage {
    /// `H_n` as a composition; identity factors are dropped.
    pub fn conjugacy(&self) -> PlaneMap {
        PlaneMap::compose(self.h_list.iter().filter(|h| !h.is_identity()).cloned().map(PlaneMap::BlockSlide).collect())
    }

    pub fn conjugacy_is_identity(&self) -> bool {
        self.h_list.iter().all(BlockSlide::is_identity)
    }

    pub fn omega_f64(&self) -> Point {
        self.omega.to_f64()
    }

    /// The lift `F_n = H~_n T_(omega_n) H~_n^-1` of `f_n`.
    pub fn lift_map(&self) -> PlaneMap {
        let h = self.conjugacy();
        PlaneMap::compose(vec![h.clone(), PlaneMap::translation(self.omega_f64()), h.inverse()])
    }

    pub fn q_u64(&self) -> Result<u64> {
        self.q.to_u64().ok_or_else(|| Error::Overflow(format!("q_{} = {} exceeds 64 bits", self.n, self.q)))
    }

    pub fn stage_maps(&self) -> StageMaps {
        StageMaps::new(self.conjugacy(), self.omega.clone())
    }
}

/// Evaluation of `f = H T_omega H^-1` on the torus, by direct iteration or
/// through the closed form of its iterates.
#[derive(Debug, Clone)]
pub struct StageMaps {
    pub h: PlaneMap,
    pub omega: RationalVector,
    omega_f: Point,
    lift: PlaneMap,
}

impl StageMaps {
    pub fn new(h: PlaneMap, omega: RationalVector) -> Self {
        let omega_f = omega.to_f64();
        let lift = PlaneMap::compose(vec![h.clone(), PlaneMap::translation(omega_f), h.inverse()]);
        Self { h, omega, omega_f, lift }
    }

    pub fn lift(&self) -> &PlaneMap {
        &self.lift
    }

    /// `f(z)` reduced to `[0,1)^2`.
    pub fn step(&self, z: Point) -> Result<Point> {
        let w = self.h.apply_inverse(z)?;
        Ok(reduce(self.h.apply(add(w, self.omega_f))?))
    }

    /// `f^m(z)` by `m` applications of `f` followed by `post`.
    pub fn iterate_with(&self, z: Point, m: u64, post: Point) -> Result<Point> {
        let mut cur = z;
        for _ in 0..m {
            cur = reduce(add(self.step(cur)?, post));
        }
        Ok(cur)
    }

    pub fn iterate(&self, z: Point, m: u64) -> Result<Point> {
        self.iterate_with(z, m, [0.0, 0.0])
    }

    /// `f^k(z) = H(H^-1 z + frac(k omega))`, using that `H~` commutes with integer translations.
    pub fn orbit_point(&self, z: Point, k: &BigInt) -> Result<Point> {
        let (fr, _) = self.omega.split_multiple(k);
        let w = self.h.apply_inverse(z)?;
        Ok(reduce(self.h.apply(add(w, fr))?))
    }

    /// `F^k(z)` on the plane.
    pub fn lift_orbit_point(&self, z: Point, k: &BigInt) -> Result<Point> {
        let (fr, fl) = self.omega.split_multiple(k);
        let w = self.h.apply_inverse(z)?;
        let p = self.h.apply(add(w, fr))?;
        let f = |b: &BigInt| b.to_f64().unwrap_or(f64::NAN);
        Ok([p[0] + f(&fl[0]), p[1] + f(&fl[1])])
    }

    /// Visits `f^k(z)` for `0 <= k < len` through the closed form.
    pub fn for_each_orbit_point(&self, z: Point, len: u64, mut visit: impl FnMut(u64, Point) -> bool) -> Result<()> {
        let w = self.h.apply_inverse(z)?;
        let den = &self.omega.den;
        let df = den.to_f64().unwrap_or(f64::INFINITY);
        match (den.to_u64(), self.omega.residues(&BigInt::one())) {
            (Some(d), [a, b]) if d < (1 << 62) => {
                let (a, b) = (a.to_u64().unwrap_or(0), b.to_u64().unwrap_or(0));
                let (mut ra, mut rb) = (0u64, 0u64);
                for k in 0..len {
                    let p = reduce(self.h.apply([w[0] + ra as f64 / df, w[1] + rb as f64 / df])?);
                    if !visit(k, p) {
                        break;
                    }
                    ra = (ra + a) % d;
                    rb = (rb + b) % d;
                }
            }
            _ => {
                for k in 0..len {
                    let p = self.orbit_point(z, &BigInt::from(k))?;
                    if !visit(k, p) {
                        break;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Mapping for StageMaps {
    fn map(&self, p: Point) -> Result<Point> {
        self.lift.apply(p)
    }

    fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        self.lift.jacobian(p, step)
    }
}
