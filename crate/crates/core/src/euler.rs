//! Ideal-gas Euler state algebra, fluxes and Riemann solvers.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result, Site};
use crate::index::Axis;

pub const NCOMP: usize = 4;
pub const COMPONENT_NAMES: [&str; NCOMP] = ["mass", "mom_x", "mom_y", "energy"];

/// Conserved state (density, momentum, total energy per volume). Also used
/// for fluxes and increments, which share the component layout.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cons {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub e: f64,
}

impl Cons {
    pub const ZERO: Cons = Cons {
        rho: 0.0,
        mx: 0.0,
        my: 0.0,
        e: 0.0,
    };

    pub const fn new(rho: f64, mx: f64, my: f64, e: f64) -> Self {
        Cons { rho, mx, my, e }
    }

    pub fn from_array(a: [f64; NCOMP]) -> Self {
        Cons::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; NCOMP] {
        [self.rho, self.mx, self.my, self.e]
    }

    pub fn comp(&self, k: usize) -> f64 {
        match k {
            0 => self.rho,
            1 => self.mx,
            2 => self.my,
            3 => self.e,
            _ => panic!("component {k} out of range"),
        }
    }

    pub fn comp_mut(&mut self, k: usize) -> &mut f64 {
        match k {
            0 => &mut self.rho,
            1 => &mut self.mx,
            2 => &mut self.my,
            3 => &mut self.e,
            _ => panic!("component {k} out of range"),
        }
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Cons {
        Cons::new(f(self.rho), f(self.mx), f(self.my), f(self.e))
    }

    pub fn zip(self, o: Cons, f: impl Fn(f64, f64) -> f64) -> Cons {
        Cons::new(
            f(self.rho, o.rho),
            f(self.mx, o.mx),
            f(self.my, o.my),
            f(self.e, o.e),
        )
    }

    pub fn abs(self) -> Cons {
        self.map(f64::abs)
    }

    pub fn max_abs(self) -> f64 {
        self.rho
            .abs()
            .max(self.mx.abs())
            .max(self.my.abs())
            .max(self.e.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.mx.is_finite() && self.my.is_finite() && self.e.is_finite()
    }

    /// Momentum component normal to `axis`.
    pub fn mom(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.mx,
            Axis::Y => self.my,
        }
    }

    pub fn internal_energy(&self) -> f64 {
        self.e - 0.5 * (self.mx * self.mx + self.my * self.my) / self.rho
    }
}

impl Add for Cons {
    type Output = Cons;
    fn add(self, o: Cons) -> Cons {
        Cons::new(self.rho + o.rho, self.mx + o.mx, self.my + o.my, self.e + o.e)
    }
}

impl Sub for Cons {
    type Output = Cons;
    fn sub(self, o: Cons) -> Cons {
        Cons::new(self.rho - o.rho, self.mx - o.mx, self.my - o.my, self.e - o.e)
    }
}

impl Neg for Cons {
    type Output = Cons;
    fn neg(self) -> Cons {
        Cons::new(-self.rho, -self.mx, -self.my, -self.e)
    }
}

impl Mul<f64> for Cons {
    type Output = Cons;
    fn mul(self, s: f64) -> Cons {
        Cons::new(self.rho * s, self.mx * s, self.my * s, self.e * s)
    }
}

impl Mul<Cons> for f64 {
    type Output = Cons;
    fn mul(self, u: Cons) -> Cons {
        u * self
    }
}

impl Div<f64> for Cons {
    type Output = Cons;
    fn div(self, s: f64) -> Cons {
        Cons::new(self.rho / s, self.mx / s, self.my / s, self.e / s)
    }
}

impl AddAssign for Cons {
    fn add_assign(&mut self, o: Cons) {
        self.rho += o.rho;
        self.mx += o.mx;
        self.my += o.my;
        self.e += o.e;
    }
}

impl SubAssign for Cons {
    fn sub_assign(&mut self, o: Cons) {
        self.rho -= o.rho;
        self.mx -= o.mx;
        self.my -= o.my;
        self.e -= o.e;
    }
}

impl std::iter::Sum for Cons {
    fn sum<I: Iterator<Item = Cons>>(iter: I) -> Cons {
        iter.fold(Cons::ZERO, |a, b| a + b)
    }
}

/// Primitive state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prim {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl Prim {
    pub const fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Prim { rho, u, v, p }
    }

    pub fn vel(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.u,
            Axis::Y => self.v,
        }
    }

    /// (normal, tangential) velocity relative to `axis`.
    pub fn split(&self, axis: Axis) -> (f64, f64) {
        match axis {
            Axis::X => (self.u, self.v),
            Axis::Y => (self.v, self.u),
        }
    }

    pub fn from_split(rho: f64, un: f64, ut: f64, p: f64, axis: Axis) -> Prim {
        match axis {
            Axis::X => Prim::new(rho, un, ut, p),
            Axis::Y => Prim::new(rho, ut, un, p),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0 && self.u.is_finite() && self.v.is_finite()
    }
}

/// Calorically perfect gas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gas {
    pub gamma: f64,
}

impl Default for Gas {
    fn default() -> Self {
        Gas { gamma: 1.4 }
    }
}

impl Gas {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "gamma must exceed 1");
        Gas { gamma }
    }

    /// Primitive variables; fails on non-positive density or pressure.
    pub fn prim(&self, u: &Cons) -> Result<Prim> {
        if !u.is_finite() {
            return Err(Error::NotFinite {
                site: Site::default(),
            });
        }
        if u.rho <= 0.0 {
            return Err(Error::NegativeDensity {
                value: u.rho,
                site: Site::default(),
            });
        }
        let vx = u.mx / u.rho;
        let vy = u.my / u.rho;
        let p = (self.gamma - 1.0) * (u.e - 0.5 * u.rho * (vx * vx + vy * vy));
        if p <= 0.0 {
            return Err(Error::NegativePressure {
                value: p,
                site: Site::default(),
            });
        }
        Ok(Prim::new(u.rho, vx, vy, p))
    }

    pub fn cons(&self, w: &Prim) -> Cons {
        Cons::new(
            w.rho,
            w.rho * w.u,
            w.rho * w.v,
            w.p / (self.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v),
        )
    }

    pub fn sound_speed(&self, w: &Prim) -> f64 {
        (self.gamma * w.p / w.rho).sqrt()
    }

    /// Physical flux in direction `axis`.
    pub fn flux_prim(&self, w: &Prim, axis: Axis) -> Cons {
        let e = w.p / (self.gamma - 1.0) + 0.5 * w.rho * (w.u * w.u + w.v * w.v);
        let un = w.vel(axis);
        let mass = w.rho * un;
        match axis {
            Axis::X => Cons::new(mass, mass * w.u + w.p, mass * w.v, un * (e + w.p)),
            Axis::Y => Cons::new(mass, mass * w.u, mass * w.v + w.p, un * (e + w.p)),
        }
    }

    pub fn flux(&self, u: &Cons, axis: Axis) -> Result<Cons> {
        Ok(self.flux_prim(&self.prim(u)?, axis))
    }

    /// Godunov flux from the two-shock approximate Riemann solver.
    pub fn riemann_two_shock(&self, l: &Prim, r: &Prim, axis: Axis) -> Result<Cons> {
        let w = self.two_shock_state(l, r, axis)?;
        Ok(self.flux_prim(&w, axis))
    }

    /// Interface state sampled from the two-shock solution at x/t = 0.
    pub fn two_shock_state(&self, l: &Prim, r: &Prim, axis: Axis) -> Result<Prim> {
        let (ul, vl) = l.split(axis);
        let (ur, vr) = r.split(axis);
        let (pstar, ustar) = self.two_shock_star(l.rho, ul, l.p, r.rho, ur, r.p)?;
        let g = self.gamma;
        // side of the contact
        let (rho_k, u_k, p_k, ut, sgn) = if ustar >= 0.0 {
            (l.rho, ul, l.p, vl, 1.0)
        } else {
            (r.rho, ur, r.p, vr, -1.0)
        };
        let c_k = (g * p_k / rho_k).sqrt();
        let sample = if pstar > p_k {
            let w2 = rho_k * (0.5 * (g + 1.0) * pstar + 0.5 * (g - 1.0) * p_k);
            let rho_star = 1.0 / (1.0 / rho_k - (pstar - p_k) / w2);
            let shock = u_k - sgn * w2.sqrt() / rho_k;
            if sgn * shock >= 0.0 {
                (rho_k, u_k, p_k)
            } else {
                (rho_star, ustar, pstar)
            }
        } else {
            let rho_star = rho_k * (pstar / p_k).powf(1.0 / g);
            let c_star = (g * pstar / rho_star).sqrt();
            let head = u_k - sgn * c_k;
            let tail = ustar - sgn * c_star;
            if sgn * head >= 0.0 {
                (rho_k, u_k, p_k)
            } else if sgn * tail <= 0.0 {
                (rho_star, ustar, pstar)
            } else {
                // transonic fan at x/t = 0
                let c = 2.0 / (g + 1.0) * (c_k + sgn * 0.5 * (g - 1.0) * u_k);
                let un = sgn * c;
                let rho = rho_k * (c / c_k).powf(2.0 / (g - 1.0));
                let p = p_k * (c / c_k).powf(2.0 * g / (g - 1.0));
                (rho, un, p)
            }
        };
        Ok(Prim::from_split(sample.0, sample.1, ut, sample.2, axis))
    }

    /// Star pressure and velocity of the two-shock approximation: acoustic
    /// guess followed by two Newton corrections on the shock branches.
    pub fn two_shock_star(
        &self,
        rl: f64,
        ul: f64,
        pl: f64,
        rr: f64,
        ur: f64,
        pr: f64,
    ) -> Result<(f64, f64)> {
        let g = self.gamma;
        let cl = (g * pl / rl).sqrt();
        let cr = (g * pr / rr).sqrt();
        if 2.0 * (cl + cr) / (g - 1.0) <= ur - ul {
            return Err(Error::Vacuum);
        }
        let pfloor = 1e-8 * pl.min(pr);
        let zl = rl * cl;
        let zr = rr * cr;
        let mut p = ((zr * pl + zl * pr + zl * zr * (ul - ur)) / (zl + zr)).max(pfloor);
        let wave = |rho: f64, pk: f64, p: f64| -> (f64, f64) {
            let w = (rho * (0.5 * (g + 1.0) * p + 0.5 * (g - 1.0) * pk)).sqrt();
            // d/dp of (p - pk)/W
            let dw = rho * (g + 1.0) / (4.0 * w);
            let d = 1.0 / w - (p - pk) * dw / (w * w);
            (w, d)
        };
        for _ in 0..2 {
            let (wl, dl) = wave(rl, pl, p);
            let (wr, dr) = wave(rr, pr, p);
            let f = (ur + (p - pr) / wr) - (ul - (p - pl) / wl);
            let df = dl + dr;
            p = (p - f / df).max(pfloor);
        }
        let (wl, _) = wave(rl, pl, p);
        let (wr, _) = wave(rr, pr, p);
        let u_from_l = ul - (p - pl) / wl;
        let u_from_r = ur + (p - pr) / wr;
        Ok((p, 0.5 * (u_from_l + u_from_r)))
    }

    /// Outward flux through an embedded slip wall whose normal `n` points
    /// from the body into the fluid. Mass and energy components are zero;
    /// the momentum component is −p_wall·n with p_wall from the reflected
    /// Riemann problem.
    pub fn eb_wall_flux(&self, w: &Prim, n: (f64, f64)) -> Result<Cons> {
        let p = self.wall_pressure(w, n)?;
        Ok(Cons::new(0.0, -p * n.0, -p * n.1, 0.0))
    }

    /// Pressure at a slip wall with fluid-pointing normal `n`.
    pub fn wall_pressure(&self, w: &Prim, n: (f64, f64)) -> Result<f64> {
        // velocity toward the wall
        let un = -(w.u * n.0 + w.v * n.1);
        let (p, _) = self.two_shock_star(w.rho, un, w.p, w.rho, -un, w.p)?;
        Ok(p)
    }

    /// Largest |u|+c and |v|+c over the given states.
    pub fn max_wavespeed<'a>(&self, states: impl IntoIterator<Item = &'a Cons>) -> Result<f64> {
        let mut smax: Option<f64> = None;
        for u in states {
            let w = self.prim(u)?;
            let c = self.sound_speed(&w);
            let s = (w.u.abs() + c).max(w.v.abs() + c);
            smax = Some(smax.map_or(s, |m: f64| m.max(s)));
        }
        smax.ok_or(Error::EmptyFluid)
    }
}

/// Exact solution of the 1D Riemann problem for a gamma-law gas. The
/// transverse velocity is advected with the contact.
#[derive(Clone, Debug)]
pub struct ExactRiemann {
    pub gas: Gas,
    pub left: Prim,
    pub right: Prim,
    pub p_star: f64,
    pub u_star: f64,
}

impl ExactRiemann {
    /// Solve for the star state. Velocities are the `u` components of the
    /// given states.
    pub fn solve(left: Prim, right: Prim, gas: Gas) -> Result<Self> {
        let g = gas.gamma;
        let cl = gas.sound_speed(&left);
        let cr = gas.sound_speed(&right);
        if 2.0 * (cl + cr) / (g - 1.0) <= right.u - left.u {
            return Err(Error::Vacuum);
        }
        let du = right.u - left.u;
        let f = |p: f64| {
            let (fl, dl) = pressure_fn(p, &left, cl, g);
            let (fr, dr) = pressure_fn(p, &right, cr, g);
            (fl + fr + du, dl + dr)
        };
        // bracket: f is increasing in p
        let mut lo = 0.0f64;
        let mut hi = left.p.max(right.p).max(1e-300);
        while f(hi).0 < 0.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoConvergence(0));
            }
        }
        // two-rarefaction guess, clamped into the bracket
        let z = (g - 1.0) / (2.0 * g);
        let guess = ((cl + cr - 0.5 * (g - 1.0) * du)
            / (cl / left.p.powf(z) + cr / right.p.powf(z)))
        .powf(1.0 / z);
        let mut p = if guess > lo && guess < hi {
            guess
        } else {
            0.5 * (lo + hi)
        };
        const MAX_ITER: usize = 100;
        for _ in 0..MAX_ITER {
            let (fp, dfp) = f(p);
            if fp > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let mut pn = p - fp / dfp;
            if !(pn > lo && pn < hi) || !pn.is_finite() {
                pn = 0.5 * (lo + hi);
            }
            let change = (pn - p).abs();
            p = pn;
            if change < 1e-12 * p.max(1e-300) || change < 1e-15 {
                let (fl, _) = pressure_fn(p, &left, cl, g);
                let (fr, _) = pressure_fn(p, &right, cr, g);
                let u_star = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);
                return Ok(ExactRiemann {
                    gas,
                    left,
                    right,
                    p_star: p,
                    u_star,
                });
            }
        }
        Err(Error::NoConvergence(MAX_ITER))
    }

    /// State at similarity coordinate xi = x/t.
    pub fn sample(&self, xi: f64) -> Prim {
        let g = self.gas.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        if xi <= us {
            let w = &self.left;
            let c = self.gas.sound_speed(w);
            if ps > w.p {
                let pr = ps / w.p;
                let s = w.u - c * ((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= s {
                    *w
                } else {
                    let rho = w.rho * (pr + (g - 1.0) / (g + 1.0))
                        / ((g - 1.0) / (g + 1.0) * pr + 1.0);
                    Prim::new(rho, us, w.v, ps)
                }
            } else {
                let cs = c * (ps / w.p).powf((g - 1.0) / (2.0 * g));
                let head = w.u - c;
                let tail = us - cs;
                if xi <= head {
                    *w
                } else if xi >= tail {
                    Prim::new(w.rho * (ps / w.p).powf(1.0 / g), us, w.v, ps)
                } else {
                    let f = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (w.u - xi);
                    Prim::new(
                        w.rho * f.powf(2.0 / (g - 1.0)),
                        2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * w.u + xi),
                        w.v,
                        w.p * f.powf(2.0 * g / (g - 1.0)),
                    )
                }
            }
        } else {
            let w = &self.right;
            let c = self.gas.sound_speed(w);
            if ps > w.p {
                let pr = ps / w.p;
                let s = w.u + c * ((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g)).sqrt();
                if xi >= s {
                    *w
                } else {
                    let rho = w.rho * (pr + (g - 1.0) / (g + 1.0))
                        / ((g - 1.0) / (g + 1.0) * pr + 1.0);
                    Prim::new(rho, us, w.v, ps)
                }
            } else {
                let cs = c * (ps / w.p).powf((g - 1.0) / (2.0 * g));
                let head = w.u + c;
                let tail = us + cs;
                if xi >= head {
                    *w
                } else if xi <= tail {
                    Prim::new(w.rho * (ps / w.p).powf(1.0 / g), us, w.v, ps)
                } else {
                    let f = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (w.u - xi);
                    Prim::new(
                        w.rho * f.powf(2.0 / (g - 1.0)),
                        2.0 / (g + 1.0) * (-c + 0.5 * (g - 1.0) * w.u + xi),
                        w.v,
                        w.p * f.powf(2.0 * g / (g - 1.0)),
                    )
                }
            }
        }
    }

    /// Right-moving shock speed, if the right wave is a shock.
    pub fn right_shock_speed(&self) -> Option<f64> {
        let g = self.gas.gamma;
        let w = &self.right;
        (self.p_star > w.p).then(|| {
            let c = self.gas.sound_speed(w);
            w.u + c * ((g + 1.0) / (2.0 * g) * self.p_star / w.p + (g - 1.0) / (2.0 * g)).sqrt()
        })
    }
}

fn pressure_fn(p: f64, w: &Prim, c: f64, g: f64) -> (f64, f64) {
    if p > w.p {
        let a = 2.0 / ((g + 1.0) * w.rho);
        let b = (g - 1.0) / (g + 1.0) * w.p;
        let q = (a / (p + b)).sqrt();
        ((p - w.p) * q, q * (1.0 - 0.5 * (p - w.p) / (b + p)))
    } else {
        let pr = p / w.p;
        let f = 2.0 * c / (g - 1.0) * (pr.powf((g - 1.0) / (2.0 * g)) - 1.0);
        let df = 1.0 / (w.rho * c) * pr.powf(-(g + 1.0) / (2.0 * g));
        (f, df)
    }
}

/// Post-shock state behind a shock of Mach `mach` moving in +x into `pre`.
pub fn shock_jump(pre: &Prim, mach: f64, gas: Gas) -> Prim {
    let g = gas.gamma;
    let c = gas.sound_speed(pre);
    let m2 = mach * mach;
    let speed = pre.u + mach * c;
    let rho = pre.rho * (g + 1.0) * m2 / ((g - 1.0) * m2 + 2.0);
    let p = pre.p * (1.0 + 2.0 * g / (g + 1.0) * (m2 - 1.0));
    let u = speed - (speed - pre.u) * pre.rho / rho;
    Prim::new(rho, u, pre.v, p)
}
