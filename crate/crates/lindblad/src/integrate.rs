use crate::error::{LindbladError, Result};
use crate::model::{Generator, LindbladModel};
use qtherm_core::{eig_hermitian, max_abs, tol, CMatrix, DensityOperator, C64};

/// Endpoint change under step halving accepted by the Richardson gate.
pub const TOL_ODE: f64 = 1e-8;
/// Trace error tolerated after any step.
const TRACE_DRIFT: f64 = 1e-8;

fn apply_generator(g: &Generator, rho: &CMatrix) -> CMatrix {
    // (-(i/ħ)H - K/2) ρ plus its adjoint covers commutator and anticommutator
    let mut a = g.drift.mul(rho);
    for l in &g.jumps {
        l.mul_acc(&l.mul_adjoint_right(rho), C64::new(0.5, 0.0), &mut a);
    }
    // exact Hermitian part: a rounding-level anti-Hermitian component would
    // otherwise grow under the jump term
    hermitian_double(&mut a);
    a
}

/// `y <- y + a x`.
fn axpy(y: &mut CMatrix, a: C64, x: &CMatrix) {
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

/// `A <- A + A^dag` in place.
fn hermitian_double(a: &mut CMatrix) {
    let d = a.nrows();
    for j in 0..d {
        for i in 0..=j {
            let v = a[(i, j)] + a[(j, i)].conj();
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// `dρ/dt` at time `t` for a Hermitian `ρ`.
pub fn liouvillian_apply_matrix(m: &LindbladModel, rho: &CMatrix, t: f64) -> CMatrix {
    apply_generator(&m.generator(t), rho)
}

/// `dρ/dt = L_{λ_t} ρ`.
pub fn liouvillian_apply(m: &LindbladModel, rho: &DensityOperator, t: f64) -> Result<CMatrix> {
    if rho.dim() != m.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: m.dim(),
            got: rho.dim(),
        });
    }
    Ok(liouvillian_apply_matrix(m, rho.matrix(), t))
}

/// Contribution `Σ_{k ∈ ks} (L_k ρ L_k^dag - {L_k^dag L_k, ρ}/2)` of a
/// subset of jump channels.
pub fn dissipator_apply(m: &LindbladModel, rho: &CMatrix, ks: &[usize]) -> CMatrix {
    let d = m.dim();
    let mut out = CMatrix::zeros(d, d);
    for &k in ks {
        let l = &m.jumps()[k].matrix;
        let ll = l.adjoint() * l;
        out += l * rho * l.adjoint() - (&ll * rho + rho * &ll) * C64::new(0.5, 0.0);
    }
    out
}

/// Fixed-step RK4 stepper for the master equation.
///
/// The trace and the diagonal are checked after every step; the full
/// spectrum only when [`Rk4::check_positivity`] is called.
#[derive(Debug, Clone)]
pub struct Rk4<'a> {
    model: &'a LindbladModel,
    rho: CMatrix,
    t: f64,
}

impl<'a> Rk4<'a> {
    pub fn new(model: &'a LindbladModel, rho0: &DensityOperator) -> Result<Self> {
        if rho0.dim() != model.dim() {
            return Err(LindbladError::DimensionMismatch {
                expected: model.dim(),
                got: rho0.dim(),
            });
        }
        Ok(Self {
            model,
            rho: rho0.matrix().clone(),
            t: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn state(&self) -> DensityOperator {
        DensityOperator::from_trusted(self.rho.clone(), vec![self.model.dim()])
    }

    pub fn step(&mut self, h: f64) -> Result<()> {
        let m = self.model;
        let t = self.t;
        let (g0, gm, g1) = if m.is_driven() {
            (m.generator(t), m.generator(t + h / 2.0), m.generator(t + h))
        } else {
            let g = m.generator(t);
            (g.clone(), g.clone(), g)
        };
        let half = C64::new(h / 2.0, 0.0);
        let mut stage = self.rho.clone();
        let k1 = apply_generator(&g0, &stage);
        axpy(&mut stage, half, &k1);
        let k2 = apply_generator(&gm, &stage);
        stage.copy_from(&self.rho);
        axpy(&mut stage, half, &k2);
        let k3 = apply_generator(&gm, &stage);
        stage.copy_from(&self.rho);
        axpy(&mut stage, C64::new(h, 0.0), &k3);
        let k4 = apply_generator(&g1, &stage);
        let w = C64::new(h / 6.0, 0.0);
        axpy(&mut self.rho, w, &k1);
        axpy(&mut self.rho, w * 2.0, &k2);
        axpy(&mut self.rho, w * 2.0, &k3);
        axpy(&mut self.rho, w, &k4);
        self.t += h;
        self.monitor()
    }

    fn monitor(&self) -> Result<()> {
        let tr = self.rho.trace().re;
        if (tr - 1.0).abs() > TRACE_DRIFT {
            return Err(LindbladError::TraceDrift { t: self.t, trace: tr });
        }
        let min = (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).fold(f64::INFINITY, f64::min);
        if min < -tol::PSD {
            return Err(LindbladError::Positivity { t: self.t, min });
        }
        Ok(())
    }

    /// Smallest eigenvalue; errors below `-τ_psd`.
    pub fn check_positivity(&self) -> Result<f64> {
        let min = eig_hermitian(&self.rho)?.values[0];
        if min < -tol::PSD {
            return Err(LindbladError::Positivity { t: self.t, min });
        }
        Ok(min)
    }

    /// Advances to `t_target` in equal steps no longer than `dt`.
    pub fn advance_to(&mut self, t_target: f64, dt: f64) -> Result<()> {
        let span = t_target - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            self.step(h)?;
        }
        self.t = t_target;
        Ok(())
    }
}

/// States on a nondecreasing grid starting at or after 0, stepping by at
/// most `dt`; positivity is verified at every grid point.
pub fn integrate(m: &LindbladModel, rho0: &DensityOperator, t_grid: &[f64], dt: f64) -> Result<Vec<DensityOperator>> {
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] < w[0]) || dt <= 0.0 {
        return Err(LindbladError::InvalidGrid);
    }
    let mut rk = Rk4::new(m, rho0)?;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        rk.advance_to(t, dt)?;
        rk.check_positivity()?;
        out.push(rk.state());
    }
    Ok(out)
}

/// `max |ρ_dt(t_f) - ρ_{dt/2}(t_f)|`.
pub fn richardson_residual(m: &LindbladModel, rho0: &DensityOperator, t_final: f64, dt: f64) -> Result<f64> {
    let coarse = integrate(m, rho0, &[t_final], dt)?;
    let fine = integrate(m, rho0, &[t_final], dt / 2.0)?;
    Ok(max_abs(&(coarse[0].matrix() - fine[0].matrix())))
}

/// Default step `10^-3` over the fastest generator scale.
pub fn default_dt(m: &LindbladModel) -> f64 {
    1e-3 / m.rate_scale(0.0).max(f64::MIN_POSITIVE)
}
