//! Three-level cascade rate equations with Purcell-scaled radiative terms.
//!
//! Densities are in cm⁻³, current densities in A/cm², times in s, the
//! period length in cm internally. The spontaneous-emission coupling factor
//! is fixed to one: every emitted photon, spontaneous or stimulated, goes
//! into the single cavity mode.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};
use crate::purcell::PurcellDrive;
use crate::quantities::{CurrentDensity, Energy, Lifetime, Rate, CM3_PER_UM3, ELEMENTARY_CHARGE};

/// Transport and optical constants of one cascade period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    /// Period length L_p (nm).
    pub period_nm: f64,
    /// Total non-radiative lifetime of the upper level, 3→2 channel included.
    pub tau3: Lifetime,
    pub tau2: Lifetime,
    /// Non-radiative 3→2 time.
    pub tau32: Lifetime,
    /// Free-space spontaneous lifetime.
    pub tau_sp: Lifetime,
    /// σ_V (cm³/s), defined through σ_V·S = 1/τ_st.
    pub gain_coefficient: f64,
    /// Γ_tot.
    pub total_loss: Rate,
    /// γ_R / Γ_tot.
    pub radiative_fraction: f64,
}

impl CascadeParams {
    /// Builds the parameter set with σ_V chosen so that the cavity-free
    /// threshold equals `threshold`.
    #[allow(clippy::too_many_arguments)]
    pub fn calibrated(
        period_nm: f64,
        tau3: Lifetime,
        tau2: Lifetime,
        tau32: Lifetime,
        tau_sp: Lifetime,
        total_loss: Rate,
        radiative_fraction: f64,
        threshold: CurrentDensity,
    ) -> Result<Self> {
        let mut params = Self {
            period_nm,
            tau3,
            tau2,
            tau32,
            tau_sp,
            gain_coefficient: 1.0,
            total_loss,
            radiative_fraction,
        };
        params.validate()?;
        let j_th = positive("threshold current density (A/cm^2)", threshold.a_per_cm2())?;
        let tau_eff = params.tau_eff();
        if tau_eff <= 0.0 {
            return Err(Error::Input(format!(
                "no population inversion (tau2 = {:e} s >= tau32 = {:e} s); cannot calibrate the gain to a threshold",
                tau2.seconds(),
                tau32.seconds()
            )));
        }
        params.gain_coefficient = total_loss.per_second() * ELEMENTARY_CHARGE * params.period_cm() / (j_th * tau_eff);
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        positive("period length L_p (nm)", self.period_nm)?;
        positive("gain coefficient sigma_V (cm^3/s)", self.gain_coefficient)?;
        if !(0.0..=1.0).contains(&self.radiative_fraction) {
            return Err(Error::Domain {
                what: "radiative fraction",
                constraint: "within [0, 1]",
                value: self.radiative_fraction,
            });
        }
        if self.tau3.seconds() > self.tau32.seconds() {
            return Err(Error::Input(format!(
                "tau3 = {:e} s must not exceed tau32 = {:e} s (tau3 includes the 3->2 channel)",
                self.tau3.seconds(),
                self.tau32.seconds()
            )));
        }
        Ok(())
    }

    pub fn period_cm(&self) -> f64 {
        self.period_nm * 1e-7
    }

    /// γ_R (s⁻¹).
    pub fn radiative_loss(&self) -> f64 {
        self.radiative_fraction * self.total_loss.per_second()
    }

    /// γ_NR (s⁻¹).
    pub fn nonradiative_loss(&self) -> f64 {
        (1.0 - self.radiative_fraction) * self.total_loss.per_second()
    }

    /// τ_eff = τ₃(1 − τ₂/τ₃₂) in seconds. Non-positive when there is no
    /// population inversion; thresholds are then undefined.
    pub fn tau_eff(&self) -> f64 {
        self.tau3.seconds() * (1.0 - self.tau2.seconds() / self.tau32.seconds())
    }

    pub fn has_inversion(&self) -> bool {
        self.tau_eff() > 0.0
    }

    /// Electron injection rate per unit volume J/(q·L_p) (cm⁻³ s⁻¹).
    pub fn injection_rate(&self, j: CurrentDensity) -> f64 {
        j.a_per_cm2() / (ELEMENTARY_CHARGE * self.period_cm())
    }
}

/// Instantaneous volume densities (cm⁻³).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateState {
    pub n3: f64,
    pub n2: f64,
    pub s: f64,
}

impl RateState {
    pub fn inversion(&self) -> f64 {
        self.n3 - self.n2
    }

    fn axpy(&self, h: f64, d: &[f64; 3]) -> Self {
        Self {
            n3: self.n3 + h * d[0],
            n2: self.n2 + h * d[1],
            s: self.s + h * d[2],
        }
    }
}

/// A Purcell factor as a function of the injected current density.
pub trait PurcellProfile: Sync {
    fn factor_at(&self, j: CurrentDensity) -> f64;

    /// Constant profiles admit the closed-form threshold J_th/ℱ_P.
    fn constant_value(&self) -> Option<f64> {
        None
    }
}

/// Drive-independent Purcell factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPurcell(pub f64);

impl PurcellProfile for ConstantPurcell {
    fn factor_at(&self, _: CurrentDensity) -> f64 {
        self.0
    }

    fn constant_value(&self) -> Option<f64> {
        Some(self.0)
    }
}

impl PurcellProfile for PurcellDrive {
    fn factor_at(&self, j: CurrentDensity) -> f64 {
        self.factor_at_density(j)
    }
}

impl<T: PurcellProfile + ?Sized> PurcellProfile for &T {
    fn factor_at(&self, j: CurrentDensity) -> f64 {
        (**self).factor_at(j)
    }

    fn constant_value(&self) -> Option<f64> {
        (**self).constant_value()
    }
}

/// Time derivatives (dn₃/dt, dn₂/dt, dS/dt).
pub fn derivatives(state: &RateState, params: &CascadeParams, purcell: f64, j: CurrentDensity) -> [f64; 3] {
    let inversion = state.inversion();
    // 1/τ_st = σ_V·S
    let radiative = purcell * (state.n3 / params.tau_sp.seconds() + inversion * params.gain_coefficient * state.s);
    [
        params.injection_rate(j) - state.n3 / params.tau3.seconds() - radiative,
        state.n3 / params.tau32.seconds() - state.n2 / params.tau2.seconds() + radiative,
        -state.s * params.total_loss.per_second() + radiative,
    ]
}

/// Sampled solution of the rate equations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<RateState>,
    /// Steps where a component undershot zero by more than 1e-12 of its
    /// scale and was clamped.
    pub clamped_steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> RateState {
        *self.states.last().expect("trajectory holds the initial state")
    }
}

/// Largest step accepted by [`integrate_transient`].
pub fn max_step(params: &CascadeParams) -> f64 {
    0.01 * params
        .tau2
        .seconds()
        .min(params.tau3.seconds())
        .min(1.0 / params.total_loss.per_second())
}

/// Fixed-step classical RK4 integration of the rate equations at constant
/// drive, recording every step.
pub fn integrate_transient(
    initial: RateState,
    params: &CascadeParams,
    purcell: f64,
    j: CurrentDensity,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_transient_sampled(initial, params, purcell, j, t_end, dt, 1)
}

/// As [`integrate_transient`], recording every `record_every`-th step and
/// the last one.
#[allow(clippy::too_many_arguments)]
pub fn integrate_transient_sampled(
    initial: RateState,
    params: &CascadeParams,
    purcell: f64,
    j: CurrentDensity,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let bound = max_step(params);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, bound });
    }
    non_negative("integration end time (s)", t_end)?;
    if initial.n3 < 0.0 || initial.n2 < 0.0 || initial.s < 0.0 {
        return Err(Error::Input("initial densities must be non-negative".into()));
    }
    let record_every = record_every.max(1);

    let g = params.injection_rate(j);
    let n_scale = g * params.tau3.seconds();
    let s_scale = purcell * n_scale / (params.tau_sp.seconds() * params.total_loss.per_second());
    let steps = (t_end / dt).round() as usize;

    let mut times = vec![0.0];
    let mut states = vec![initial];
    let mut clamped_steps = 0;
    let mut y = initial;
    for step in 1..=steps {
        let k1 = derivatives(&y, params, purcell, j);
        let k2 = derivatives(&y.axpy(0.5 * dt, &k1), params, purcell, j);
        let k3 = derivatives(&y.axpy(0.5 * dt, &k2), params, purcell, j);
        let k4 = derivatives(&y.axpy(dt, &k3), params, purcell, j);
        let incr = [
            (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) / 6.0,
            (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) / 6.0,
            (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) / 6.0,
        ];
        y = y.axpy(dt, &incr);

        let mut clamped = false;
        for (value, scale) in [(&mut y.n3, n_scale), (&mut y.n2, n_scale), (&mut y.s, s_scale)] {
            if *value < 0.0 {
                if *value < -1e-12 * scale {
                    clamped = true;
                }
                *value = 0.0;
            }
        }
        clamped_steps += clamped as usize;

        let t = step as f64 * dt;
        if !y.s.is_finite() || (s_scale > 0.0 && y.s > 1e12 * s_scale) {
            return Err(Error::Diverged { t, s: y.s });
        }
        if step % record_every == 0 || step == steps {
            times.push(t);
            states.push(y);
        }
    }
    Ok(Trajectory {
        times,
        states,
        clamped_steps,
    })
}

/// Cold-cavity populations (n₃, Δn): n₃ = Jτ₃/(qL_p), Δn = Jτ_eff/(qL_p).
pub fn cold_cavity_populations(j: CurrentDensity, params: &CascadeParams) -> (f64, f64) {
    let g = params.injection_rate(j);
    (g * params.tau3.seconds(), g * params.tau_eff())
}

/// Analytic sub-threshold steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Photon density (cm⁻³); `None` at or above the effective threshold.
    pub s: Option<f64>,
    pub n3: f64,
    pub inversion: f64,
    /// J'_th = J_th/ℱ_P (A/cm²); infinite without inversion or with ℱ_P = 0.
    pub effective_threshold: f64,
    pub valid: bool,
}

impl SteadyState {
    pub fn photon_density(&self, j: CurrentDensity) -> Result<f64> {
        self.s.ok_or(Error::AboveThreshold {
            j: j.a_per_cm2(),
            threshold: self.effective_threshold,
        })
    }
}

/// Photon density from the steady state of the photon equation with
/// cold-cavity populations: S = ℱ_P(n₃/τ_sp)/(Γ_tot − Δn σ_V ℱ_P).
pub fn steady_state_photon_density(params: &CascadeParams, purcell: f64, j: CurrentDensity) -> SteadyState {
    let (n3, inversion) = cold_cavity_populations(j, params);
    let denominator = params.total_loss.per_second() - inversion * params.gain_coefficient * purcell;
    let effective_threshold = match threshold_current_density(params) {
        Ok(jth) if purcell > 0.0 => jth.a_per_cm2() / purcell,
        _ => f64::INFINITY,
    };
    let valid = denominator > 0.0;
    SteadyState {
        s: valid.then(|| purcell * n3 / params.tau_sp.seconds() / denominator),
        n3,
        inversion,
        effective_threshold,
        valid,
    }
}

/// Cavity-free threshold J_th = Γ_tot q L_p/(σ_V τ_eff).
pub fn threshold_current_density(params: &CascadeParams) -> Result<CurrentDensity> {
    let tau_eff = params.tau_eff();
    if tau_eff <= 0.0 {
        return Err(Error::Input(
            "no population inversion (tau2 >= tau32); threshold undefined".into(),
        ));
    }
    CurrentDensity::new(
        params.total_loss.per_second() * ELEMENTARY_CHARGE * params.period_cm() / (params.gain_coefficient * tau_eff),
    )
}

/// Microcavity threshold J'_th: the smallest J in (0, j_max] with
/// J·ℱ_P(J) = J_th. Constant profiles use J_th/ℱ_P directly.
pub fn effective_threshold(
    j_th: CurrentDensity,
    purcell: &dyn PurcellProfile,
    j_max: CurrentDensity,
) -> Result<CurrentDensity> {
    let target = positive("threshold current density (A/cm^2)", j_th.a_per_cm2())?;
    let hi_bound = positive("search limit (A/cm^2)", j_max.a_per_cm2())?;
    let no_root = || Error::NoThreshold { j_max: hi_bound };

    if let Some(fp) = purcell.constant_value() {
        if !(fp > 0.0) {
            return Err(no_root());
        }
        let root = target / fp;
        return if root <= hi_bound {
            CurrentDensity::new(root)
        } else {
            Err(no_root())
        };
    }

    let excess = |j: f64| j * purcell.factor_at(CurrentDensity::new(j).expect("j >= 0")) - target;
    const SCAN: usize = 20_000;
    let mut lo = 0.0;
    let mut bracket = None;
    for k in 1..=SCAN {
        let j = hi_bound * k as f64 / SCAN as f64;
        if excess(j) >= 0.0 {
            bracket = Some((lo, j));
            break;
        }
        lo = j;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(no_root)?;
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    CurrentDensity::new(hi)
}

/// Photon density from the threshold form S = (τ₃/τ_sp)(1/(τ_eff σ_V))·J/(J'_th − J)
/// with J'_th = J_th/ℱ_P(J) evaluated pointwise.
pub fn photon_density_curve(
    params: &CascadeParams,
    purcell: &dyn PurcellProfile,
    grid: &[CurrentDensity],
) -> Result<Vec<f64>> {
    let j_th = threshold_current_density(params)?.a_per_cm2();
    let prefactor = params.tau3.seconds() / params.tau_sp.seconds() / (params.tau_eff() * params.gain_coefficient);
    grid.iter()
        .map(|&j| {
            let fp = purcell.factor_at(j);
            let ja = j.a_per_cm2();
            if fp == 0.0 || ja == 0.0 {
                return Ok(0.0);
            }
            let j_eff = j_th / fp;
            if ja >= j_eff {
                return Err(Error::AboveThreshold {
                    j: ja,
                    threshold: j_eff,
                });
            }
            Ok(prefactor * ja / (j_eff - ja))
        })
        .collect()
}

/// P_opt = S·ℏω·γ_R·V_cav (W) for one resonator.
pub fn emitted_power(s: f64, photon: Energy, radiative_loss: f64, volume_um3: f64) -> Result<f64> {
    non_negative("photon density (cm^-3)", s)?;
    non_negative("photon energy (meV)", photon.mev())?;
    non_negative("radiative loss rate (1/s)", radiative_loss)?;
    non_negative("mode volume (um^3)", volume_um3)?;
    Ok(s * photon.joules() * radiative_loss * volume_um3 * CM3_PER_UM3)
}

/// Emitted photons per injected electron.
pub fn quantum_efficiency(power_w: f64, photon: Energy, current_a: f64) -> Result<f64> {
    let p = non_negative("optical power (W)", power_w)?;
    positive("photon energy (meV)", photon.mev())?;
    let i = positive("current (A)", current_a)?;
    Ok((p / photon.joules()) / (i / ELEMENTARY_CHARGE))
}
