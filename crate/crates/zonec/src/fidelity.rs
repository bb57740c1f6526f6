//! Circuit duration and fidelity estimation, plus the three idealized
//! upper bounds (perfect movement, perfect placement, perfect reuse).

use serde::{Deserialize, Serialize};

use crate::error::{CompileError, Result};

/// Hardware parameters of the fidelity model. Defaults follow the
/// neutral-atom column of the standard parameter table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct HardwareParams {
    /// 2Q (CZ) gate fidelity.
    pub f2: f64,
    /// 1Q gate fidelity.
    pub f1: f64,
    /// Fidelity of a qubit excited by the Rydberg laser without a gate.
    pub f_exc: f64,
    /// Per-atom-transfer fidelity.
    pub f_tran: f64,
    /// 1Q gate duration, us.
    pub t_1q_us: f64,
    /// Rydberg (CZ) pulse duration, us.
    pub t_ryd_us: f64,
    /// Atom transfer duration, us (simultaneous for multiple atoms).
    pub t_tran_us: f64,
    /// Coherence time, seconds.
    pub t2_s: f64,
    /// Movement constant a in d = a * t^2, m/s^2.
    pub accel_m_s2: f64,
    /// Zone separation used by the perfect-placement bound, um.
    pub d_sep_um: f64,
}

impl Default for HardwareParams {
    fn default() -> Self {
        HardwareParams {
            f2: 0.995,
            f1: 0.9997,
            f_exc: 0.9975,
            f_tran: 0.999,
            t_1q_us: 52.0,
            t_ryd_us: 0.36,
            t_tran_us: 15.0,
            t2_s: 1.5,
            accel_m_s2: 2750.0,
            d_sep_um: 10.0,
        }
    }
}

impl HardwareParams {
    pub fn parse(doc: &str) -> Result<HardwareParams> {
        let hw: HardwareParams = serde_json::from_str(doc)
            .map_err(|e| CompileError::Input(format!("hardware parameters: {e}")))?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in
            [("f2", self.f2), ("f1", self.f1), ("f_exc", self.f_exc), ("f_tran", self.f_tran)]
        {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CompileError::Input(format!("{name} must lie in (0, 1]")));
            }
        }
        for (name, d) in [
            ("t_1q_us", self.t_1q_us),
            ("t_ryd_us", self.t_ryd_us),
            ("t_tran_us", self.t_tran_us),
            ("t2_s", self.t2_s),
            ("accel_m_s2", self.accel_m_s2),
            ("d_sep_um", self.d_sep_um),
        ] {
            if d <= 0.0 {
                return Err(CompileError::Input(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Movement duration in us for a distance in um, from d = a * t^2.
    pub fn movement_time_us(&self, d_um: f64) -> f64 {
        assert!(d_um >= 0.0);
        (d_um * 1e-6 / self.accel_m_s2).sqrt() * 1e6
    }

    /// T2 in us, the unit used across schedules.
    pub fn t2_us(&self) -> f64 {
        self.t2_s * 1e6
    }
}

/// Movement duration in us under the default movement constant.
pub fn movement_time_us(d_um: f64) -> f64 {
    HardwareParams::default().movement_time_us(d_um)
}

/// Counts accumulated by replaying a program (or a synthetic bound schedule).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageCounters {
    pub g1: usize,
    pub g2: usize,
    pub n_exc: usize,
    pub n_tran: usize,
    /// Per-qubit busy time (gates + transfers), us.
    pub busy_us: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityFactors {
    pub one_qubit: f64,
    pub two_qubit_excitation: f64,
    pub transfer: f64,
    pub decoherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub g1: usize,
    pub g2: usize,
    pub n_exc: usize,
    pub n_tran: usize,
    pub duration_us: f64,
    pub idle_us: Vec<f64>,
    pub factors: FidelityFactors,
    pub total: f64,
    /// Set when some qubit idles longer than a tenth of T2, where the linear
    /// decoherence model loses accuracy.
    pub linear_model_strained: bool,
}

/// Evaluate the fidelity product for a schedule of the given makespan.
/// Idle time per qubit is the makespan minus its gate and transfer time.
pub fn evaluate(makespan_us: f64, counters: &UsageCounters, hw: &HardwareParams) -> FidelityReport {
    let one_qubit = hw.f1.powi(counters.g1 as i32);
    let two_qubit_excitation =
        hw.f2.powi(counters.g2 as i32) * hw.f_exc.powi(counters.n_exc as i32);
    let transfer = hw.f_tran.powi(counters.n_tran as i32);

    let t2 = hw.t2_us();
    let mut decoherence = 1.0;
    let mut strained = false;
    let mut idle_us = Vec::with_capacity(counters.busy_us.len());
    for &busy in &counters.busy_us {
        let idle = (makespan_us - busy).max(0.0);
        idle_us.push(idle);
        if idle > t2 {
            // model breakdown: clamp this qubit's survival to zero
            decoherence = 0.0;
            strained = true;
        } else {
            if idle > 0.1 * t2 {
                strained = true;
            }
            decoherence *= 1.0 - idle / t2;
        }
    }

    let factors = FidelityFactors { one_qubit, two_qubit_excitation, transfer, decoherence };
    let total = one_qubit * two_qubit_excitation * transfer * decoherence;
    FidelityReport {
        g1: counters.g1,
        g2: counters.g2,
        n_exc: counters.n_exc,
        n_tran: counters.n_tran,
        duration_us: makespan_us,
        idle_us,
        factors,
        total,
        linear_model_strained: strained,
    }
}

/// Duration of an idealized rearrangement layer in the perfect-placement
/// bound: two transfers plus one zone-separation move.
pub fn perfect_placement_layer_us(hw: &HardwareParams) -> f64 {
    2.0 * hw.t_tran_us + hw.movement_time_us(hw.d_sep_um)
}
