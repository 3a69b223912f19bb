use qtherm_channels::KrausLabel;
use serde::{Deserialize, Serialize};

/// One environment interaction along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    /// Index of the Kraus operator in its map.
    pub op: usize,
    pub label: KrausLabel,
}

/// Outcomes `γ = {n, (ν_1, μ_1), …, (ν_N, μ_N), m}` and their probabilities
/// under the forward, backward, dual and dual-reverse processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub steps: Vec<Step>,
    pub m: usize,
    /// `P(γ)`.
    pub prob: f64,
    /// `P̃(γ̃)`.
    pub reverse_prob: Option<f64>,
    /// `P_D(γ)`.
    pub dual_prob: Option<f64>,
    /// `P̃_D(γ̃)`.
    pub dual_reverse_prob: Option<f64>,
}

impl TrajectoryRecord {
    pub fn new(n: usize, steps: Vec<Step>, m: usize, prob: f64) -> Self {
        Self {
            n,
            steps,
            m,
            prob,
            reverse_prob: None,
            dual_prob: None,
            dual_reverse_prob: None,
        }
    }

    /// `ln(P / P̃)`; `+∞` when the reverse trajectory is impossible.
    pub fn log_ratio(&self) -> Option<f64> {
        self.reverse_prob.map(|r| log_ratio(self.prob, r))
    }
}

pub(crate) fn log_ratio(p: f64, q: f64) -> f64 {
    if q <= 0.0 {
        f64::INFINITY
    } else {
        p.ln() - q.ln()
    }
}

/// Per-trajectory entropies in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyLedger {
    /// `σ^S_{nm} = ln p_n - ln p̃_m`.
    pub sigma_s: f64,
    /// `σ^E`, summed over steps and ancillas.
    pub sigma_e: f64,
    /// `σ^(r)` per ancilla when the backward environment factorizes.
    pub sigma_e_parts: Option<Vec<f64>>,
    /// `Ĩ_{mμ} = ln ϱ̃_{mμ} - ln p̃_m q̃_μ`.
    pub i_tilde: f64,
    /// `Δ_i s = σ^S + σ^E - Ĩ`.
    pub delta_s: f64,
    /// Summed potential change `Δφ` when the ladder condition holds.
    pub dphi: Option<f64>,
    /// `σ^E + Δφ`.
    pub delta_s_a: Option<f64>,
    /// `σ^S - Δφ`.
    pub delta_s_na: Option<f64>,
}

impl EntropyLedger {
    pub fn new(sigma_s: f64, sigma_e: f64, i_tilde: f64) -> Self {
        Self {
            sigma_s,
            sigma_e,
            sigma_e_parts: None,
            i_tilde,
            delta_s: sigma_s + sigma_e - i_tilde,
            dphi: None,
            delta_s_a: None,
            delta_s_na: None,
        }
    }

    /// Attaches the adiabatic/non-adiabatic split for a potential change.
    pub fn with_dphi(mut self, dphi: f64) -> Self {
        self.dphi = Some(dphi);
        self.delta_s_a = Some(self.sigma_e + dphi);
        self.delta_s_na = Some(self.sigma_s - dphi);
        self
    }

    pub fn split_available(&self) -> bool {
        self.dphi.is_some()
    }

    /// Absolute continuity broken: `P > 0` with `P̃ = 0`.
    pub fn is_infinite(&self) -> bool {
        self.delta_s.is_infinite()
    }

    pub fn value(&self, which: Which) -> Option<f64> {
        match which {
            Which::Total => Some(self.delta_s),
            Which::Adiabatic => self.delta_s_a,
            Which::NonAdiabatic => self.delta_s_na,
        }
    }
}

/// Which entropy production a fluctuation theorem refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Total,
    Adiabatic,
    NonAdiabatic,
}

impl Which {
    pub const ALL: [Which; 3] = [Which::Total, Which::Adiabatic, Which::NonAdiabatic];

    pub fn name(self) -> &'static str {
        match self {
            Which::Total => "total",
            Which::Adiabatic => "adiabatic",
            Which::NonAdiabatic => "nonadiabatic",
        }
    }
}
