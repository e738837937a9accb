//! Experiment configuration: versioned JSON schema, per-kind defaults, and
//! pure validation returning every violation at once.

use liouq_core::dynamics::{Integrator, NumericHamiltonian, Poly1, Poly2};
use liouq_core::evolution::Mode;
use liouq_core::grid::{Interpolation, PhaseGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VerifyAlgebra,
    Tables,
    Groenewold,
    Evolve,
    Decoupling,
    Superposition,
    CompareSchrodinger,
    ActionField,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::VerifyAlgebra => "verify-algebra",
            ExperimentKind::Tables => "tables",
            ExperimentKind::Groenewold => "groenewold",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Decoupling => "decoupling",
            ExperimentKind::Superposition => "superposition",
            ExperimentKind::CompareSchrodinger => "compare-schrodinger",
            ExperimentKind::ActionField => "action-field",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTerm {
    pub q: u32,
    pub p: u32,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveSpec {
    pub amplitude: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Separable {
        mass: f64,
        /// V(q) coefficients, constant term first.
        potential: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drive: Option<DriveSpec>,
    },
    Polynomial {
        terms: Vec<PolyTerm>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drive: Option<DriveSpec>,
    },
}

impl HamiltonianSpec {
    pub fn harmonic() -> Self {
        HamiltonianSpec::Separable {
            mass: 1.0,
            potential: vec![0.0, 0.0, 0.5],
            drive: None,
        }
    }

    pub fn free() -> Self {
        HamiltonianSpec::Separable {
            mass: 1.0,
            potential: vec![],
            drive: None,
        }
    }

    pub fn drive(&self) -> &Option<DriveSpec> {
        match self {
            HamiltonianSpec::Separable { drive, .. } => drive,
            HamiltonianSpec::Polynomial { drive, .. } => drive,
        }
    }

    pub fn build(&self) -> Result<NumericHamiltonian, String> {
        match self {
            HamiltonianSpec::Separable {
                mass, potential, ..
            } => NumericHamiltonian::separable(*mass, Poly1::new(potential.clone()))
                .map_err(|e| e.to_string()),
            HamiltonianSpec::Polynomial { terms, .. } => Ok(NumericHamiltonian::polynomial(
                Poly2::new(terms.iter().map(|t| (t.q, t.p, t.c)).collect()),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl GridSpec {
    fn square(half: f64, n: usize) -> Self {
        GridSpec {
            q_min: -half,
            q_max: half,
            p_min: -half,
            p_max: half,
            nq: n,
            np: n,
        }
    }

    pub fn build(&self) -> Result<PhaseGrid, String> {
        PhaseGrid::new(
            self.q_min, self.q_max, self.p_min, self.p_max, self.nq, self.np,
        )
        .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Kvn,
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationSpec {
    Linear,
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorSpec {
    Verlet,
    Rk4,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub mode: ModeSpec,
    pub hbar: f64,
    pub dt: f64,
    pub interpolation: InterpolationSpec,
    pub integrator: IntegratorSpec,
}

impl EvolutionSpec {
    pub fn build(&self) -> liouq_core::evolution::EvolutionConfig {
        liouq_core::evolution::EvolutionConfig {
            mode: match self.mode {
                ModeSpec::Kvn => Mode::Kvn,
                ModeSpec::Extended => Mode::Extended,
            },
            hbar: self.hbar,
            dt: self.dt,
            interpolation: match self.interpolation {
                InterpolationSpec::Linear => Interpolation::Linear,
                InterpolationSpec::Cubic => Interpolation::Cubic,
            },
            integrator: match self.integrator {
                IntegratorSpec::Verlet => Integrator::Verlet,
                IntegratorSpec::Rk4 => Integrator::Rk4,
            },
        }
    }
}

impl Default for EvolutionSpec {
    fn default() -> Self {
        EvolutionSpec {
            mode: ModeSpec::Extended,
            hbar: 1.0,
            dt: 1e-3,
            interpolation: InterpolationSpec::Cubic,
            integrator: IntegratorSpec::Verlet,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub q0: f64,
    pub p0: f64,
    pub sigma_q: f64,
    pub sigma_p: f64,
    /// Initial action polynomial S0(q, p).
    #[serde(default)]
    pub phase: Vec<PolyTerm>,
}

impl InitialSpec {
    pub fn phase_terms(&self) -> Vec<(u32, u32, f64)> {
        self.phase.iter().map(|t| (t.q, t.p, t.c)).collect()
    }
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            q0: 0.75,
            p0: 0.0,
            sigma_q: 1.0,
            sigma_p: 1.0,
            phase: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub dt: f64,
}

impl Default for SchrodingerSpec {
    fn default() -> Self {
        SchrodingerSpec {
            q_min: -10.0,
            q_max: 10.0,
            nq: 512,
            dt: 1e-3,
        }
    }
}

/// Per-check tolerances; every threshold lives here with its default.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSpec {
    /// Random pairs per degree of freedom for the identity suite.
    pub pairs: usize,
    pub norm_tol: f64,
    pub defect_tol: f64,
    pub marginal_tol: f64,
    pub control_min: f64,
    /// Minimum observed convergence order for residual studies.
    pub order_min: f64,
    /// Minimum residual shrink factor when grid and step are halved.
    pub ratio_min: f64,
}

impl Default for ChecksSpec {
    fn default() -> Self {
        ChecksSpec {
            pairs: 70,
            norm_tol: 1e-3,
            defect_tol: 1e-6,
            marginal_tol: 2e-3,
            control_min: 1e-2,
            order_min: 1.9,
            ratio_min: 3.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "HamiltonianSpec::harmonic")]
    pub hamiltonian: HamiltonianSpec,
    #[serde(default = "default_grid")]
    pub grid: GridSpec,
    #[serde(default)]
    pub evolution: EvolutionSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Second ensemble for superposition runs; defaults to the mirror image
    /// of `initial`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial2: Option<InitialSpec>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub schrodinger: SchrodingerSpec,
    /// Comparison times for the marginal experiment.
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Marginal comparison expects disagreement (mismatched widths).
    #[serde(default)]
    pub negative_control: bool,
    #[serde(default)]
    pub checks: ChecksSpec,
}

fn default_schema() -> u32 {
    1
}

fn default_grid() -> GridSpec {
    GridSpec::square(7.0, 129)
}

fn default_t_final() -> f64 {
    1.0
}

fn default_times() -> Vec<f64> {
    vec![
        0.0,
        std::f64::consts::FRAC_PI_4,
        std::f64::consts::FRAC_PI_2,
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

impl ExperimentConfig {
    /// Built-in configuration for a kind, used when no file is given.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let mut cfg = ExperimentConfig {
            kind: Some(kind),
            ..Default::default()
        };
        match kind {
            ExperimentKind::Decoupling | ExperimentKind::ActionField => {
                cfg.hamiltonian = HamiltonianSpec::free();
                cfg.grid = GridSpec::square(4.0, 129);
                cfg.t_final = 0.3;
                cfg.evolution.dt = 2e-3;
                cfg.initial = InitialSpec {
                    q0: 0.0,
                    p0: 0.0,
                    sigma_q: 0.8,
                    sigma_p: 0.8,
                    phase: vec![PolyTerm { q: 3, p: 0, c: 1.0 }],
                };
            }
            ExperimentKind::Superposition => {
                cfg.grid = GridSpec::square(6.0, 97);
                cfg.t_final = 0.2;
                cfg.evolution.dt = 5e-4;
                cfg.evolution.integrator = IntegratorSpec::Rk4;
                cfg.initial.q0 = 1.0;
                cfg.initial.sigma_q = std::f64::consts::FRAC_1_SQRT_2;
                cfg.initial.sigma_p = std::f64::consts::FRAC_1_SQRT_2;
            }
            ExperimentKind::CompareSchrodinger => {
                cfg.grid = GridSpec::square(8.0, 193);
                cfg.evolution.dt = 2e-3;
                cfg.initial = InitialSpec {
                    q0: 1.0,
                    p0: 0.0,
                    sigma_q: std::f64::consts::FRAC_1_SQRT_2,
                    sigma_p: 0.5 * std::f64::consts::SQRT_2,
                    phase: Vec::new(),
                };
                cfg.schrodinger.dt = 2e-3;
            }
            _ => {}
        }
        cfg
    }

    /// Pure validation: returns every violation (empty means valid).
    pub fn validate(&self, kind: ExperimentKind) -> Vec<String> {
        let mut violations = Vec::new();
        if self.schema != 1 {
            violations.push(format!("unsupported schema version {}", self.schema));
        }
        if let Some(declared) = self.kind {
            if declared != kind {
                violations.push(format!(
                    "config kind '{}' does not match requested experiment '{}'",
                    declared.as_str(),
                    kind.as_str()
                ));
            }
        }
        if let Some(drive) = self.hamiltonian.drive() {
            if drive.amplitude != 0.0 {
                violations.push(
                    "time-dependent Hamiltonian requested (drive); only autonomous H(q, p) is supported"
                        .into(),
                );
            }
        }
        if let HamiltonianSpec::Separable { mass, .. } = &self.hamiltonian {
            if !(*mass > 0.0) {
                violations.push(format!("mass must be positive, got {mass}"));
            }
        }
        if let Err(e) = self.grid.build() {
            violations.push(e);
        }
        if !(self.evolution.dt > 0.0) {
            violations.push(format!("dt must be positive, got {}", self.evolution.dt));
        }
        if !(self.evolution.hbar > 0.0) {
            violations.push(format!(
                "hbar must be positive, got {}",
                self.evolution.hbar
            ));
        }
        if !(self.initial.sigma_q > 0.0) {
            violations.push(format!(
                "sigma_q must be positive, got {}",
                self.initial.sigma_q
            ));
        }
        if !(self.initial.sigma_p > 0.0) {
            violations.push(format!(
                "sigma_p must be positive, got {}",
                self.initial.sigma_p
            ));
        }
        if !self.t_final.is_finite() {
            violations.push(format!("t_final must be finite, got {}", self.t_final));
        }
        if self.evolution.integrator == IntegratorSpec::Verlet
            && matches!(self.hamiltonian, HamiltonianSpec::Polynomial { .. })
        {
            violations.push(
                "verlet integration requires a separable Hamiltonian; choose integrator rk4".into(),
            );
        }
        if kind == ExperimentKind::CompareSchrodinger {
            if !(self.schrodinger.dt > 0.0) {
                violations.push(format!(
                    "schrodinger.dt must be positive, got {}",
                    self.schrodinger.dt
                ));
            }
            if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                violations.push("comparison times must be finite and nonnegative".into());
            }
        }
        if self.checks.pairs == 0 {
            violations.push("checks.pairs must be at least 1".into());
        }
        violations
    }
}
