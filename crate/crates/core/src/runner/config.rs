use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::analysis::IssConfig;
use crate::observer::GainSet;
use crate::so3::{AngleAxis, RotationMatrix, Vec3};
use crate::world::{ConstantRate, FigureEight, NoiseSpec, SamplingMode, SamplingSchedule, Trajectory, WorldConstants};

/// Observer variants a scenario can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverKind {
    /// Continuous observer fed a measurement at every IMU sample.
    Continuous,
    /// Continuous observer holding the last intermittent measurement.
    ContinuousZoh,
    /// Reduced continuous observer fed a measurement at every IMU sample.
    Reduced,
    Hybrid,
}

impl ObserverKind {
    pub const ALL: [ObserverKind; 4] = [Self::Continuous, Self::ContinuousZoh, Self::Reduced, Self::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::ContinuousZoh => "continuous_zoh",
            Self::Reduced => "reduced",
            Self::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self, RunnerError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RunnerError::Config(format!("observers: unknown observer {s:?}")))
    }

    /// Parses a comma-separated list such as `hybrid,continuous_zoh`.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, RunnerError> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(Self::parse).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum TrajectoryConfig {
    /// `v(t) = [−sin t, −4 sin t cos t, 0]` m/s, `ω(t) = [sin(0.1πt), 0.1, cos(0.1πt)]` rad/s.
    #[default]
    FigureEight,
    /// Constant body rate (rad/s) and velocity `v0 + v1 t + v2 t²` (m/s).
    ConstantRate {
        rate: [f64; 3],
        #[serde(default)]
        v0: [f64; 3],
        #[serde(default)]
        v1: [f64; 3],
        #[serde(default)]
        v2: [f64; 3],
    },
}

impl TrajectoryConfig {
    pub fn build(&self) -> Box<dyn Trajectory> {
        match self {
            Self::FigureEight => Box::new(FigureEight::default()),
            Self::ConstantRate { rate, v0, v1, v2 } => Box::new(ConstantRate {
                rate: Vec3::from(*rate),
                v0: Vec3::from(*v0),
                v1: Vec3::from(*v1),
                v2: Vec3::from(*v2),
                initial: RotationMatrix::identity(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    /// Inertial gravity (m/s²).
    pub gravity: [f64; 3],
    /// Inertial reference directions (unitless).
    pub inertial_vectors: Vec<[f64; 3]>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self { gravity: [0.0, 0.0, -9.81], inertial_vectors: vec![[0.36, 0.64, 0.0]] }
    }
}

impl WorldConfig {
    pub fn constants(&self) -> WorldConstants {
        WorldConstants {
            gravity: Vec3::from(self.gravity),
            inertial_vectors: self.inertial_vectors.iter().map(|r| Vec3::from(*r)).collect(),
        }
    }
}

/// Sensor noise variances; the draws are seeded by the scenario seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// (rad/s)².
    pub gyro_var: f64,
    /// Applied to every body-frame vector measurement.
    pub mag_var: f64,
    /// (m/s²)².
    pub accel_var: f64,
    /// (m/s)².
    pub dvl_var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Shortest gap between measurement arrivals (s).
    pub t_min: f64,
    /// Longest gap between measurement arrivals (s).
    pub t_max: f64,
    pub mode: SamplingMode,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { t_min: 0.09, t_max: 0.11, mode: SamplingMode::Jittered }
    }
}

/// Initial attitude estimate `R_a(angle, axis)`; the other estimates start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// Rotation angle (degrees).
    pub angle_deg: f64,
    /// Rotation axis, normalised on load.
    pub axis: [f64; 3],
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { angle_deg: 178.2, axis: [1.0, 1.0, 1.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Attitude error below which an observer counts as settled.
    pub threshold: f64,
    /// Final fraction of the run treated as steady state.
    pub tail_fraction: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { threshold: 1e-3, tail_fraction: 0.25 }
    }
}

/// Input amplitudes and integration settings for `iss-study`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IssSection {
    pub amplitudes: Vec<f64>,
    pub k_o: f64,
    /// Simulated time per run (s).
    pub horizon: f64,
    pub seeds: usize,
    /// Integration step (s).
    pub dt: f64,
    pub tail_fraction: f64,
    /// Minimum `|·|_I` distance of initial attitudes from undesired equilibria.
    pub exclusion: f64,
    /// Weights `ρ_1..ρ_N, ρ_{N+1}` defining `Q`.
    pub rho: Vec<f64>,
}

impl Default for IssSection {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.0, 0.01, 0.1, 1.0],
            k_o: 15.0,
            horizon: 10.0,
            seeds: 8,
            dt: 1e-3,
            tail_fraction: 0.25,
            exclusion: 1e-3,
            rho: default_rho(),
        }
    }
}

/// Weights that give `Q̄` the eigenvalues `{1, 2, 3}` in the default world.
fn default_rho() -> Vec<f64> {
    let w = WorldConfig::default().constants();
    vec![1.0 / w.inertial_vectors[0].norm_squared(), 2.0 / w.gravity.norm_squared()]
}

/// Everything one run needs. Missing sections fall back to the reference
/// figure-eight scenario without noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Simulated time (s).
    pub duration: f64,
    /// IMU sample rate (Hz).
    pub imu_rate: f64,
    /// Seeds the sensor noise and the arrival schedule.
    pub seed: u64,
    pub observers: Vec<ObserverKind>,
    pub trajectory: TrajectoryConfig,
    pub world: WorldConfig,
    pub noise: NoiseConfig,
    pub schedule: ScheduleConfig,
    pub initial: InitialConfig,
    pub report: ReportConfig,
    /// Gains keyed by observer name.
    pub gains: BTreeMap<ObserverKind, GainSet>,
    pub iss: IssSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let rho = default_rho();
        let continuous = GainSet { k_o: 15.0, k_v: 2.5, k_g: 8.0, k_r: 0.0, rho: rho.clone() };
        let hybrid = GainSet { k_o: 15.0, k_v: 0.7, k_g: 4.0, k_r: 0.1, rho };
        let gains = BTreeMap::from([
            (ObserverKind::Continuous, continuous.clone()),
            (ObserverKind::ContinuousZoh, continuous.clone()),
            (ObserverKind::Reduced, continuous),
            (ObserverKind::Hybrid, hybrid),
        ]);
        Self {
            name: "noise_free".into(),
            duration: 60.0,
            imu_rate: 400.0,
            seed: 1,
            observers: vec![ObserverKind::ContinuousZoh, ObserverKind::Hybrid],
            trajectory: TrajectoryConfig::default(),
            world: WorldConfig::default(),
            noise: NoiseConfig::default(),
            schedule: ScheduleConfig::default(),
            initial: InitialConfig::default(),
            report: ReportConfig::default(),
            gains,
            iss: IssSection::default(),
        }
    }
}

fn positive(field: &str, value: f64) -> Result<(), RunnerError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RunnerError::Config(format!("{field} must be positive and finite, got {value}")))
    }
}

fn finite3(field: &str, v: &[f64; 3]) -> Result<(), RunnerError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RunnerError::Config(format!("{field} must be finite, got {v:?}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, RunnerError> {
        toml::to_string(self).map_err(|e| RunnerError::Runtime(format!("cannot serialise config: {e}")))
    }

    /// Fields shared by every verb: world, schedule and gain layout.
    pub fn validate_common(&self) -> Result<(), RunnerError> {
        finite3("world.gravity", &self.world.gravity)?;
        if Vec3::from(self.world.gravity).norm() == 0.0 {
            return Err(RunnerError::Config("world.gravity must be nonzero".into()));
        }
        if self.world.inertial_vectors.is_empty() {
            return Err(RunnerError::Config("world.inertial_vectors needs at least one vector".into()));
        }
        for (i, r) in self.world.inertial_vectors.iter().enumerate() {
            finite3(&format!("world.inertial_vectors[{i}]"), r)?;
        }
        positive("schedule.t_min", self.schedule.t_min)?;
        positive("schedule.t_max", self.schedule.t_max)?;
        if self.schedule.t_min > self.schedule.t_max {
            return Err(RunnerError::Config(format!(
                "schedule.t_min ({}) must not exceed schedule.t_max ({})",
                self.schedule.t_min, self.schedule.t_max
            )));
        }
        let n = self.world.inertial_vectors.len();
        for (kind, g) in &self.gains {
            let field = format!("gains.{}", kind.name());
            let uses_k_g = *kind != ObserverKind::Reduced;
            let uses_k_r = *kind == ObserverKind::Hybrid;
            g.validate(n, uses_k_g, uses_k_r).map_err(|e| RunnerError::Config(format!("{field}: {e}")))?;
            positive(&format!("{field}.k_o"), g.k_o)?;
        }
        Ok(())
    }

    /// Checks everything `simulate` reads.
    pub fn validate(&self) -> Result<(), RunnerError> {
        self.validate_common()?;
        positive("duration", self.duration)?;
        positive("imu_rate", self.imu_rate)?;
        if self.observers.is_empty() {
            return Err(RunnerError::Config("observers must name at least one observer".into()));
        }
        for kind in &self.observers {
            if !self.gains.contains_key(kind) {
                return Err(RunnerError::Config(format!(
                    "observers: {} is selected but gains.{} is missing",
                    kind.name(),
                    kind.name()
                )));
            }
        }
        if let TrajectoryConfig::ConstantRate { rate, v0, v1, v2 } = &self.trajectory {
            for (f, v) in [("rate", rate), ("v0", v0), ("v1", v1), ("v2", v2)] {
                finite3(&format!("trajectory.{f}"), v)?;
            }
        }
        self.noise_spec().validate().map_err(|e| RunnerError::Config(format!("noise: {e}")))?;
        if !self.initial.angle_deg.is_finite() {
            return Err(RunnerError::Config("initial.angle_deg must be finite".into()));
        }
        finite3("initial.axis", &self.initial.axis)?;
        if Vec3::from(self.initial.axis).norm() == 0.0 {
            return Err(RunnerError::Config("initial.axis must be nonzero".into()));
        }
        positive("report.threshold", self.report.threshold)?;
        if !(self.report.tail_fraction > 0.0 && self.report.tail_fraction < 1.0) {
            return Err(RunnerError::Config(format!(
                "report.tail_fraction must lie in (0, 1), got {}",
                self.report.tail_fraction
            )));
        }
        Ok(())
    }

    /// Checks everything `iss-study` reads.
    pub fn validate_iss(&self) -> Result<(), RunnerError> {
        let iss = &self.iss;
        let sorted = iss.amplitudes.windows(2).all(|w| w[0] <= w[1]);
        if iss.amplitudes.is_empty() || iss.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) || !sorted {
            return Err(RunnerError::Config(format!(
                "iss.amplitudes must be non-empty, non-negative, finite and ascending, got {:?}",
                iss.amplitudes
            )));
        }
        positive("iss.k_o", iss.k_o)?;
        positive("iss.horizon", iss.horizon)?;
        positive("iss.dt", iss.dt)?;
        if iss.seeds == 0 {
            return Err(RunnerError::Config("iss.seeds must be at least 1".into()));
        }
        if !(iss.tail_fraction > 0.0 && iss.tail_fraction < 1.0) {
            return Err(RunnerError::Config(format!(
                "iss.tail_fraction must lie in (0, 1), got {}",
                iss.tail_fraction
            )));
        }
        if !(iss.exclusion >= 0.0) {
            return Err(RunnerError::Config(format!("iss.exclusion must be non-negative, got {}", iss.exclusion)));
        }
        let n = self.world.inertial_vectors.len();
        if iss.rho.len() != n + 1 || iss.rho.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(RunnerError::Config(format!(
                "iss.rho needs {} non-negative weights (one per inertial vector plus gravity), got {:?}",
                n + 1,
                iss.rho
            )));
        }
        finite3("world.gravity", &self.world.gravity)?;
        Ok(())
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            gyro_var: self.noise.gyro_var,
            mag_var: self.noise.mag_var,
            accel_var: self.noise.accel_var,
            dvl_var: self.noise.dvl_var,
            seed: self.seed,
        }
    }

    pub fn sampling_schedule(&self) -> SamplingSchedule {
        SamplingSchedule {
            t_min: self.schedule.t_min,
            t_max: self.schedule.t_max,
            mode: self.schedule.mode,
            seed: self.seed,
        }
    }

    pub fn initial_attitude(&self) -> RotationMatrix {
        let axis = Vec3::from(self.initial.axis).normalize();
        AngleAxis { theta: self.initial.angle_deg.to_radians(), axis }.to_rotation()
    }

    pub fn iss_config(&self) -> IssConfig {
        IssConfig {
            amplitudes: self.iss.amplitudes.clone(),
            k_o: self.iss.k_o,
            horizon: self.iss.horizon,
            seeds: self.iss.seeds,
            seed: self.seed,
            dt: self.iss.dt,
            tail_fraction: self.iss.tail_fraction,
            exclusion: self.iss.exclusion,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_scenario() {
        let c = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        c.validate().unwrap();
        c.validate_iss().unwrap();
    }

    #[test]
    fn roundtrip() {
        let c = ScenarioConfig::default();
        let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn inverted_interval_names_field() {
        let c = ScenarioConfig::from_toml("[schedule]\nt_min = 0.2\nt_max = 0.1\n").unwrap();
        let err = c.validate().unwrap_err();
        assert!(matches!(&err, RunnerError::Config(m) if m.contains("schedule.t_min")), "{err}");
    }

    #[test]
    fn missing_gains_rejected() {
        let c = ScenarioConfig::from_toml("observers = [\"hybrid\"]\n[gains]\n").unwrap();
        let err = c.validate().unwrap_err();
        assert!(matches!(&err, RunnerError::Config(m) if m.contains("gains.hybrid")), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(matches!(ScenarioConfig::from_toml("durration = 3.0"), Err(RunnerError::Config(_))));
    }

    #[test]
    fn negative_amplitude_rejected() {
        let c = ScenarioConfig::from_toml("[iss]\namplitudes = [-0.1, 1.0]\n").unwrap();
        assert!(matches!(c.validate_iss(), Err(RunnerError::Config(m)) if m.contains("iss.amplitudes")));
    }

    #[test]
    fn default_weights_spread_q_bar() {
        let c = ScenarioConfig::default();
        let q = crate::gains::QMatrices::from_gains(&c.gains[&ObserverKind::Hybrid], &c.world.constants()).unwrap();
        for (got, want) in q.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn observer_list() {
        assert_eq!(
            ObserverKind::parse_list("hybrid, continuous_zoh").unwrap(),
            vec![ObserverKind::Hybrid, ObserverKind::ContinuousZoh]
        );
        assert!(ObserverKind::parse_list("kalman").is_err());
    }
}
