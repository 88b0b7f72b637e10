use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const SCENARIOS: [(&str, &str); 10] = [
    ("table1", "spectrum, matrix elements and static ZZ against the device table"),
    ("chevron", "Rabi chevrons of B for both control states under the darkened CR drive"),
    ("darkening", "port ratio that cancels the OFF-state drive, and the single-qubit ratio"),
    ("error-vs-time", "calibrated CX error versus gate time, with and without decoherence"),
    ("rb", "two-qubit randomized benchmarking under a configurable noise model"),
    ("irb", "interleaved benchmarking of a noisy CX against a reference run"),
    ("qpt", "process tomography of a noisy CX"),
    ("predistort", "reflection characterization and predistortion round trip"),
    ("allxy", "AllXY traces with and without predistortion"),
    ("population", "residual control population estimate and joint readout round trip"),
];

/// Scenarios that draw random numbers and therefore need a seed.
pub const STOCHASTIC: [&str; 4] = ["rb", "irb", "qpt", "population"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub coherence: CoherenceSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub rb: RbSection,
    #[serde(default)]
    pub qpt: QptSection,
    #[serde(default)]
    pub reflection: ReflectionSection,
    #[serde(default)]
    pub allxy: AllxySection,
    #[serde(default)]
    pub population: PopulationSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSection {
    pub e_c: f64,
    pub e_l: f64,
    pub e_j: f64,
    /// External flux in flux quanta.
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub qubit_a: QubitSection,
    pub qubit_b: QubitSection,
    pub j_c: f64,
    pub levels_per_qubit: usize,
    pub basis_size: usize,
    /// Replaces the computed static ZZ in the dynamics (MHz).
    pub zz_override_mhz: Option<f64>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            qubit_a: QubitSection { e_c: 1.18, e_l: 0.78, e_j: 4.03, flux: 0.5005 },
            qubit_b: QubitSection { e_c: 1.13, e_l: 1.42, e_j: 4.34, flux: 0.4993 },
            j_c: 0.28,
            levels_per_qubit: 5,
            basis_size: 120,
            zz_override_mhz: None,
        }
    }
}

/// Coherence times in µs; an absent entry means no such channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSection {
    pub t1_a: Option<f64>,
    pub t1_b: Option<f64>,
    pub t2e_a: Option<f64>,
    pub t2e_b: Option<f64>,
    pub level2_t1: Option<f64>,
    pub level2_t2: Option<f64>,
}

impl Default for CoherenceSection {
    fn default() -> Self {
        Self {
            t1_a: Some(56.0),
            t1_b: Some(25.0),
            t2e_a: Some(23.0),
            t2e_b: Some(14.75),
            level2_t1: None,
            level2_t2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    pub gate_time: f64,
    pub ramp: f64,
    pub dt: f64,
    /// Local drive strength |ε_A| for the darkening and chevron scenarios (GHz).
    pub strength: f64,
    pub step_factor: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        Self { gate_time: 70.0, ramp: 6.0, dt: 1.0, strength: 0.09, step_factor: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub gate_times: Vec<f64>,
    /// Chevron detuning half-span (GHz) and point count.
    pub detuning_span: f64,
    pub detuning_points: usize,
    /// Chevron time axis (ns).
    pub time_stop: f64,
    pub time_points: usize,
    /// Also evaluate each gate with |2⟩ decoherence at these times (µs).
    pub level2_t1: Option<f64>,
    pub level2_t2: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gate_times: vec![50.0, 60.0, 70.0, 80.0, 100.0],
            detuning_span: 0.02,
            detuning_points: 21,
            time_stop: 200.0,
            time_points: 101,
            level2_t1: Some(1.0),
            level2_t2: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbSection {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    /// "ideal", "depolarizing" or "gate-level".
    pub noise: String,
    /// Injected EPC for depolarizing noise; reference EPC for IRB.
    pub epc: f64,
    /// Average single-qubit gate fidelities for gate-level noise.
    pub fidelity_a: f64,
    pub fidelity_b: f64,
    /// Average fidelity of the depolarized CX for gate-level noise and IRB.
    pub cx_fidelity: f64,
    /// "exact" or "readout".
    pub estimator: String,
    pub readout_noise: f64,
    pub readout_shots: usize,
}

impl Default for RbSection {
    fn default() -> Self {
        Self {
            lengths: vec![1, 2, 4, 7, 10, 15, 20, 30, 40, 55, 70, 100],
            n_sequences: 40,
            noise: "depolarizing".into(),
            epc: 0.0215,
            fidelity_a: 0.99835,
            fidelity_b: 0.99734,
            cx_fidelity: 0.9949,
            estimator: "exact".into(),
            readout_noise: 0.0,
            readout_shots: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QptSection {
    /// Depolarizing parameter λ applied after the ideal CX.
    pub lambda: f64,
    /// "populations" or "voltage".
    pub readout: String,
    pub readout_noise: f64,
    pub readout_shots: usize,
    pub psd_projection: bool,
}

impl Default for QptSection {
    fn default() -> Self {
        Self { lambda: 0.0, readout: "populations".into(), readout_noise: 0.0, readout_shots: 5000, psd_projection: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoSection {
    /// Delay (ns).
    pub delay: f64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectionSection {
    /// Channel that is predistorted against.
    pub echoes: Vec<EchoSection>,
    /// Channel treated as unknown by the characterization.
    pub hidden: Vec<EchoSection>,
    pub pi_len: f64,
    /// Rounded-square test waveform.
    pub flat: f64,
    pub ramp: f64,
}

impl Default for ReflectionSection {
    fn default() -> Self {
        Self {
            echoes: vec![EchoSection { delay: 20.0, re: 0.35, im: 0.0 }],
            hidden: vec![EchoSection { delay: 15.0, re: 0.2, im: 0.0 }],
            pi_len: 8.0,
            flat: 58.0,
            ramp: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllxySection {
    pub pulse_len: f64,
    pub sigma: f64,
    pub amplitude_error: f64,
    /// Drive detuning (GHz).
    pub detuning: f64,
}

impl Default for AllxySection {
    fn default() -> Self {
        Self { pulse_len: 16.0, sigma: 4.0, amplitude_error: 0.0, detuning: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSection {
    /// Injected residual excited population of A.
    pub e: f64,
    /// Injected residual excited population of B.
    pub eps: f64,
    /// Average fidelity of the CX used in the experiments.
    pub cx_fidelity: f64,
    pub n_phases: usize,
    pub readout_noise: f64,
    pub readout_shots: usize,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self { e: 0.01, eps: 0.02, cx_fidelity: 1.0, n_phases: 16, readout_noise: 0.0, readout_shots: 5000 }
    }
}

/// Every problem found in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} config error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Copy)]
enum Kind {
    Int,
    Float,
    Str,
    Bool,
    Table,
    IntArray,
    FloatArray,
    TableArray,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Int => "integer",
            Kind::Float => "number",
            Kind::Str => "string",
            Kind::Bool => "boolean",
            Kind::Table => "table",
            Kind::IntArray => "array of integers",
            Kind::FloatArray => "array of numbers",
            Kind::TableArray => "array of tables",
        }
    }

    fn accepts(self, v: &Value) -> bool {
        let num = |v: &Value| matches!(v, Value::Integer(_) | Value::Float(_));
        match self {
            Kind::Int => matches!(v, Value::Integer(i) if *i >= 0),
            Kind::Float => num(v),
            Kind::Str => v.is_str(),
            Kind::Bool => v.is_bool(),
            Kind::Table => v.is_table(),
            Kind::IntArray => v.as_array().is_some_and(|a| a.iter().all(|x| matches!(x, Value::Integer(i) if *i >= 0))),
            Kind::FloatArray => v.as_array().is_some_and(|a| a.iter().all(num)),
            Kind::TableArray => v.as_array().is_some_and(|a| a.iter().all(Value::is_table)),
        }
    }
}

const QUBIT_KEYS: [(&str, Kind); 4] = [("e_c", Kind::Float), ("e_l", Kind::Float), ("e_j", Kind::Float), ("flux", Kind::Float)];
const ECHO_KEYS: [(&str, Kind); 3] = [("delay", Kind::Float), ("re", Kind::Float), ("im", Kind::Float)];

fn section_keys(name: &str) -> Option<&'static [(&'static str, Kind)]> {
    use Kind::*;
    Some(match name {
        "system" => &[
            ("qubit_a", Table),
            ("qubit_b", Table),
            ("j_c", Float),
            ("levels_per_qubit", Int),
            ("basis_size", Int),
            ("zz_override_mhz", Float),
        ],
        "coherence" => &[
            ("t1_a", Float),
            ("t1_b", Float),
            ("t2e_a", Float),
            ("t2e_b", Float),
            ("level2_t1", Float),
            ("level2_t2", Float),
        ],
        "drive" => &[("gate_time", Float), ("ramp", Float), ("dt", Float), ("strength", Float), ("step_factor", Float)],
        "sweep" => &[
            ("gate_times", FloatArray),
            ("detuning_span", Float),
            ("detuning_points", Int),
            ("time_stop", Float),
            ("time_points", Int),
            ("level2_t1", Float),
            ("level2_t2", Float),
        ],
        "rb" => &[
            ("lengths", IntArray),
            ("n_sequences", Int),
            ("noise", Str),
            ("epc", Float),
            ("fidelity_a", Float),
            ("fidelity_b", Float),
            ("cx_fidelity", Float),
            ("estimator", Str),
            ("readout_noise", Float),
            ("readout_shots", Int),
        ],
        "qpt" => &[
            ("lambda", Float),
            ("readout", Str),
            ("readout_noise", Float),
            ("readout_shots", Int),
            ("psd_projection", Bool),
        ],
        "reflection" => &[("echoes", TableArray), ("hidden", TableArray), ("pi_len", Float), ("flat", Float), ("ramp", Float)],
        "allxy" => &[("pulse_len", Float), ("sigma", Float), ("amplitude_error", Float), ("detuning", Float)],
        "population" => &[
            ("e", Float),
            ("eps", Float),
            ("cx_fidelity", Float),
            ("n_phases", Int),
            ("readout_noise", Float),
            ("readout_shots", Int),
        ],
        _ => return None,
    })
}

fn check_table(path: &str, t: &toml::Table, keys: &[(&str, Kind)], required: &[&str], errs: &mut Vec<String>) {
    for (k, v) in t {
        match keys.iter().find(|(name, _)| name == k) {
            None => errs.push(format!("{path}{k}: unknown key")),
            Some((_, kind)) if !kind.accepts(v) => {
                errs.push(format!("{path}{k}: expected {}, found {}", kind.name(), v.type_str()))
            }
            _ => {}
        }
    }
    for r in required {
        if !t.contains_key(*r) {
            errs.push(format!("{path}{r}: missing required key"));
        }
    }
}

/// Unknown, missing and ill-typed keys.
fn structural_errors(doc: &toml::Table) -> Vec<String> {
    use Kind::*;
    let mut errs = Vec::new();
    let top: Vec<(&str, Kind)> = [
        ("schema_version", Int),
        ("scenario", Str),
        ("seed", Int),
        ("output_dir", Str),
    ]
    .into_iter()
    .chain(
        ["system", "coherence", "drive", "sweep", "rb", "qpt", "reflection", "allxy", "population"]
            .into_iter()
            .map(|s| (s, Table)),
    )
    .collect();
    check_table("", doc, &top, &["schema_version", "scenario"], &mut errs);
    for (name, v) in doc {
        let (Some(keys), Some(t)) = (section_keys(name), v.as_table()) else { continue };
        let path = format!("{name}.");
        check_table(&path, t, keys, &[], &mut errs);
        if name == "system" {
            for q in ["qubit_a", "qubit_b"] {
                if let Some(qt) = t.get(q).and_then(Value::as_table) {
                    check_table(&format!("system.{q}."), qt, &QUBIT_KEYS, &["e_c", "e_l", "e_j", "flux"], &mut errs);
                }
            }
        }
        if name == "reflection" {
            for list in ["echoes", "hidden"] {
                if let Some(arr) = t.get(list).and_then(Value::as_array) {
                    for (i, e) in arr.iter().enumerate() {
                        if let Some(et) = e.as_table() {
                            check_table(&format!("reflection.{list}[{i}]."), et, &ECHO_KEYS, &["delay", "re"], &mut errs);
                        }
                    }
                }
            }
        }
    }
    errs
}

/// Constraint violations of a structurally valid config.
fn semantic_errors(c: &ScenarioConfig) -> Vec<String> {
    let mut errs = Vec::new();
    let mut need = |ok: bool, msg: String| {
        if !ok {
            errs.push(msg);
        }
    };
    need(
        c.schema_version == CONFIG_SCHEMA_VERSION,
        format!("schema_version: {} unsupported (expected {CONFIG_SCHEMA_VERSION})", c.schema_version),
    );
    need(
        SCENARIOS.iter().any(|(n, _)| *n == c.scenario),
        format!("scenario: unknown scenario {:?} (see list-scenarios)", c.scenario),
    );
    need(
        !STOCHASTIC.contains(&c.scenario.as_str()) || c.seed.is_some(),
        format!("seed: required for stochastic scenario {:?}", c.scenario),
    );
    for (q, p) in [("qubit_a", &c.system.qubit_a), ("qubit_b", &c.system.qubit_b)] {
        need(p.e_c > 0.0, format!("system.{q}.e_c: must be > 0, got {}", p.e_c));
        need(p.e_l > 0.0, format!("system.{q}.e_l: must be > 0, got {}", p.e_l));
        need(p.e_j >= 0.0, format!("system.{q}.e_j: must be >= 0, got {}", p.e_j));
        need(p.flux.is_finite(), format!("system.{q}.flux: must be finite"));
    }
    let s = &c.system;
    need(s.j_c >= 0.0, format!("system.j_c: must be >= 0, got {}", s.j_c));
    need(s.levels_per_qubit >= 3, "system.levels_per_qubit: must be >= 3".into());
    need(s.basis_size >= s.levels_per_qubit, "system.basis_size: must be >= levels_per_qubit".into());
    let co = &c.coherence;
    for (k, v) in [
        ("t1_a", co.t1_a),
        ("t1_b", co.t1_b),
        ("t2e_a", co.t2e_a),
        ("t2e_b", co.t2e_b),
        ("level2_t1", co.level2_t1),
        ("level2_t2", co.level2_t2),
    ] {
        if let Some(x) = v {
            need(x > 0.0, format!("coherence.{k}: must be > 0, got {x}"));
        }
    }
    let d = &c.drive;
    need(d.gate_time > 0.0, format!("drive.gate_time: must be > 0, got {}", d.gate_time));
    need(d.ramp >= 0.0, format!("drive.ramp: must be >= 0, got {}", d.ramp));
    need(d.dt > 0.0, format!("drive.dt: must be > 0, got {}", d.dt));
    need(d.strength > 0.0, format!("drive.strength: must be > 0, got {}", d.strength));
    need(
        d.step_factor > 0.0 && d.step_factor <= fluxcr::dynamics::STEP_RULE,
        format!("drive.step_factor: must lie in (0, {}], got {}", fluxcr::dynamics::STEP_RULE, d.step_factor),
    );
    let sw = &c.sweep;
    need(!sw.gate_times.is_empty(), "sweep.gate_times: must not be empty".into());
    need(
        sw.gate_times.iter().all(|&t| t >= 2.0 * d.ramp && t > 0.0),
        "sweep.gate_times: every gate time must cover two ramps".into(),
    );
    need(sw.detuning_points >= 1, "sweep.detuning_points: must be >= 1".into());
    need(sw.time_points >= 2 && sw.time_stop > 0.0, "sweep.time_points/time_stop: need >= 2 points and time_stop > 0".into());
    let rb = &c.rb;
    need(!rb.lengths.is_empty() && rb.lengths.len() >= 3, "rb.lengths: need at least 3 lengths".into());
    need(
        rb.lengths.windows(2).all(|w| w[0] < w[1]) && rb.lengths.first().is_some_and(|&m| m >= 1),
        "rb.lengths: must be positive and strictly ascending".into(),
    );
    need(rb.n_sequences >= 1, "rb.n_sequences: must be >= 1".into());
    need(
        ["ideal", "depolarizing", "gate-level"].contains(&rb.noise.as_str()),
        format!("rb.noise: expected ideal, depolarizing or gate-level, got {:?}", rb.noise),
    );
    need(["exact", "readout"].contains(&rb.estimator.as_str()), format!("rb.estimator: expected exact or readout, got {:?}", rb.estimator));
    need((0.0..0.75).contains(&rb.epc), format!("rb.epc: must lie in [0, 0.75), got {}", rb.epc));
    for (k, f) in [("fidelity_a", rb.fidelity_a), ("fidelity_b", rb.fidelity_b), ("cx_fidelity", rb.cx_fidelity)] {
        need((0.25..=1.0).contains(&f), format!("rb.{k}: must lie in [0.25, 1], got {f}"));
    }
    need(rb.readout_noise >= 0.0 && rb.readout_shots >= 1, "rb.readout_noise/readout_shots: noise >= 0 and shots >= 1".into());
    let q = &c.qpt;
    need((0.0..=1.0).contains(&q.lambda), format!("qpt.lambda: must lie in [0, 1], got {}", q.lambda));
    need(
        ["populations", "voltage"].contains(&q.readout.as_str()),
        format!("qpt.readout: expected populations or voltage, got {:?}", q.readout),
    );
    need(q.readout_noise >= 0.0 && q.readout_shots >= 1, "qpt.readout_noise/readout_shots: noise >= 0 and shots >= 1".into());
    let r = &c.reflection;
    for (list, echoes) in [("echoes", &r.echoes), ("hidden", &r.hidden)] {
        for (i, e) in echoes.iter().enumerate() {
            need(e.delay > 0.0, format!("reflection.{list}[{i}].delay: must be > 0"));
        }
        let total: f64 = echoes.iter().map(|e| e.re.hypot(e.im)).sum();
        need(total < 1.0, format!("reflection.{list}: echo magnitudes must sum to < 1, got {total}"));
    }
    need(r.pi_len >= 8.0, format!("reflection.pi_len: must be >= 8 ns, got {}", r.pi_len));
    need(r.flat >= 0.0 && r.ramp >= 0.0, "reflection.flat/ramp: must be >= 0".into());
    let a = &c.allxy;
    need(a.pulse_len > 0.0 && a.sigma > 0.0, "allxy.pulse_len/sigma: must be > 0".into());
    let p = &c.population;
    need((0.0..0.5).contains(&p.e), format!("population.e: must lie in [0, 0.5), got {}", p.e));
    need((0.0..0.5).contains(&p.eps), format!("population.eps: must lie in [0, 0.5), got {}", p.eps));
    need((0.25..=1.0).contains(&p.cx_fidelity), format!("population.cx_fidelity: must lie in [0.25, 1], got {}", p.cx_fidelity));
    need(p.n_phases >= 3, "population.n_phases: must be >= 3".into());
    need(p.readout_noise >= 0.0 && p.readout_shots >= 1, "population.readout_noise/readout_shots: noise >= 0 and shots >= 1".into());
    errs
}

/// Parse and validate config text, reporting every issue found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![format!("syntax: {e}")]))?;
    let errs = structural_errors(&doc);
    if !errs.is_empty() {
        return Err(ConfigErrors(errs));
    }
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![e.to_string()]))?;
    let errs = semantic_errors(&cfg);
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errs))
    }
}

pub fn validate_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    Ok(parse_config(&text)?)
}

/// Minimal config for a scenario with every section at its defaults.
pub fn default_config_text(scenario: &str) -> String {
    let seed = if STOCHASTIC.contains(&scenario) { "seed = 20240101\n" } else { "" };
    format!("schema_version = {CONFIG_SCHEMA_VERSION}\nscenario = \"{scenario}\"\n{seed}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        for (s, _) in SCENARIOS {
            parse_config(&default_config_text(s)).unwrap();
        }
    }

    #[test]
    fn lists_every_issue() {
        let text = "schema_version = 1\nscenario = \"rb\"\ncolour = 3\n[drive]\ngate_time = \"long\"\nspeed = 1\n";
        let e = parse_config(text).unwrap_err().0;
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn missing_seed_is_named() {
        let e = parse_config("schema_version = 1\nscenario = \"rb\"\n").unwrap_err().0;
        assert!(e.iter().any(|m| m.starts_with("seed:")));
    }

    #[test]
    fn negative_charging_energy_is_named() {
        let text = "schema_version = 1\nscenario = \"table1\"\n[system.qubit_a]\ne_c = -1.0\ne_l = 0.78\ne_j = 4.03\nflux = 0.5\n";
        let e = parse_config(text).unwrap_err().0;
        assert!(e.iter().any(|m| m.contains("qubit_a.e_c") && m.contains("> 0")), "{e:?}");
    }
}
