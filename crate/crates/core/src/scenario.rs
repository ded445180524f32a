//! The batch scenario driver: builds a workload program, streams requests
//! through the runtime, closes measurement windows, steps the explorer and
//! hot-map policy, and produces the metrics/exploration CSVs plus a summary.
//!
//! Calls with identical arguments under an unchanged dispatch epoch are
//! served from a replay cache: execution is deterministic, so the cached
//! result is exactly what re-execution would produce, and all counters and
//! telemetry still advance per logical call. `replay_cache: false` disables
//! the cache; the outputs are byte-identical either way.

use crate::engine::{ArgValue, EngineError, ExecResult};
use crate::ir::{Program, Value};
use crate::runtime::{Runtime, RuntimeError, RuntimePolicy, TraceEvent};
use crate::specializer::{PointId, VariantOrigin};
use crate::telemetry::{MetricWindow, WindowAccumulator};
use crate::workloads::{
    build_batch_pipeline, build_lpm, build_mmul, gen_stream, mmul_inputs, synthetic_table,
    Distribution, PhaseSpec, Request, RequestStream, LPM_FN, MMUL_FN, PIPELINE_FN,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    /// A runtime trap (exit code 2 territory), as opposed to a config error.
    pub fn is_trap(&self) -> bool {
        matches!(
            self,
            ScenarioError::Runtime(RuntimeError::Engine(EngineError::Trap(_)))
        )
    }
}

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmulPhase {
    pub calls: u64,
    pub n: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmulStreamConfig {
    #[serde(default)]
    pub seed: u64,
    pub phases: Vec<MmulPhase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpmDist {
    Zipf { exponent: f64 },
    Uniform,
    /// Always the address at this index of the generated key set.
    Constant { key_index: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpmPhase {
    pub calls: u64,
    pub dist: LpmDist,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpmStreamConfig {
    #[serde(default)]
    pub seed: u64,
    pub phases: Vec<LpmPhase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelinePhase {
    pub calls: u64,
    #[serde(default)]
    pub payload: i64,
    /// Optional uniform choice overriding the constant payload.
    #[serde(default)]
    pub payload_choices: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineStreamConfig {
    #[serde(default)]
    pub seed: u64,
    pub phases: Vec<PipelinePhase>,
}

fn default_s() -> i64 {
    8
}

fn default_batches() -> [i64; 3] {
    [8, 8, 8]
}

fn default_rule_count() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadConfig {
    /// Blocked matrix multiply; the request stream chooses `n` per call and
    /// the driver chooses `s` (the driver-coupled block-size knob).
    Mmul {
        stream: MmulStreamConfig,
        #[serde(default = "default_s")]
        default_s: i64,
        #[serde(default)]
        input_seed: u64,
    },
    /// Longest-prefix-match over a generated rule table.
    Lpm {
        #[serde(default = "default_rule_count")]
        rule_count: usize,
        #[serde(default)]
        table_seed: u64,
        stream: LpmStreamConfig,
    },
    /// Batched echo pipeline; the driver always passes the configured
    /// default batch sizes (config knobs are pinned inside variants).
    BatchPipeline {
        #[serde(default = "default_batches")]
        defaults: [i64; 3],
        stream: PipelineStreamConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HotMapConfig {
    pub function: String,
    pub key_param: String,
    pub top_k: usize,
    /// Build and install the hot map after this many closed windows.
    pub install_after_windows: u64,
    /// Simulate a rule update after this many closed windows.
    #[serde(default)]
    pub bump_version_after_windows: Option<u64>,
}

fn default_true() -> bool {
    true
}

/// A full run description: workload plus runtime policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub workload: WorkloadConfig,
    #[serde(flatten)]
    pub policy: RuntimePolicy,
    #[serde(default)]
    pub hot_map: Option<HotMapConfig>,
    #[serde(default = "default_true")]
    pub replay_cache: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    /// Override every seed in the config (CLI `--seed`).
    pub fn override_seed(&mut self, seed: u64) {
        self.policy.seed = seed;
        match &mut self.workload {
            WorkloadConfig::Mmul { stream, .. } => stream.seed = seed,
            WorkloadConfig::Lpm { stream, .. } => stream.seed = seed,
            WorkloadConfig::BatchPipeline { stream, .. } => stream.seed = seed,
        }
    }
}

// ---------------------------------------------------------------------------
// Workload drivers
// ---------------------------------------------------------------------------

/// Per-workload request materialization: turns a stream request into an
/// argument vector and a compact replay-cache key.
trait Driver {
    fn function(&self) -> &'static str;
    /// Update the argument template for this request; returns the replay key
    /// parameters.
    fn materialize(&mut self, rt: &Runtime, req: &Request) -> Vec<i64>;
    fn args(&self) -> &[ArgValue];
    fn stream_spec(&self) -> RequestStream;
}

struct MmulDriver {
    input_seed: u64,
    default_s: i64,
    phases: Vec<MmulPhase>,
    stream_seed: u64,
    /// One prebuilt argument template per matrix dimension (the c template
    /// stays all-zero; physical calls copy it, replays just borrow).
    templates: BTreeMap<i64, Vec<ArgValue>>,
    current_n: i64,
    point: PointId,
}

impl MmulDriver {
    fn new(stream: &MmulStreamConfig, default_s: i64, input_seed: u64) -> MmulDriver {
        MmulDriver {
            input_seed,
            default_s,
            phases: stream.phases.clone(),
            stream_seed: stream.seed,
            templates: BTreeMap::new(),
            current_n: 0,
            point: PointId::new(MMUL_FN, "s"),
        }
    }
}

impl Driver for MmulDriver {
    fn function(&self) -> &'static str {
        MMUL_FN
    }

    fn materialize(&mut self, rt: &Runtime, req: &Request) -> Vec<i64> {
        let n = req.get("n").expect("mmul stream supplies n");
        // Driver-coupled knob: adopt the pinned block size when the explorer
        // chose one, otherwise run the stream default.
        let s = match rt.active_pin_value(&self.point) {
            Some(Value::Int(s)) if rt.point(&self.point).is_some_and(|p| p.driver_coupled) => s,
            _ => self.default_s,
        };
        let input_seed = self.input_seed;
        let template = self.templates.entry(n).or_insert_with(|| {
            let (a, b) = mmul_inputs(input_seed, n as usize);
            vec![
                ArgValue::ArrayI64(a),
                ArgValue::ArrayI64(b),
                ArgValue::ArrayI64(vec![0; (n * n) as usize]),
                ArgValue::Int(n),
                ArgValue::Int(s),
            ]
        });
        template[4] = ArgValue::Int(s);
        self.current_n = n;
        vec![n, s]
    }

    fn args(&self) -> &[ArgValue] {
        &self.templates[&self.current_n]
    }

    fn stream_spec(&self) -> RequestStream {
        RequestStream {
            seed: self.stream_seed,
            phases: self
                .phases
                .iter()
                .map(|p| PhaseSpec {
                    calls: p.calls,
                    params: vec![("n".into(), Distribution::Constant(p.n))],
                })
                .collect(),
        }
    }
}

struct LpmDriver {
    addresses: Vec<i64>,
    phases: Vec<LpmPhase>,
    stream_seed: u64,
    current: Vec<ArgValue>,
}

impl Driver for LpmDriver {
    fn function(&self) -> &'static str {
        LPM_FN
    }

    fn materialize(&mut self, _rt: &Runtime, req: &Request) -> Vec<i64> {
        let addr = req.get("addr").expect("lpm stream supplies addr");
        self.current = vec![ArgValue::Int(addr)];
        vec![addr]
    }

    fn args(&self) -> &[ArgValue] {
        &self.current
    }

    fn stream_spec(&self) -> RequestStream {
        RequestStream {
            seed: self.stream_seed,
            phases: self
                .phases
                .iter()
                .map(|p| {
                    let dist = match &p.dist {
                        LpmDist::Zipf { exponent } => Distribution::Zipf {
                            keys: self.addresses.clone(),
                            exponent: *exponent,
                        },
                        LpmDist::Uniform => Distribution::UniformChoice(self.addresses.clone()),
                        LpmDist::Constant { key_index } => {
                            Distribution::Constant(self.addresses[*key_index])
                        }
                    };
                    PhaseSpec {
                        calls: p.calls,
                        params: vec![("addr".into(), dist)],
                    }
                })
                .collect(),
        }
    }
}

struct PipelineDriver {
    defaults: [i64; 3],
    phases: Vec<PipelinePhase>,
    stream_seed: u64,
    current: Vec<ArgValue>,
}

impl Driver for PipelineDriver {
    fn function(&self) -> &'static str {
        PIPELINE_FN
    }

    fn materialize(&mut self, _rt: &Runtime, req: &Request) -> Vec<i64> {
        let x = req.get("x").expect("pipeline stream supplies x");
        let [b1, b2, b3] = self.defaults;
        self.current = vec![
            ArgValue::Int(x),
            ArgValue::Int(b1),
            ArgValue::Int(b2),
            ArgValue::Int(b3),
            ArgValue::ArrayI64(vec![0]),
        ];
        vec![x, b1, b2, b3]
    }

    fn args(&self) -> &[ArgValue] {
        &self.current
    }

    fn stream_spec(&self) -> RequestStream {
        RequestStream {
            seed: self.stream_seed,
            phases: self
                .phases
                .iter()
                .map(|p| {
                    let dist = match &p.payload_choices {
                        Some(choices) => Distribution::UniformChoice(choices.clone()),
                        None => Distribution::Constant(p.payload),
                    };
                    PhaseSpec {
                        calls: p.calls,
                        params: vec![("x".into(), dist)],
                    }
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// The run loop
// ---------------------------------------------------------------------------

/// Everything a run produces; the summary is derived from the rows alone.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Vec<MetricWindow>,
    pub trace: Vec<TraceEvent>,
    pub summary: String,
}

impl RunOutput {
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(MetricWindow::CSV_HEADER);
        out.push('\n');
        for w in &self.metrics {
            out.push_str(&w.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn exploration_csv(&self) -> String {
        let mut out = String::from(TraceEvent::CSV_HEADER);
        out.push('\n');
        for t in &self.trace {
            out.push_str(&t.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        std::fs::write(dir.join("exploration.csv"), self.exploration_csv())?;
        std::fs::write(dir.join("summary.txt"), &self.summary)?;
        Ok(())
    }
}

fn build_driver(cfg: &RunConfig) -> Result<(Program, Box<dyn Driver>), ScenarioError> {
    match &cfg.workload {
        WorkloadConfig::Mmul {
            stream,
            default_s,
            input_seed,
        } => {
            for phase in &stream.phases {
                if phase.n < 1 {
                    return Err(ScenarioError::Config("mmul phase n must be >= 1".into()));
                }
            }
            Ok((
                build_mmul(),
                Box::new(MmulDriver::new(stream, *default_s, *input_seed)),
            ))
        }
        WorkloadConfig::Lpm {
            rule_count,
            table_seed,
            stream,
        } => {
            let (rules, addresses) = synthetic_table(*rule_count, *table_seed);
            let program = build_lpm(&rules)
                .map_err(|e| ScenarioError::Config(format!("lpm table: {e}")))?;
            Ok((
                program,
                Box::new(LpmDriver {
                    addresses,
                    phases: stream.phases.clone(),
                    stream_seed: stream.seed,
                    current: Vec::new(),
                }),
            ))
        }
        WorkloadConfig::BatchPipeline { defaults, stream } => {
            if defaults.iter().any(|b| *b < 1) {
                return Err(ScenarioError::Config("batch defaults must be >= 1".into()));
            }
            Ok((
                build_batch_pipeline(),
                Box::new(PipelineDriver {
                    defaults: *defaults,
                    phases: stream.phases.clone(),
                    stream_seed: stream.seed,
                    current: Vec::new(),
                }),
            ))
        }
    }
}

/// The config id describing the active dispatch of `function`, matching the
/// explorer's labels.
fn active_config_id(rt: &Runtime, function: &str) -> String {
    match rt.active_variant(function).map(|v| &v.origin) {
        Some(VariantOrigin::Pinned(pins)) => pins
            .assignments
            .iter()
            .map(|(var, value)| format!("{function}.{var}={value}"))
            .collect::<Vec<_>>()
            .join("+"),
        Some(VariantOrigin::HotMap(spec)) => {
            format!("{function}.hotmap.v{}", spec.table_version)
        }
        _ => "generic".to_string(),
    }
}

/// Execute a run config end to end.
pub fn run_scenario(cfg: &RunConfig, wallclock: bool) -> Result<RunOutput, ScenarioError> {
    let (program, mut driver) = build_driver(cfg)?;
    let mut rt = Runtime::from_program(program, cfg.policy.clone())?;
    let function = driver.function();

    let mut trace: Vec<TraceEvent> = Vec::new();
    if let Some(policy_cfg) = &cfg.policy.policy {
        let policy = policy_cfg
            .to_policy()
            .map_err(ScenarioError::Config)?;
        let point_ids: Vec<PointId> = rt.points().map(|p| p.id.clone()).collect();
        trace.extend(rt.start_exploration(&point_ids, policy)?);
    }

    let calls_per_window = cfg.policy.calls_per_window.max(1);
    let budget_ops = cfg.policy.budget_ops;
    let mut acc = WindowAccumulator::default();
    let mut metrics: Vec<MetricWindow> = Vec::new();
    let mut window_id = 0u64;
    let mut cache: BTreeMap<(String, u64, Vec<i64>), ExecResult> = BTreeMap::new();
    let mut window_config = active_config_id(&rt, function);
    let mut window_start = Instant::now();

    let stream_spec = driver.stream_spec();
    for request in gen_stream(&stream_spec) {
        let params = driver.materialize(&rt, &request);
        let variant_id = rt
            .active_variant_id(function)
            .expect("workload function is registered");
        let key = (variant_id, rt.table_version(function), params);
        let result = match cache.get(&key) {
            Some(hit) if cfg.replay_cache => rt.replay(function, driver.args(), hit),
            _ => {
                let fresh = rt.call(function, driver.args())?;
                cache.insert(key, fresh.clone());
                fresh
            }
        };
        acc.record(result.ops, result.guard_failed);

        if acc.calls() >= calls_per_window {
            window_id += 1;
            let wall = wallclock.then(|| window_start.elapsed().as_secs_f64() * 1e3);
            let window = acc.close_window(window_id, &window_config, budget_ops, wall);
            trace.extend(rt.on_window_closed(&window)?);
            metrics.push(window);
            apply_hot_map_policy(cfg, &mut rt, function, window_id, &mut trace)?;
            window_config = active_config_id(&rt, function);
            window_start = Instant::now();
        }
    }
    if acc.calls() > 0 {
        window_id += 1;
        let wall = wallclock.then(|| window_start.elapsed().as_secs_f64() * 1e3);
        let window = acc.close_window(window_id, &window_config, budget_ops, wall);
        trace.extend(rt.on_window_closed(&window)?);
        metrics.push(window);
    }

    let summary = render_summary(&rt, function, &metrics, &trace, wallclock);
    Ok(RunOutput {
        metrics,
        trace,
        summary,
    })
}

fn apply_hot_map_policy(
    cfg: &RunConfig,
    rt: &mut Runtime,
    function: &str,
    window_id: u64,
    trace: &mut Vec<TraceEvent>,
) -> Result<(), ScenarioError> {
    let Some(hm) = &cfg.hot_map else {
        return Ok(());
    };
    if hm.function != function {
        return Err(ScenarioError::Config(format!(
            "hot_map.function `{}` does not match the workload function `{function}`",
            hm.function
        )));
    }
    if window_id == hm.install_after_windows {
        let spec = rt.refresh_hot_map(&hm.function, &hm.key_param, hm.top_k)?;
        trace.push(TraceEvent {
            event: "install",
            window_id,
            config_id: format!("{}.hotmap.v{}", hm.function, spec.table_version),
            action: format!("install hot map ({} keys)", spec.entries.len()),
            throughput: None,
        });
    }
    if Some(window_id) == hm.bump_version_after_windows {
        rt.bump_table_version(&hm.function);
    }
    Ok(())
}

/// Mean ops per call of all windows with a given config id.
fn mean_ops_per_call(metrics: &[MetricWindow], config_id: &str) -> Option<f64> {
    let (calls, ops) = metrics
        .iter()
        .filter(|w| w.config_id == config_id)
        .fold((0u64, 0u64), |(c, o), w| (c + w.calls, o + w.total_ops));
    (calls > 0).then(|| ops as f64 / calls as f64)
}

fn render_summary(
    rt: &Runtime,
    function: &str,
    metrics: &[MetricWindow],
    trace: &[TraceEvent],
    wallclock: bool,
) -> String {
    let mut out = String::new();
    let settled: Vec<&TraceEvent> = trace.iter().filter(|t| t.event == "settle").collect();
    let restarts = trace.iter().filter(|t| t.event == "restart").count();
    let final_config = metrics
        .last()
        .map(|w| w.config_id.clone())
        .unwrap_or_else(|| "generic".to_string());

    writeln!(out, "function: {function}").unwrap();
    writeln!(out, "windows: {}", metrics.len()).unwrap();
    writeln!(
        out,
        "settled: {}",
        settled
            .iter()
            .map(|t| t.config_id.as_str())
            .collect::<Vec<_>>()
            .join(" then ")
    )
    .unwrap();
    writeln!(out, "restarts: {restarts}").unwrap();

    let generic_ops = mean_ops_per_call(metrics, "generic");
    let final_ops = mean_ops_per_call(metrics, &final_config);
    if let (Some(g), Some(f)) = (generic_ops, final_ops) {
        writeln!(out, "mean ops/call generic: {g:.2}").unwrap();
        writeln!(out, "mean ops/call {final_config}: {f:.2}").unwrap();
        if f > 0.0 {
            writeln!(out, "op reduction vs generic: {:.2}%", (1.0 - f / g) * 100.0).unwrap();
        }
    }
    let generic_thr = metrics
        .iter()
        .filter(|w| w.config_id == "generic")
        .filter_map(|w| w.throughput)
        .next();
    let final_thr = metrics.iter().rev().filter_map(|w| w.throughput).next();
    if let (Some(before), Some(after)) = (generic_thr, final_thr) {
        writeln!(out, "throughput before: {before:.4}").unwrap();
        writeln!(out, "throughput after: {after:.4}").unwrap();
    }
    let guard_failures: u64 = metrics.iter().map(|w| w.guard_failures).sum();
    writeln!(out, "guard failures: {guard_failures}").unwrap();
    for point in rt.excluded_points() {
        writeln!(out, "point excluded by feasibility filter: {point}").unwrap();
    }
    if wallclock {
        let total_ms: f64 = metrics.iter().filter_map(|w| w.wall_ms).sum();
        writeln!(out, "wall clock (informational): {total_ms:.1} ms").unwrap();
    }
    out
}
