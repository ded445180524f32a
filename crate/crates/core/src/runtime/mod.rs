//! The runtime facade: owns the program, the engine, the point registry,
//! telemetry profiles, the variant cache, and the optional explorer, and
//! exposes the hook set the fixed code drives it with:
//!
//! `runtime_init`, `update_runtime`, `get_specialized_function`,
//! `point_specialize`, `point_disable_spec`, `point_disable_spec_check`,
//! `point_enable_collection`, `point_disable_collection`,
//! `start_exploration`, `end_exploration`.
//!
//! Hooks and calls are mutually serialized; a hook takes effect at the next
//! epoch boundary, which for this single-threaded runtime is immediately
//! after the hook returns. Hooks on unknown points fail without mutating
//! state.

pub mod config;

pub use config::{ConfigValue, PointConfig, PolicyConfig, RuntimePolicy};

use crate::engine::{ArgValue, CleanupFn, Engine, EngineError, ExecResult, VariantStats};
use crate::explorer::{
    enumerate_configs, guard_feasibility_filter, resolve_candidates, Action, Config, ConfigSpace,
    ExplorationPolicy, Explorer, ExplorerError, FEASIBILITY_FLOOR,
};
use crate::ir::{parse_program, ParseError, Program, Value};
use crate::specializer::{
    apply_hot_map, pin_and_specialize, GuardSelection, HotMapSpec, PinSet, PointId, SpecError,
    SpecPoint, SpecializeOpts, Variant,
};
use crate::telemetry::{MetricWindow, PointProfile};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown specialization point `{0}`")]
    UnknownPoint(PointId),
    #[error("point declaration conflict for `{0}`")]
    PointConflict(PointId),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Explorer(#[from] ExplorerError),
    #[error("exploration already running")]
    AlreadyExploring,
    #[error("no exploration running")]
    NotExploring,
    #[error("config error: {0}")]
    Config(String),
}

/// One entry of the exploration trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub event: &'static str,
    pub window_id: u64,
    pub config_id: String,
    pub action: String,
    pub throughput: Option<f64>,
}

impl TraceEvent {
    pub const CSV_HEADER: &'static str = "event,window_id,config_id,action,throughput";

    pub fn csv_row(&self) -> String {
        let throughput = match self.throughput {
            Some(t) => format!("{t}"),
            None => String::new(),
        };
        format!(
            "{},{},{},{},{}",
            self.event, self.window_id, self.config_id, self.action, throughput
        )
    }
}

/// Journal of hook invocations, for conformance checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookEvent {
    Init,
    UpdateRuntime,
    GetSpecializedFunction(String),
    PointSpecialize(PointId),
    PointDisableSpec(PointId),
    PointDisableSpecCheck(PointId),
    PointEnableCollection(PointId),
    PointDisableCollection(PointId),
    StartExploration,
    EndExploration,
}

/// Resolvable handle to the currently active variant of a function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnHandle {
    pub function: String,
    pub variant_id: String,
}

pub struct Runtime {
    program: Program,
    engine: Engine,
    policy: RuntimePolicy,
    points: BTreeMap<PointId, SpecPoint>,
    /// Active pin state per function (the explorer and the hooks both edit
    /// this; variants are always rebuilt from it).
    pins: BTreeMap<String, BTreeMap<String, Value>>,
    hot_maps: BTreeMap<String, HotMapSpec>,
    profiles: BTreeMap<PointId, PointProfile>,
    variant_cache: BTreeMap<String, Variant>,
    explorer: Option<Explorer>,
    /// Functions whose dispatch the explorer currently owns.
    explored_functions: BTreeSet<String>,
    excluded_points: Vec<PointId>,
    journal: Vec<HookEvent>,
}

impl Runtime {
    // -----------------------------------------------------------------------
    // Lifecycle hooks
    // -----------------------------------------------------------------------

    /// `runtime_init`: parse and validate the program, register points from
    /// both in-source declarations and the policy, and dispatch everything
    /// to the generic variants.
    pub fn init(program_text: &str, policy: RuntimePolicy) -> Result<Runtime, RuntimeError> {
        let program = parse_program(program_text)?;
        Runtime::from_program(program, policy)
    }

    /// As [`Runtime::init`] for an already-built program.
    pub fn from_program(program: Program, policy: RuntimePolicy) -> Result<Runtime, RuntimeError> {
        let mut points: BTreeMap<PointId, SpecPoint> = BTreeMap::new();
        for decl in &program.spec_points {
            let id = PointId::new(&decl.function, &decl.variable);
            points.insert(id.clone(), SpecPoint::new(id, decl.kind));
        }
        for pc in &policy.points {
            let sp = pc.to_spec_point().map_err(RuntimeError::Config)?;
            let func = program
                .function(&sp.id.function)
                .ok_or_else(|| RuntimeError::UnknownPoint(sp.id.clone()))?;
            if func.scalar_type_of(&sp.id.variable).is_none() {
                return Err(RuntimeError::UnknownPoint(sp.id.clone()));
            }
            if let Some(existing) = points.get(&sp.id) {
                if existing.kind != sp.kind {
                    return Err(RuntimeError::PointConflict(sp.id.clone()));
                }
            }
            points.insert(sp.id.clone(), sp);
        }
        let engine = Engine::new(&program);
        let profiles = points.keys().map(|id| (id.clone(), PointProfile::default())).collect();
        let mut rt = Runtime {
            program,
            engine,
            policy,
            points,
            pins: BTreeMap::new(),
            hot_maps: BTreeMap::new(),
            profiles,
            variant_cache: BTreeMap::new(),
            explorer: None,
            explored_functions: BTreeSet::new(),
            excluded_points: Vec::new(),
            journal: Vec::new(),
        };
        rt.journal.push(HookEvent::Init);
        Ok(rt)
    }

    /// `update_runtime`: drop the variant cache and rebuild every non-generic
    /// dispatch entry from the current pin and hot-map state.
    pub fn update_runtime(&mut self) -> Result<(), RuntimeError> {
        self.variant_cache.clear();
        let functions: Vec<String> = self.pins.keys().cloned().collect();
        for function in functions {
            self.reinstall(&function)?;
        }
        let hot_fns: Vec<String> = self.hot_maps.keys().cloned().collect();
        for function in hot_fns {
            if !self.pins.contains_key(&function) {
                let spec = self.hot_maps[&function].clone();
                let variant = apply_hot_map(&self.program, &spec)?;
                self.engine.set_active_variant(&variant)?;
            }
        }
        self.journal.push(HookEvent::UpdateRuntime);
        Ok(())
    }

    /// `get_specialized_function`: resolve the active variant.
    pub fn get_specialized_function(&mut self, function: &str) -> Result<FnHandle, RuntimeError> {
        let variant = self
            .engine
            .active_variant(function)
            .ok_or_else(|| EngineError::UnknownFunction(function.to_string()))?;
        let handle = FnHandle {
            function: function.to_string(),
            variant_id: variant.id.clone(),
        };
        self.journal
            .push(HookEvent::GetSpecializedFunction(function.to_string()));
        Ok(handle)
    }

    // -----------------------------------------------------------------------
    // Point hooks
    // -----------------------------------------------------------------------

    fn known_point(&self, id: &PointId) -> Result<(), RuntimeError> {
        if self.points.contains_key(id) {
            Ok(())
        } else {
            Err(RuntimeError::UnknownPoint(id.clone()))
        }
    }

    /// `point_specialize`: pin a point to a value and install the rebuilt
    /// variant (cached when this pin set was built before).
    pub fn point_specialize(&mut self, id: &PointId, value: Value) -> Result<(), RuntimeError> {
        self.known_point(id)?;
        let previous = self
            .pins
            .get(&id.function)
            .and_then(|m| m.get(&id.variable).copied());
        self.pins
            .entry(id.function.clone())
            .or_default()
            .insert(id.variable.clone(), value);
        if let Err(e) = self.reinstall(&id.function) {
            // A failed build leaves the previous state fully intact.
            match previous {
                Some(v) => {
                    self.pins.get_mut(&id.function).unwrap().insert(id.variable.clone(), v);
                }
                None => {
                    let m = self.pins.get_mut(&id.function).unwrap();
                    m.remove(&id.variable);
                    if m.is_empty() {
                        self.pins.remove(&id.function);
                    }
                }
            }
            return Err(e);
        }
        self.journal.push(HookEvent::PointSpecialize(id.clone()));
        Ok(())
    }

    /// `point_disable_spec`: drop the point's pin; the function reverts to
    /// the variant built from the remaining pins, or to generic.
    pub fn point_disable_spec(&mut self, id: &PointId) -> Result<(), RuntimeError> {
        self.known_point(id)?;
        let mut removed = false;
        if let Some(m) = self.pins.get_mut(&id.function) {
            removed = m.remove(&id.variable).is_some();
            if m.is_empty() {
                self.pins.remove(&id.function);
            }
        }
        if self
            .hot_maps
            .get(&id.function)
            .is_some_and(|h| h.key_param == id.variable)
        {
            self.hot_maps.remove(&id.function);
            removed = true;
        }
        if removed {
            self.reinstall(&id.function)?;
        }
        self.journal.push(HookEvent::PointDisableSpec(id.clone()));
        Ok(())
    }

    /// `point_disable_spec_check`: future variants for this point omit the
    /// guard; an installed variant is rebuilt immediately.
    pub fn point_disable_spec_check(&mut self, id: &PointId) -> Result<(), RuntimeError> {
        self.known_point(id)?;
        self.points.get_mut(id).unwrap().guard_enabled = false;
        if self.pins.get(&id.function).is_some_and(|m| m.contains_key(&id.variable)) {
            self.reinstall(&id.function)?;
        }
        self.journal.push(HookEvent::PointDisableSpecCheck(id.clone()));
        Ok(())
    }

    /// `point_enable_collection` / `point_disable_collection`.
    pub fn point_enable_collection(&mut self, id: &PointId) -> Result<(), RuntimeError> {
        self.known_point(id)?;
        self.points.get_mut(id).unwrap().collection_enabled = true;
        self.journal.push(HookEvent::PointEnableCollection(id.clone()));
        Ok(())
    }

    pub fn point_disable_collection(&mut self, id: &PointId) -> Result<(), RuntimeError> {
        self.known_point(id)?;
        self.points.get_mut(id).unwrap().collection_enabled = false;
        self.journal.push(HookEvent::PointDisableCollection(id.clone()));
        Ok(())
    }

    // -----------------------------------------------------------------------
    // Exploration hooks
    // -----------------------------------------------------------------------

    /// `start_exploration`: enumerate configurations over the given points
    /// (candidates resolved from telemetry when not explicit, workload
    /// candidates below the feasibility floor dropped) and attach the
    /// explorer. Returns the trace events of the initial installation.
    pub fn start_exploration(
        &mut self,
        point_ids: &[PointId],
        policy: ExplorationPolicy,
    ) -> Result<Vec<TraceEvent>, RuntimeError> {
        if self.explorer.is_some() {
            return Err(RuntimeError::AlreadyExploring);
        }
        let mut points = Vec::new();
        for id in point_ids {
            let p = self
                .points
                .get(id)
                .ok_or_else(|| RuntimeError::UnknownPoint(id.clone()))?;
            points.push(p.clone());
        }
        resolve_candidates(&mut points, &self.profiles);
        self.excluded_points = guard_feasibility_filter(&mut points, &self.profiles, FEASIBILITY_FLOOR);
        self.explored_functions = points.iter().map(|p| p.id.function.clone()).collect();
        let configs = enumerate_configs(&ConfigSpace {
            points,
            cap: self.policy.config_cap,
        })?;
        let mut explorer = Explorer::new(
            configs,
            policy,
            self.policy.monitor_windows,
            self.policy.drop_threshold,
            self.policy.drop_windows,
        );
        let initial = explorer.initial_action();
        self.explorer = Some(explorer);
        self.journal.push(HookEvent::StartExploration);
        self.apply_action(initial, 0, None)
    }

    /// `end_exploration`: install the best configuration seen so far, keep
    /// its pins frozen, and detach the explorer.
    pub fn end_exploration(&mut self) -> Result<Config, RuntimeError> {
        let explorer = self.explorer.take().ok_or(RuntimeError::NotExploring)?;
        let best = match explorer.settled() {
            Some((cfg, _)) => cfg.clone(),
            None => explorer.best_so_far().clone(),
        };
        self.install_config(&best)?;
        self.explored_functions.clear();
        self.journal.push(HookEvent::EndExploration);
        Ok(best)
    }

    /// Points dropped by the feasibility filter at exploration start.
    pub fn excluded_points(&self) -> &[PointId] {
        &self.excluded_points
    }

    pub fn exploring(&self) -> bool {
        self.explorer.is_some()
    }

    pub fn explorer(&self) -> Option<&Explorer> {
        self.explorer.as_ref()
    }

    /// Feed one closed window to the explorer and apply whatever it decides.
    pub fn on_window_closed(
        &mut self,
        window: &MetricWindow,
    ) -> Result<Vec<TraceEvent>, RuntimeError> {
        let Some(explorer) = self.explorer.as_mut() else {
            return Ok(Vec::new());
        };
        let action = explorer.on_window(window);
        self.apply_action(action, window.window_id, window.throughput)
    }

    /// Apply an explorer action, skipping infeasible configurations.
    fn apply_action(
        &mut self,
        mut action: Action,
        window_id: u64,
        throughput: Option<f64>,
    ) -> Result<Vec<TraceEvent>, RuntimeError> {
        let mut events = Vec::new();
        loop {
            match action {
                Action::Continue => return Ok(events),
                Action::Restart => {
                    // Back to pristine dispatch for the explored functions;
                    // monitoring resumes on generic code.
                    let fns: Vec<String> = self.explored_functions.iter().cloned().collect();
                    for function in fns {
                        self.pins.remove(&function);
                        self.engine.reset_to_generic(&function)?;
                    }
                    events.push(TraceEvent {
                        event: "restart",
                        window_id,
                        config_id: "generic".to_string(),
                        action: "re-enter-monitoring".to_string(),
                        throughput,
                    });
                    let follow_up = self
                        .explorer
                        .as_mut()
                        .expect("restart only fires while exploring")
                        .initial_action();
                    action = follow_up;
                }
                Action::Install(config) => match self.install_config(&config) {
                    Ok(()) => {
                        events.push(TraceEvent {
                            event: "install",
                            window_id,
                            config_id: config.id.clone(),
                            action: format!("install {}", config.id),
                            throughput,
                        });
                        return Ok(events);
                    }
                    Err(RuntimeError::Spec(SpecError::SpecializationTooLarge {
                        ..
                    })) => {
                        let explorer = self.explorer.as_mut().expect("installing while exploring");
                        action = explorer.mark_infeasible(&config.id);
                    }
                    Err(e) => return Err(e),
                },
                Action::Settle(config) => {
                    self.install_config(&config)?;
                    events.push(TraceEvent {
                        event: "settle",
                        window_id,
                        config_id: config.id.clone(),
                        action: format!("settle {}", config.id),
                        throughput,
                    });
                    return Ok(events);
                }
            }
        }
    }

    /// Set the pin state of the explored functions to `config` and install.
    fn install_config(&mut self, config: &Config) -> Result<(), RuntimeError> {
        let mut by_function: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
        for (id, value) in &config.pins {
            by_function
                .entry(id.function.clone())
                .or_default()
                .insert(id.variable.clone(), *value);
        }
        // Build everything first so a failure leaves dispatch untouched.
        let mut builds = Vec::new();
        for (function, pins) in &by_function {
            builds.push(self.build_pinned(function, pins)?);
        }
        for function in &self.explored_functions {
            if !by_function.contains_key(function) {
                self.pins.remove(function);
                self.engine.reset_to_generic(function)?;
            }
        }
        for variant in builds {
            self.engine.set_active_variant(&variant)?;
        }
        for (function, pins) in by_function {
            self.pins.insert(function, pins);
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // Hot maps
    // -----------------------------------------------------------------------

    /// Build and install a hot map for `function` from the key parameter's
    /// observed top-k values, computing each hard-coded result with the
    /// generic code. The map is tagged with the current table version.
    pub fn refresh_hot_map(
        &mut self,
        function: &str,
        key_param: &str,
        k: usize,
    ) -> Result<HotMapSpec, RuntimeError> {
        let id = PointId::new(function, key_param);
        self.known_point(&id)?;
        let profile = &self.profiles[&id];
        let entries: Vec<(Value, Value)> = {
            let hot = profile.top_k(k);
            let mut out = Vec::with_capacity(hot.len());
            for (key, _) in hot {
                let result = self
                    .engine
                    .call_generic(function, &[ArgValue::from_value(key)])?;
                out.push((key, result.value));
            }
            out
        };
        let spec = HotMapSpec {
            function: function.to_string(),
            key_param: key_param.to_string(),
            entries,
            table_version: self.engine.table_version(function),
        };
        let variant = apply_hot_map(&self.program, &spec)?;
        self.engine.set_active_variant(&variant)?;
        self.hot_maps.insert(function.to_string(), spec.clone());
        Ok(spec)
    }

    /// Simulate a rule-table update: installed hot maps become stale and
    /// every hot-key call falls back to generic until refreshed.
    pub fn bump_table_version(&mut self, function: &str) {
        self.engine.bump_table_version(function);
    }

    // -----------------------------------------------------------------------
    // Calls and telemetry
    // -----------------------------------------------------------------------

    /// Execute through the dispatch table, applying telemetry: enabled
    /// parameter points observe their argument values, enabled local points
    /// observe assignments, and guard failures charge the pinned points.
    pub fn call(&mut self, function: &str, args: &[ArgValue]) -> Result<ExecResult, RuntimeError> {
        let watch_locals = self.watched_locals(function);
        let result = self.engine.call(function, args, &watch_locals)?;
        self.apply_telemetry(function, args, &result);
        Ok(result)
    }

    /// Re-apply a previous deterministic result as one logical call (same
    /// dispatch epoch, same arguments): statistics, telemetry, and cleanup
    /// all advance exactly as a real call would.
    pub fn replay(&mut self, function: &str, args: &[ArgValue], result: &ExecResult) -> ExecResult {
        debug_assert_eq!(
            self.engine.active_variant(function).map(|v| v.id.as_str()),
            Some(result.variant_id.as_str()),
            "replay requires an unchanged dispatch epoch"
        );
        let replayed = self.engine.replay(function, args, result);
        self.apply_telemetry(function, args, &replayed);
        replayed
    }

    fn watched_locals(&self, function: &str) -> Vec<String> {
        let Some(func) = self.program.function(function) else {
            return Vec::new();
        };
        self.points
            .values()
            .filter(|p| {
                p.collection_enabled
                    && p.id.function == function
                    && func.param_index(&p.id.variable).is_none()
            })
            .map(|p| p.id.variable.clone())
            .collect()
    }

    fn apply_telemetry(&mut self, function: &str, args: &[ArgValue], result: &ExecResult) {
        let Some(func) = self.program.function(function) else {
            return;
        };
        for point in self.points.values() {
            if point.id.function != function || !point.collection_enabled {
                continue;
            }
            if let Some(idx) = func.param_index(&point.id.variable) {
                if let Some(v) = args.get(idx).and_then(ArgValue::as_scalar) {
                    self.profiles.get_mut(&point.id).unwrap().observe(v);
                }
            }
        }
        for (name, value) in &result.local_observations {
            let id = PointId::new(function, name);
            if let Some(profile) = self.profiles.get_mut(&id) {
                if self.points[&id].collection_enabled {
                    profile.observe(*value);
                }
            }
        }
        if result.guard_failed {
            if let Some(crate::specializer::VariantOrigin::Pinned(pins)) = self
                .engine
                .active_variant(function)
                .map(|v| &v.origin)
            {
                for var in pins.assignments.keys() {
                    let id = PointId::new(function, var);
                    if let Some(profile) = self.profiles.get_mut(&id) {
                        profile.guard_failures += 1;
                    }
                }
            }
        }
    }

    // -----------------------------------------------------------------------
    // Variant building
    // -----------------------------------------------------------------------

    fn reinstall(&mut self, function: &str) -> Result<(), RuntimeError> {
        match self.pins.get(function) {
            Some(pins) if !pins.is_empty() => {
                let pins = pins.clone();
                let variant = self.build_pinned(function, &pins)?;
                self.engine.set_active_variant(&variant)?;
            }
            _ => {
                if let Some(spec) = self.hot_maps.get(function) {
                    let variant = apply_hot_map(&self.program, spec)?;
                    self.engine.set_active_variant(&variant)?;
                } else {
                    self.engine.reset_to_generic(function)?;
                }
            }
        }
        Ok(())
    }

    /// Build (or fetch from cache) the variant for a function's pin map,
    /// guarding exactly the pins whose points have guards enabled.
    fn build_pinned(
        &mut self,
        function: &str,
        pins: &BTreeMap<String, Value>,
    ) -> Result<Variant, RuntimeError> {
        let pin_set = PinSet {
            function: function.to_string(),
            assignments: pins.clone(),
        };
        let guarded: BTreeSet<String> = pins
            .keys()
            .filter(|var| {
                self.points
                    .get(&PointId::new(function, var.as_str()))
                    .map(|p| p.guard_enabled)
                    .unwrap_or(true)
            })
            .cloned()
            .collect();
        let opts = SpecializeOpts {
            unroll_cap: self.policy.unroll_cap,
            guards: GuardSelection::Only(guarded),
        };
        let cache_key = format!(
            "{}|{}|{:?}|cap{}",
            function,
            pin_set.label(),
            opts.guards,
            opts.unroll_cap
        );
        if let Some(v) = self.variant_cache.get(&cache_key) {
            return Ok(v.clone());
        }
        let variant = pin_and_specialize(&self.program, &pin_set, opts)?;
        self.variant_cache.insert(cache_key, variant.clone());
        Ok(variant)
    }

    // -----------------------------------------------------------------------
    // Introspection
    // -----------------------------------------------------------------------

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn policy(&self) -> &RuntimePolicy {
        &self.policy
    }

    pub fn points(&self) -> impl Iterator<Item = &SpecPoint> {
        self.points.values()
    }

    pub fn point(&self, id: &PointId) -> Option<&SpecPoint> {
        self.points.get(id)
    }

    pub fn profile(&self, id: &PointId) -> Option<&PointProfile> {
        self.profiles.get(id)
    }

    /// The value a point is currently pinned to, if any. Driver-coupled
    /// workload knobs use this to adopt the explored value.
    pub fn active_pin_value(&self, id: &PointId) -> Option<Value> {
        self.pins
            .get(&id.function)
            .and_then(|m| m.get(&id.variable).copied())
    }

    pub fn active_variant_id(&self, function: &str) -> Option<String> {
        self.engine.active_variant(function).map(|v| v.id.clone())
    }

    pub fn active_variant(&self, function: &str) -> Option<&Variant> {
        self.engine.active_variant(function)
    }

    pub fn variant_stats(&self, variant_id: &str) -> VariantStats {
        self.engine.variant_stats(variant_id)
    }

    pub fn epoch(&self) -> u64 {
        self.engine.epoch()
    }

    pub fn table_version(&self, function: &str) -> u64 {
        self.engine.table_version(function)
    }

    pub fn register_cleanup(
        &mut self,
        function: &str,
        callback: CleanupFn,
    ) -> Result<(), RuntimeError> {
        Ok(self.engine.register_cleanup(function, callback)?)
    }

    pub fn cache_size(&self) -> usize {
        self.variant_cache.len()
    }

    pub fn journal(&self) -> &[HookEvent] {
        &self.journal
    }

    pub fn variant_cache_variant(&self, function: &str) -> Option<&Variant> {
        self.variant_cache
            .values()
            .find(|v| v.base == function)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Stmt;

    const DOUBLER: &str = "(func g ((s i64) (t i64)) (return (* s t)))
(specpoint g s workload)
(specpoint g t workload)
";

    fn runtime() -> Runtime {
        Runtime::init(DOUBLER, RuntimePolicy::default()).unwrap()
    }

    fn sid() -> PointId {
        PointId::new("g", "s")
    }

    fn tid() -> PointId {
        PointId::new("g", "t")
    }

    #[test]
    fn init_registers_declared_points() {
        let rt = runtime();
        assert_eq!(rt.points().count(), 2);
        assert!(rt.point(&sid()).unwrap().guard_enabled);
        assert!(!rt.exploring());
        assert_eq!(rt.journal(), &[HookEvent::Init]);
    }

    #[test]
    fn init_rejects_undeclared_config_point() {
        let policy = RuntimePolicy {
            points: vec![PointConfig {
                function: "g".into(),
                variable: "zz".into(),
                kind: "workload".into(),
                candidates: None,
                guard: None,
                collection: None,
                driver_coupled: false,
            }],
            ..RuntimePolicy::default()
        };
        assert!(matches!(
            Runtime::init(DOUBLER, policy),
            Err(RuntimeError::UnknownPoint(_))
        ));
    }

    #[test]
    fn specialize_then_matching_and_violating_calls() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        let hit = rt.call("g", &[ArgValue::Int(4), ArgValue::Int(3)]).unwrap();
        assert!(!hit.fallback_used);
        assert_eq!(hit.value, Value::Int(12));

        let miss = rt.call("g", &[ArgValue::Int(8), ArgValue::Int(3)]).unwrap();
        assert!(miss.fallback_used);
        assert_eq!(miss.value, Value::Int(24));
        let vid = rt.active_variant_id("g").unwrap();
        assert_eq!(rt.variant_stats(&vid).guard_failures, 1);
        // Guard failures charge the pinned point's profile.
        assert_eq!(rt.profile(&sid()).unwrap().guard_failures, 1);
        assert_eq!(rt.profile(&tid()).unwrap().guard_failures, 0);
    }

    #[test]
    fn repeated_pin_hits_the_variant_cache() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        rt.point_disable_spec(&sid()).unwrap();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        assert_eq!(rt.cache_size(), 1);
    }

    #[test]
    fn disable_spec_reverts_to_generic() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        rt.point_disable_spec(&sid()).unwrap();
        assert!(rt.active_variant("g").unwrap().is_generic());
        // Disabling when nothing is pinned is a no-op.
        rt.point_disable_spec(&sid()).unwrap();
        assert!(rt.active_variant("g").unwrap().is_generic());
    }

    #[test]
    fn disabling_one_of_two_pins_rebuilds_with_the_rest() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        rt.point_specialize(&tid(), Value::Int(7)).unwrap();
        assert_eq!(rt.active_variant_id("g").unwrap(), "g[s=4,t=7]");
        rt.point_disable_spec(&sid()).unwrap();
        assert_eq!(rt.active_variant_id("g").unwrap(), "g[t=7]");
        let r = rt.call("g", &[ArgValue::Int(5), ArgValue::Int(7)]).unwrap();
        assert!(!r.fallback_used);
        assert_eq!(r.value, Value::Int(35));
    }

    #[test]
    fn disable_spec_check_rebuilds_without_guard() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        rt.point_disable_spec_check(&sid()).unwrap();
        let v = rt.active_variant("g").unwrap();
        assert!(v.guards.is_empty());
        assert!(!v.code.body.iter().any(|s| matches!(s, Stmt::Guard(_))));
        // Documented hazard: a mismatched call silently runs specialized code.
        let r = rt.call("g", &[ArgValue::Int(9), ArgValue::Int(2)]).unwrap();
        assert!(!r.fallback_used);
        assert_eq!(r.value, Value::Int(8));
    }

    #[test]
    fn collection_toggles_freeze_and_resume_without_reset() {
        let mut rt = runtime();
        let args = |s: i64| vec![ArgValue::Int(s), ArgValue::Int(1)];
        rt.call("g", &args(5)).unwrap();
        assert_eq!(rt.profile(&sid()).unwrap().total_observations, 1);

        rt.point_disable_collection(&sid()).unwrap();
        rt.call("g", &args(6)).unwrap();
        assert_eq!(rt.profile(&sid()).unwrap().total_observations, 1);

        rt.point_enable_collection(&sid()).unwrap();
        rt.call("g", &args(7)).unwrap();
        let profile = rt.profile(&sid()).unwrap();
        assert_eq!(profile.total_observations, 2);
        assert_eq!(profile.count_of(&Value::Int(5)), 1);
        assert_eq!(profile.count_of(&Value::Int(7)), 1);
    }

    #[test]
    fn get_specialized_function_tracks_dispatch() {
        let mut rt = runtime();
        assert_eq!(
            rt.get_specialized_function("g").unwrap().variant_id,
            "g[generic]"
        );
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        assert_eq!(rt.get_specialized_function("g").unwrap().variant_id, "g[s=4]");
        rt.point_disable_spec(&sid()).unwrap();
        assert_eq!(
            rt.get_specialized_function("g").unwrap().variant_id,
            "g[generic]"
        );
    }

    #[test]
    fn unknown_point_hooks_fail_without_mutating_state() {
        let mut rt = runtime();
        let bogus = PointId::new("g", "nope");
        let journal_before = rt.journal().len();
        assert!(matches!(
            rt.point_specialize(&bogus, Value::Int(1)),
            Err(RuntimeError::UnknownPoint(_))
        ));
        assert!(matches!(
            rt.point_disable_spec(&bogus),
            Err(RuntimeError::UnknownPoint(_))
        ));
        assert!(matches!(
            rt.point_disable_spec_check(&bogus),
            Err(RuntimeError::UnknownPoint(_))
        ));
        assert!(matches!(
            rt.point_enable_collection(&bogus),
            Err(RuntimeError::UnknownPoint(_))
        ));
        assert!(matches!(
            rt.point_disable_collection(&bogus),
            Err(RuntimeError::UnknownPoint(_))
        ));
        assert!(rt.active_variant("g").unwrap().is_generic());
        assert_eq!(rt.journal().len(), journal_before);
    }

    #[test]
    fn update_runtime_is_idempotent_without_pending_changes() {
        let mut rt = runtime();
        rt.point_specialize(&sid(), Value::Int(4)).unwrap();
        let before = rt.active_variant("g").unwrap().clone();
        rt.update_runtime().unwrap();
        assert_eq!(rt.active_variant("g").unwrap().code, before.code);
        // After a guard toggle, the forced rebuild drops the guard.
        rt.points.get_mut(&sid()).unwrap().guard_enabled = false;
        rt.update_runtime().unwrap();
        assert!(rt.active_variant("g").unwrap().guards.is_empty());
    }

    #[test]
    fn exploration_lifecycle_and_double_start() {
        let mut rt = runtime();
        rt.points.get_mut(&sid()).unwrap().candidate_values =
            Some(vec![Value::Int(2), Value::Int(4)]);
        let events = rt
            .start_exploration(
                &[sid()],
                ExplorationPolicy::ExhaustiveSweep { windows_per_config: 1 },
            )
            .unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].event, "install");
        assert!(matches!(
            rt.start_exploration(
                &[sid()],
                ExplorationPolicy::ExhaustiveSweep { windows_per_config: 1 }
            ),
            Err(RuntimeError::AlreadyExploring)
        ));
        // End mid-sweep installs the best seen so far (nothing measured yet:
        // generic).
        let best = rt.end_exploration().unwrap();
        assert!(best.is_generic());
        assert!(!rt.exploring());
    }
}
