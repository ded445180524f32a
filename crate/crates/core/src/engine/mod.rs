//! The execution engine: deterministic evaluation with exact op accounting,
//! variant dispatch, specialization-check fallback, and cleanup callbacks.
//!
//! Calls are serialized; variant installation takes effect between calls
//! (the epoch boundary), so no call ever observes a half-installed variant.
//! Trapped calls abort without touching variant statistics or telemetry.

mod compile;
mod exec;

pub use exec::{ArrayValue, EmitRecord, Trap, TrapKind};

use crate::ir::{Program, ScalarType, Value};
use crate::specializer::Variant;
use compile::{CompiledFunc, CompiledProgram, ParamSlot};
use exec::{ArrayBuf, Flow, SlotWatch};
use std::collections::BTreeMap;
use thiserror::Error;

/// Dynamic op cost of the engine-level hot-map version check (models one
/// comparison of the runtime table version against the variant's tag).
pub const VERSION_CHECK_OPS: u64 = 3;

/// An argument to a top-level call.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    ArrayI64(Vec<i64>),
    ArrayF64(Vec<f64>),
}

impl ArgValue {
    pub fn from_value(v: Value) -> ArgValue {
        match v {
            Value::Int(i) => ArgValue::Int(i),
            Value::Float(f) => ArgValue::Float(f),
            Value::Bool(b) => ArgValue::Bool(b),
        }
    }

    pub fn as_scalar(&self) -> Option<Value> {
        match self {
            ArgValue::Int(i) => Some(Value::Int(*i)),
            ArgValue::Float(f) => Some(Value::Float(*f)),
            ArgValue::Bool(b) => Some(Value::Bool(*b)),
            _ => None,
        }
    }
}

/// Everything observable about one completed call.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecResult {
    pub value: Value,
    /// Dynamic op count; includes guard cost plus fallback cost on guard
    /// failure.
    pub ops: u64,
    pub guard_failed: bool,
    pub fallback_used: bool,
    pub effects: Vec<EmitRecord>,
    /// Final contents of array arguments, in parameter order.
    pub arrays: Vec<ArrayValue>,
    /// The variant the call dispatched to.
    pub variant_id: String,
    /// Values assigned to watched locals, in assignment order.
    pub local_observations: Vec<(String, Value)>,
}

/// Per-variant call statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VariantStats {
    pub calls: u64,
    pub guard_failures: u64,
    pub total_ops: u64,
}

/// Cleanup callback: receives the argument vector and the effect log at
/// guard-failure time (always empty for entry-guarded variants).
pub type CleanupFn = Box<dyn FnMut(&[ArgValue], &[EmitRecord])>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error(transparent)]
    Trap(#[from] Trap),
    #[error("variant `{variant}` does not target function `{function}`")]
    VariantMismatch { variant: String, function: String },
}

enum VariantCode {
    /// Index into the shared generic table.
    Generic(u32),
    Specialized(Box<CompiledFunc>),
}

struct Installed {
    meta: Variant,
    code: VariantCode,
}

/// At most one cleanup per function; the default is a no-op.
#[derive(Default)]
struct CleanupRegistry {
    callbacks: BTreeMap<String, CleanupFn>,
}

pub struct Engine {
    compiled: CompiledProgram,
    /// function name -> active variant; every function resolves to exactly
    /// one variant, the generic one until something else is installed.
    dispatch: BTreeMap<String, Installed>,
    /// Pristine generic variants for resets and fallback metadata.
    generics: BTreeMap<String, Variant>,
    stats: BTreeMap<String, VariantStats>,
    cleanups: CleanupRegistry,
    table_versions: BTreeMap<String, u64>,
    epoch: u64,
    traps: u64,
}

impl Engine {
    /// Compile a validated program; every function dispatches to its generic
    /// variant.
    pub fn new(program: &Program) -> Engine {
        let compiled = compile::compile_program(program);
        let mut dispatch = BTreeMap::new();
        let mut generics = BTreeMap::new();
        for (i, func) in program.functions.iter().enumerate() {
            let generic = Variant::generic(func);
            generics.insert(func.name.clone(), generic.clone());
            dispatch.insert(
                func.name.clone(),
                Installed {
                    meta: generic,
                    code: VariantCode::Generic(i as u32),
                },
            );
        }
        Engine {
            compiled,
            dispatch,
            generics,
            stats: BTreeMap::new(),
            cleanups: CleanupRegistry::default(),
            table_versions: BTreeMap::new(),
            epoch: 0,
            traps: 0,
        }
    }

    /// Monotone counter bumped by every dispatch or version mutation; callers
    /// may key caches on it.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Calls that aborted with a trap.
    pub fn trap_count(&self) -> u64 {
        self.traps
    }

    pub fn has_function(&self, name: &str) -> bool {
        self.compiled.index.contains_key(name)
    }

    /// Install `variant` as the dispatch target for its base function.
    pub fn set_active_variant(&mut self, variant: &Variant) -> Result<(), EngineError> {
        let idx = *self
            .compiled
            .index
            .get(&variant.base)
            .ok_or_else(|| EngineError::UnknownFunction(variant.base.clone()))?;
        if variant.code.name != variant.base {
            return Err(EngineError::VariantMismatch {
                variant: variant.id.clone(),
                function: variant.base.clone(),
            });
        }
        let code = if variant.is_generic() {
            VariantCode::Generic(idx)
        } else {
            VariantCode::Specialized(Box::new(compile::compile_func(
                &variant.code,
                &self.compiled.index,
            )))
        };
        self.dispatch.insert(
            variant.base.clone(),
            Installed {
                meta: variant.clone(),
                code,
            },
        );
        self.epoch += 1;
        Ok(())
    }

    /// Revert a function to its generic variant.
    pub fn reset_to_generic(&mut self, function: &str) -> Result<(), EngineError> {
        let idx = *self
            .compiled
            .index
            .get(function)
            .ok_or_else(|| EngineError::UnknownFunction(function.to_string()))?;
        let generic = self.generics[function].clone();
        self.dispatch.insert(
            function.to_string(),
            Installed {
                meta: generic,
                code: VariantCode::Generic(idx),
            },
        );
        self.epoch += 1;
        Ok(())
    }

    /// The variant a call to `function` currently dispatches to.
    pub fn active_variant(&self, function: &str) -> Option<&Variant> {
        self.dispatch.get(function).map(|i| &i.meta)
    }

    /// Statistics for a variant id (zeroes when it never ran).
    pub fn variant_stats(&self, variant_id: &str) -> VariantStats {
        self.stats.get(variant_id).copied().unwrap_or_default()
    }

    /// Register the cleanup callback for `function`, replacing any previous
    /// one. Invoked exactly once per guard failure, before generic
    /// re-execution.
    pub fn register_cleanup(
        &mut self,
        function: &str,
        callback: CleanupFn,
    ) -> Result<(), EngineError> {
        if !self.has_function(function) {
            return Err(EngineError::UnknownFunction(function.to_string()));
        }
        self.cleanups.callbacks.insert(function.to_string(), callback);
        Ok(())
    }

    /// Current hot-map table version for a function (starts at 1).
    pub fn table_version(&self, function: &str) -> u64 {
        self.table_versions.get(function).copied().unwrap_or(1)
    }

    /// Bump the table version, invalidating installed hot-map variants.
    pub fn bump_table_version(&mut self, function: &str) {
        let v = self.table_version(function) + 1;
        self.table_versions.insert(function.to_string(), v);
        self.epoch += 1;
    }

    /// Execute `function` through the dispatch table with guard fallback.
    /// `watch_locals` names locals whose assignments are recorded for
    /// telemetry.
    pub fn call(
        &mut self,
        function: &str,
        args: &[ArgValue],
        watch_locals: &[String],
    ) -> Result<ExecResult, EngineError> {
        let compiled = &self.compiled;
        let traps = &mut self.traps;
        let idx = *compiled
            .index
            .get(function)
            .ok_or_else(|| EngineError::UnknownFunction(function.to_string()))?;
        let installed = &self.dispatch[function];
        let active_code = match &installed.code {
            VariantCode::Generic(i) => &compiled.funcs[*i as usize],
            VariantCode::Specialized(cf) => cf,
        };
        let variant_id = installed.meta.id.clone();
        let is_generic = installed.meta.is_generic();
        let required_version = installed.meta.guards.table_version;
        let current_version = self.table_versions.get(function).copied().unwrap_or(1);

        let (scalar_args, arrays) = match prepare_args(active_code, args) {
            Ok(v) => v,
            Err(kind) => {
                *traps += 1;
                return Err(EngineError::Trap(Trap {
                    kind,
                    location: format!("{function}:entry"),
                }));
            }
        };
        let watches = resolve_watches(active_code, watch_locals);

        // Hot-map version guard: an engine-level check charged to the
        // variant before its body runs.
        let mut guard_ops = 0;
        let mut version_ok = true;
        if let Some(required) = required_version {
            guard_ops += VERSION_CHECK_OPS;
            version_ok = current_version == required;
        }

        let outcome = if version_ok {
            match exec::execute(compiled, active_code, &scalar_args, arrays, &watches) {
                Ok(o) => o,
                Err(trap) => {
                    *traps += 1;
                    return Err(EngineError::Trap(trap));
                }
            }
        } else {
            exec::ExecOutcome {
                flow: Flow::GuardFailed,
                ops: 0,
                effects: Vec::new(),
                arrays: Vec::new(),
                observations: Vec::new(),
            }
        };

        let result = match outcome.flow {
            Flow::Returned(_) | Flow::Normal => {
                finish(&variant_id, active_code, guard_ops + outcome.ops, false, outcome, &watches)
            }
            Flow::GuardFailed => {
                if is_generic {
                    // A guard written directly in generic handler code has
                    // nothing to fall back to.
                    *traps += 1;
                    return Err(EngineError::Trap(Trap {
                        kind: TrapKind::Guard,
                        location: format!("{function}:guard"),
                    }));
                }
                let spec_ops = guard_ops + outcome.ops;
                let failure_effects = outcome.effects;
                if let Some(cb) = self.cleanups.callbacks.get_mut(function) {
                    cb(args, &failure_effects);
                }
                let generic_code = &compiled.funcs[idx as usize];
                let (scalar_args, arrays) = prepare_args(generic_code, args)
                    .expect("signature already checked against the same program");
                let watches = resolve_watches(generic_code, watch_locals);
                let mut generic_outcome =
                    match exec::execute(compiled, generic_code, &scalar_args, arrays, &watches) {
                        Ok(o) => o,
                        Err(trap) => {
                            *traps += 1;
                            return Err(EngineError::Trap(trap));
                        }
                    };
                if matches!(generic_outcome.flow, Flow::GuardFailed) {
                    *traps += 1;
                    return Err(EngineError::Trap(Trap {
                        kind: TrapKind::Guard,
                        location: format!("{function}:guard"),
                    }));
                }
                let total_ops = spec_ops + generic_outcome.ops;
                let mut effects = failure_effects;
                effects.append(&mut generic_outcome.effects);
                generic_outcome.effects = effects;
                finish(&variant_id, generic_code, total_ops, true, generic_outcome, &watches)
            }
        };

        let stats = self.stats.entry(variant_id).or_default();
        stats.calls += 1;
        stats.total_ops += result.ops;
        if result.guard_failed {
            stats.guard_failures += 1;
        }
        Ok(result)
    }

    /// Execute the generic code of `function` directly, bypassing dispatch,
    /// statistics, and telemetry. Used to compute hot-map results and other
    /// oracle-style lookups.
    pub fn call_generic(&self, function: &str, args: &[ArgValue]) -> Result<ExecResult, EngineError> {
        let idx = *self
            .compiled
            .index
            .get(function)
            .ok_or_else(|| EngineError::UnknownFunction(function.to_string()))?;
        let code = &self.compiled.funcs[idx as usize];
        let (scalar_args, arrays) = prepare_args(code, args).map_err(|kind| {
            EngineError::Trap(Trap {
                kind,
                location: format!("{function}:entry"),
            })
        })?;
        let outcome = exec::execute(&self.compiled, code, &scalar_args, arrays, &[])?;
        if matches!(outcome.flow, Flow::GuardFailed) {
            return Err(EngineError::Trap(Trap {
                kind: TrapKind::Guard,
                location: format!("{function}:guard"),
            }));
        }
        let ops = outcome.ops;
        Ok(finish(&format!("{function}[generic]"), code, ops, false, outcome, &[]))
    }

    /// Re-apply the bookkeeping of a previously executed call: variant
    /// statistics advance as if the call ran, and the cleanup callback fires
    /// again on replayed guard failures. Sound because execution is
    /// deterministic; the caller guarantees the dispatch epoch and arguments
    /// match the original call.
    pub fn replay(&mut self, function: &str, args: &[ArgValue], result: &ExecResult) -> ExecResult {
        if result.guard_failed {
            if let Some(cb) = self.cleanups.callbacks.get_mut(function) {
                cb(args, &[]);
            }
        }
        let stats = self.stats.entry(result.variant_id.clone()).or_default();
        stats.calls += 1;
        stats.total_ops += result.ops;
        if result.guard_failed {
            stats.guard_failures += 1;
        }
        result.clone()
    }
}

fn finish(
    variant_id: &str,
    code: &CompiledFunc,
    ops: u64,
    fallback: bool,
    outcome: exec::ExecOutcome,
    watches: &[SlotWatch],
) -> ExecResult {
    let value = match outcome.flow {
        Flow::Returned(bits) => exec::bits_to_value(bits, code.return_type),
        _ => Value::zero_of(code.return_type),
    };
    let local_observations = outcome
        .observations
        .iter()
        .map(|(key, v)| (watch_name(code, watches, *key), *v))
        .collect();
    ExecResult {
        value,
        ops,
        guard_failed: fallback,
        fallback_used: fallback,
        effects: outcome.effects,
        arrays: outcome.arrays.into_iter().map(ArrayBuf::freeze).collect(),
        variant_id: variant_id.to_string(),
        local_observations,
    }
}

fn watch_name(code: &CompiledFunc, watches: &[SlotWatch], key: u32) -> String {
    let slot = watches[key as usize].slot;
    code.scalar_slots
        .iter()
        .find(|(_, (s, _))| *s == slot)
        .map(|(name, _)| name.clone())
        .unwrap_or_default()
}

fn resolve_watches(code: &CompiledFunc, watch_locals: &[String]) -> Vec<SlotWatch> {
    let mut out = Vec::new();
    for name in watch_locals {
        if let Some((slot, ty)) = code.scalar_slots.get(name) {
            out.push(SlotWatch {
                slot: *slot,
                ty: *ty,
                key: out.len() as u32,
            });
        }
    }
    out
}

/// Check args against the signature and split them into scalar slot fills
/// and array buffers.
fn prepare_args(
    code: &CompiledFunc,
    args: &[ArgValue],
) -> Result<(Vec<(u32, u64)>, Vec<ArrayBuf>), TrapKind> {
    if args.len() != code.params.len() {
        return Err(TrapKind::Type);
    }
    let mut scalars = Vec::with_capacity(args.len());
    let mut arrays = Vec::with_capacity(code.n_arrays as usize);
    for (arg, param) in args.iter().zip(&code.params) {
        match (param, arg) {
            (ParamSlot::Scalar { slot, ty }, _) => {
                let v = arg.as_scalar().ok_or(TrapKind::Type)?;
                if v.scalar_type() != *ty {
                    return Err(TrapKind::Type);
                }
                scalars.push((*slot, exec::value_to_bits(v)));
            }
            (ParamSlot::Array { ty: ScalarType::Int64, .. }, ArgValue::ArrayI64(data)) => {
                arrays.push(ArrayBuf::I64(data.clone()));
            }
            (ParamSlot::Array { ty: ScalarType::Float64, .. }, ArgValue::ArrayF64(data)) => {
                arrays.push(ArrayBuf::F64(data.clone()));
            }
            _ => return Err(TrapKind::Type),
        }
    }
    Ok((scalars, arrays))
}
