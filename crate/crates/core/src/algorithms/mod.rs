//! Partition-level vertex programs (PEval/IncVal) and their registry.

mod bfs;
mod cdlp;
mod context;
mod pagerank;
mod wcc;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use bfs::Bfs;
pub use cdlp::Cdlp;
pub use context::{compute_partition, ComputeInput, ComputeOutput, Context, MirrorView, RawContext};
pub use pagerank::PageRank;
pub use wcc::Wcc;

use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Which incident edges a program reads through `Context::edges`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Pull from in-neighbors.
    In,
    Out,
    /// Both directions; on directed graphs out-edges come first.
    Both,
}

impl Direction {
    pub fn reverse(self) -> Direction {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
            Direction::Both => Direction::Both,
        }
    }
}

/// Physical type of the fixed-width value words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    U32,
    U64,
    I64,
    F32,
    F64,
}

impl ValueKind {
    pub fn width(self) -> usize {
        match self {
            ValueKind::U32 | ValueKind::F32 => 4,
            ValueKind::U64 | ValueKind::I64 | ValueKind::F64 => 8,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, ValueKind::F32 | ValueKind::F64)
    }

    pub fn to_f64(self, word: u64) -> f64 {
        match self {
            ValueKind::U32 => word as u32 as f64,
            ValueKind::U64 => word as f64,
            ValueKind::I64 => word as i64 as f64,
            ValueKind::F32 => f32::from_bits(word as u32) as f64,
            ValueKind::F64 => f64::from_bits(word),
        }
    }

    pub fn render(self, word: u64) -> String {
        match self {
            ValueKind::U32 => (word as u32).to_string(),
            ValueKind::U64 => word.to_string(),
            ValueKind::I64 => (word as i64).to_string(),
            ValueKind::F32 => f32::from_bits(word as u32).to_string(),
            ValueKind::F64 => f64::from_bits(word).to_string(),
        }
    }

    pub fn parse(self, text: &str) -> Result<u64> {
        let bad = |_| Error::codec(format!("cannot parse `{text}` as {self:?}"));
        Ok(match self {
            ValueKind::U32 => text.parse::<u32>().map_err(|e| bad(e.to_string()))? as u64,
            ValueKind::U64 => text.parse::<u64>().map_err(|e| bad(e.to_string()))?,
            ValueKind::I64 => text.parse::<i64>().map_err(|e| bad(e.to_string()))? as u64,
            ValueKind::F32 => text.parse::<f32>().map_err(|e| bad(e.to_string()))?.to_bits() as u64,
            ValueKind::F64 => text.parse::<f64>().map_err(|e| bad(e.to_string()))?.to_bits(),
        })
    }
}

/// A value type storable in a fixed-width word.
pub trait VertexValue: Copy + PartialEq + fmt::Debug + Send + Sync + 'static {
    const KIND: ValueKind;
    fn to_word(self) -> u64;
    fn from_word(word: u64) -> Self;
}

macro_rules! int_value {
    ($t:ty, $kind:ident) => {
        impl VertexValue for $t {
            const KIND: ValueKind = ValueKind::$kind;
            fn to_word(self) -> u64 {
                self as u64
            }
            fn from_word(word: u64) -> Self {
                word as $t
            }
        }
    };
}

int_value!(u32, U32);
int_value!(u64, U64);
int_value!(i64, I64);

impl VertexValue for f32 {
    const KIND: ValueKind = ValueKind::F32;
    fn to_word(self) -> u64 {
        self.to_bits() as u64
    }
    fn from_word(word: u64) -> Self {
        f32::from_bits(word as u32)
    }
}

impl VertexValue for f64 {
    const KIND: ValueKind = ValueKind::F64;
    fn to_word(self) -> u64 {
        self.to_bits()
    }
    fn from_word(word: u64) -> Self {
        f64::from_bits(word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphInfo {
    pub vertex_count: u64,
    pub directed: bool,
    pub weighted: bool,
}

/// Type-erased plugin as driven by the engine. Implemented for every
/// [`VertexProgram`].
pub trait Algorithm: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn value_kind(&self) -> ValueKind;
    fn output_kind(&self) -> ValueKind;
    fn direction(&self) -> Direction;
    /// Starting value for every slot, inner or mirror.
    fn initial_value(&self, v: VertexId) -> u64;
    fn supports_activation(&self) -> bool;
    fn uses_aggregate(&self) -> bool;
    fn max_supersteps(&self) -> Option<u64>;
    fn validate(&self, info: &GraphInfo) -> Result<()>;
    fn peval(&self, ctx: &mut RawContext<'_>);
    fn incval(&self, ctx: &mut RawContext<'_>);
    fn output(&self, value: u64, out_degree: usize) -> u64;
}

/// Typed plugin definition.
pub trait VertexProgram: Send + Sync + fmt::Debug + 'static {
    type Value: VertexValue;
    type Output: VertexValue;

    fn name(&self) -> &str;
    fn direction(&self) -> Direction;
    fn initial_value(&self, v: VertexId) -> Self::Value;
    fn peval(&self, ctx: &mut Context<'_, '_, Self::Value>);
    fn incval(&self, ctx: &mut Context<'_, '_, Self::Value>);
    fn output(&self, value: Self::Value, out_degree: usize) -> Self::Output;

    fn supports_activation(&self) -> bool {
        true
    }

    fn uses_aggregate(&self) -> bool {
        false
    }

    fn max_supersteps(&self) -> Option<u64> {
        None
    }

    fn validate(&self, _info: &GraphInfo) -> Result<()> {
        Ok(())
    }
}

impl<P: VertexProgram> Algorithm for P {
    fn name(&self) -> &str {
        VertexProgram::name(self)
    }

    fn value_kind(&self) -> ValueKind {
        P::Value::KIND
    }

    fn output_kind(&self) -> ValueKind {
        P::Output::KIND
    }

    fn direction(&self) -> Direction {
        VertexProgram::direction(self)
    }

    fn initial_value(&self, v: VertexId) -> u64 {
        VertexProgram::initial_value(self, v).to_word()
    }

    fn supports_activation(&self) -> bool {
        VertexProgram::supports_activation(self)
    }

    fn uses_aggregate(&self) -> bool {
        VertexProgram::uses_aggregate(self)
    }

    fn max_supersteps(&self) -> Option<u64> {
        VertexProgram::max_supersteps(self)
    }

    fn validate(&self, info: &GraphInfo) -> Result<()> {
        VertexProgram::validate(self, info)
    }

    fn peval(&self, ctx: &mut RawContext<'_>) {
        VertexProgram::peval(self, &mut Context::new(ctx))
    }

    fn incval(&self, ctx: &mut RawContext<'_>) {
        VertexProgram::incval(self, &mut Context::new(ctx))
    }

    fn output(&self, value: u64, out_degree: usize) -> u64 {
        VertexProgram::output(self, P::Value::from_word(value), out_degree).to_word()
    }
}

/// `key=value` algorithm parameters.
pub type Params = BTreeMap<String, String>;

pub fn parse_params<S: AsRef<str>>(pairs: &[S]) -> Result<Params> {
    let mut out = Params::new();
    for p in pairs {
        let p = p.as_ref();
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("parameter `{p}` is not key=value")))?;
        if k.is_empty() {
            return Err(Error::Config(format!("parameter `{p}` has an empty key")));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Consumes known keys from a parameter map and rejects leftovers.
pub struct ParamReader<'a> {
    algorithm: &'a str,
    rest: Params,
}

impl<'a> ParamReader<'a> {
    pub fn new(algorithm: &'a str, params: &Params) -> Self {
        ParamReader { algorithm, rest: params.clone() }
    }

    pub fn take<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.rest.remove(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                Error::Config(format!("{}: cannot parse {key}=`{v}`", self.algorithm))
            }),
        }
    }

    pub fn finish(self) -> Result<()> {
        match self.rest.keys().next() {
            Some(k) => Err(Error::Config(format!("{}: unknown parameter `{k}`", self.algorithm))),
            None => Ok(()),
        }
    }
}

pub type Builder = fn(&Params) -> Result<Arc<dyn Algorithm>>;

/// Name-addressed plugin table. Lookups are case-sensitive.
#[derive(Clone, Default)]
pub struct Registry {
    builders: BTreeMap<String, Builder>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.builders.keys()).finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("BFS", |p| Ok(Arc::new(Bfs::from_params(p)?))).unwrap();
        r.register("PAGERANK", |p| Ok(Arc::new(PageRank::from_params(p)?))).unwrap();
        r.register("CDLP", |p| Ok(Arc::new(Cdlp::from_params(p)?))).unwrap();
        r.register("WCC", |p| Ok(Arc::new(Wcc::from_params(p)?))).unwrap();
        r
    }

    pub fn register(&mut self, name: &str, builder: Builder) -> Result<()> {
        if self.builders.contains_key(name) {
            return Err(Error::DuplicateAlgorithm(name.to_string()));
        }
        self.builders.insert(name.to_string(), builder);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Result<Builder> {
        self.builders
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownAlgorithm(name.to_string()))
    }

    pub fn build(&self, name: &str, params: &Params) -> Result<Arc<dyn Algorithm>> {
        (self.lookup(name)?)(params)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }
}

pub fn builtin_registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(Registry::with_builtins)
}
