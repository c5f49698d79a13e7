use super::{Context, Direction, ParamReader, Params, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Fixed-iteration PageRank with uniform redistribution of dangling mass.
///
/// The stored value is the vertex's outgoing contribution
/// `rank / max(out_degree, 1)` so that readers need no remote degrees; the
/// output hook turns it back into a rank. Dangling mass travels through the
/// global aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRank {
    pub iterations: u64,
    pub damping: f64,
}

impl Default for PageRank {
    fn default() -> Self {
        PageRank { iterations: 10, damping: 0.85 }
    }
}

impl PageRank {
    pub fn from_params(params: &Params) -> Result<Self> {
        let d = PageRank::default();
        let mut r = ParamReader::new("PAGERANK", params);
        let iterations = r.take("iterations", d.iterations)?;
        let damping = r.take("damping", d.damping)?;
        r.finish()?;
        if iterations == 0 {
            return Err(Error::Config("PAGERANK: iterations must be at least 1".into()));
        }
        if !(damping > 0.0 && damping < 1.0) {
            return Err(Error::Config(format!("PAGERANK: damping {damping} not in (0, 1)")));
        }
        Ok(PageRank { iterations, damping })
    }

    fn publish(ctx: &mut Context<'_, '_, f64>, v: u32, rank: f64) {
        let deg = ctx.out_degree(v);
        if deg == 0 {
            ctx.aggregate(rank);
        }
        ctx.set_value(v, rank / deg.max(1) as f64);
    }

    fn vote(&self, ctx: &mut Context<'_, '_, f64>) {
        if ctx.superstep() >= self.iterations {
            ctx.vote_to_halt();
        } else {
            ctx.keep_computing();
        }
    }
}

impl VertexProgram for PageRank {
    type Value = f64;
    type Output = f64;

    fn name(&self) -> &str {
        "PAGERANK"
    }

    fn direction(&self) -> Direction {
        Direction::In
    }

    fn initial_value(&self, _v: VertexId) -> f64 {
        0.0
    }

    fn supports_activation(&self) -> bool {
        false
    }

    fn uses_aggregate(&self) -> bool {
        true
    }

    fn max_supersteps(&self) -> Option<u64> {
        Some(self.iterations + 1)
    }

    fn peval(&self, ctx: &mut Context<'_, '_, f64>) {
        let r0 = 1.0 / ctx.vertex_count() as f64;
        for v in ctx.inner_slots() {
            Self::publish(ctx, v, r0);
        }
        self.vote(ctx);
    }

    fn incval(&self, ctx: &mut Context<'_, '_, f64>) {
        let n = ctx.vertex_count() as f64;
        let base = (1.0 - self.damping) / n;
        let dangling = ctx.aggregated() / n;
        for v in ctx.inner_slots() {
            let incoming: f64 = ctx.edges(v).map(|u| ctx.get_value(u)).sum();
            Self::publish(ctx, v, base + self.damping * (incoming + dangling));
        }
        self.vote(ctx);
    }

    fn output(&self, value: f64, out_degree: usize) -> f64 {
        value * out_degree.max(1) as f64
    }
}
