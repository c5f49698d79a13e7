use super::{Context, Direction, ParamReader, Params, VertexProgram};
use crate::error::Result;
use crate::graph::VertexId;

/// Weakly connected components by min-label propagation over both edge
/// directions. Labels end as the smallest id in each component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Wcc;

impl Wcc {
    pub fn from_params(params: &Params) -> Result<Self> {
        ParamReader::new("WCC", params).finish()?;
        Ok(Wcc)
    }

    fn propagate(ctx: &mut Context<'_, '_, u64>) {
        for v in ctx.vertices() {
            let mut l = ctx.new_value(v);
            for u in ctx.edges(v) {
                l = l.min(ctx.get_value(u));
            }
            ctx.set_value(v, l);
        }
        // another superstep only helps if some reader still holds a larger label
        let improvable = ctx.changed_vertices().into_iter().any(|v| {
            let l = ctx.new_value(v);
            ctx.readers(v).any(|w| ctx.get_value(w) > l)
        });
        if !improvable {
            ctx.vote_to_halt();
        }
    }
}

impl VertexProgram for Wcc {
    type Value = u64;
    type Output = u64;

    fn name(&self) -> &str {
        "WCC"
    }

    fn direction(&self) -> Direction {
        Direction::Both
    }

    fn initial_value(&self, v: VertexId) -> u64 {
        v
    }

    fn peval(&self, ctx: &mut Context<'_, '_, u64>) {
        ctx.initialize_state_as_id();
        Self::propagate(ctx);
    }

    fn incval(&self, ctx: &mut Context<'_, '_, u64>) {
        Self::propagate(ctx);
    }

    fn output(&self, value: u64, _out_degree: usize) -> u64 {
        value
    }
}
