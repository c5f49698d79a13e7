use super::{Context, Direction, GraphInfo, ParamReader, Params, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::partition::Slot;

pub const UNREACHABLE: u32 = u32::MAX;

/// Hop distance from `root` along edge direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bfs {
    pub root: VertexId,
}

impl Bfs {
    pub fn from_params(params: &Params) -> Result<Self> {
        let mut r = ParamReader::new("BFS", params);
        let root = r.take("root", 0u64)?;
        r.finish()?;
        Ok(Bfs { root })
    }

    fn relax(ctx: &mut Context<'_, '_, u32>, v: Slot) {
        let mut d = ctx.get_value(v);
        for u in ctx.edges(v) {
            let du = ctx.get_value(u);
            if du != UNREACHABLE {
                d = d.min(du + 1);
            }
        }
        ctx.set_value(v, d);
    }

    /// Halts unless a vertex reached this superstep can still shorten a
    /// reader's distance, so the last superstep is the one that settles the
    /// farthest vertex.
    fn halt_when_settled(ctx: &mut Context<'_, '_, u32>) {
        let improvable = ctx.changed_vertices().into_iter().any(|v| {
            let d = ctx.new_value(v).saturating_add(1);
            ctx.readers(v).any(|w| ctx.get_value(w) > d)
        });
        if !improvable {
            ctx.vote_to_halt();
        }
    }
}

impl VertexProgram for Bfs {
    type Value = u32;
    type Output = u32;

    fn name(&self) -> &str {
        "BFS"
    }

    fn direction(&self) -> Direction {
        Direction::In
    }

    fn initial_value(&self, _v: VertexId) -> u32 {
        UNREACHABLE
    }

    fn validate(&self, info: &GraphInfo) -> Result<()> {
        if self.root >= info.vertex_count {
            return Err(Error::Config(format!(
                "BFS root {} out of range for {} vertices",
                self.root, info.vertex_count
            )));
        }
        Ok(())
    }

    fn peval(&self, ctx: &mut Context<'_, '_, u32>) {
        if let Some(r) = ctx.inner_slot_of(self.root) {
            ctx.set_value(r, 0);
        }
        Self::halt_when_settled(ctx);
    }

    fn incval(&self, ctx: &mut Context<'_, '_, u32>) {
        for v in ctx.vertices() {
            Self::relax(ctx, v);
        }
        Self::halt_when_settled(ctx);
    }

    fn output(&self, value: u32, _out_degree: usize) -> u32 {
        value
    }
}
