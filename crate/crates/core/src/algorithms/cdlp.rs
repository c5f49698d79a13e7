use super::{Context, Direction, ParamReader, Params, VertexProgram};
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Synchronous label propagation. Each vertex takes the most frequent label
/// among its neighbors (in- and out-edges both counted), ties going to the
/// smallest label. PEval is the first iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cdlp {
    pub max_iterations: u64,
}

impl Default for Cdlp {
    fn default() -> Self {
        Cdlp { max_iterations: 10 }
    }
}

impl Cdlp {
    pub fn from_params(params: &Params) -> Result<Self> {
        let mut r = ParamReader::new("CDLP", params);
        let max_iterations = r.take("max_iterations", Cdlp::default().max_iterations)?;
        r.finish()?;
        if max_iterations == 0 {
            return Err(Error::Config("CDLP: max_iterations must be at least 1".into()));
        }
        Ok(Cdlp { max_iterations })
    }

    fn iterate(&self, ctx: &mut Context<'_, '_, u64>) {
        let mut labels = Vec::new();
        for v in ctx.vertices() {
            labels.clear();
            labels.extend(ctx.edges(v).map(|u| ctx.get_value(u)));
            if let Some(l) = most_frequent(&mut labels) {
                ctx.set_value(v, l);
            }
        }
        if ctx.superstep() + 1 >= self.max_iterations {
            ctx.vote_to_halt();
        }
    }
}

/// Most frequent label, smallest on ties; `None` for an empty list.
pub(crate) fn most_frequent(labels: &mut [u64]) -> Option<u64> {
    labels.sort_unstable();
    let mut best: Option<(usize, u64)> = None;
    let mut i = 0;
    while i < labels.len() {
        let l = labels[i];
        let run = labels[i..].iter().take_while(|&&x| x == l).count();
        if best.is_none_or(|(n, _)| run > n) {
            best = Some((run, l));
        }
        i += run;
    }
    best.map(|(_, l)| l)
}

impl VertexProgram for Cdlp {
    type Value = u64;
    type Output = u64;

    fn name(&self) -> &str {
        "CDLP"
    }

    fn direction(&self) -> Direction {
        Direction::Both
    }

    fn initial_value(&self, v: VertexId) -> u64 {
        v
    }

    fn max_supersteps(&self) -> Option<u64> {
        Some(self.max_iterations)
    }

    fn peval(&self, ctx: &mut Context<'_, '_, u64>) {
        self.iterate(ctx);
    }

    fn incval(&self, ctx: &mut Context<'_, '_, u64>) {
        self.iterate(ctx);
    }

    fn output(&self, value: u64, _out_degree: usize) -> u64 {
        value
    }
}
