//! Benchmark fixtures.

use fascd::{CycleConfig, ProblemKind, VIProblem, Workspace};

/// A problem, its preset configuration, a workspace and the natural
/// initial iterate.
pub struct Fixture {
    pub problem: VIProblem,
    pub config: CycleConfig,
    pub workspace: Workspace,
    pub w0: Vec<f64>,
}

impl Fixture {
    pub fn new(kind: ProblemKind, levels: usize) -> Self {
        let problem = kind.build(levels, None).expect("fixture problem");
        let workspace = Workspace::new(&problem);
        let w0 = problem.initial_iterate().values().to_vec();
        Self {
            config: CycleConfig::preset(kind),
            problem,
            workspace,
            w0,
        }
    }

    /// One V-cycle from the initial iterate.
    pub fn vcycle(&mut self) -> Vec<f64> {
        let p = &self.problem;
        let mut w = self.w0.clone();
        fascd::vcycle(p, p.finest(), p.source(), p.lower(), p.upper(), &mut w, &self.config, &mut self.workspace)
            .expect("vcycle");
        w
    }
}
