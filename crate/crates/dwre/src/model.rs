//! The two walk models behind one interface.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Execution;
use crate::geom::MarkedConfiguration;
use crate::knn::{self, KnnModel, SHELL_CELL_CAP};
use crate::lilypond;
use crate::ppgen::MarkLaw;
use crate::walks::WalkGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Knn(KnnModel),
    Lilypond,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Knn(_) => "knn",
            Model::Lilypond => "lilypond",
        }
    }

    pub fn law(&self) -> MarkLaw {
        match self {
            Model::Knn(m) => m.law(),
            Model::Lilypond => MarkLaw::Direction,
        }
    }

    /// The walk graph of `phi`. An empty configuration has the empty graph.
    pub fn build_graph(&self, phi: &MarkedConfiguration, exec: Execution) -> Result<WalkGraph> {
        if phi.is_empty() {
            return WalkGraph::new(Vec::new(), Vec::new(), Vec::new());
        }
        match self {
            Model::Knn(m) => knn::build_knn_graph(phi, m, exec),
            Model::Lilypond => lilypond::build_lily_graph(phi, &lilypond::solve(phi)?),
        }
    }

    /// Good-site event at the origin for a bulk sample in site coordinates.
    pub fn is_good(&self, x1_local: &MarkedConfiguration, s: f64) -> bool {
        match self {
            Model::Knn(m) => knn::event_as(x1_local, s, m),
            Model::Lilypond => lilypond::event_as(x1_local, s),
        }
    }

    /// Perfect-site event at the origin: a good bulk and a sprinkling inside
    /// `Q_s(o)` that stops every entering walk.
    pub fn is_perfect(&self, x1_local: &MarkedConfiguration, x2_local: &MarkedConfiguration, s: f64) -> Result<bool> {
        if x2_local.is_empty() || !self.is_good(x1_local, s) {
            return Ok(false);
        }
        match self {
            Model::Knn(m) => knn::event_app(x2_local, s, m, SHELL_CELL_CAP),
            Model::Lilypond => lilypond::is_device_shaped(x1_local, x2_local, s),
        }
    }
}
