//! Greedy composition of library fragments against query fragments.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::document::{fragmentize, multiscale_configs, build_document, Flip, Fragment, FragmentId, ScaleConfig};
use crate::error::{Error, Result};
use crate::flow::{timestep_average, FlowField};
use crate::index::LibraryIndex;

/// Stopping rule for the greedy composition loop.
#[derive(Debug, Clone, Copy)]
pub struct RetrievalParams {
    /// Loop while the uncovered fraction of the query exceeds this value.
    pub stop_fraction: f64,
    /// Hard cap on accepted fragments per query fragment.
    pub max_iterations: u32,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        RetrievalParams {
            stop_fraction: 0.1,
            max_iterations: 16,
        }
    }
}

/// One accepted library fragment and the composition score right after
/// adding it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChosenFragment {
    pub fragment: FragmentId,
    pub score: f64,
}

/// Outcome of composing one query fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionResult {
    pub query_fragment: FragmentId,
    /// Accepted fragments in selection order.
    pub chosen: Vec<ChosenFragment>,
    /// Score of the final union.
    pub final_score: f64,
    /// Number of query activations covered by the final union.
    pub covered: u32,
}

/// Similarity of two activation sets: `|q ∩ r| / max(|q|, |r|)`, the
/// histogram intersection of their uniform distributions. Always in [0, 1],
/// and 1 exactly when the sets are equal.
pub fn composition_score(
    query: &BTreeSet<(u32, u32)>,
    result: &BTreeSet<(u32, u32)>,
) -> Result<f64> {
    if query.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let inter = query.intersection(result).count();
    Ok(inter as f64 / query.len().max(result.len()) as f64)
}

/// Greedily accumulates library fragments that cover a query fragment.
///
/// Each pass collects every library fragment sharing an activation with the
/// still-uncovered part of the query, accepts the candidate that maximizes
/// the union score (ties broken towards the smallest fragment id), and
/// repeats until the uncovered fraction drops to `stop_fraction`, no
/// candidates remain, or `max_iterations` fragments were accepted. Every
/// accepted candidate strictly shrinks the uncovered set, so the loop
/// terminates after at most `|query|` passes.
pub fn greedy_compose(
    query: &Fragment,
    index: &LibraryIndex,
    params: &RetrievalParams,
) -> Result<CompositionResult> {
    if query.activations.is_empty() {
        return Err(Error::EmptyQuery);
    }
    let total = query.activations.len();
    let stop = params.stop_fraction * total as f64;

    let mut uncovered = query.activations.clone();
    let mut union: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut covered = 0usize;
    let mut chosen: Vec<ChosenFragment> = Vec::new();

    while uncovered.len() as f64 > stop && chosen.len() < params.max_iterations as usize {
        let mut candidates: BTreeSet<&FragmentId> = BTreeSet::new();
        for key in &uncovered {
            if let Some(ids) = index.fragment_inverse.get(key) {
                candidates.extend(ids.iter());
            }
        }
        if candidates.is_empty() {
            break;
        }

        let mut best: Option<(f64, &FragmentId, usize, usize)> = None;
        for id in candidates {
            let activations = &index.fragment_forward[id];
            let gained_cover = activations.intersection(&uncovered).count();
            let union_size = union.len() + activations.difference(&union).count();
            let score = (covered + gained_cover) as f64 / total.max(union_size) as f64;
            let better = match &best {
                None => true,
                Some((s, b, _, _)) => score > *s || (score == *s && id < *b),
            };
            if better {
                best = Some((score, id, gained_cover, union_size));
            }
        }

        let (score, id, gained, _) = best.expect("candidate set was non-empty");
        let activations = &index.fragment_forward[id];
        union.extend(activations.iter().copied());
        for key in activations {
            uncovered.remove(key);
        }
        covered += gained;
        chosen.push(ChosenFragment {
            fragment: id.clone(),
            score,
        });
        debug_assert!(gained > 0, "accepted fragment must cover something new");
    }

    let final_score = if union.is_empty() {
        0.0
    } else {
        composition_score(&query.activations, &union)?
    };
    Ok(CompositionResult {
        query_fragment: query.id.clone(),
        chosen,
        final_score,
        covered: covered as u32,
    })
}

/// Composition results for one query fragment of one configuration.
#[derive(Debug, Clone)]
pub struct QueryMatch {
    pub config: ScaleConfig,
    pub result: CompositionResult,
}

/// Runs the full multi-scale query: builds all 21 configuration documents
/// from the query's per-frame flows, fragments them, and composes every
/// non-empty fragment independently. Results are pooled in configuration
/// then window order.
pub fn query_video(
    video_id: &str,
    flows: &[FlowField],
    index: &LibraryIndex,
    params: &RetrievalParams,
) -> Result<Vec<QueryMatch>> {
    if flows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (width, height) = (flows[0].width, flows[0].height);
    let unit = 4 * index.params.cube_base;
    if width % unit != 0 || height % unit != 0 {
        return Err(Error::Geometry(alloc::format!(
            "query {width}x{height} not divisible by {unit} (4x cube size)"
        )));
    }

    let step_flows = timestep_average(flows, index.params.step)?;
    let doc_params = index.params.document_params();
    let mut matches = Vec::new();
    for config in multiscale_configs(width, height) {
        let doc = build_document(&step_flows, &config, &doc_params)?;
        for fragment in fragmentize(&doc, video_id, Flip::Identity, index.params.window) {
            if fragment.activations.is_empty() {
                continue;
            }
            let result = greedy_compose(&fragment, index, params)?;
            matches.push(QueryMatch { config, result });
        }
    }
    Ok(matches)
}
