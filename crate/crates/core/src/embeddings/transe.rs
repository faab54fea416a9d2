//! TransE: a relation is a translation, `h + r ≈ t`.
//!
//! Trained with the margin ranking loss
//! `max(0, γ + d(h + r, t) − d(h' + r, t'))` against filtered corruptions,
//! plain minibatch SGD, and entity vectors re-projected onto the unit sphere
//! after every epoch.

use crate::embeddings::train::{NegativeSampler, Params, TripleSet};
use crate::embeddings::{EmbeddingKind, EmbeddingTable, Norm, TrainConfig, TrainReport};
use crate::error::Result;
use crate::graph::GraphStore;

/// Gradients of a loss with respect to one triple's three vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
}

/// `d(h + r, t)` under the given norm.
pub fn distance(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> f64 {
    let diff = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
    match norm {
        Norm::L1 => diff.map(f64::abs).sum(),
        Norm::L2 => diff.map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// Distance and its gradient with respect to `x = h + r − t`.
fn distance_with_grad(h: &[f64], r: &[f64], t: &[f64], norm: Norm) -> (f64, Vec<f64>) {
    let x: Vec<f64> = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect();
    match norm {
        Norm::L1 => {
            let d = x.iter().map(|v| v.abs()).sum();
            (d, x.iter().map(|v| if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 }).collect())
        }
        Norm::L2 => {
            let d = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let g = if d > 0.0 { x.iter().map(|v| v / d).collect() } else { vec![0.0; x.len()] };
            (d, g)
        }
    }
}

/// Hinge loss for one (positive, negative) pair with gradients for both
/// triples. Gradients are zero when the hinge is inactive.
pub fn margin_loss(
    pos: (&[f64], &[f64], &[f64]),
    neg: (&[f64], &[f64], &[f64]),
    margin: f64,
    norm: Norm,
) -> (f64, TripleGrad, TripleGrad) {
    let (d_pos, g_pos) = distance_with_grad(pos.0, pos.1, pos.2, norm);
    let (d_neg, g_neg) = distance_with_grad(neg.0, neg.1, neg.2, norm);
    let loss = margin + d_pos - d_neg;
    if loss <= 0.0 {
        let zero = |n| vec![0.0; n];
        let z = TripleGrad {
            head: zero(pos.0.len()),
            relation: zero(pos.1.len()),
            tail: zero(pos.2.len()),
        };
        return (0.0, z.clone(), z);
    }
    let neg_of = |g: &[f64]| g.iter().map(|x| -x).collect::<Vec<_>>();
    let pos_grad = TripleGrad {
        head: g_pos.clone(),
        relation: g_pos.clone(),
        tail: neg_of(&g_pos),
    };
    let neg_grad = TripleGrad {
        head: neg_of(&g_neg),
        relation: neg_of(&g_neg),
        tail: g_neg,
    };
    (loss, pos_grad, neg_grad)
}

/// Triple score `−d(h + r, t)` read from a trained table.
pub fn score(table: &EmbeddingTable, h: &str, r: &str, t: &str, norm: Norm) -> Option<f64> {
    Some(-distance(table.get(h)?, table.relation(r)?, table.get(t)?, norm))
}

struct State {
    triples: TripleSet,
    sampler: NegativeSampler,
    entities: Params,
    relations: Params,
}

fn init(store: &GraphStore, config: &TrainConfig) -> Result<State> {
    config.validate()?;
    let triples = TripleSet::from_store(store)?;
    let mut sampler = NegativeSampler::new(config.seed);
    let bound = 6.0 / (config.dim as f64).sqrt();
    let mut entities = Params::uniform(triples.entities.len(), config.dim, bound, sampler.rng());
    let mut relations = Params::uniform(triples.relations.len(), config.dim, bound, sampler.rng());
    entities.normalize_rows();
    relations.normalize_rows();
    Ok(State {
        triples,
        sampler,
        entities,
        relations,
    })
}

fn export(state: &State, dim: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(EmbeddingKind::Transe, dim);
    for (id, row) in state.triples.entities.iter().zip(state.entities.rows()) {
        table.insert(id.clone(), row.to_vec()).expect("width matches");
    }
    for (id, row) in state.triples.relations.iter().zip(state.relations.rows()) {
        table.insert_relation(id.clone(), row.to_vec()).expect("width matches");
    }
    table
}

/// The seeded starting point of [`train_transe`], before any update.
pub fn initial_table(store: &GraphStore, config: &TrainConfig) -> Result<EmbeddingTable> {
    Ok(export(&init(store, config)?, config.dim))
}

pub fn train_transe(store: &GraphStore, config: &TrainConfig) -> Result<(EmbeddingTable, TrainReport)> {
    let mut st = init(store, config)?;
    let mut report = TrainReport::default();
    let mut order = st.triples.triples.clone();
    let mut pairs = Vec::new();

    for _epoch in 0..config.epochs {
        st.sampler.shuffle(&mut order);
        let (mut total, mut count) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            pairs.clear();
            for &pos in batch {
                for _ in 0..config.negatives {
                    if let Some(neg) = st.sampler.corrupt(&st.triples, pos) {
                        pairs.push((pos, neg));
                    }
                }
            }
            if pairs.is_empty() {
                continue;
            }
            let scale = 1.0 / pairs.len() as f64;
            for &((h, r, t), (nh, nr, nt)) in &pairs {
                let (loss, gp, gn) = margin_loss(
                    (st.entities.row(h), st.relations.row(r), st.entities.row(t)),
                    (st.entities.row(nh), st.relations.row(nr), st.entities.row(nt)),
                    config.margin,
                    config.norm,
                );
                total += loss;
                if loss > 0.0 {
                    st.entities.accumulate(h, &gp.head, scale);
                    st.relations.accumulate(r, &gp.relation, scale);
                    st.entities.accumulate(t, &gp.tail, scale);
                    st.entities.accumulate(nh, &gn.head, scale);
                    st.relations.accumulate(nr, &gn.relation, scale);
                    st.entities.accumulate(nt, &gn.tail, scale);
                }
            }
            count += pairs.len();
            st.entities.apply(config.learning_rate);
            st.relations.apply(config.learning_rate);
        }
        st.entities.normalize_rows();
        report
            .epoch_losses
            .push(if count > 0 { total / count as f64 } else { 0.0 });
    }
    Ok((export(&st, config.dim), report))
}
