//! ComplEx: `φ(h, r, t) = Re(Σ_k h_k · r_k · conj(t_k))`.
//!
//! Vectors are stored as `[re_0..re_{d-1}, im_0..im_{d-1}]`. Training
//! minimizes the logistic loss `softplus(−y·φ)` over true (y = +1) and
//! corrupted (y = −1) triples plus an L2 penalty on the vectors involved.

use crate::embeddings::train::{NegativeSampler, Params, TripleSet};
use crate::embeddings::transe::TripleGrad;
use crate::embeddings::{EmbeddingKind, EmbeddingTable, TrainConfig, TrainReport};
use crate::error::Result;
use crate::graph::GraphStore;

/// The trilinear score over the split real/imaginary layout.
pub fn score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let d = h.len() / 2;
    let (hr, hi) = h.split_at(d);
    let (rr, ri) = r.split_at(d);
    let (tr, ti) = t.split_at(d);
    let mut acc = 0.0;
    for k in 0..d {
        acc += hr[k] * rr[k] * tr[k] + hi[k] * rr[k] * ti[k] + hr[k] * ri[k] * ti[k] - hi[k] * ri[k] * tr[k];
    }
    acc
}

/// Numerically stable `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Loss `softplus(−label·φ) + reg·(‖h‖² + ‖r‖² + ‖t‖²)` and its gradient.
/// `label` is +1 for a true triple and −1 for a corruption.
pub fn logistic_loss(h: &[f64], r: &[f64], t: &[f64], label: f64, reg: f64) -> (f64, TripleGrad) {
    let phi = score(h, r, t);
    let loss = softplus(-label * phi) + reg * (sq_norm(h) + sq_norm(r) + sq_norm(t));
    let dphi = -label * sigmoid(-label * phi);

    let d = h.len() / 2;
    let (hr, hi) = h.split_at(d);
    let (rr, ri) = r.split_at(d);
    let (tr, ti) = t.split_at(d);
    let mut gh = vec![0.0; 2 * d];
    let mut gr = vec![0.0; 2 * d];
    let mut gt = vec![0.0; 2 * d];
    for k in 0..d {
        gh[k] = dphi * (rr[k] * tr[k] + ri[k] * ti[k]);
        gh[d + k] = dphi * (rr[k] * ti[k] - ri[k] * tr[k]);
        gr[k] = dphi * (hr[k] * tr[k] + hi[k] * ti[k]);
        gr[d + k] = dphi * (hr[k] * ti[k] - hi[k] * tr[k]);
        gt[k] = dphi * (hr[k] * rr[k] - hi[k] * ri[k]);
        gt[d + k] = dphi * (hr[k] * ri[k] + hi[k] * rr[k]);
    }
    for (g, p) in [(&mut gh, h), (&mut gr, r), (&mut gt, t)] {
        for (g, x) in g.iter_mut().zip(p) {
            *g += 2.0 * reg * x;
        }
    }
    (
        loss,
        TripleGrad {
            head: gh,
            relation: gr,
            tail: gt,
        },
    )
}

/// Triple score read from a trained table.
pub fn table_score(table: &EmbeddingTable, h: &str, r: &str, t: &str) -> Option<f64> {
    Some(score(table.get(h)?, table.relation(r)?, table.get(t)?))
}

struct State {
    triples: TripleSet,
    sampler: NegativeSampler,
    entities: Params,
    relations: Params,
}

/// Uniform init bound giving the initial score roughly unit variance:
/// `Var φ = 4d (b²/3)³`.
fn init_bound(dim: usize) -> f64 {
    3f64.sqrt() * (4.0 * dim as f64).powf(-1.0 / 6.0)
}

fn init(store: &GraphStore, config: &TrainConfig) -> Result<State> {
    config.validate()?;
    let triples = TripleSet::from_store(store)?;
    let mut sampler = NegativeSampler::new(config.seed);
    let bound = init_bound(config.dim);
    let width = 2 * config.dim;
    let entities = Params::uniform(triples.entities.len(), width, bound, sampler.rng());
    let relations = Params::uniform(triples.relations.len(), width, bound, sampler.rng());
    Ok(State {
        triples,
        sampler,
        entities,
        relations,
    })
}

fn export(state: &State, dim: usize) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(EmbeddingKind::Complex, dim);
    for (id, row) in state.triples.entities.iter().zip(state.entities.rows()) {
        table.insert(id.clone(), row.to_vec()).expect("width matches");
    }
    for (id, row) in state.triples.relations.iter().zip(state.relations.rows()) {
        table.insert_relation(id.clone(), row.to_vec()).expect("width matches");
    }
    table
}

/// The seeded starting point of [`train_complex`], before any update.
pub fn initial_table(store: &GraphStore, config: &TrainConfig) -> Result<EmbeddingTable> {
    Ok(export(&init(store, config)?, config.dim))
}

pub fn train_complex(store: &GraphStore, config: &TrainConfig) -> Result<(EmbeddingTable, TrainReport)> {
    let mut st = init(store, config)?;
    let mut report = TrainReport::default();
    let mut order = st.triples.triples.clone();
    let mut samples = Vec::new();

    for _epoch in 0..config.epochs {
        st.sampler.shuffle(&mut order);
        let (mut total, mut count) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            samples.clear();
            for &pos in batch {
                samples.push((pos, 1.0));
                for _ in 0..config.negatives {
                    if let Some(neg) = st.sampler.corrupt(&st.triples, pos) {
                        samples.push((neg, -1.0));
                    }
                }
            }
            let scale = 1.0 / samples.len() as f64;
            for &((h, r, t), label) in &samples {
                let (loss, g) = logistic_loss(
                    st.entities.row(h),
                    st.relations.row(r),
                    st.entities.row(t),
                    label,
                    config.regularization,
                );
                total += loss;
                st.entities.accumulate(h, &g.head, scale);
                st.relations.accumulate(r, &g.relation, scale);
                st.entities.accumulate(t, &g.tail, scale);
            }
            count += samples.len();
            st.entities.apply(config.learning_rate);
            st.relations.apply(config.learning_rate);
        }
        report.epoch_losses.push(total / count as f64);
    }
    Ok((export(&st, config.dim), report))
}
