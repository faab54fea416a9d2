#![allow(dead_code)]

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use http_body_util::BodyExt;
use kgsim_core::embeddings::text::{text_table, HashedBagProvider};
use kgsim_core::embeddings::{complex, transe};
use kgsim_core::{
    EmbeddingKind, EmbeddingTable, Engine, GraphStore, IndexConfig, KnnIndex, TaxonomyConfig, TaxonomyIndex,
    TrainConfig,
};
use kgsim_service::{router, AppState};
use tower::ServiceExt;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/mini_vehicles.tsv");

/// Node left out of the text table to exercise null scores.
pub const NO_TEXT: &str = "Q_cheese";

pub fn fixture_engine() -> Engine {
    let mut store = GraphStore::new();
    store.ingest_edges(FIXTURE).unwrap();
    let taxonomy = TaxonomyIndex::build(&store, &TaxonomyConfig::default()).unwrap();
    let cfg = TrainConfig { epochs: 40, dim: 16, ..Default::default() };
    let (transe, _) = transe::train_transe(&store, &cfg).unwrap();
    let cfg = TrainConfig { epochs: 40, dim: 16, ..TrainConfig::complex_default() };
    let (complex, _) = complex::train_complex(&store, &cfg).unwrap();
    let full = text_table(&store, &HashedBagProvider::new(64).unwrap()).unwrap();
    let mut text = EmbeddingTable::new(EmbeddingKind::Text, full.dim());
    for (id, v) in full.iter().filter(|(id, _)| *id != NO_TEXT) {
        text.insert(id, v.to_vec()).unwrap();
    }

    let mut engine = Engine::new(store, taxonomy);
    for table in [transe, complex, text] {
        engine.add_index(table.kind(), KnnIndex::build(&table, &IndexConfig::default()).unwrap());
        engine.add_table(table);
    }
    engine
}

pub fn app() -> (axum::Router, AppState) {
    let state = AppState::new(fixture_engine(), 5);
    (router(state.clone()), state)
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("body is JSON")
    }
}

pub async fn get(app: &axum::Router, uri: &str) -> Reply {
    let response = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let content_type = response
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_owned())
        .unwrap_or_default();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, body }
}
