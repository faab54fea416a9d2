//! Render a node as a sentence for text embedding.

use crate::graph::GraphStore;

/// `<label>[, <description>]. <label> <property> <object>.` for each
/// outgoing non-metadata edge, in ingestion order. Missing labels fall back
/// to raw ids; a node with nothing known about it yields its id.
pub fn lexicalize(store: &GraphStore, node: &str) -> String {
    let edges: Vec<_> = store
        .outgoing_edges(node)
        .into_iter()
        .filter(|e| !e.is_metadata())
        .collect();
    let label = store.label(node);
    let description = store.description(node);
    if label.is_none() && description.is_none() && edges.is_empty() {
        return node.to_owned();
    }

    let subject = label.unwrap_or(node);
    let mut out = String::from(subject);
    if let Some(desc) = description {
        out.push_str(", ");
        out.push_str(desc);
    }
    out.push('.');
    for edge in edges {
        let property = store.label(&edge.property).unwrap_or(&edge.property);
        let object = if edge.literal {
            edge.node2.as_str()
        } else {
            store.label(&edge.node2).unwrap_or(&edge.node2)
        };
        out.push_str(&format!(" {subject} {property} {object}."));
    }
    out
}
