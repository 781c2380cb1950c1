//! Example graphs shipped with the crate, as graph-file text.

use crate::graph::{parse_graph, MetricGraph};

pub const INTERVAL: &str = include_str!("../graphs/interval.graph");
pub const STAR3_SHORT: &str = include_str!("../graphs/star3_short.graph");
pub const STAR3_LONG: &str = include_str!("../graphs/star3_long.graph");
pub const LASSO: &str = include_str!("../graphs/lasso.graph");
pub const FIGURE_EIGHT: &str = include_str!("../graphs/figure_eight.graph");
pub const LOOP_AND_EDGE: &str = include_str!("../graphs/loop_and_edge.graph");

/// `(name, text)` for every bundled graph.
pub const ALL: [(&str, &str); 6] = [
    ("interval", INTERVAL),
    ("star3_short", STAR3_SHORT),
    ("star3_long", STAR3_LONG),
    ("lasso", LASSO),
    ("figure_eight", FIGURE_EIGHT),
    ("loop_and_edge", LOOP_AND_EDGE),
];

pub fn load(name: &str) -> Option<MetricGraph> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| parse_graph(text).expect("bundled graph parses"))
}

pub fn all() -> Vec<(&'static str, MetricGraph)> {
    ALL.iter().map(|&(n, text)| (n, parse_graph(text).expect("bundled graph parses"))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_graphs_parse() {
        let betti: Vec<usize> = all().iter().map(|(_, g)| g.betti()).collect();
        assert_eq!(betti, vec![0, 0, 0, 1, 2, 1]);
        assert!(load("lasso").is_some());
        assert!(load("nope").is_none());
    }
}
