//! Shipped triangulations (see `fixtures/README.md` for provenance).

use crate::triangulation::{parse_triangulation, Triangulation};

pub const FIG8: &str = include_str!("../../../fixtures/fig8.tri");
pub const SISTER: &str = include_str!("../../../fixtures/sister.tri");
pub const WHITEHEAD: &str = include_str!("../../../fixtures/whitehead.tri");

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 3] = ["fig8", "sister", "whitehead"];

pub fn figure_eight() -> Triangulation {
    parse_triangulation(FIG8).expect("fixture parses")
}

pub fn sister() -> Triangulation {
    parse_triangulation(SISTER).expect("fixture parses")
}

pub fn whitehead() -> Triangulation {
    parse_triangulation(WHITEHEAD).expect("fixture parses")
}

pub fn by_name(name: &str) -> Option<Triangulation> {
    match name {
        "fig8" | "figure-eight" | "4_1" => Some(figure_eight()),
        "sister" => Some(sister()),
        "whitehead" => Some(whitehead()),
        _ => None,
    }
}
