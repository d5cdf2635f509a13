use std::fmt;

/// Vertex identifier, dense in `0..n`.
pub type Vertex = u32;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("vertex count must be at least 1")]
    NoVertices,
    #[error("vertex count {0} exceeds the supported maximum")]
    TooManyVertices(usize),
    #[error("self-loop on vertex {0}")]
    SelfLoop(Vertex),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("unknown variant `{0}` (expected coarse, fine, nb-reads or full)")]
    UnknownVariant(String),
}

/// Undirected edge in canonical form: `u < v`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    u: Vertex,
    v: Vertex,
}

impl Edge {
    /// Canonicalizes the endpoint order; rejects self-loops.
    pub fn new(a: Vertex, b: Vertex) -> Result<Edge, Error> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { u: a, v: b }),
            std::cmp::Ordering::Greater => Ok(Edge { u: b, v: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a)),
        }
    }

    pub fn u(self) -> Vertex {
        self.u
    }

    pub fn v(self) -> Vertex {
        self.v
    }

    /// The endpoint opposite to `x`; `x` must be an endpoint.
    pub fn other(self, x: Vertex) -> Vertex {
        debug_assert!(x == self.u || x == self.v);
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.u, self.v)
    }
}
