use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("inadmissible state{}: rho = {rho:e}, p = {p:e}", location_suffix(.element, .node))]
    Inadmissible {
        element: Option<usize>,
        node: Option<usize>,
        rho: f64,
        p: f64,
    },
    #[error("inadmissible ghost state on {tag} boundary: rho = {rho:e}, p = {p:e}")]
    Ghost { tag: &'static str, rho: f64, p: f64 },
    #[error("solver aborted at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at(self, element: usize, node: usize) -> Self {
        match self {
            Error::Inadmissible { rho, p, .. } => Error::Inadmissible {
                element: Some(element),
                node: Some(node),
                rho,
                p,
            },
            other => other,
        }
    }

    /// True for failures caused by the solution losing positivity.
    pub fn is_admissibility(&self) -> bool {
        match self {
            Error::Inadmissible { .. } | Error::Ghost { .. } => true,
            Error::AtTime { source, .. } => source.is_admissibility(),
            _ => false,
        }
    }
}

fn location_suffix(element: &Option<usize>, node: &Option<usize>) -> String {
    match (element, node) {
        (Some(e), Some(n)) => format!(" at element {e}, node {n}"),
        (Some(e), None) => format!(" in element {e}"),
        _ => String::new(),
    }
}
