pub use crate::random::{haar_unitary, random_hermitian, random_matrix};
