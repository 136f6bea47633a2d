pub mod tree;
pub mod formula;
pub mod automata;
pub mod oracle;
pub mod engine;
pub mod gen;
pub mod laws;
pub mod cli;
