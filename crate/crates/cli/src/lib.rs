//! Output documents of the `evflex` command-line tool.

pub mod output;
