//! Holds the `acceptance` test target; run it with
//! `cargo test -p cogradar-validation --test acceptance`.
