//! Holds the `acceptance` test target. Run it with
//! `cargo test -p spinj-validation --test acceptance`.
