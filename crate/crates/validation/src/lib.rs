//! Acceptance criteria for the valuation engine; see `tests/acceptance.rs`.
//! Run with `cargo test -p parisian-validation --test acceptance`.
