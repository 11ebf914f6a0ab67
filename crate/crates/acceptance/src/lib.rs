//! Acceptance checks for the `sympsteer` workspace live in `tests/acceptance.rs`.
