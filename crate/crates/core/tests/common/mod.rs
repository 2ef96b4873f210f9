//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

pub mod oracle;
pub mod models;
