//! Ahead-of-time instrumentation of WebAssembly 1.0 modules for dynamic analysis.
//!
//! The pipeline is [`decode::decode_module`], then
//! [`instrument::instrument_module`], then [`encode::encode_module`]. The
//! instrumented module imports one function per distinct hook signature from
//! the `__wasabi_hooks` namespace; [`glue::generate`] produces the JavaScript
//! that implements those imports on top of a user analysis.

pub mod control;
pub mod decode;
pub mod encode;
pub mod glue;
pub mod hooks;
pub mod instrument;
pub mod ir;
pub mod leb128;
pub mod metadata;
pub mod typing;
