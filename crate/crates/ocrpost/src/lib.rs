//! Pipeline toolkit for turning noisy first-pass OCR of multilingual legacy
//! documents into corrected, restructured, transliterated text, with
//! character-level and structural error metrics.
//!
//! The stages, in pipeline order:
//!
//! 1. [`ingest`] — convert vendor OCR output into the canonical [`docmodel::Document`]
//! 2. [`langid`] — label each line/token with a language
//! 3. [`ingest::detect_columns`] / [`ingest::reorder_page`] — repair reading order
//! 4. [`maskio`] — mask non-target-language tokens, numerals, and punctuation
//! 5. [`postcorrect`] — correct OCR errors in the masked target-language text
//! 6. [`maskio::unmask_document`] — reinsert masked tokens at their indices
//! 7. [`translit`] — rewrite graphemes into a modern orthography
//! 8. [`eval`] — score the result against a gold reference (CER + SER)
//!
//! Every stage consumes and produces plain files, so intermediates can be
//! inspected and the whole pipeline re-run deterministically.

pub mod docmodel;
pub mod eval;
pub mod ingest;
pub mod langid;
pub mod maskio;
pub mod postcorrect;
pub mod translit;

mod text;

pub use text::nfc;
