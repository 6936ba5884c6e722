//! Benchmarks for rdcert live in `benches/`; run `cargo bench -p rdcert-bench`.
