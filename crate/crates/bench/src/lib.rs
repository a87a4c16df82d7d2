//! Criterion benchmarks for the rendering, conversion and SSIM paths live
//! under `benches/`; run them with `cargo bench -p asciiclash-bench`.
