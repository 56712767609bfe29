#include <benchmark/benchmark.h>

// The packaged libbenchmark_main.a carries LTO bytecode from a different
// compiler release, so the entry point is defined here.
BENCHMARK_MAIN();
