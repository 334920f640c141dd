#pragma once

#include <functional>

namespace span {

/// Worker cap from the SPAN_THREADS environment variable: unset, "0" or
/// unparsable means auto (hardware concurrency). Read on every call so
/// tests can change it.
int thread_budget();

/// Runs fn(0..n-1), at most `workers` at a time. Items must be independent;
/// each writes only its own outputs, which keeps results identical for any
/// worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace span
