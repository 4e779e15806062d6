#pragma once

#include <cstdint>
#include <vector>

namespace itrl::costmodel {

/// Parameters of the analytic attention-cost comparison. Costs are unitless
/// token-pair counts; constant per-head factors are deliberately dropped.
struct CostParams {
  std::int64_t reasoning_tokens = 0;  // tokens generated per iteration
  std::int64_t summary_tokens = 0;    // summary length
  std::int64_t iterations = 1;
  std::int64_t query_tokens = 0;
};

/// Quadratic cost of a single monolithic generation of length L.
double vanilla_cost(std::int64_t total_length);

/// n * (|q| + l + 2m)^2; with |q| = 0 this is the simplified per-iteration
/// square summed over all iterations.
double iterative_cost(const CostParams& p);

/// (l + 2m)^2 / (n * l^2), the iterative-vs-vanilla ratio under L = n*l.
double cost_ratio(const CostParams& p);

/// Per-token context sizes across a whole run: within each iteration the
/// context grows linearly from |q| + m to |q| + m + l, then resets.
std::vector<std::int64_t> sawtooth_trace(const CostParams& p);

/// Vanilla comparison series: context grows linearly from |q| to |q| + L.
std::vector<std::int64_t> vanilla_trace(std::int64_t query_tokens,
                                        std::int64_t total_length);

}  // namespace itrl::costmodel
