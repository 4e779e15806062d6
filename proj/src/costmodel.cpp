#include "itrl/costmodel.hpp"

#include <stdexcept>

namespace itrl::costmodel {

double vanilla_cost(std::int64_t total_length) {
  if (total_length < 0) throw std::invalid_argument("vanilla_cost: L < 0");
  return static_cast<double>(total_length) * static_cast<double>(total_length);
}

double iterative_cost(const CostParams& p) {
  if (p.iterations < 1) throw std::invalid_argument("iterative_cost: n < 1");
  const double per =
      static_cast<double>(p.query_tokens + p.reasoning_tokens +
                          2 * p.summary_tokens);
  return static_cast<double>(p.iterations) * per * per;
}

double cost_ratio(const CostParams& p) {
  if (p.iterations < 1) throw std::invalid_argument("cost_ratio: n < 1");
  if (p.reasoning_tokens < 1) throw std::invalid_argument("cost_ratio: l < 1");
  const double num =
      static_cast<double>(p.reasoning_tokens + 2 * p.summary_tokens);
  const double denom = static_cast<double>(p.iterations) *
                       static_cast<double>(p.reasoning_tokens) *
                       static_cast<double>(p.reasoning_tokens);
  return num * num / denom;
}

std::vector<std::int64_t> sawtooth_trace(const CostParams& p) {
  if (p.iterations < 1) throw std::invalid_argument("sawtooth_trace: n < 1");
  std::vector<std::int64_t> series;
  series.reserve(static_cast<std::size_t>(p.iterations) *
                 static_cast<std::size_t>(p.reasoning_tokens + 1));
  const std::int64_t base = p.query_tokens + p.summary_tokens;
  for (std::int64_t it = 0; it < p.iterations; ++it)
    for (std::int64_t t = 0; t <= p.reasoning_tokens; ++t)
      series.push_back(base + t);
  return series;
}

std::vector<std::int64_t> vanilla_trace(std::int64_t query_tokens,
                                        std::int64_t total_length) {
  std::vector<std::int64_t> series;
  series.reserve(static_cast<std::size_t>(total_length + 1));
  for (std::int64_t t = 0; t <= total_length; ++t)
    series.push_back(query_tokens + t);
  return series;
}

}  // namespace itrl::costmodel
