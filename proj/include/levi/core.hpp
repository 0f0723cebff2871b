#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace levi {

inline constexpr double pi = std::numbers::pi;

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

enum class ErrorKind {
  domain,
  invalid_spec,
  grid_too_coarse,
  quadrature,
  convergence,
  dependency,
  model_mismatch,
  lambda_too_small,
  inconsistent_map,
  too_few_samples,
  io,
  validation,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_spec: return "invalid-spec";
    case ErrorKind::grid_too_coarse: return "grid-too-coarse";
    case ErrorKind::quadrature: return "quadrature";
    case ErrorKind::convergence: return "convergence-too-slow";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::model_mismatch: return "model-mismatch";
    case ErrorKind::lambda_too_small: return "lambda-too-small";
    case ErrorKind::inconsistent_map: return "inconsistent-map";
    case ErrorKind::too_few_samples: return "too-few-samples";
    case ErrorKind::io: return "io";
    case ErrorKind::validation: return "validation";
  }
  return "unknown";
}

//! Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

//! ∫(1 − cos(e·z))|z|^{−d−1}dz for a unit vector e; the symbol of 𝓛^1 is this times |ξ|.
inline double symbol_constant(int d) {
  return std::pow(pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

//! Worker count used by lattice fills; 1 runs inline.
inline std::atomic<int>& worker_count() {
  static std::atomic<int> n{1};
  return n;
}
inline void set_workers(int n) { worker_count() = std::max(1, n); }

//! Runs body(i) for i in [0, n) over contiguous blocks; each index is written by exactly one worker.
template <class F>
void parallel_for(int n, F&& body) {
  const int w = std::min(worker_count().load(), std::max(n, 1));
  if (w <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(w);
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&, k] {
      try {
        for (int i = k * n / w; i < (k + 1) * n / w; ++i) body(i);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace levi
