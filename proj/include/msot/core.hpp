#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace msot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Absolute tolerance used whenever two total masses are compared.
inline constexpr double kMassTol = 1e-9;

enum class ErrorKind {
  kInvalidInput,
  kUnbalancedInput,
  kUnsupported,
  kNotPositiveDefinite,
  kDegenerateDirection,
  kMeasureZeroProjection,
  kInstanceTooLarge,
  kNotARay,
  kDegenerateData,
  kInvalidSubspace,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kUnbalancedInput: return "unbalanced-input";
    case ErrorKind::kUnsupported: return "unsupported";
    case ErrorKind::kNotPositiveDefinite: return "not-positive-definite";
    case ErrorKind::kDegenerateDirection: return "degenerate-direction";
    case ErrorKind::kMeasureZeroProjection: return "measure-zero-projection";
    case ErrorKind::kInstanceTooLarge: return "instance-too-large";
    case ErrorKind::kNotARay: return "not-a-ray";
    case ErrorKind::kDegenerateData: return "degenerate-data";
    case ErrorKind::kInvalidSubspace: return "invalid-subspace";
  }
  return "unknown";
}

// Input-side failures (bad shapes, bad weights, unsupported options) versus
// numerical failures detected while computing.
inline bool is_input_error(ErrorKind k) {
  return k == ErrorKind::kInvalidInput || k == ErrorKind::kUnbalancedInput ||
         k == ErrorKind::kUnsupported || k == ErrorKind::kInstanceTooLarge ||
         k == ErrorKind::kInvalidSubspace;
}

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

// Independent stream for (seed, counter); slices and flow steps each get
// their own counter so results do not depend on evaluation order.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t counter) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(mix(mix(seed) ^ mix(counter + 0x632be59bd9b4e019ULL)));
}

// Box-Muller keeps the normal stream identical across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::mt19937_64 rng) : rng_(rng) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do u1 = uniform(); while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::size_t max_threads() {
  if (const char* env = std::getenv("MSOT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Static partition; each index is written by exactly one thread, so callers
// that reduce afterwards in index order get bitwise-reproducible results.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min(max_threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace msot
