#ifndef CLOCKCTBN_RANDOM_HPP
#define CLOCKCTBN_RANDOM_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace clockctbn {

/// Seeded random source used by every stochastic routine.
///
/// Uniform draws lie in the open interval (0, 1) so that inverse-transform
/// samplers never see log(0). A stream id lets parallel workers derive
/// independent, reproducible generators from one user seed.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
    engine_.seed(seq);
  }

  double uniform() {
    // 53 random mantissa bits, shifted by half an ulp off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Gamma variate in shape-rate parametrization.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
  }

  /// Index drawn uniformly from {lo, ..., hi}.
  std::size_t uniform_index(std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> dist(lo, hi);
    return dist(engine_);
  }

  /// Symmetric Dirichlet draw of the given dimension and concentration.
  std::vector<double> dirichlet(std::size_t dim, double concentration = 1.0) {
    std::vector<double> out(dim);
    if (dim == 1) {
      out[0] = 1.0;
      return out;
    }
    double total = 0.0;
    for (auto& v : out) {
      v = gamma(concentration, 1.0);
      total += v;
    }
    for (auto& v : out) v /= total;
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

/// Replays a fixed list of uniforms; used to drive samplers step by step.
class ScriptedUniforms {
public:
  explicit ScriptedUniforms(std::vector<double> values) : values_(std::move(values)) {}

  double uniform() {
    if (next_ >= values_.size()) throw std::out_of_range("scripted uniform stream exhausted");
    return values_[next_++];
  }

  std::size_t consumed() const { return next_; }

private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

}  // namespace clockctbn

#endif  // CLOCKCTBN_RANDOM_HPP
