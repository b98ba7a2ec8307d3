#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace mfggp {

// Seeded generator with a fully pinned output sequence: the mt19937_64 engine
// is specified bit-for-bit by the standard and the uniform/normal mappings are
// implemented here, so identical seeds give identical draws on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (polar form avoided to keep the
  // draw count per sample fixed).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  // n points uniform over the box [lo, hi), one row per point.
  Eigen::MatrixXd uniform_points(Eigen::Index n, const Eigen::VectorXd& lo,
                                 const Eigen::VectorXd& hi) {
    Eigen::MatrixXd pts(n, lo.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index d = 0; d < lo.size(); ++d)
        pts(i, d) = lo[d] + (hi[d] - lo[d]) * uniform();
    return pts;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mfggp
