#pragma once

#include <cmath>
#include <cstdint>

namespace sdde {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

// Each role gets its own stream so that, e.g., adding a jump draw never shifts
// the Gaussian sequence of the same path.
enum class StreamRole : std::uint64_t {
  gaussian = 1,
  poisson = 2,
  jump_size = 3,
  initial = 4,
  bootstrap = 5,
};

// Stateless counter stream: output i is a pure function of (key, i), and the key
// is a pure function of (master seed, path index, role). Identical draws result
// for a given path no matter how paths are scheduled across workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t master_seed, std::uint64_t path_index, StreamRole role) noexcept
      : key_(derive_key(master_seed, path_index, static_cast<std::uint64_t>(role))) {}

  std::uint64_t next_u64() noexcept { return detail::mix64(key_ + ++counter_ * detail::kGolden); }

  // Open interval (0, 1); endpoints are unreachable by construction.
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_gaussian() noexcept { return inverse_normal_cdf(next_uniform()); }

  double next_exponential(double rate) noexcept { return -std::log(next_uniform()) / rate; }

  // Rational approximation of the standard normal quantile (Wichura's algorithm),
  // accurate to ~1e-15 over (0, 1); unit tests pin it against an independent
  // implementation. Kept local because sampling calls this billions of times.
  static double inverse_normal_cdf(double p) noexcept {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
      const double r = 0.180625 - q * q;
      return q *
             (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                   6.7265770927008700853e4) *
                      r +
                  4.5921953931549871457e4) *
                     r +
                 1.3731693765509461125e4) *
                    r +
                1.9715909503065514427e3) *
                   r +
               1.3314166789178437745e2) *
                  r +
              3.3871328727963666080e0) /
             (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                   3.9307895800092710610e4) *
                      r +
                  2.1213794301586595867e4) *
                     r +
                 5.3941960214247511077e3) *
                    r +
                6.8718700749205790830e2) *
                   r +
               4.2313330701600911252e1) *
                  r +
              1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
      r -= 1.6;
      x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
    } else {
      r -= 5.0;
      x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
    }
    return q < 0.0 ? -x : x;
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t path, std::uint64_t role) noexcept {
    std::uint64_t k = detail::mix64(seed + detail::kGolden);
    k = detail::mix64(k ^ detail::mix64(path + 2 * detail::kGolden));
    k = detail::mix64(k ^ detail::mix64(role + 3 * detail::kGolden));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sdde
