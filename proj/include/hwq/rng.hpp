#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace hwq {

// splitmix64 output scrambler
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Quantile of the standard normal distribution (Wichura, AS 241, PPND16).
/// Accurate to ~1e-16 for p in (0,1).
inline double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");
    const double q = p - 0.5;
    double r, num, den;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                    6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                  1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                    3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                  5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return (q < 0.0) ? -val : val;
}

/// Counter-based generator: any (seed, stream, counter) triple maps to one
/// variate, independent of evaluation order.  Valued for reproducibility and
/// parallel replication without shared state.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)) | 1ULL) {}

    /// uniform on (0,1), never returns an endpoint
    double uniform(std::uint64_t ctr) const {
        const std::uint64_t z = mix64(key_ + 0x9E3779B97F4A7C15ULL * (ctr + 1));
        return static_cast<double>(z >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double normal(std::uint64_t ctr) const { return inverse_normal_cdf(uniform(ctr)); }

private:
    std::uint64_t key_;
};

/// Sequential facade over CounterRng for samplers that consume a stream.
class SeqRng {
public:
    SeqRng(std::uint64_t seed, std::uint64_t stream = 0) : rng_(seed, stream) {}
    double uniform() { return rng_.uniform(ctr_++); }
    double normal() { return rng_.normal(ctr_++); }
    std::uint64_t position() const { return ctr_; }

private:
    CounterRng rng_;
    std::uint64_t ctr_ = 0;
};

}  // namespace hwq
