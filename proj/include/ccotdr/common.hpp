#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ccotdr {

inline constexpr double kSpeedOfLight = 2.9979e8;  // m/s
inline constexpr double kPi = std::numbers::pi;

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// Which half of a Golay complementary pair a frame carries.
enum class Sequence : std::uint8_t { A = 0, B = 1 };

inline const char* to_string(Sequence s) { return s == Sequence::A ? "A" : "B"; }

// How optical path changes map to measured phase. single_pass counts the
// one-way propagation phase (2*pi/lambda per metre of path), double_pass the
// physical round trip (4*pi/lambda).
enum class PhaseConvention : std::uint8_t { single_pass, double_pass };

inline double convention_factor(PhaseConvention c) {
    return c == PhaseConvention::double_pass ? 2.0 : 1.0;
}

// Error hierarchy. Every library failure derives from ccotdr::Error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SizeError : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};
struct OverlapError : Error {
    using Error::Error;
};
struct GeometryError : Error {
    using Error::Error;
};
struct OrderingError : Error {
    using Error::Error;
};
struct DetectionError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    ConfigError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};
struct ValidationError : Error {
    using Error::Error;
};

// splitmix64; used to derive independent sub-seeds from (seed, index).
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(seed ^ mix_seed(stream + 0x51ed27a1ULL));
}

}  // namespace ccotdr
