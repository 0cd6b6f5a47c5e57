#pragma once

#include "ccotdr/common.hpp"

#include <mutex>

#include <unsupported/Eigen/FFT>

namespace ccotdr {

// FFTW's planner is not re-entrant; plans are created lazily by Eigen::FFT,
// so every first use of a new transform size goes through this lock.
std::mutex& fft_plan_mutex();

inline Eigen::Index next_pow2(Eigen::Index n) {
    Eigen::Index m = 1;
    while (m < n) m <<= 1;
    return m;
}

// Eigen::FFT with the plans for one transform size created up front.
template <typename Scalar>
class PlannedFft {
public:
    using Vector = ComplexVector<Scalar>;

    explicit PlannedFft(Eigen::Index size) : size_(size) {
        Vector in = Vector::Zero(size);
        Vector out(size);
        std::lock_guard lock(fft_plan_mutex());
        fft_.fwd(out, in);
        fft_.inv(in, out);
    }

    Eigen::Index size() const { return size_; }

    void forward(Vector& out, const Vector& in) { fft_.fwd(out, in); }
    // Scaled by 1/size.
    void inverse(Vector& out, const Vector& in) { fft_.inv(out, in); }

private:
    Eigen::Index size_;
    Eigen::FFT<Scalar> fft_;
};

}  // namespace ccotdr
