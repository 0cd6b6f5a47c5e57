#pragma once

#include "ccotdr/common.hpp"
#include "ccotdr/fft.hpp"
#include "ccotdr/sim.hpp"

#include <span>
#include <vector>

namespace ccotdr {

// Complex reflectivity versus position; one column per polarization.
struct CompressedProfile {
    ComplexMatrix<float> samples;
    double position_step = 0.0;  // m
    double origin = 0.0;         // m
    double timestamp = 0.0;      // s

    Eigen::Index size() const { return samples.rows(); }
    Eigen::Index polarizations() const { return samples.cols(); }
    double position(Eigen::Index i) const { return origin + static_cast<double>(i) * position_step; }
};

// Time x position stack of profiles sharing one geometry. planes[p](row, cell)
// holds polarization p.
struct Waterfall {
    std::vector<ComplexMatrix<float>> planes;
    Eigen::VectorXd timestamps;
    double position_step = 0.0;
    double origin = 0.0;
    double row_period = 0.0;

    Eigen::Index rows() const { return timestamps.size(); }
    Eigen::Index cells() const { return planes.empty() ? 0 : planes.front().cols(); }
    double position(Eigen::Index i) const { return origin + static_cast<double>(i) * position_step; }
    // Nearest cell to z; throws RangeError outside the span.
    Eigen::Index cell_index(double z) const;
};

// Distance of sample `index` after correlation: c * index / (2 n_g fs).
double position_axis(double index, double sample_rate, double group_index);
// Nearest sample index for position z.
Eigen::Index position_index(double z, double sample_rate, double group_index);

// FFT cross-correlation against a fixed real reference, normalized by the
// reference energy. Output index = lag, length = received - reference + 1.
// The transform size is the next power of two >= received + reference.
template <typename Scalar>
class Correlator {
public:
    using Vector = ComplexVector<Scalar>;

    Correlator(const Eigen::Ref<const Eigen::VectorXf>& reference, Eigen::Index received_length)
        : reference_length_(reference.size()),
          received_length_(received_length),
          fft_(next_pow2(received_length + reference.size())) {
        if (reference_length_ == 0) throw SizeError("xcorr: empty reference");
        if (received_length_ < reference_length_) {
            throw SizeError("xcorr: received length " + std::to_string(received_length_) +
                            " shorter than reference " + std::to_string(reference_length_));
        }
        const double energy = reference.cast<double>().squaredNorm();
        if (!(energy > 0.0)) throw SizeError("xcorr: reference has zero energy");
        Vector padded = Vector::Zero(fft_.size());
        padded.head(reference_length_) = reference.cast<Scalar>().template cast<std::complex<Scalar>>();
        kernel_.resize(fft_.size());
        fft_.forward(kernel_, padded);
        kernel_ = kernel_.conjugate() / static_cast<Scalar>(energy);
        work_ = Vector::Zero(fft_.size());
        spectrum_.resize(fft_.size());
        result_.resize(fft_.size());
    }

    Eigen::Index output_length() const { return received_length_ - reference_length_ + 1; }
    Eigen::Index fft_size() const { return fft_.size(); }

    template <typename Derived>
    Vector operator()(const Eigen::MatrixBase<Derived>& received) {
        if (received.size() != received_length_) {
            throw SizeError("xcorr: received length " + std::to_string(received.size()) +
                            " differs from planned " + std::to_string(received_length_));
        }
        work_.setZero();
        work_.head(received_length_) = received.template cast<std::complex<Scalar>>();
        fft_.forward(spectrum_, work_);
        spectrum_.array() *= kernel_.array();
        fft_.inverse(result_, spectrum_);
        return result_.head(output_length());
    }

private:
    Eigen::Index reference_length_;
    Eigen::Index received_length_;
    PlannedFft<Scalar> fft_;
    Vector kernel_;
    Vector work_;
    Vector spectrum_;
    Vector result_;
};

template <typename Scalar, typename Derived>
ComplexVector<Scalar> xcorr(const Eigen::MatrixBase<Derived>& received,
                            const Eigen::Ref<const Eigen::VectorXf>& reference) {
    if (received.size() < reference.size()) {
        throw SizeError("xcorr: received shorter than reference");
    }
    Correlator<Scalar> correlator(reference, received.size());
    return correlator(received);
}

// Correlates both polarizations of a shot with the frame's code reference.
class ShotCompressor {
public:
    ShotCompressor(const ProbeFrame& frame, double group_index);

    CompressedProfile operator()(const Shot& shot);
    Sequence which() const { return which_; }

private:
    Sequence which_;
    double group_index_;
    double sample_rate_;
    Correlator<float> correlator_;
};

CompressedProfile compress_shot(const Shot& shot, const ProbeFrame& frame, double group_index);

// Combines profiles of consecutive A and B shots; the mean of the two, so an
// ideal reflector keeps its field amplitude. Timestamp is the midpoint.
CompressedProfile golay_compress(const CompressedProfile& a, const CompressedProfile& b);

// Keeps samples whose position lies in [window_start, window_end] (inclusive)
// and then every `decimate`-th of them.
CompressedProfile roi_gate(const CompressedProfile& profile, double window_start,
                           double window_end, int decimate = 1);

// Row period is the median timestamp spacing.
Waterfall stack_waterfall(std::span<const CompressedProfile> profiles);

}  // namespace ccotdr
