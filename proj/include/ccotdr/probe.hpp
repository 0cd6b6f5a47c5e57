#pragma once

#include "ccotdr/common.hpp"

#include <cstdint>

namespace ccotdr {

inline constexpr int kMaxGolayOrder = 20;

// Complementary Golay pair of length 2^order with entries in {+1, -1}.
struct GolayPair {
    Eigen::VectorXi seq_a;
    Eigen::VectorXi seq_b;
    int order = 0;

    Eigen::Index length() const { return seq_a.size(); }
    const Eigen::VectorXi& sequence(Sequence which) const {
        return which == Sequence::A ? seq_a : seq_b;
    }
};

// One BPSK probe frame: the code (held at one symbol per entry) followed by
// zero padding, transmitted with rectangular pulses of samples_per_symbol.
struct ProbeFrame {
    Eigen::VectorXi symbols;  // code symbols then padding zeros
    Eigen::Index code_length = 0;
    double symbol_rate = 0.0;  // Hz
    int samples_per_symbol = 1;
    Sequence which = Sequence::A;

    Eigen::Index pad_symbols() const { return symbols.size() - code_length; }
    Eigen::Index sample_count() const { return symbols.size() * samples_per_symbol; }
    Eigen::Index code_samples() const { return code_length * samples_per_symbol; }
    double sample_rate() const { return symbol_rate * samples_per_symbol; }
    double duration() const { return static_cast<double>(symbols.size()) / symbol_rate; }

    // Per-sample transmit amplitudes over the whole frame.
    Eigen::VectorXf samples() const;
    // Per-sample code waveform without the padding; the correlation reference.
    Eigen::VectorXf reference() const;
};

// Recursive doubling a' = a|b, b' = a|-b starting from ([+1], [+1]).
GolayPair golay_pair(int order);

ProbeFrame build_frame(const GolayPair& pair, Sequence which, int samples_per_symbol,
                       Eigen::Index zero_pad_symbols, double symbol_rate);

// Smallest padding (in symbols) that keeps a single frame in flight on a
// fibre of the given length: ceil(R * 2 L n_g / c).
std::int64_t required_zero_pad(double fiber_length, double group_index, double symbol_rate);

// Two-point resolution c / (2 n_g R) in metres.
double spatial_resolution(double symbol_rate, double group_index);

}  // namespace ccotdr
