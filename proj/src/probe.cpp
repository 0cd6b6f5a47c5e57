#include "ccotdr/probe.hpp"

#include <cmath>
#include <string>

namespace ccotdr {

GolayPair golay_pair(int order) {
    if (order < 0 || order > kMaxGolayOrder) {
        throw SizeError("golay_pair: order " + std::to_string(order) + " outside [0, " +
                        std::to_string(kMaxGolayOrder) + "]");
    }
    Eigen::VectorXi a = Eigen::VectorXi::Ones(1);
    Eigen::VectorXi b = Eigen::VectorXi::Ones(1);
    for (int k = 0; k < order; ++k) {
        const Eigen::Index n = a.size();
        Eigen::VectorXi next_a(2 * n);
        Eigen::VectorXi next_b(2 * n);
        next_a << a, b;
        next_b << a, -b;
        a = std::move(next_a);
        b = std::move(next_b);
    }
    return {std::move(a), std::move(b), order};
}

ProbeFrame build_frame(const GolayPair& pair, Sequence which, int samples_per_symbol,
                       Eigen::Index zero_pad_symbols, double symbol_rate) {
    if (samples_per_symbol < 1) throw RangeError("build_frame: samples_per_symbol must be >= 1");
    if (zero_pad_symbols < 0) throw RangeError("build_frame: zero_pad_symbols must be >= 0");
    if (!(symbol_rate > 0.0)) throw RangeError("build_frame: symbol_rate must be > 0");

    const Eigen::VectorXi& code = pair.sequence(which);
    ProbeFrame frame;
    frame.symbols = Eigen::VectorXi::Zero(code.size() + zero_pad_symbols);
    frame.symbols.head(code.size()) = code;
    frame.code_length = code.size();
    frame.symbol_rate = symbol_rate;
    frame.samples_per_symbol = samples_per_symbol;
    frame.which = which;
    return frame;
}

Eigen::VectorXf ProbeFrame::samples() const {
    Eigen::VectorXf out = Eigen::VectorXf::Zero(sample_count());
    for (Eigen::Index i = 0; i < code_length; ++i) {
        out.segment(i * samples_per_symbol, samples_per_symbol).setConstant(
            static_cast<float>(symbols[i]));
    }
    return out;
}

Eigen::VectorXf ProbeFrame::reference() const { return samples().head(code_samples()); }

std::int64_t required_zero_pad(double fiber_length, double group_index, double symbol_rate) {
    if (fiber_length < 0.0) throw RangeError("required_zero_pad: negative fibre length");
    const double round_trip = 2.0 * fiber_length * group_index / kSpeedOfLight;
    return static_cast<std::int64_t>(std::ceil(symbol_rate * round_trip));
}

double spatial_resolution(double symbol_rate, double group_index) {
    if (!(symbol_rate > 0.0)) throw RangeError("spatial_resolution: symbol_rate must be > 0");
    return kSpeedOfLight / (2.0 * group_index * symbol_rate);
}

}  // namespace ccotdr
