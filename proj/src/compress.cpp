#include "ccotdr/compress.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccotdr {

double position_axis(double index, double sample_rate, double group_index) {
    return kSpeedOfLight * index / (2.0 * group_index * sample_rate);
}

Eigen::Index position_index(double z, double sample_rate, double group_index) {
    return static_cast<Eigen::Index>(std::llround(z * 2.0 * group_index * sample_rate / kSpeedOfLight));
}

Eigen::Index Waterfall::cell_index(double z) const {
    const double f = (z - origin) / position_step;
    const auto i = static_cast<Eigen::Index>(std::llround(f));
    if (i < 0 || i >= cells()) {
        throw RangeError("position " + std::to_string(z) + " m outside waterfall span");
    }
    return i;
}

ShotCompressor::ShotCompressor(const ProbeFrame& frame, double group_index)
    : which_(frame.which),
      group_index_(group_index),
      sample_rate_(frame.sample_rate()),
      correlator_(frame.reference(), frame.sample_count()) {}

CompressedProfile ShotCompressor::operator()(const Shot& shot) {
    CompressedProfile p;
    const Eigen::Index n = correlator_.output_length();
    p.samples.resize(n, 2);
    p.samples.col(0) = correlator_(shot.iq_x);
    p.samples.col(1) = correlator_(shot.iq_y);
    p.position_step = position_axis(1.0, sample_rate_, group_index_);
    p.origin = 0.0;
    p.timestamp = shot.timestamp;
    return p;
}

CompressedProfile compress_shot(const Shot& shot, const ProbeFrame& frame, double group_index) {
    ShotCompressor c(frame, group_index);
    return c(shot);
}

namespace {

bool same_geometry(double step_a, double origin_a, Eigen::Index len_a, double step_b,
                   double origin_b, Eigen::Index len_b) {
    const double tol = 1e-9 * std::max(1.0, std::abs(step_a));
    return len_a == len_b && std::abs(step_a - step_b) <= tol &&
           std::abs(origin_a - origin_b) <= 1e-9 * std::max(1.0, std::abs(origin_a));
}

}  // namespace

CompressedProfile golay_compress(const CompressedProfile& a, const CompressedProfile& b) {
    if (!same_geometry(a.position_step, a.origin, a.size(), b.position_step, b.origin, b.size()) ||
        a.polarizations() != b.polarizations()) {
        throw GeometryError("golay_compress: A and B profiles differ in geometry");
    }
    CompressedProfile out;
    out.samples = (a.samples + b.samples) * 0.5f;
    out.position_step = a.position_step;
    out.origin = a.origin;
    out.timestamp = 0.5 * (a.timestamp + b.timestamp);
    return out;
}

CompressedProfile roi_gate(const CompressedProfile& profile, double window_start,
                           double window_end, int decimate) {
    if (decimate < 1) throw RangeError("roi_gate: decimate must be >= 1");
    if (!(window_end >= window_start)) throw RangeError("roi_gate: empty window");
    const double span_end = profile.position(profile.size() - 1);
    const double slack = 1e-9 * std::max(1.0, std::abs(span_end));
    if (window_start < profile.origin - slack || window_end > span_end + slack) {
        throw RangeError("roi_gate: window [" + std::to_string(window_start) + ", " +
                         std::to_string(window_end) + "] outside profile span [" +
                         std::to_string(profile.origin) + ", " + std::to_string(span_end) + "]");
    }
    const double eps = 1e-9;
    const auto first = static_cast<Eigen::Index>(
        std::ceil((window_start - profile.origin) / profile.position_step - eps));
    const auto last = static_cast<Eigen::Index>(
        std::floor((window_end - profile.origin) / profile.position_step + eps));
    const Eigen::Index lo = std::max<Eigen::Index>(first, 0);
    const Eigen::Index hi = std::min<Eigen::Index>(last, profile.size() - 1);
    if (hi < lo) throw RangeError("roi_gate: window contains no samples");
    const Eigen::Index kept = (hi - lo) / decimate + 1;

    CompressedProfile out;
    out.samples.resize(kept, profile.polarizations());
    for (Eigen::Index k = 0; k < kept; ++k) out.samples.row(k) = profile.samples.row(lo + k * decimate);
    out.position_step = profile.position_step * decimate;
    out.origin = profile.position(lo);
    out.timestamp = profile.timestamp;
    return out;
}

Waterfall stack_waterfall(std::span<const CompressedProfile> profiles) {
    if (profiles.empty()) throw SizeError("stack_waterfall: no profiles");
    const auto& first = profiles.front();
    const auto rows = static_cast<Eigen::Index>(profiles.size());
    for (std::size_t i = 1; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        if (!same_geometry(first.position_step, first.origin, first.size(), p.position_step,
                           p.origin, p.size()) ||
            p.polarizations() != first.polarizations()) {
            throw GeometryError("stack_waterfall: profile " + std::to_string(i) +
                                " differs in geometry");
        }
        if (!(p.timestamp > profiles[i - 1].timestamp)) {
            throw OrderingError("stack_waterfall: timestamps not increasing at row " +
                                std::to_string(i));
        }
    }

    Waterfall w;
    w.position_step = first.position_step;
    w.origin = first.origin;
    w.timestamps.resize(rows);
    w.planes.assign(static_cast<std::size_t>(first.polarizations()),
                    ComplexMatrix<float>(rows, first.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& p = profiles[static_cast<std::size_t>(r)];
        w.timestamps[r] = p.timestamp;
        for (Eigen::Index pol = 0; pol < p.polarizations(); ++pol) {
            w.planes[static_cast<std::size_t>(pol)].row(r) = p.samples.col(pol).transpose();
        }
    }
    if (rows > 1) {
        std::vector<double> gaps(static_cast<std::size_t>(rows - 1));
        for (Eigen::Index r = 1; r < rows; ++r) gaps[static_cast<std::size_t>(r - 1)] = w.timestamps[r] - w.timestamps[r - 1];
        auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
        std::nth_element(gaps.begin(), mid, gaps.end());
        w.row_period = *mid;
    }
    return w;
}

}  // namespace ccotdr
