#pragma once

#include "ccotdr/common.hpp"
#include "ccotdr/fft.hpp"
#include "ccotdr/fiber.hpp"
#include "ccotdr/probe.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ccotdr {

struct LaserModel {
    double wavelength = 1550e-9;  // m
    double linewidth = 100.0;     // Hz
    std::uint64_t seed = 1;
};

struct NoiseModel {
    double awgn_sigma = 0.0;  // per sample per quadrature per polarization
    bool enabled = false;
};

struct Shot {
    std::int64_t index = 0;
    double timestamp = 0.0;
    Sequence which = Sequence::A;
    Eigen::VectorXcf iq_x;
    Eigen::VectorXcf iq_y;
    double sample_rate = 0.0;
};

// Wiener phase: phi[0] = 0, increments N(0, 2 pi linewidth Ts).
Eigen::VectorXd laser_phase_walk(double linewidth, Eigen::Index n, double sample_period,
                                 std::uint64_t seed);

// Round-trip polarization state seen from position z: uniform on the
// Poincare sphere at knots spaced correlation_length apart and interpolated
// between them, so nearby elements share a state. Unit norm.
struct Jones {
    cdouble x;
    cdouble y;
};
Jones polarization_state(std::uint64_t polarization_seed, double z, double correlation_length);

// Round-trip delay of position z in whole samples (nearest).
Eigen::Index round_trip_delay_samples(double z, double group_index, double sample_rate);

// Echo phase of an element at z with path change delta_opl, excluding laser
// phase noise.
double echo_phase(double z, double delta_opl, double group_index, double wavelength,
                  PhaseConvention convention);

// Simulates shots for one fibre and one probe frame. Holds FFT plans and the
// static part of every echo, so it is meant to be reused across shots. Not
// thread-safe; use one instance per worker.
class ShotSimulator {
public:
    ShotSimulator(const FiberModel& model, const ProbeFrame& frame,
                  const SensingConstants& constants, const LaserModel& laser);

    Shot simulate(std::span<const EnvironmentEvent> events, const NoiseModel& noise, double t,
                  std::uint64_t seed);

    const ProbeFrame& frame() const { return frame_; }

private:
    ProbeFrame frame_;
    SensingConstants constants_;
    LaserModel laser_;
    double group_index_;
    // Per element: position, delay in samples, and the static echo
    // (amplitude, attenuation, phase, Jones) in each polarization.
    Eigen::ArrayXd positions_;
    std::vector<Eigen::Index> delays_;
    Eigen::ArrayXcd static_x_;
    Eigen::ArrayXcd static_y_;
    Eigen::VectorXd transmit_;
    PlannedFft<double> fft_;
    ComplexVector<double> transmit_spectrum_;
};

Shot simulate_shot(const FiberModel& model, const ProbeFrame& frame,
                   std::span<const EnvironmentEvent> events, const SensingConstants& constants,
                   const LaserModel& laser, const NoiseModel& noise, double t, std::uint64_t seed);

struct FrameSpec {
    int samples_per_symbol = 2;
    Eigen::Index zero_pad_symbols = 0;
    double symbol_rate = 1e9;
};

struct CampaignSpec {
    double shot_rate = 2000.0;  // Hz
    double duration = 1.0;      // s
    std::uint64_t seed = 1;
    int workers = 1;
    std::size_t queue_depth = 16;
};

std::int64_t campaign_shot_count(const CampaignSpec& spec);

// Alternating A/B shots at i / shot_rate, delivered to sink in index order.
// Shot i draws its randomness from seed ^ i, so worker count does not change
// the stream.
void run_campaign(const FiberModel& model, const GolayPair& pair, const FrameSpec& frame,
                  std::span<const EnvironmentEvent> events, const SensingConstants& constants,
                  const LaserModel& laser, const NoiseModel& noise, const CampaignSpec& spec,
                  const std::function<void(Shot&&)>& sink);

std::vector<Shot> run_campaign(const FiberModel& model, const GolayPair& pair,
                               const FrameSpec& frame, std::span<const EnvironmentEvent> events,
                               const SensingConstants& constants, const LaserModel& laser,
                               const NoiseModel& noise, const CampaignSpec& spec);

}  // namespace ccotdr
