#pragma once

#include "ccotdr/common.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace ccotdr {

struct Scatterer {
    double position = 0.0;      // m
    cdouble reflectivity{};     // field amplitude
};

struct PointReflector {
    double position = 0.0;               // m
    double power_reflectivity_db = 0.0;  // relative to probe power, <= 0

    double amplitude() const;
};

struct Fbg {
    double position = 0.0;          // m
    double bragg_wavelength = 0.0;  // m
    double spectral_sigma = 0.0;    // m
    double peak_amplitude = 0.0;    // field amplitude at the Bragg wavelength
};

struct FiberModel {
    double length = 0.0;                 // m
    double group_index = 1.468;
    double attenuation_db_per_km = 0.2;  // one-way
    double wavelength = 1550e-9;         // nominal, m
    std::uint64_t polarization_seed = 1;
    double polarization_correlation_length = 10.0;  // m
    std::vector<Scatterer> scatterers;
    std::vector<PointReflector> reflectors;
    std::vector<Fbg> fbgs;

    // Throws RangeError when an element or constant is out of bounds.
    void validate() const;

    // Positions in canonical element order: scatterers, reflectors, gratings.
    Eigen::VectorXd element_positions() const;
    Eigen::Index element_count() const;
};

// Uniform strain tone over [start, end]; downstream elements carry the full
// path change.
struct StrainTone {
    double start = 0.0;
    double end = 0.0;
    double peak_elongation = 0.0;  // m
    double frequency = 0.0;        // Hz
    double phase = 0.0;            // rad
};

// Piecewise-linear temperature excursion over [start, end], seen by the
// fibre core through a first-order lag.
struct TemperatureProfile {
    double start = 0.0;
    double end = 0.0;
    std::vector<std::pair<double, double>> knots;  // (t s, delta T K), increasing t
    double dn_dT = 1e-5;                           // 1/K
    double time_constant = 0.0;                    // s

    double excursion_at(double t) const;
    double core_excursion_at(double t) const;
};

using EnvironmentEvent = std::variant<StrainTone, TemperatureProfile>;

// Throws RangeError when the event's span leaves the fibre or its constants
// are out of range.
void validate_event(const EnvironmentEvent& event, const FiberModel& model);

struct SensingConstants {
    double strain_optic_factor = 0.79;
    PhaseConvention convention = PhaseConvention::single_pass;
};

std::vector<Scatterer> generate_scatterers(double length, double density, double mean_amplitude,
                                           std::uint64_t seed);

FiberModel add_point_reflector(FiberModel model, double position, double power_reflectivity_db);

struct FbgArraySpec {
    int count = 1;
    double spacing = 0.05;
    double start = 0.0;
    double base_wavelength = 1550e-9;
    double variation_amplitude = 0.0;  // m
    double variation_period = 10.0;    // gratings
    double sigma = 0.1e-9;
    double peak_amplitude = 1e-2;
};

// Throws RangeError when the array runs past fiber_length.
std::vector<Fbg> build_fbg_array(const FbgArraySpec& spec, double fiber_length);

cdouble fbg_reflectivity(const Fbg& grating, double probe_wavelength);

// Optical path change at position z and time t summed over events.
double optical_path_delta(std::span<const EnvironmentEvent> events,
                          const SensingConstants& constants, double group_index, double z,
                          double t);

// Per-element optical path change in element_positions() order.
Eigen::VectorXd apply_environment(const FiberModel& model,
                                  std::span<const EnvironmentEvent> events,
                                  const SensingConstants& constants, double t);

// Precomputed time factors for one instant; evaluates many positions cheaply.
class EnvironmentSnapshot {
public:
    EnvironmentSnapshot(std::span<const EnvironmentEvent> events, const SensingConstants& constants,
                        double group_index, double t);

    double operator()(double z) const;
    Eigen::ArrayXd operator()(const Eigen::ArrayXd& z) const;
    bool empty() const { return terms_.empty(); }

private:
    struct Term {
        double start;
        double end;
        double scale;  // path change for full overlap
    };
    std::vector<Term> terms_;
};

}  // namespace ccotdr
