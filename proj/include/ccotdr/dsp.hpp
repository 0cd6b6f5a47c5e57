#pragma once

#include "ccotdr/common.hpp"
#include "ccotdr/compress.hpp"
#include "ccotdr/fiber.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ccotdr {

// Phase difference between two cells over time.
struct PhaseSeries {
    Eigen::VectorXd values;  // rad
    double sample_period = 0.0;
    double t0 = 0.0;  // time of values[0]
    double z1 = 0.0;
    double z2 = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, 1> low_confidence;

    Eigen::Index size() const { return values.size(); }
    Eigen::Index low_confidence_count() const { return low_confidence.count(); }
};

// Uniformly sampled derived quantity (phase slope, temperature).
struct SampledSeries {
    Eigen::VectorXd values;
    double sample_period = 0.0;
    double t0 = 0.0;

    Eigen::Index size() const { return values.size(); }
    double time(Eigen::Index i) const { return t0 + static_cast<double>(i) * sample_period; }
};

enum class TemperatureKind { core, chamber_estimate, reference };

struct TemperatureSeries : SampledSeries {
    TemperatureKind kind = TemperatureKind::core;
};

struct FbgSpectrum {
    int grating_index = 0;
    double position = 0.0;
    Eigen::VectorXd wavelengths;  // m
    Eigen::VectorXd powers;       // linear
    double bragg_estimate = 0.0;  // m
};

struct Gauge {
    double z1 = 0.0;
    double z2 = 0.0;
    double center() const { return 0.5 * (z1 + z2); }
    double length() const { return z2 - z1; }
};

struct Tone {
    double frequency = 0.0;  // Hz
    double power = 0.0;      // rad^2 (mean square of the fitted sinusoid)
};

// --- amplitude -------------------------------------------------------------

// 10 log10 of the row mean of |sample|^2 summed over polarizations.
Eigen::VectorXd mean_power_trace(const Waterfall& w);

// Row t holds | |w[t+1]| - |w[t]| | with polarization powers summed.
Eigen::MatrixXf amplitude_change_map(const Waterfall& w);

// Picks cells above the running Rayleigh median by min_margin_db (all cells
// when the margin is 0), collapses each run to its strongest cell and pairs
// them at >= gauge_length spacing.
std::vector<Gauge> select_gauges(const Eigen::VectorXd& power_db, double position_step,
                                 double origin, double min_margin_db, double gauge_length,
                                 Eigen::Index median_window = 201);

// --- phase -----------------------------------------------------------------

double wrap_phase(double x);  // into (-pi, pi]
Eigen::VectorXd unwrap(const Eigen::VectorXd& phase);

// Per polarization, mean power of every cell; the phase of a cell is read
// from the stronger one.
Eigen::VectorXi dominant_polarization(const Waterfall& w);

// arg(w(z2)) - arg(w(z1)) per row, unwrapped in time. Samples whose cell
// power is below noise_floor_power are flagged and linearly interpolated.
PhaseSeries differential_phase(const Waterfall& w, double z1, double z2,
                               double noise_floor_power = 0.0);
// Same with the two cells taken from separately gated waterfalls that share
// timestamps.
PhaseSeries differential_phase(const Waterfall& near, const Waterfall& far, double z1, double z2,
                               double noise_floor_power = 0.0);

// Differential phase grows negatively with optical path; path phase is its
// negation.
PhaseSeries to_path_phase(PhaseSeries p);

// Peak of the Hann-windowed, detrended power spectrum with log-parabolic
// interpolation. nullopt when the peak is not 6 dB above the spectral median.
std::optional<Tone> detect_tone(const PhaseSeries& p);

// Power of the Hann-windowed, detrended series at one frequency.
double tone_power_at(const Eigen::VectorXd& values, double sample_period, double frequency);

struct LocalizeOptions {
    double min_cell_power_db = -10.0;  // relative to the median cell power
    double noise_floor_power = 0.0;
};

// Scans gauges of gauge_length along the waterfall and returns the centre of
// the one with the largest tone power at `frequency`.
double localize_tone(const Waterfall& w, double frequency, double gauge_length,
                     const LocalizeOptions& options = {});

double phase_to_strain(double path_phase, double gauge, const SensingConstants& constants,
                       double wavelength, double group_index);
double strain_to_phase(double strain, double gauge, const SensingConstants& constants,
                       double wavelength, double group_index);

// --- temperature -----------------------------------------------------------

// Least-squares slope (rad/s) per non-overlapping window of `window` seconds.
SampledSeries phase_slope(const PhaseSeries& p, double window);

// dT/dt = slope * lambda / (2 pi L dn/dT), halved under double_pass,
// integrated (trapezoid) from start_temperature.
TemperatureSeries core_temperature_series(const SampledSeries& slopes, double span_length,
                                          double wavelength, double dn_dT,
                                          PhaseConvention convention,
                                          double start_temperature);

// Undoes a first-order lag: x = y + tau dy/dt, derivative by central
// differences of the moving-average smoothed series.
TemperatureSeries inverse_filter_chamber(const TemperatureSeries& core, double time_constant,
                                         int smoothing);

// --- gratings --------------------------------------------------------------

struct SweepPoint {
    double wavelength = 0.0;
    CompressedProfile profile;
};

std::vector<FbgSpectrum> fbg_spectra(std::span<const SweepPoint> sweep,
                                     std::span<const double> grating_positions,
                                     double resolution);

// Dominant period over grating index (in gratings); nullopt when flat or the
// period exceeds a third of the record.
std::optional<double> bragg_periodicity(const Eigen::VectorXd& bragg_estimates);

// Local maxima of a linear power trace above threshold within [z_start, z_end).
std::vector<double> find_peaks(const Eigen::VectorXd& power, double position_step, double origin,
                               double z_start, double z_end, double threshold);

}  // namespace ccotdr
