#pragma once

#include "ccotdr/compress.hpp"
#include "ccotdr/dsp.hpp"
#include "ccotdr/scenario.hpp"
#include "ccotdr/sim.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ccotdr {

// Appends profiles row by row into a Waterfall without keeping the profiles.
class WaterfallBuilder {
public:
    explicit WaterfallBuilder(Eigen::Index expected_rows = 0) : expected_rows_(expected_rows) {}

    // Throws GeometryError when the profile does not match earlier rows and
    // OrderingError when its timestamp does not increase.
    void append(const CompressedProfile& profile);
    Eigen::Index rows() const { return rows_; }
    // Throws SizeError when nothing was appended.
    Waterfall finish();

private:
    Eigen::Index expected_rows_;
    Eigen::Index rows_ = 0;
    std::vector<ComplexMatrix<float>> planes_;
    std::vector<double> timestamps_;
    double position_step_ = 0.0;
    double origin_ = 0.0;
};

// --- acquisition -------------------------------------------------------------

// Shots in a scenario's stream: the campaign, or one A/B pair per sweep point.
std::int64_t scenario_shot_count(const PreparedScenario& p);
double sweep_wavelength(const PreparedScenario& p, std::int64_t point);

// Simulates every shot of the scenario in index order.
void simulate_shots(const PreparedScenario& p, const std::function<void(Shot&&)>& sink);

// Consumes consecutive A/B shots and emits one gated profile per ROI window
// for every completed pair.
class PairCompressor {
public:
    explicit PairCompressor(const PreparedScenario& p);
    std::optional<std::vector<CompressedProfile>> push(const Shot& shot);

private:
    const PreparedScenario& prepared_;
    ShotCompressor compress_a_;
    ShotCompressor compress_b_;
    std::optional<CompressedProfile> pending_a_;
};

// What the analyses consume.
struct Acquisition {
    std::vector<Waterfall> windows;  // acoustic / thermal, one per ROI window
    std::vector<SweepPoint> sweep;   // fbg, first ROI window per wavelength
};

// Collects pair profiles (one per window) into an Acquisition.
class AcquisitionBuilder {
public:
    explicit AcquisitionBuilder(const PreparedScenario& p);
    void push(std::vector<CompressedProfile>&& pair_profiles);
    Acquisition finish();

private:
    const PreparedScenario& prepared_;
    std::vector<WaterfallBuilder> builders_;
    std::vector<SweepPoint> sweep_;
};

// Runs simulate -> compress -> assemble as three threads joined by bounded
// queues. Output does not depend on the worker count.
Acquisition acquire(const PreparedScenario& p);

// Timestamp of pair profile `pair` (midpoint of its two shots).
double pair_timestamp(const PreparedScenario& p, std::int64_t pair);

// --- analysis --------------------------------------------------------------

struct AcousticReport {
    std::optional<Tone> tone;         // at the best gauge
    std::optional<double> position;   // centre of the best gauge
    std::optional<Gauge> best_gauge;
    std::vector<Gauge> reflector_gauges;
    double change_ratio = 0.0;        // event cells vs. the rest, time-mean change
    Eigen::VectorXd power_db;
    double position_step = 0.0;
    double origin = 0.0;
    Eigen::MatrixXf change_map;       // strided
    Eigen::VectorXd change_map_times;
    Eigen::VectorXd change_map_positions;
    std::vector<Gauge> grid;          // phase waterfall gauges
    Eigen::MatrixXd grid_phase;       // rows x gauges, path phase
    Eigen::VectorXd grid_times;
    Eigen::VectorXd grid_tone_power;  // per gauge, at the detected frequency
};

struct ThermalReport {
    std::optional<Tone> tone;
    Gauge gauge;
    double heated_length = 0.0;
    std::optional<double> dn_dT_estimate;
    Eigen::Index low_confidence = 0;
    SampledSeries slopes;
    TemperatureSeries core;
    TemperatureSeries chamber;
    TemperatureSeries reference;      // ground-truth chamber temperature
    double chamber_rmse = 0.0;        // after the first 3 tau
    double core_rate_error = 0.0;     // relative RMS error of dT/dt vs. truth
};

struct FbgReport {
    std::vector<FbgSpectrum> spectra;
    std::vector<double> configured;   // Bragg wavelengths of the model
    std::optional<double> periodicity;
    double max_bragg_error = 0.0;     // m
    int resolved = 0;                 // gratings with a clear dip to each neighbour
    std::vector<double> window_peaks; // positions inside the peak window
    double resolution = 0.0;
};

struct ScenarioReport {
    std::string name;
    ScenarioKind kind = ScenarioKind::acoustic;
    std::optional<AcousticReport> acoustic;
    std::optional<ThermalReport> thermal;
    std::optional<FbgReport> fbg;

    // Deterministic text for summary.txt.
    std::vector<std::string> summary() const;
};

ScenarioReport analyze(const PreparedScenario& p, const Acquisition& acquisition);

// Writes the CSV files that apply and summary.txt.
void write_outputs(const PreparedScenario& p, const ScenarioReport& report,
                   const std::filesystem::path& dir);

// --- stage files -----------------------------------------------------------

void write_shot_file(const PreparedScenario& p, const std::filesystem::path& path);
void compress_shot_file(const PreparedScenario& p, const std::filesystem::path& shots,
                        const std::filesystem::path& profiles);
Acquisition read_profile_file(const PreparedScenario& p, const std::filesystem::path& profiles);

}  // namespace ccotdr
