#pragma once

#include "ccotdr/common.hpp"
#include "ccotdr/fiber.hpp"
#include "ccotdr/probe.hpp"
#include "ccotdr/sim.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ccotdr {

// Line-based `section.key = value` configuration; `#` starts a comment.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    // "key=value"
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

enum class ScenarioKind { acoustic, thermal, fbg };

const char* to_string(ScenarioKind kind);

struct RoiWindow {
    double start = 0.0;
    double end = 0.0;
};

struct Scenario {
    std::string name = "scenario";
    ScenarioKind kind = ScenarioKind::acoustic;
    std::uint64_t seed = 1;

    // fibre
    double fiber_length = 100.0;
    double group_index = 1.468;
    double attenuation_db_per_km = 0.2;
    double scatterers_per_cell = 10.0;
    double scatterer_density = 0.0;  // per m; 0 derives it from scatterers_per_cell
    double scatterer_rms = 1e-4;     // sqrt(E|r|^2), field units
    std::optional<std::uint64_t> fiber_seed;
    std::optional<std::uint64_t> polarization_seed;
    double polarization_correlation_length = 10.0;  // m
    std::vector<PointReflector> reflectors;
    std::optional<FbgArraySpec> fbg;

    // probe
    int order = 11;
    double symbol_rate = 1e9;
    int samples_per_symbol = 2;
    std::optional<std::int64_t> zero_pad;  // unset: required pad plus margin
    std::int64_t pad_margin = 0;

    LaserModel laser;
    NoiseModel noise;
    std::optional<double> floor_snr_db;  // derives awgn_sigma when set

    SensingConstants constants;
    std::vector<EnvironmentEvent> events;

    // campaign
    double shot_rate = 2000.0;
    double duration = 1.0;
    int workers = 1;
    std::size_t queue_depth = 32;

    // analysis
    std::vector<RoiWindow> windows;  // empty: whole fibre
    double gauge_length = 4.0;
    double margin_db = 20.0;
    std::optional<double> tone_frequency;  // unset: detected
    double gauge_z1 = 0.0;
    double gauge_z2 = 0.0;
    double gauge_search = 1.0;
    std::optional<double> heated_length;  // unset: gauge_z2 - gauge_z1
    double slope_window = 2.7;
    int smoothing = 3;
    double initial_temperature = 30.0;
    double time_constant = 30.0;
    double dn_dT_calibration = 1e-5;
    double tone_window = 1.0;
    double noise_floor_db = 10.0;  // low-confidence threshold above the noise power

    // wavelength sweep (fbg)
    double sweep_start = 1549.5e-9;
    double sweep_step = 0.05e-9;
    int sweep_points = 21;
    double peak_window_start = 1.0;
    double peak_window_length = 2.0;

    // output
    std::string output_dir = "out";
    int map_time_stride = 10;
    int map_position_stride = 4;
    int waterfall_time_stride = 1;
};

// Builds a scenario from a config. Unknown keys and malformed values raise
// ConfigError naming the key.
Scenario build_scenario(const Config& config);

// Everything derived from a scenario that the stages need.
struct PreparedScenario {
    Scenario scenario;
    FiberModel model;
    GolayPair pair;
    FrameSpec frame;
    ProbeFrame frame_a;
    ProbeFrame frame_b;
    CampaignSpec campaign;
    NoiseModel noise;
    LaserModel laser;
    std::int64_t required_pad = 0;
    double resolution = 0.0;     // m
    double sample_rate = 0.0;    // Hz
    double position_step = 0.0;  // m
    double profile_span = 0.0;   // m covered by a compressed profile
    std::vector<RoiWindow> windows;
};

// Derives the fibre and frames and checks physical feasibility; raises
// ValidationError before any simulation when the scenario cannot run.
PreparedScenario prepare_scenario(const Scenario& scenario);

// AWGN sigma giving the requested single-shot Rayleigh-floor SNR after
// compression.
double awgn_sigma_for_floor_snr(double scatterer_density, double scatterer_rms,
                                double position_step, int samples_per_symbol,
                                Eigen::Index code_length, double snr_db);

}  // namespace ccotdr
