#include "ccotdr/pipeline.hpp"

#include "ccotdr/parallel.hpp"
#include "ccotdr/trace_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace ccotdr {

namespace {

// Shortest round-trip text for CSV values.
std::string num(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

// Fixed-precision text for the summary.
std::string fixed(double v, int precision) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, precision);
    return std::string(buf.data(), end);
}

std::string sci(double v, int precision) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific, precision);
    return std::string(buf.data(), end);
}

struct StopRequested {};

Eigen::VectorXd cell_power_linear(const Waterfall& w) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(w.cells());
    for (const auto& plane : w.planes) p += plane.cwiseAbs2().cast<double>().colwise().mean().transpose();
    return p;
}

// Position of the strongest cell within z +- half_width.
double strongest_position(const Waterfall& w, const Eigen::VectorXd& power, double z, double half_width) {
    const Eigen::Index lo = w.cell_index(std::max(z - half_width, w.position(0)));
    const Eigen::Index hi = w.cell_index(std::min(z + half_width, w.position(w.cells() - 1)));
    Eigen::Index best = lo;
    for (Eigen::Index c = lo; c <= hi; ++c) {
        if (power[c] > power[best]) best = c;
    }
    return w.position(best);
}

bool contains(const Waterfall& w, double z) {
    return w.cells() > 0 && z >= w.position(0) - 0.5 * w.position_step &&
           z <= w.position(w.cells() - 1) + 0.5 * w.position_step;
}

// Noise power per polarization in one cell of a pair-combined profile.
double noise_floor_power(const PreparedScenario& p) {
    if (!p.noise.enabled || p.noise.awgn_sigma <= 0.0) return 0.0;
    const double energy = static_cast<double>(p.pair.length()) * p.scenario.samples_per_symbol;
    const double sigma2 = p.noise.awgn_sigma * p.noise.awgn_sigma;
    return std::pow(10.0, p.scenario.noise_floor_db / 10.0) * sigma2 / energy;
}

PhaseSeries slice(const PhaseSeries& p, Eigen::Index start, Eigen::Index count) {
    PhaseSeries out = p;
    count = std::min(count, p.size() - start);
    out.values = p.values.segment(start, count);
    out.low_confidence = p.low_confidence.segment(start, count);
    out.t0 = p.t0 + static_cast<double>(start) * p.sample_period;
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
    return out;
}

}  // namespace

// --- WaterfallBuilder --------------------------------------------------------

void WaterfallBuilder::append(const CompressedProfile& profile) {
    if (rows_ == 0) {
        position_step_ = profile.position_step;
        origin_ = profile.origin;
        const Eigen::Index capacity = std::max<Eigen::Index>(expected_rows_, 1);
        planes_.assign(static_cast<std::size_t>(profile.polarizations()),
                       ComplexMatrix<float>(capacity, profile.size()));
        timestamps_.reserve(static_cast<std::size_t>(capacity));
    } else {
        if (profile.size() != planes_.front().cols() ||
            profile.polarizations() != static_cast<Eigen::Index>(planes_.size()) ||
            profile.position_step != position_step_ || profile.origin != origin_) {
            throw GeometryError("waterfall row " + std::to_string(rows_) + " has a different geometry");
        }
        if (!(profile.timestamp > timestamps_.back())) {
            throw OrderingError("waterfall row " + std::to_string(rows_) + " is not later than its predecessor");
        }
    }
    if (rows_ == planes_.front().rows()) {
        for (auto& plane : planes_) plane.conservativeResize(2 * rows_, Eigen::NoChange);
    }
    for (std::size_t p = 0; p < planes_.size(); ++p) {
        planes_[p].row(rows_) = profile.samples.col(static_cast<Eigen::Index>(p)).transpose();
    }
    timestamps_.push_back(profile.timestamp);
    ++rows_;
}

Waterfall WaterfallBuilder::finish() {
    if (rows_ == 0) throw SizeError("waterfall: no rows");
    Waterfall w;
    w.position_step = position_step_;
    w.origin = origin_;
    for (auto& plane : planes_) {
        if (plane.rows() != rows_) plane.conservativeResize(rows_, Eigen::NoChange);
    }
    w.planes = std::move(planes_);
    w.timestamps = Eigen::Map<const Eigen::VectorXd>(timestamps_.data(), rows_);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < timestamps_.size(); ++i) gaps.push_back(timestamps_[i] - timestamps_[i - 1]);
    if (!gaps.empty()) {
        auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
        std::nth_element(gaps.begin(), mid, gaps.end());
        w.row_period = *mid;
    }
    rows_ = 0;
    timestamps_.clear();
    return w;
}

// --- acquisition ---------------------------------------------------------------

std::int64_t scenario_shot_count(const PreparedScenario& p) {
    if (p.scenario.kind == ScenarioKind::fbg) return 2 * static_cast<std::int64_t>(p.scenario.sweep_points);
    return campaign_shot_count(p.campaign);
}

double sweep_wavelength(const PreparedScenario& p, std::int64_t point) {
    return p.scenario.sweep_start + static_cast<double>(point) * p.scenario.sweep_step;
}

double pair_timestamp(const PreparedScenario& p, std::int64_t pair) {
    return (2.0 * static_cast<double>(pair) + 0.5) / p.campaign.shot_rate;
}

void simulate_shots(const PreparedScenario& p, const std::function<void(Shot&&)>& sink) {
    const Scenario& s = p.scenario;
    if (s.kind != ScenarioKind::fbg) {
        run_campaign(p.model, p.pair, p.frame, s.events, s.constants, p.laser, p.noise, p.campaign, sink);
        return;
    }
    // Static fibre probed with one A/B pair per sweep wavelength.
    for (std::int64_t k = 0; k < s.sweep_points; ++k) {
        LaserModel laser = p.laser;
        laser.wavelength = sweep_wavelength(p, k);
        for (std::int64_t j = 0; j < 2; ++j) {
            const std::int64_t i = 2 * k + j;
            ShotSimulator sim(p.model, j == 0 ? p.frame_a : p.frame_b, s.constants, laser);
            Shot shot = sim.simulate(s.events, p.noise, static_cast<double>(i) / p.campaign.shot_rate,
                                     p.campaign.seed ^ static_cast<std::uint64_t>(i));
            shot.index = i;
            sink(std::move(shot));
        }
    }
}

PairCompressor::PairCompressor(const PreparedScenario& p)
    : prepared_(p),
      compress_a_(p.frame_a, p.scenario.group_index),
      compress_b_(p.frame_b, p.scenario.group_index) {}

std::optional<std::vector<CompressedProfile>> PairCompressor::push(const Shot& shot) {
    if (shot.which == Sequence::A) {
        if (pending_a_) throw OrderingError("shot " + std::to_string(shot.index) + ": two A shots in a row");
        pending_a_ = compress_a_(shot);
        return std::nullopt;
    }
    if (!pending_a_) throw OrderingError("shot " + std::to_string(shot.index) + ": B shot without a preceding A");
    CompressedProfile pair = golay_compress(*pending_a_, compress_b_(shot));
    pending_a_.reset();
    // Same value the stage files reconstruct from the pair index.
    pair.timestamp = pair_timestamp(prepared_, shot.index / 2);
    std::vector<CompressedProfile> out;
    out.reserve(prepared_.windows.size());
    for (const auto& w : prepared_.windows) out.push_back(roi_gate(pair, w.start, w.end));
    return out;
}

AcquisitionBuilder::AcquisitionBuilder(const PreparedScenario& p) : prepared_(p) {
    if (p.scenario.kind != ScenarioKind::fbg) {
        const Eigen::Index rows = scenario_shot_count(p) / 2;
        builders_.assign(p.windows.size(), WaterfallBuilder(rows));
    }
}

void AcquisitionBuilder::push(std::vector<CompressedProfile>&& pair_profiles) {
    if (pair_profiles.size() != prepared_.windows.size()) {
        throw GeometryError("expected " + std::to_string(prepared_.windows.size()) +
                            " window profiles per pair, got " + std::to_string(pair_profiles.size()));
    }
    if (prepared_.scenario.kind == ScenarioKind::fbg) {
        const auto k = static_cast<std::int64_t>(sweep_.size());
        if (k >= prepared_.scenario.sweep_points) throw SizeError("more sweep profiles than sweep points");
        sweep_.push_back({sweep_wavelength(prepared_, k), std::move(pair_profiles.front())});
        return;
    }
    for (std::size_t i = 0; i < builders_.size(); ++i) builders_[i].append(pair_profiles[i]);
}

Acquisition AcquisitionBuilder::finish() {
    Acquisition a;
    for (auto& b : builders_) a.windows.push_back(b.finish());
    a.sweep = std::move(sweep_);
    return a;
}

Acquisition acquire(const PreparedScenario& p) {
    const std::size_t depth = std::max<std::size_t>(p.campaign.queue_depth, 1);
    BoundedQueue<Shot> shots(depth);
    BoundedQueue<std::vector<CompressedProfile>> pairs(depth);
    std::exception_ptr sim_error;
    std::exception_ptr compress_error;
    std::exception_ptr sink_error;

    std::thread simulate([&] {
        try {
            simulate_shots(p, [&](Shot&& s) {
                if (!shots.push(std::move(s))) throw StopRequested{};
            });
        } catch (const StopRequested&) {
        } catch (...) {
            sim_error = std::current_exception();
        }
        shots.close();
    });
    std::thread compress([&] {
        try {
            PairCompressor compressor(p);
            while (auto shot = shots.pop()) {
                if (auto out = compressor.push(*shot)) {
                    if (!pairs.push(std::move(*out))) break;
                }
            }
        } catch (...) {
            compress_error = std::current_exception();
        }
        shots.close();
        pairs.close();
    });

    AcquisitionBuilder builder(p);
    try {
        while (auto profiles = pairs.pop()) builder.push(std::move(*profiles));
    } catch (...) {
        sink_error = std::current_exception();
        shots.close();
        pairs.close();
    }
    simulate.join();
    compress.join();
    for (const auto& e : {sim_error, compress_error, sink_error}) {
        if (e) std::rethrow_exception(e);
    }
    return builder.finish();
}

// --- analysis ------------------------------------------------------------------

namespace {

AcousticReport analyze_acoustic(const PreparedScenario& p, const Acquisition& acq) {
    const Scenario& s = p.scenario;
    const Waterfall& w = acq.windows.front();
    AcousticReport r;
    r.position_step = w.position_step;
    r.origin = w.origin;
    r.power_db = mean_power_trace(w);
    const Eigen::VectorXd power = cell_power_linear(w);
    const double floor = noise_floor_power(p);

    // Fingerprint change, time-averaged inside and outside the strain events.
    const Eigen::MatrixXf change = amplitude_change_map(w);
    if (change.rows() > 0) {
        const Eigen::VectorXd mean_change = change.cast<double>().colwise().mean().transpose();
        double inside = 0.0, outside = 0.0;
        Eigen::Index n_in = 0, n_out = 0;
        for (Eigen::Index c = 0; c < w.cells(); ++c) {
            const double z = w.position(c);
            bool in_event = false;
            for (const auto& e : s.events) {
                if (const auto* tone = std::get_if<StrainTone>(&e)) {
                    in_event = in_event || (z >= tone->start && z <= tone->end);
                }
            }
            if (in_event) {
                inside += mean_change[c];
                ++n_in;
            } else {
                outside += mean_change[c];
                ++n_out;
            }
        }
        if (n_in > 0 && n_out > 0 && outside > 0.0) r.change_ratio = (inside / n_in) / (outside / n_out);

        const int ts = s.map_time_stride;
        const int ps = s.map_position_stride;
        const Eigen::Index rows = (change.rows() + ts - 1) / ts;
        const Eigen::Index cols = (change.cols() + ps - 1) / ps;
        r.change_map.resize(rows, cols);
        r.change_map_times.resize(rows);
        r.change_map_positions.resize(cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            r.change_map_times[i] = w.timestamps[i * ts + 1];
            for (Eigen::Index j = 0; j < cols; ++j) r.change_map(i, j) = change(i * ts, j * ps);
        }
        for (Eigen::Index j = 0; j < cols; ++j) r.change_map_positions[j] = w.position(j * ps);
    }

    try {
        r.reflector_gauges = select_gauges(r.power_db, w.position_step, w.origin, s.margin_db, s.gauge_length);
    } catch (const DetectionError&) {
    }

    // Grid of adjacent gauges; endpoints snap to the strongest nearby cell.
    const double snap = std::min(s.gauge_search, 0.25 * s.gauge_length);
    const double first = w.position(0);
    const double last = w.position(w.cells() - 1);
    for (double z1 = first; z1 + s.gauge_length <= last + 1e-9; z1 += s.gauge_length) {
        r.grid.push_back({strongest_position(w, power, z1, snap),
                          strongest_position(w, power, z1 + s.gauge_length, snap)});
    }
    r.grid_phase.resize(w.rows(), static_cast<Eigen::Index>(r.grid.size()));
    r.grid_times = w.timestamps;
    std::optional<Tone> grid_best;
    for (std::size_t g = 0; g < r.grid.size(); ++g) {
        if (!(r.grid[g].z1 < r.grid[g].z2)) {
            r.grid_phase.col(static_cast<Eigen::Index>(g)).setZero();
            continue;
        }
        const PhaseSeries ph = to_path_phase(differential_phase(w, r.grid[g].z1, r.grid[g].z2, floor));
        r.grid_phase.col(static_cast<Eigen::Index>(g)) = ph.values;
        if (ph.size() >= 64) {
            if (auto t = detect_tone(ph); t && (!grid_best || t->power > grid_best->power)) grid_best = t;
        }
    }
    const std::optional<double> frequency =
        s.tone_frequency ? s.tone_frequency : (grid_best ? std::optional<double>(grid_best->frequency) : std::nullopt);
    r.grid_tone_power = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(r.grid.size()));
    if (!frequency) return r;
    for (Eigen::Index g = 0; g < r.grid_tone_power.size(); ++g) {
        r.grid_tone_power[g] = tone_power_at(r.grid_phase.col(g), w.row_period, *frequency);
    }

    try {
        LocalizeOptions opts;
        opts.noise_floor_power = floor;
        r.position = localize_tone(w, *frequency, s.gauge_length, opts);
    } catch (const DetectionError&) {
        return r;
    }
    const double half = 0.5 * s.gauge_length;
    Gauge g{std::max(*r.position - half, first), std::min(*r.position + half, last)};
    r.best_gauge = g;
    const PhaseSeries ph = to_path_phase(differential_phase(w, g.z1, g.z2, floor));
    if (ph.size() >= 64) r.tone = detect_tone(ph);
    return r;
}

ThermalReport analyze_thermal(const PreparedScenario& p, const Acquisition& acq) {
    const Scenario& s = p.scenario;
    ThermalReport r;
    auto window_for = [&](double z) -> const Waterfall& {
        for (const auto& w : acq.windows) {
            if (contains(w, z)) return w;
        }
        throw ValidationError("no ROI window covers gauge end " + std::to_string(z) + " m");
    };
    const Waterfall& near = window_for(s.gauge_z1);
    const Waterfall& far = window_for(s.gauge_z2);
    r.gauge.z1 = strongest_position(near, cell_power_linear(near), s.gauge_z1, s.gauge_search);
    r.gauge.z2 = strongest_position(far, cell_power_linear(far), s.gauge_z2, s.gauge_search);
    r.heated_length = s.heated_length.value_or(r.gauge.length());

    const PhaseSeries phase =
        to_path_phase(differential_phase(near, far, r.gauge.z1, r.gauge.z2, noise_floor_power(p)));
    r.low_confidence = phase.low_confidence_count();
    const auto tone_rows = static_cast<Eigen::Index>(std::llround(s.tone_window / phase.sample_period));
    if (tone_rows >= 64) r.tone = detect_tone(slice(phase, 0, tone_rows));

    r.slopes = phase_slope(phase, s.slope_window);
    r.core = core_temperature_series(r.slopes, r.heated_length, s.laser.wavelength, s.dn_dT_calibration,
                                     s.constants.convention, s.initial_temperature);
    r.chamber = inverse_filter_chamber(r.core, s.time_constant, s.smoothing);

    const TemperatureProfile* truth = nullptr;
    for (const auto& e : s.events) {
        if (const auto* t = std::get_if<TemperatureProfile>(&e)) {
            truth = t;
            break;
        }
    }
    r.reference = r.chamber;
    r.reference.kind = TemperatureKind::reference;
    if (!truth) {
        r.reference.values.setConstant(s.initial_temperature);
        return r;
    }
    for (Eigen::Index i = 0; i < r.reference.size(); ++i) {
        r.reference.values[i] = s.initial_temperature + truth->excursion_at(r.reference.time(i));
    }

    // dn/dT from the phase slopes against the reference core heating rate
    // over the same windows.
    const double per_window = r.slopes.sample_period;
    const double gain = 2.0 * kPi * r.heated_length * convention_factor(s.constants.convention) / s.laser.wavelength;
    double sxy = 0.0, sxx = 0.0, err2 = 0.0, peak_rate = 0.0;
    const double tc_half = 0.5 * (per_window - phase.sample_period);
    for (Eigen::Index k = 0; k < r.slopes.size(); ++k) {
        const double t = r.slopes.time(k);
        const double rate = (truth->core_excursion_at(t + tc_half) - truth->core_excursion_at(t - tc_half)) /
                            (2.0 * tc_half);
        const double x = gain * rate;
        sxy += x * r.slopes.values[k];
        sxx += x * x;
        const double est = r.slopes.values[k] / (gain * s.dn_dT_calibration);
        err2 += (est - rate) * (est - rate);
        peak_rate = std::max(peak_rate, std::abs(rate));
    }
    if (sxx > 0.0) r.dn_dT_estimate = sxy / sxx;
    if (peak_rate > 0.0 && r.slopes.size() > 0) {
        r.core_rate_error = std::sqrt(err2 / static_cast<double>(r.slopes.size())) / peak_rate;
    }

    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < r.chamber.size(); ++i) {
        if (r.chamber.time(i) < 3.0 * s.time_constant) continue;
        const double d = r.chamber.values[i] - r.reference.values[i];
        sum += d * d;
        ++count;
    }
    r.chamber_rmse = count > 0 ? std::sqrt(sum / static_cast<double>(count)) : 0.0;
    return r;
}

FbgReport analyze_fbg(const PreparedScenario& p, const Acquisition& acq) {
    const Scenario& s = p.scenario;
    FbgReport r;
    r.resolution = p.resolution;
    std::vector<double> positions;
    for (const auto& g : p.model.fbgs) {
        positions.push_back(g.position);
        r.configured.push_back(g.bragg_wavelength);
    }
    if (positions.empty() || acq.sweep.empty()) return r;
    r.spectra = fbg_spectra(acq.sweep, positions, p.resolution);

    Eigen::VectorXd estimates(static_cast<Eigen::Index>(r.spectra.size()));
    for (std::size_t k = 0; k < r.spectra.size(); ++k) {
        estimates[static_cast<Eigen::Index>(k)] = r.spectra[k].bragg_estimate;
        r.max_bragg_error = std::max(r.max_bragg_error, std::abs(r.spectra[k].bragg_estimate - r.configured[k]));
    }
    if (estimates.size() >= 6) r.periodicity = bragg_periodicity(estimates);

    // Peak reflection over the sweep for every cell.
    const CompressedProfile& first = acq.sweep.front().profile;
    Eigen::VectorXd trace = Eigen::VectorXd::Zero(first.size());
    for (const auto& point : acq.sweep) {
        trace = trace.cwiseMax(point.profile.samples.cwiseAbs2().rowwise().sum().cast<double>());
    }
    auto cell = [&](double z) {
        return std::clamp<Eigen::Index>(std::llround((z - first.origin) / first.position_step), 0, first.size() - 1);
    };
    auto peak_near = [&](double z) {
        const Eigen::Index c = cell(z);
        const Eigen::Index lo = std::max<Eigen::Index>(0, c - 1);
        return trace.segment(lo, std::min<Eigen::Index>(first.size() - 1, c + 1) - lo + 1).maxCoeff();
    };
    // A grating is resolved when the trace dips below half the smaller
    // neighbouring peak on every side that has a neighbour.
    for (std::size_t k = 0; k < positions.size(); ++k) {
        bool ok = true;
        for (int side : {-1, 1}) {
            const auto j = static_cast<std::ptrdiff_t>(k) + side;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(positions.size())) continue;
            const double za = std::min(positions[k], positions[static_cast<std::size_t>(j)]);
            const double zb = std::max(positions[k], positions[static_cast<std::size_t>(j)]);
            const Eigen::Index a = cell(za) + 1, b = cell(zb) - 1;
            if (b < a) {
                ok = false;
                continue;
            }
            const double dip = trace.segment(a, b - a + 1).minCoeff();
            ok = ok && dip < 0.5 * std::min(peak_near(za), peak_near(zb));
        }
        if (ok) ++r.resolved;
    }

    const double z0 = s.peak_window_start;
    const double z1 = s.peak_window_start + s.peak_window_length;
    double window_max = 0.0;
    for (Eigen::Index c = 0; c < first.size(); ++c) {
        const double z = first.position(c);
        if (z >= z0 && z < z1) window_max = std::max(window_max, trace[c]);
    }
    if (window_max > 0.0) {
        r.window_peaks = find_peaks(trace, first.position_step, first.origin, z0, z1, 0.01 * window_max);
    }
    return r;
}

}  // namespace

ScenarioReport analyze(const PreparedScenario& p, const Acquisition& acquisition) {
    ScenarioReport report;
    report.name = p.scenario.name;
    report.kind = p.scenario.kind;
    switch (p.scenario.kind) {
        case ScenarioKind::acoustic:
            if (acquisition.windows.empty()) throw SizeError("acoustic analysis needs a waterfall");
            report.acoustic = analyze_acoustic(p, acquisition);
            break;
        case ScenarioKind::thermal:
            if (acquisition.windows.empty()) throw SizeError("thermal analysis needs a waterfall");
            report.thermal = analyze_thermal(p, acquisition);
            break;
        case ScenarioKind::fbg:
            report.fbg = analyze_fbg(p, acquisition);
            break;
    }
    return report;
}

std::vector<std::string> ScenarioReport::summary() const {
    std::vector<std::string> out;
    out.push_back("scenario: " + name);
    out.push_back(std::string("kind: ") + to_string(kind));
    if (acoustic) {
        const auto& a = *acoustic;
        out.push_back("tone_frequency_hz: " + (a.tone ? fixed(a.tone->frequency, 3) : std::string("none")));
        out.push_back("tone_position_m: " + (a.position ? fixed(*a.position, 3) : std::string("none")));
        if (a.best_gauge) {
            out.push_back("tone_gauge_m: " + fixed(a.best_gauge->z1, 3) + " " + fixed(a.best_gauge->z2, 3));
        }
        out.push_back("change_ratio_event_cells: " + fixed(a.change_ratio, 3));
        std::string peaks;
        for (const auto& g : a.reflector_gauges) peaks += (peaks.empty() ? "" : " ") + fixed(g.z1, 3) + "-" + fixed(g.z2, 3);
        out.push_back("reflector_gauges_m: " + (peaks.empty() ? std::string("none") : peaks));
        if (a.power_db.size() > 0) {
            Eigen::Index at = 0;
            const double peak = a.power_db.maxCoeff(&at);
            out.push_back("power_peak_m: " + fixed(a.origin + static_cast<double>(at) * a.position_step, 3) +
                          " (" + fixed(peak, 2) + " dB)");
        }
    }
    if (thermal) {
        const auto& t = *thermal;
        out.push_back("tone_frequency_hz: " + (t.tone ? fixed(t.tone->frequency, 3) : std::string("none")));
        out.push_back("gauge_m: " + fixed(t.gauge.z1, 3) + " " + fixed(t.gauge.z2, 3));
        out.push_back("heated_length_m: " + fixed(t.heated_length, 3));
        out.push_back("low_confidence_rows: " + std::to_string(t.low_confidence));
        out.push_back("dn_dT_estimate_per_k: " + (t.dn_dT_estimate ? sci(*t.dn_dT_estimate, 4) : std::string("none")));
        out.push_back("slope_window_s: " + fixed(t.slopes.sample_period, 3));
        if (t.core.size() > 0) {
            out.push_back("core_temperature_c: min " + fixed(t.core.values.minCoeff(), 3) + " max " +
                          fixed(t.core.values.maxCoeff(), 3));
            out.push_back("chamber_estimate_c: min " + fixed(t.chamber.values.minCoeff(), 3) + " max " +
                          fixed(t.chamber.values.maxCoeff(), 3));
        }
        out.push_back("core_rate_relative_rms_error: " + fixed(t.core_rate_error, 4));
        out.push_back("chamber_rmse_k: " + fixed(t.chamber_rmse, 4));
    }
    if (fbg) {
        const auto& f = *fbg;
        out.push_back("gratings: " + std::to_string(f.spectra.size()));
        out.push_back("gratings_resolved: " + std::to_string(f.resolved));
        out.push_back("spatial_resolution_m: " + fixed(f.resolution, 5));
        out.push_back("max_bragg_error_nm: " + fixed(f.max_bragg_error * 1e9, 5));
        out.push_back("periodicity_gratings: " + (f.periodicity ? fixed(*f.periodicity, 3) : std::string("none")));
        out.push_back("peaks_in_window: " + std::to_string(f.window_peaks.size()));
    }
    return out;
}

void write_outputs(const PreparedScenario& p, const ScenarioReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Scenario& s = p.scenario;
    if (report.acoustic) {
        const auto& a = *report.acoustic;
        {
            auto out = open_output(dir / "power_trace.csv");
            out << "position_m,power_db\n";
            for (Eigen::Index i = 0; i < a.power_db.size(); ++i) {
                out << num(a.origin + static_cast<double>(i) * a.position_step) << ',' << num(a.power_db[i]) << '\n';
            }
        }
        {
            auto out = open_output(dir / "change_map.csv");
            out << "time_s,position_m,amplitude_change\n";
            for (Eigen::Index i = 0; i < a.change_map.rows(); ++i) {
                for (Eigen::Index j = 0; j < a.change_map.cols(); ++j) {
                    out << num(a.change_map_times[i]) << ',' << num(a.change_map_positions[j]) << ','
                        << num(a.change_map(i, j)) << '\n';
                }
            }
        }
        {
            auto out = open_output(dir / "phase_waterfall.csv");
            out << "time_s,gauge_center_m,z1_m,z2_m,path_phase_rad\n";
            for (Eigen::Index i = 0; i < a.grid_phase.rows(); i += s.waterfall_time_stride) {
                for (std::size_t g = 0; g < a.grid.size(); ++g) {
                    out << num(a.grid_times[i]) << ',' << num(a.grid[g].center()) << ',' << num(a.grid[g].z1)
                        << ',' << num(a.grid[g].z2) << ',' << num(a.grid_phase(i, static_cast<Eigen::Index>(g)))
                        << '\n';
                }
            }
        }
        {
            auto out = open_output(dir / "tones.csv");
            out << "source,position_m,z1_m,z2_m,frequency_hz,power_rad2\n";
            const double f = a.tone ? a.tone->frequency : 0.0;
            if (a.position && a.best_gauge && a.tone) {
                out << "localized," << num(*a.position) << ',' << num(a.best_gauge->z1) << ','
                    << num(a.best_gauge->z2) << ',' << num(f) << ',' << num(a.tone->power) << '\n';
            }
            if (a.tone) {
                for (std::size_t g = 0; g < a.grid.size(); ++g) {
                    out << "gauge," << num(a.grid[g].center()) << ',' << num(a.grid[g].z1) << ','
                        << num(a.grid[g].z2) << ',' << num(f) << ','
                        << num(a.grid_tone_power[static_cast<Eigen::Index>(g)]) << '\n';
                }
            }
        }
    }
    if (report.thermal) {
        const auto& t = *report.thermal;
        auto out = open_output(dir / "temperature.csv");
        out << "time_s,phase_slope_rad_per_s,core_c,chamber_estimate_c,chamber_reference_c\n";
        for (Eigen::Index i = 0; i < t.core.size(); ++i) {
            out << num(t.core.time(i)) << ',' << num(t.slopes.values[i]) << ',' << num(t.core.values[i]) << ','
                << num(t.chamber.values[i]) << ',' << num(t.reference.values[i]) << '\n';
        }
        auto tones = open_output(dir / "tones.csv");
        tones << "source,position_m,z1_m,z2_m,frequency_hz,power_rad2\n";
        if (t.tone) {
            tones << "gauge," << num(t.gauge.center()) << ',' << num(t.gauge.z1) << ',' << num(t.gauge.z2) << ','
                  << num(t.tone->frequency) << ',' << num(t.tone->power) << '\n';
        }
    }
    if (report.fbg) {
        const auto& f = *report.fbg;
        auto out = open_output(dir / "fbg_spectra.csv");
        out << "grating,position_m,wavelength_nm,power,bragg_estimate_nm,bragg_configured_nm\n";
        for (std::size_t k = 0; k < f.spectra.size(); ++k) {
            const auto& sp = f.spectra[k];
            for (Eigen::Index i = 0; i < sp.wavelengths.size(); ++i) {
                out << sp.grating_index << ',' << num(sp.position) << ',' << num(sp.wavelengths[i] * 1e9) << ','
                    << num(sp.powers[i]) << ',' << num(sp.bragg_estimate * 1e9) << ','
                    << num(f.configured[k] * 1e9) << '\n';
            }
        }
    }
    auto out = open_output(dir / "summary.txt");
    for (const auto& line : report.summary()) out << line << '\n';
}

// --- stage files ---------------------------------------------------------------

void write_shot_file(const PreparedScenario& p, const std::filesystem::path& path) {
    auto out = open_output(path);
    simulate_shots(p, [&](Shot&& shot) { write_trace(out, to_record(shot, p.scenario.group_index)); });
    out.flush();
    if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

void compress_shot_file(const PreparedScenario& p, const std::filesystem::path& shots,
                        const std::filesystem::path& profiles) {
    std::ifstream in(shots, std::ios::binary);
    if (!in) throw std::filesystem::filesystem_error("cannot read", shots, std::make_error_code(std::errc::io_error));
    auto out = open_output(profiles);
    TraceReader reader(in);
    PairCompressor compressor(p);
    std::int64_t index = 0;
    while (auto record = reader.next()) {
        if (record->kind != RecordKind::raw_shot || record->samples.rows() != p.frame_a.sample_count()) {
            throw FormatError("shot record " + std::to_string(index) + " does not match the scenario frame");
        }
        Shot shot;
        shot.index = index;
        shot.which = index % 2 == 0 ? Sequence::A : Sequence::B;
        shot.timestamp = static_cast<double>(index) / p.campaign.shot_rate;
        shot.sample_rate = record->sample_rate;
        shot.iq_x = record->samples.col(0);
        shot.iq_y = record->samples.col(1);
        if (auto gated = compressor.push(shot)) {
            for (const auto& profile : *gated) write_trace(out, to_record(profile, p.sample_rate));
        }
        ++index;
    }
    if (index != scenario_shot_count(p)) {
        throw FormatError("shot file holds " + std::to_string(index) + " shots, scenario expects " +
                          std::to_string(scenario_shot_count(p)));
    }
}

Acquisition read_profile_file(const PreparedScenario& p, const std::filesystem::path& profiles) {
    std::ifstream in(profiles, std::ios::binary);
    if (!in) throw std::filesystem::filesystem_error("cannot read", profiles, std::make_error_code(std::errc::io_error));
    TraceReader reader(in);
    AcquisitionBuilder builder(p);
    const std::size_t per_pair = p.windows.size();
    std::vector<CompressedProfile> current;
    std::int64_t pair = 0;
    while (auto record = reader.next()) {
        current.push_back(to_profile(*record, pair_timestamp(p, pair)));
        if (current.size() == per_pair) {
            builder.push(std::move(current));
            current.clear();
            ++pair;
        }
    }
    if (!current.empty()) throw FormatError("profile file ends inside a pair");
    return builder.finish();
}

}  // namespace ccotdr
