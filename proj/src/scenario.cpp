#include "ccotdr/scenario.hpp"

#include "ccotdr/compress.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace ccotdr {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Typed access to config values that remembers which keys were used.
class Reader {
public:
    explicit Reader(const Config& c) : config_(c) {}

    std::optional<std::string> raw(const std::string& key) {
        auto it = config_.values().find(key);
        if (it == config_.values().end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        return raw(key).value_or(fallback);
    }

    double number(const std::string& key, double fallback) {
        return optional_number(key).value_or(fallback);
    }

    std::optional<double> optional_number(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        return parse_double(key, *v);
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        return optional_integer(key).value_or(fallback);
    }

    std::optional<std::int64_t> optional_integer(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        std::int64_t out = 0;
        auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc{} || p != v->data() + v->size()) {
            throw ConfigError(key, "expected an integer, got '" + *v + "'");
        }
        return out;
    }

    bool flag(const std::string& key, bool fallback) {
        auto v = raw(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
        if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
        throw ConfigError(key, "expected true/false, got '" + *v + "'");
    }

    // Sorted distinct N for keys "prefix.N.*".
    std::vector<int> indices(const std::string& prefix) const {
        std::set<int> out;
        const std::string head = prefix + ".";
        for (const auto& [k, v] : config_.values()) {
            if (k.rfind(head, 0) != 0) continue;
            const auto dot = k.find('.', head.size());
            const std::string num = k.substr(head.size(), dot - head.size());
            int n = 0;
            auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
            if (ec != std::errc{} || p != num.data() + num.size() || dot == std::string::npos) {
                throw ConfigError(k, "expected " + prefix + ".<index>.<field>");
            }
            out.insert(n);
        }
        return {out.begin(), out.end()};
    }

    void reject_unused() const {
        for (const auto& [k, v] : config_.values()) {
            if (used_.count(k) == 0) throw ConfigError(k, "unknown key");
        }
    }

    static double parse_double(const std::string& key, const std::string& v) {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
            throw ConfigError(key, "expected a number, got '" + v + "'");
        }
        return out;
    }

private:
    const Config& config_;
    std::set<std::string> used_;
};

std::vector<std::pair<double, double>> parse_knots(const std::string& key, const std::string& text) {
    std::vector<std::pair<double, double>> knots;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError(key, "expected time:delta pairs");
        knots.emplace_back(Reader::parse_double(key, trim(item.substr(0, colon))),
                           Reader::parse_double(key, trim(item.substr(colon + 1))));
    }
    if (knots.empty()) throw ConfigError(key, "no knots given");
    return knots;
}

double positive(const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
    return v;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno), "expected 'key = value'");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno), "empty key");
        c.values_[key] = trim(t.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open config file");
    return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[trim(key)] = trim(value); }

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
        throw ConfigError(assignment, "override must look like key=value");
    }
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::acoustic: return "acoustic";
        case ScenarioKind::thermal: return "thermal";
        case ScenarioKind::fbg: return "fbg";
    }
    return "?";
}

Scenario build_scenario(const Config& config) {
    Reader r(config);
    Scenario s;

    s.name = r.text("scenario.name", s.name);
    const std::string kind = r.text("scenario.kind", "acoustic");
    if (kind == "acoustic") s.kind = ScenarioKind::acoustic;
    else if (kind == "thermal") s.kind = ScenarioKind::thermal;
    else if (kind == "fbg") s.kind = ScenarioKind::fbg;
    else throw ConfigError("scenario.kind", "expected acoustic, thermal or fbg, got '" + kind + "'");
    s.seed = static_cast<std::uint64_t>(r.integer("scenario.seed", 1));

    s.fiber_length = positive("fiber.length", r.number("fiber.length", s.fiber_length));
    s.group_index = r.number("fiber.group_index", s.group_index);
    s.attenuation_db_per_km = r.number("fiber.attenuation_db_per_km", s.attenuation_db_per_km);
    s.scatterers_per_cell = r.number("fiber.scatterers_per_cell", s.scatterers_per_cell);
    s.scatterer_density = r.number("fiber.scatterer_density", s.scatterer_density);
    s.scatterer_rms = r.number("fiber.scatterer_rms", s.scatterer_rms);
    if (auto v = r.optional_integer("fiber.seed")) s.fiber_seed = static_cast<std::uint64_t>(*v);
    if (auto v = r.optional_integer("fiber.polarization_seed")) s.polarization_seed = static_cast<std::uint64_t>(*v);
    s.polarization_correlation_length = positive("fiber.polarization_correlation_length",
        r.number("fiber.polarization_correlation_length", s.polarization_correlation_length));

    for (int i : r.indices("reflector")) {
        const std::string p = "reflector." + std::to_string(i) + ".";
        PointReflector ref;
        auto pos = r.optional_number(p + "position");
        if (!pos) throw ConfigError(p + "position", "missing");
        ref.position = *pos;
        ref.power_reflectivity_db = r.number(p + "db", -40.0);
        if (ref.power_reflectivity_db > 0.0) throw ConfigError(p + "db", "must be <= 0 dB");
        s.reflectors.push_back(ref);
    }

    if (r.optional_integer("fbg.count")) {
        FbgArraySpec f;
        f.count = static_cast<int>(*r.optional_integer("fbg.count"));
        f.spacing = positive("fbg.spacing", r.number("fbg.spacing", f.spacing));
        f.start = r.number("fbg.start", f.start);
        f.base_wavelength = r.number("fbg.base_wavelength_nm", f.base_wavelength * 1e9) * 1e-9;
        f.variation_amplitude = r.number("fbg.variation_amplitude_nm", 0.0) * 1e-9;
        f.variation_period = positive("fbg.variation_period", r.number("fbg.variation_period", f.variation_period));
        f.sigma = positive("fbg.sigma_nm", r.number("fbg.sigma_nm", f.sigma * 1e9)) * 1e-9;
        f.peak_amplitude = r.number("fbg.peak_amplitude", f.peak_amplitude);
        s.fbg = f;
    }

    s.order = static_cast<int>(r.integer("probe.order", s.order));
    s.symbol_rate = positive("probe.symbol_rate", r.number("probe.symbol_rate", s.symbol_rate));
    s.samples_per_symbol = static_cast<int>(r.integer("probe.samples_per_symbol", s.samples_per_symbol));
    if (s.samples_per_symbol < 1) throw ConfigError("probe.samples_per_symbol", "must be >= 1");
    if (auto v = r.raw("probe.zero_pad"); v && *v != "auto") {
        s.zero_pad = r.optional_integer("probe.zero_pad");
        if (*s.zero_pad < 0) throw ConfigError("probe.zero_pad", "must be >= 0");
    }
    s.pad_margin = r.integer("probe.pad_margin", s.pad_margin);

    s.laser.wavelength = r.number("laser.wavelength_nm", 1550.0) * 1e-9;
    s.laser.linewidth = r.number("laser.linewidth", s.laser.linewidth);
    if (s.laser.linewidth < 0.0) throw ConfigError("laser.linewidth", "must be >= 0");
    if (auto v = r.optional_integer("laser.seed")) s.laser.seed = static_cast<std::uint64_t>(*v);
    else s.laser.seed = derive_seed(s.seed, 3);

    s.noise.enabled = r.flag("noise.enabled", s.noise.enabled);
    s.noise.awgn_sigma = r.number("noise.awgn_sigma", s.noise.awgn_sigma);
    if (s.noise.awgn_sigma < 0.0) throw ConfigError("noise.awgn_sigma", "must be >= 0");
    s.floor_snr_db = r.optional_number("noise.floor_snr_db");

    s.constants.strain_optic_factor = r.number("sensing.strain_optic_factor", s.constants.strain_optic_factor);
    if (!(s.constants.strain_optic_factor > 0.0 && s.constants.strain_optic_factor <= 1.0)) {
        throw ConfigError("sensing.strain_optic_factor", "must lie in (0, 1]");
    }
    const std::string conv = r.text("sensing.phase_convention", "single_pass");
    if (conv == "single_pass") s.constants.convention = PhaseConvention::single_pass;
    else if (conv == "double_pass") s.constants.convention = PhaseConvention::double_pass;
    else throw ConfigError("sensing.phase_convention", "expected single_pass or double_pass");

    for (int i : r.indices("event")) {
        const std::string p = "event." + std::to_string(i) + ".";
        const std::string k = r.text(p + "kind", "");
        auto start = r.optional_number(p + "start");
        auto end = r.optional_number(p + "end");
        if (!start) throw ConfigError(p + "start", "missing");
        if (!end) throw ConfigError(p + "end", "missing");
        if (k == "strain_tone") {
            StrainTone e;
            e.start = *start;
            e.end = *end;
            e.frequency = r.number(p + "frequency", 0.0);
            e.phase = r.number(p + "phase", 0.0);
            if (auto amp = r.optional_number(p + "elongation")) {
                e.peak_elongation = *amp;
            } else if (auto rad = r.optional_number(p + "phase_amplitude")) {
                // Elongation whose path phase peaks at `rad` under the configured convention.
                e.peak_elongation = *rad * s.laser.wavelength /
                                    (2.0 * kPi * s.group_index * s.constants.strain_optic_factor *
                                     convention_factor(s.constants.convention));
            } else {
                throw ConfigError(p + "elongation", "missing (or give phase_amplitude)");
            }
            s.events.emplace_back(e);
        } else if (k == "temperature_profile") {
            TemperatureProfile e;
            e.start = *start;
            e.end = *end;
            auto knots = r.raw(p + "knots");
            if (!knots) throw ConfigError(p + "knots", "missing");
            e.knots = parse_knots(p + "knots", *knots);
            e.dn_dT = r.number(p + "dn_dT", e.dn_dT);
            e.time_constant = r.number(p + "time_constant", e.time_constant);
            s.events.emplace_back(e);
        } else {
            throw ConfigError(p + "kind", "expected strain_tone or temperature_profile, got '" + k + "'");
        }
    }

    s.shot_rate = positive("campaign.shot_rate", r.number("campaign.shot_rate", s.shot_rate));
    s.duration = positive("campaign.duration", r.number("campaign.duration", s.duration));
    s.workers = static_cast<int>(r.integer("campaign.workers", s.workers));
    if (s.workers < 1) throw ConfigError("campaign.workers", "must be >= 1");
    s.queue_depth = static_cast<std::size_t>(std::max<std::int64_t>(1, r.integer("campaign.queue_depth", 32)));

    for (int i : r.indices("window")) {
        const std::string p = "window." + std::to_string(i) + ".";
        auto a = r.optional_number(p + "start");
        auto b = r.optional_number(p + "end");
        if (!a || !b) throw ConfigError(p + (a ? "end" : "start"), "missing");
        s.windows.push_back({*a, *b});
    }
    s.gauge_length = positive("analysis.gauge_length", r.number("analysis.gauge_length", s.gauge_length));
    s.margin_db = r.number("analysis.margin_db", s.margin_db);
    s.tone_frequency = r.optional_number("analysis.tone_frequency");
    s.gauge_z1 = r.number("analysis.gauge_z1", s.gauge_z1);
    s.gauge_z2 = r.number("analysis.gauge_z2", s.gauge_z2);
    s.gauge_search = r.number("analysis.gauge_search", s.gauge_search);
    s.heated_length = r.optional_number("analysis.heated_length");
    s.slope_window = positive("analysis.slope_window", r.number("analysis.slope_window", s.slope_window));
    s.smoothing = static_cast<int>(r.integer("analysis.smoothing", s.smoothing));
    s.initial_temperature = r.number("analysis.initial_temperature", s.initial_temperature);
    s.time_constant = positive("analysis.time_constant", r.number("analysis.time_constant", s.time_constant));
    s.dn_dT_calibration = positive("analysis.dn_dT", r.number("analysis.dn_dT", s.dn_dT_calibration));
    s.tone_window = positive("analysis.tone_window", r.number("analysis.tone_window", s.tone_window));
    s.noise_floor_db = r.number("analysis.noise_floor_db", s.noise_floor_db);

    s.sweep_start = r.number("sweep.start_nm", s.sweep_start * 1e9) * 1e-9;
    s.sweep_step = positive("sweep.step_nm", r.number("sweep.step_nm", s.sweep_step * 1e9)) * 1e-9;
    s.sweep_points = static_cast<int>(r.integer("sweep.points", s.sweep_points));
    if (s.sweep_points < 3) throw ConfigError("sweep.points", "must be >= 3");
    s.peak_window_start = r.number("sweep.peak_window_start", s.peak_window_start);
    s.peak_window_length = positive("sweep.peak_window_length", r.number("sweep.peak_window_length", s.peak_window_length));

    s.output_dir = r.text("output.dir", s.output_dir);
    s.map_time_stride = static_cast<int>(std::max<std::int64_t>(1, r.integer("output.map_time_stride", s.map_time_stride)));
    s.map_position_stride = static_cast<int>(std::max<std::int64_t>(1, r.integer("output.map_position_stride", s.map_position_stride)));
    s.waterfall_time_stride = static_cast<int>(std::max<std::int64_t>(1, r.integer("output.waterfall_time_stride", s.waterfall_time_stride)));

    r.reject_unused();
    return s;
}

double awgn_sigma_for_floor_snr(double scatterer_density, double scatterer_rms,
                                double position_step, int samples_per_symbol,
                                Eigen::Index code_length, double snr_db) {
    // Compressed point response is a triangle spanning +-sps samples.
    double weight = 0.0;
    for (int j = -samples_per_symbol + 1; j < samples_per_symbol; ++j) {
        const double w = 1.0 - std::abs(j) / static_cast<double>(samples_per_symbol);
        weight += w * w;
    }
    const double floor_power = scatterer_density * position_step * scatterer_rms * scatterer_rms * weight;
    const double energy = static_cast<double>(code_length) * samples_per_symbol;
    // Single shot, per polarization: signal floor/2, noise 2 sigma^2 / energy.
    const double snr = std::pow(10.0, snr_db / 10.0);
    return std::sqrt(floor_power * energy / (4.0 * snr));
}

PreparedScenario prepare_scenario(const Scenario& s) {
    PreparedScenario p;
    p.scenario = s;
    if (s.order < 0 || s.order > kMaxGolayOrder) {
        throw ValidationError("probe.order " + std::to_string(s.order) + " outside [0, 20]");
    }
    p.pair = golay_pair(s.order);
    p.resolution = spatial_resolution(s.symbol_rate, s.group_index);
    p.sample_rate = s.symbol_rate * s.samples_per_symbol;
    p.position_step = position_axis(1.0, p.sample_rate, s.group_index);
    p.required_pad = required_zero_pad(s.fiber_length, s.group_index, s.symbol_rate);

    p.frame.samples_per_symbol = s.samples_per_symbol;
    p.frame.symbol_rate = s.symbol_rate;
    p.frame.zero_pad_symbols = s.zero_pad.value_or(p.required_pad + s.pad_margin);
    if (p.frame.zero_pad_symbols < p.required_pad) {
        throw ValidationError("probe.zero_pad " + std::to_string(p.frame.zero_pad_symbols) +
                              " below the " + std::to_string(p.required_pad) +
                              " symbols needed for " + std::to_string(s.fiber_length) + " m");
    }
    p.frame_a = build_frame(p.pair, Sequence::A, s.samples_per_symbol, p.frame.zero_pad_symbols, s.symbol_rate);
    p.frame_b = build_frame(p.pair, Sequence::B, s.samples_per_symbol, p.frame.zero_pad_symbols, s.symbol_rate);
    if (s.kind != ScenarioKind::fbg && s.shot_rate > 1.0 / p.frame_a.duration()) {
        throw ValidationError("campaign.shot_rate " + std::to_string(s.shot_rate) +
                              " Hz exceeds 1 / frame duration (" +
                              std::to_string(1.0 / p.frame_a.duration()) + " Hz)");
    }

    FiberModel& m = p.model;
    m.length = s.fiber_length;
    m.group_index = s.group_index;
    m.attenuation_db_per_km = s.attenuation_db_per_km;
    m.wavelength = s.laser.wavelength;
    m.polarization_seed = s.polarization_seed.value_or(derive_seed(s.seed, 2));
    m.polarization_correlation_length = s.polarization_correlation_length;
    const double density =
        s.scatterer_density > 0.0 ? s.scatterer_density : s.scatterers_per_cell / p.resolution;
    try {
        if (s.scatterer_rms > 0.0) {
            m.scatterers = generate_scatterers(s.fiber_length, density, s.scatterer_rms,
                                               s.fiber_seed.value_or(derive_seed(s.seed, 1)));
        }
        for (const auto& ref : s.reflectors) m = add_point_reflector(std::move(m), ref.position, ref.power_reflectivity_db);
        if (s.fbg) m.fbgs = build_fbg_array(*s.fbg, s.fiber_length);
        m.validate();
        for (const auto& e : s.events) validate_event(e, m);
    } catch (const RangeError& e) {
        throw ValidationError(e.what());
    } catch (const SizeError& e) {
        throw ValidationError(e.what());
    }

    p.laser = s.laser;
    p.noise = s.noise;
    if (s.floor_snr_db && p.noise.enabled) {
        p.noise.awgn_sigma = awgn_sigma_for_floor_snr(density, s.scatterer_rms, p.position_step,
                                                      s.samples_per_symbol, p.pair.length(),
                                                      *s.floor_snr_db);
    }

    p.campaign.shot_rate = s.shot_rate;
    p.campaign.duration = s.duration;
    p.campaign.seed = derive_seed(s.seed, 4);
    p.campaign.workers = s.workers;
    p.campaign.queue_depth = s.queue_depth;

    const Eigen::Index profile_len = p.frame_a.sample_count() - p.frame_a.code_samples() + 1;
    p.profile_span = static_cast<double>(profile_len - 1) * p.position_step;
    p.windows = s.windows;
    if (p.windows.empty()) p.windows.push_back({0.0, std::min(s.fiber_length, p.profile_span)});
    for (const auto& w : p.windows) {
        if (!(w.end >= w.start) || w.start < 0.0 || w.end > p.profile_span) {
            throw ValidationError("window [" + std::to_string(w.start) + ", " + std::to_string(w.end) +
                                  "] outside profile span [0, " + std::to_string(p.profile_span) + "]");
        }
    }
    auto in_fiber = [&](double z) { return z >= 0.0 && z <= s.fiber_length; };
    if (s.kind == ScenarioKind::thermal) {
        if (!(s.gauge_z1 < s.gauge_z2) || !in_fiber(s.gauge_z1) || !in_fiber(s.gauge_z2)) {
            throw ValidationError("analysis.gauge_z1/gauge_z2 must be ordered and inside the fibre");
        }
    }
    if (s.gauge_length > s.fiber_length) {
        throw ValidationError("analysis.gauge_length exceeds the fibre length");
    }
    return p;
}

}  // namespace ccotdr
