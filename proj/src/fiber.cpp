#include "ccotdr/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ccotdr {

namespace {

void check_position(double z, double length, const char* what) {
    if (!(z >= 0.0 && z <= length)) {
        throw RangeError(std::string(what) + " position " + std::to_string(z) +
                         " m outside fibre [0, " + std::to_string(length) + "]");
    }
}

// Fraction of [start, end] lying upstream of z.
double overlap_fraction(double z, double start, double end) {
    if (end <= start) return z >= start ? 1.0 : 0.0;
    return std::clamp((z - start) / (end - start), 0.0, 1.0);
}

}  // namespace

double PointReflector::amplitude() const { return std::pow(10.0, power_reflectivity_db / 20.0); }

void FiberModel::validate() const {
    if (!(length > 0.0)) throw RangeError("fiber length must be > 0");
    if (!(group_index >= 1.4 && group_index <= 1.6)) {
        throw RangeError("group index " + std::to_string(group_index) + " outside [1.4, 1.6]");
    }
    if (!(attenuation_db_per_km >= 0.0)) throw RangeError("attenuation must be >= 0");
    if (!(polarization_correlation_length > 0.0)) throw RangeError("polarization correlation length must be > 0");
    for (const auto& s : scatterers) {
        check_position(s.position, length, "scatterer");
        if (!(std::abs(s.reflectivity) > 0.0)) throw RangeError("scatterer with zero reflectivity");
    }
    for (const auto& r : reflectors) {
        check_position(r.position, length, "reflector");
        if (r.power_reflectivity_db > 0.0) throw RangeError("reflector above 0 dB");
    }
    for (const auto& g : fbgs) {
        check_position(g.position, length, "grating");
        if (!(g.spectral_sigma > 0.0)) throw RangeError("grating spectral sigma must be > 0");
    }
}

Eigen::Index FiberModel::element_count() const {
    return static_cast<Eigen::Index>(scatterers.size() + reflectors.size() + fbgs.size());
}

Eigen::VectorXd FiberModel::element_positions() const {
    Eigen::VectorXd z(element_count());
    Eigen::Index k = 0;
    for (const auto& s : scatterers) z[k++] = s.position;
    for (const auto& r : reflectors) z[k++] = r.position;
    for (const auto& g : fbgs) z[k++] = g.position;
    return z;
}

double TemperatureProfile::excursion_at(double t) const {
    if (knots.empty()) return 0.0;
    if (t <= knots.front().first) return knots.front().second;
    if (t >= knots.back().first) return knots.back().second;
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double v, const auto& k) { return v < k.first; });
    const auto& [t1, v1] = *it;
    const auto& [t0, v0] = *(it - 1);
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
}

double TemperatureProfile::core_excursion_at(double t) const {
    if (knots.empty()) return 0.0;
    if (time_constant <= 0.0) return excursion_at(t);
    const double tau = time_constant;
    // Exact response of tau*y' + y = u to piecewise-linear u, starting settled
    // at the first knot. On a segment u = u0 + s (t - t0):
    //   y(t) = u(t) - s tau + (y0 - u0 + s tau) exp(-(t - t0)/tau)
    double y = knots.front().second;
    double t_prev = knots.front().first;
    if (t <= t_prev) return y;
    for (std::size_t k = 1; k <= knots.size(); ++k) {
        const bool last = k == knots.size();
        const double u0 = excursion_at(t_prev);
        const double slope =
            last ? 0.0 : (knots[k].second - knots[k - 1].second) / (knots[k].first - knots[k - 1].first);
        const double t_seg_end = last ? t : std::min(t, knots[k].first);
        const double dt = t_seg_end - t_prev;
        const double u1 = u0 + slope * dt;
        y = u1 - slope * tau + (y - u0 + slope * tau) * std::exp(-dt / tau);
        t_prev = t_seg_end;
        if (t_prev >= t) break;
    }
    return y;
}

void validate_event(const EnvironmentEvent& event, const FiberModel& model) {
    std::visit(
        [&](const auto& e) {
            check_position(e.start, model.length, "event start");
            check_position(e.end, model.length, "event end");
            if (e.end < e.start) throw RangeError("event span end before start");
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, StrainTone>) {
                if (e.frequency < 0.0) throw RangeError("strain tone frequency must be >= 0");
            } else {
                if (e.time_constant < 0.0) throw RangeError("thermal time constant must be >= 0");
                for (std::size_t k = 1; k < e.knots.size(); ++k) {
                    if (!(e.knots[k].first > e.knots[k - 1].first)) {
                        throw RangeError("temperature knots must have increasing time");
                    }
                }
            }
        },
        event);
}

std::vector<Scatterer> generate_scatterers(double length, double density, double mean_amplitude,
                                           std::uint64_t seed) {
    if (!(density > 0.0)) throw RangeError("scatterer density must be > 0");
    if (!(length >= 0.0)) throw RangeError("scatterer span must be >= 0");
    const double expected = density * length;
    if (expected > 1e8) throw SizeError("scatterer count " + std::to_string(expected) + " exceeds 1e8");
    const auto count = static_cast<std::size_t>(std::llround(expected));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> position(0.0, length);
    std::normal_distribution<double> gauss(0.0, mean_amplitude / std::sqrt(2.0));

    std::vector<Scatterer> out(count);
    for (auto& s : out) {
        s.position = position(rng);
        do {
            s.reflectivity = {gauss(rng), gauss(rng)};
        } while (s.reflectivity == cdouble{});
    }
    std::sort(out.begin(), out.end(),
              [](const Scatterer& a, const Scatterer& b) { return a.position < b.position; });
    return out;
}

FiberModel add_point_reflector(FiberModel model, double position, double power_reflectivity_db) {
    check_position(position, model.length, "reflector");
    if (power_reflectivity_db > 0.0) throw RangeError("reflector above 0 dB");
    model.reflectors.push_back({position, power_reflectivity_db});
    return model;
}

std::vector<Fbg> build_fbg_array(const FbgArraySpec& spec, double fiber_length) {
    if (spec.count < 1) throw RangeError("grating count must be >= 1");
    if (!(spec.spacing > 0.0)) throw RangeError("grating spacing must be > 0");
    if (!(spec.sigma > 0.0)) throw RangeError("grating spectral sigma must be > 0");
    const double last = spec.start + (spec.count - 1) * spec.spacing;
    if (spec.start < 0.0 || last > fiber_length) {
        throw RangeError("grating array [" + std::to_string(spec.start) + ", " +
                         std::to_string(last) + "] m exceeds fibre length " +
                         std::to_string(fiber_length));
    }
    std::vector<Fbg> out(static_cast<std::size_t>(spec.count));
    for (int k = 0; k < spec.count; ++k) {
        auto& g = out[static_cast<std::size_t>(k)];
        g.position = spec.start + k * spec.spacing;
        g.bragg_wavelength = spec.base_wavelength +
                             spec.variation_amplitude * std::sin(2.0 * kPi * k / spec.variation_period);
        g.spectral_sigma = spec.sigma;
        g.peak_amplitude = spec.peak_amplitude;
    }
    return out;
}

cdouble fbg_reflectivity(const Fbg& grating, double probe_wavelength) {
    const double d = (probe_wavelength - grating.bragg_wavelength) / grating.spectral_sigma;
    return {grating.peak_amplitude * std::exp(-0.5 * d * d), 0.0};
}

EnvironmentSnapshot::EnvironmentSnapshot(std::span<const EnvironmentEvent> events,
                                         const SensingConstants& constants, double group_index,
                                         double t) {
    terms_.reserve(events.size());
    for (const auto& event : events) {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                double scale = 0.0;
                if constexpr (std::is_same_v<T, StrainTone>) {
                    scale = group_index * constants.strain_optic_factor * e.peak_elongation *
                            std::sin(2.0 * kPi * e.frequency * t + e.phase);
                } else {
                    scale = e.dn_dT * e.core_excursion_at(t) * (e.end - e.start);
                }
                terms_.push_back({e.start, e.end, scale});
            },
            event);
    }
}

double EnvironmentSnapshot::operator()(double z) const {
    double total = 0.0;
    for (const auto& term : terms_) total += term.scale * overlap_fraction(z, term.start, term.end);
    return total;
}

Eigen::ArrayXd EnvironmentSnapshot::operator()(const Eigen::ArrayXd& z) const {
    Eigen::ArrayXd total = Eigen::ArrayXd::Zero(z.size());
    for (const auto& term : terms_) {
        if (term.scale == 0.0) continue;
        if (term.end <= term.start) {
            total += (z >= term.start).cast<double>() * term.scale;
        } else {
            total += ((z - term.start) / (term.end - term.start)).max(0.0).min(1.0) * term.scale;
        }
    }
    return total;
}

double optical_path_delta(std::span<const EnvironmentEvent> events,
                          const SensingConstants& constants, double group_index, double z,
                          double t) {
    return EnvironmentSnapshot(events, constants, group_index, t)(z);
}

Eigen::VectorXd apply_environment(const FiberModel& model,
                                  std::span<const EnvironmentEvent> events,
                                  const SensingConstants& constants, double t) {
    const EnvironmentSnapshot snapshot(events, constants, model.group_index, t);
    return snapshot(model.element_positions().array()).matrix();
}

}  // namespace ccotdr
