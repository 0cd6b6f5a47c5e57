#include "ccotdr/sim.hpp"

#include "ccotdr/parallel.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <random>
#include <string>

namespace ccotdr {

std::mutex& fft_plan_mutex() {
    static std::mutex m;
    return m;
}

namespace {

// exp(i x), reduced to [-pi, pi] in double and then evaluated with the
// vectorized single-precision sin/cos (absolute error ~1e-6 rad).
Eigen::ArrayXcd unit_phasors(const Eigen::ArrayXd& x) {
    const Eigen::ArrayXf r = (x - (2.0 * kPi) * (x / (2.0 * kPi)).round()).cast<float>();
    Eigen::ArrayXcd out(x.size());
    out.real() = r.cos().cast<double>();
    out.imag() = r.sin().cast<double>();
    return out;
}

}  // namespace

Eigen::VectorXd laser_phase_walk(double linewidth, Eigen::Index n, double sample_period,
                                 std::uint64_t seed) {
    if (n < 1) throw RangeError("laser_phase_walk: n must be >= 1");
    if (linewidth < 0.0) throw RangeError("laser_phase_walk: linewidth must be >= 0");
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    if (linewidth == 0.0) return phi;
    std::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> step(0.0, std::sqrt(2.0 * kPi * linewidth * sample_period));
    for (Eigen::Index i = 1; i < n; ++i) phi[i] = phi[i - 1] + step(rng);
    return phi;
}

namespace {

// Uniform point on the Poincare sphere for knot k.
Eigen::Vector3d stokes_knot(std::uint64_t seed, std::int64_t k) {
    constexpr double kUnit = 1.0 / 9007199254740992.0;  // 2^-53
    const auto key = static_cast<std::uint64_t>(k);
    const double u = static_cast<double>(derive_seed(seed, 2 * key) >> 11) * kUnit;
    const double v = static_cast<double>(derive_seed(seed, 2 * key + 1) >> 11) * kUnit;
    const double s1 = 2.0 * u - 1.0;
    const double r = std::sqrt(std::max(0.0, 1.0 - s1 * s1));
    return {s1, r * std::cos(2.0 * kPi * v), r * std::sin(2.0 * kPi * v)};
}

}  // namespace

Jones polarization_state(std::uint64_t polarization_seed, double z, double correlation_length) {
    if (!(correlation_length > 0.0)) throw RangeError("polarization correlation length must be > 0");
    const double x = z / correlation_length;
    const double k = std::floor(x);
    const double f = x - k;
    const auto ki = static_cast<std::int64_t>(k);
    const Eigen::Vector3d a = stokes_knot(polarization_seed, ki);
    Eigen::Vector3d s = (1.0 - f) * a + f * stokes_knot(polarization_seed, ki + 1);
    const double n = s.norm();
    s = n > 1e-9 ? (s / n).eval() : a;
    return {cdouble(std::sqrt(0.5 * (1.0 + s[0])), 0.0),
            std::polar(std::sqrt(std::max(0.0, 0.5 * (1.0 - s[0]))), std::atan2(s[2], s[1]))};
}

Eigen::Index round_trip_delay_samples(double z, double group_index, double sample_rate) {
    return static_cast<Eigen::Index>(std::llround(2.0 * z * group_index / kSpeedOfLight * sample_rate));
}

double echo_phase(double z, double delta_opl, double group_index, double wavelength,
                  PhaseConvention convention) {
    return -(2.0 * kPi / wavelength) *
           (2.0 * group_index * z + convention_factor(convention) * delta_opl);
}

ShotSimulator::ShotSimulator(const FiberModel& model, const ProbeFrame& frame,
                             const SensingConstants& constants, const LaserModel& laser)
    : frame_(frame),
      constants_(constants),
      laser_(laser),
      group_index_(model.group_index),
      fft_(next_pow2(frame.sample_count())) {
    model.validate();
    const std::int64_t required =
        required_zero_pad(model.length, model.group_index, frame.symbol_rate);
    if (frame.pad_symbols() < required) {
        throw OverlapError("frame zero pad " + std::to_string(frame.pad_symbols()) +
                           " symbols below required " + std::to_string(required) + " for " +
                           std::to_string(model.length) + " m");
    }

    const double fs = frame.sample_rate();
    const double alpha = model.attenuation_db_per_km;
    const Eigen::Index count = model.element_count();
    positions_.resize(count);
    delays_.resize(static_cast<std::size_t>(count));
    static_x_.resize(count);
    static_y_.resize(count);
    Eigen::Index id = 0;
    auto push = [&](double z, cdouble reflectivity) {
        const double attenuation = std::pow(10.0, -2.0 * alpha * z / 20.0 / 1000.0);
        const cdouble base = reflectivity * attenuation *
                             std::polar(1.0, echo_phase(z, 0.0, model.group_index, laser.wavelength,
                                                        constants.convention));
        const Jones j = polarization_state(model.polarization_seed, z, model.polarization_correlation_length);
        positions_[id] = z;
        delays_[static_cast<std::size_t>(id)] = round_trip_delay_samples(z, model.group_index, fs);
        static_x_[id] = base * j.x;
        static_y_[id] = base * j.y;
        ++id;
    };
    for (const auto& s : model.scatterers) push(s.position, s.reflectivity);
    for (const auto& r : model.reflectors) push(r.position, r.amplitude());
    for (const auto& g : model.fbgs) push(g.position, fbg_reflectivity(g, laser.wavelength));

    transmit_ = frame.samples().cast<double>();
    ComplexVector<double> padded = ComplexVector<double>::Zero(fft_.size());
    padded.head(transmit_.size()) = transmit_.cast<cdouble>();
    transmit_spectrum_.resize(fft_.size());
    fft_.forward(transmit_spectrum_, padded);
}

Shot ShotSimulator::simulate(std::span<const EnvironmentEvent> events, const NoiseModel& noise,
                             double t, std::uint64_t seed) {
    const Eigen::Index n = frame_.sample_count();
    const Eigen::Index m = fft_.size();
    const EnvironmentSnapshot snapshot(events, constants_, group_index_, t);
    const double phase_per_metre =
        -(2.0 * kPi / laser_.wavelength) * convention_factor(constants_.convention);

    ComplexVector<double> hx = ComplexVector<double>::Zero(m);
    ComplexVector<double> hy = ComplexVector<double>::Zero(m);
    const auto accumulate = [&](const auto& ex, const auto& ey) {
        for (Eigen::Index k = 0; k < positions_.size(); ++k) {
            const Eigen::Index d = delays_[static_cast<std::size_t>(k)];
            hx[d] += ex[k];
            hy[d] += ey[k];
        }
    };
    if (snapshot.empty()) {
        accumulate(static_x_, static_y_);
    } else {
        const Eigen::ArrayXcd rotation = unit_phasors(phase_per_metre * snapshot(positions_));
        accumulate((static_x_ * rotation).eval(), (static_y_ * rotation).eval());
    }

    // With laser phase phi[n], the echo of element k at sample m carries
    // phi[m] - phi[m - d_k]: the received field is exp(i phi) times the
    // impulse response convolved with the transmitted field s exp(-i phi).
    const bool phase_noise = laser_.linewidth > 0.0;
    ComplexVector<double> laser_phasor;
    ComplexVector<double> spectrum_tx;
    if (phase_noise) {
        const Eigen::VectorXd phi = laser_phase_walk(laser_.linewidth, n, 1.0 / frame_.sample_rate(),
                                                     derive_seed(laser_.seed, seed));
        laser_phasor = unit_phasors(phi.array()).matrix();
        ComplexVector<double> tx = ComplexVector<double>::Zero(m);
        tx.head(n) = transmit_.cwiseProduct(laser_phasor.conjugate());
        spectrum_tx.resize(m);
        fft_.forward(spectrum_tx, tx);
    }
    const ComplexVector<double>& spectrum = phase_noise ? spectrum_tx : transmit_spectrum_;

    ComplexVector<double> hf(m);
    ComplexVector<double> rx(m);
    Shot shot;
    shot.timestamp = t;
    shot.which = frame_.which;
    shot.sample_rate = frame_.sample_rate();

    std::mt19937_64 rng(seed);
    boost::random::normal_distribution<double> gauss(0.0, noise.awgn_sigma);
    const bool add_noise = noise.enabled && noise.awgn_sigma > 0.0;

    auto receive = [&](ComplexVector<double>& h, Eigen::VectorXcf& out) {
        fft_.forward(hf, h);
        hf.array() *= spectrum.array();
        fft_.inverse(rx, hf);
        out.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            cdouble v = rx[i];
            if (phase_noise) v *= laser_phasor[i];
            if (add_noise) v += cdouble(gauss(rng), gauss(rng));
            out[i] = cfloat(static_cast<float>(v.real()), static_cast<float>(v.imag()));
        }
    };
    receive(hx, shot.iq_x);
    receive(hy, shot.iq_y);
    return shot;
}

Shot simulate_shot(const FiberModel& model, const ProbeFrame& frame,
                   std::span<const EnvironmentEvent> events, const SensingConstants& constants,
                   const LaserModel& laser, const NoiseModel& noise, double t, std::uint64_t seed) {
    ShotSimulator sim(model, frame, constants, laser);
    return sim.simulate(events, noise, t, seed);
}

std::int64_t campaign_shot_count(const CampaignSpec& spec) {
    return static_cast<std::int64_t>(std::floor(spec.duration * spec.shot_rate + 1e-9));
}

void run_campaign(const FiberModel& model, const GolayPair& pair, const FrameSpec& frame,
                  std::span<const EnvironmentEvent> events, const SensingConstants& constants,
                  const LaserModel& laser, const NoiseModel& noise, const CampaignSpec& spec,
                  const std::function<void(Shot&&)>& sink) {
    const ProbeFrame frame_a = build_frame(pair, Sequence::A, frame.samples_per_symbol,
                                           frame.zero_pad_symbols, frame.symbol_rate);
    const ProbeFrame frame_b = build_frame(pair, Sequence::B, frame.samples_per_symbol,
                                           frame.zero_pad_symbols, frame.symbol_rate);
    if (!(spec.shot_rate > 0.0) || spec.shot_rate > 1.0 / frame_a.duration()) {
        throw OverlapError("shot rate " + std::to_string(spec.shot_rate) +
                           " Hz exceeds 1 / frame duration = " +
                           std::to_string(1.0 / frame_a.duration()) + " Hz");
    }
    for (const auto& e : events) validate_event(e, model);

    const std::int64_t count = campaign_shot_count(spec);
    auto make_producer = [&]() -> std::function<Shot(std::int64_t)> {
        auto sim_a = std::make_shared<ShotSimulator>(model, frame_a, constants, laser);
        auto sim_b = std::make_shared<ShotSimulator>(model, frame_b, constants, laser);
        return [=, &noise, &spec](std::int64_t i) {
            ShotSimulator& sim = (i % 2 == 0) ? *sim_a : *sim_b;
            Shot shot = sim.simulate(events, noise, static_cast<double>(i) / spec.shot_rate,
                                     spec.seed ^ static_cast<std::uint64_t>(i));
            shot.index = i;
            return shot;
        };
    };
    ordered_parallel<Shot>(count, spec.workers, spec.queue_depth, make_producer, sink);
}

std::vector<Shot> run_campaign(const FiberModel& model, const GolayPair& pair,
                               const FrameSpec& frame, std::span<const EnvironmentEvent> events,
                               const SensingConstants& constants, const LaserModel& laser,
                               const NoiseModel& noise, const CampaignSpec& spec) {
    std::vector<Shot> shots;
    shots.reserve(static_cast<std::size_t>(std::max<std::int64_t>(campaign_shot_count(spec), 0)));
    run_campaign(model, pair, frame, events, constants, laser, noise, spec,
                 [&](Shot&& s) { shots.push_back(std::move(s)); });
    return shots;
}

}  // namespace ccotdr
