#include "ccotdr/sim.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ccotdr;

namespace {

constexpr double kC = 2.9979e8;

ProbeFrame small_frame(Sequence which = Sequence::A, double symbol_rate = 1e8, Eigen::Index pad = 120) {
    return build_frame(golay_pair(5), which, 2, pad, symbol_rate);
}

LaserModel quiet_laser() {
    LaserModel l;
    l.linewidth = 0.0;
    return l;
}

}  // namespace

TEST_CASE("laser phase walk increments") {
    const Eigen::VectorXd phi = laser_phase_walk(100.0, 200001, 1e-9, 11);
    CHECK(phi[0] == 0.0);
    std::vector<double> inc(static_cast<std::size_t>(phi.size() - 1));
    for (Eigen::Index i = 1; i < phi.size(); ++i) inc[static_cast<std::size_t>(i - 1)] = phi[i] - phi[i - 1];
    CHECK(oracle::variance(inc) == doctest::Approx(2.0 * kPi * 1e-7).epsilon(0.05));
    CHECK(std::abs(oracle::mean(inc)) < 5.0 * std::sqrt(2.0 * kPi * 1e-7 / inc.size()));

    CHECK(laser_phase_walk(100.0, 1000, 1e-9, 11) == laser_phase_walk(100.0, 1000, 1e-9, 11));
    CHECK(laser_phase_walk(0.0, 10, 1e-9, 1).isZero());
    CHECK_THROWS_AS(laser_phase_walk(-1.0, 10, 1e-9, 1), RangeError);
    CHECK_THROWS_AS(laser_phase_walk(1.0, 0, 1e-9, 1), RangeError);
}

TEST_CASE("polarization states are unit, smooth and cover the sphere") {
    double s1_mean = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const Jones j = polarization_state(9, 10.0 * k, 10.0);  // knots only
        CHECK(std::norm(j.x) + std::norm(j.y) == doctest::Approx(1.0));
        s1_mean += std::norm(j.x) - std::norm(j.y);
    }
    // S1 uniform on [-1, 1]: mean 0, sd 1/sqrt(3n).
    CHECK(std::abs(s1_mean / n) < 5.0 / std::sqrt(3.0 * n));

    double worst_step = 0.0;
    for (double z = 0.0; z < 200.0; z += 0.05) {
        const Jones a = polarization_state(9, z, 10.0);
        const Jones b = polarization_state(9, z + 0.05, 10.0);
        CHECK(std::norm(a.x) + std::norm(a.y) == doctest::Approx(1.0));
        worst_step = std::max(worst_step, std::abs(std::norm(a.x) - std::norm(b.x)));
    }
    CHECK(worst_step < 0.05);
    CHECK(polarization_state(9, 4.2, 10.0).y == polarization_state(9, 4.2, 10.0).y);
    CHECK_THROWS_AS(polarization_state(9, 1.0, 0.0), RangeError);
}

TEST_CASE("delay and echo phase") {
    CHECK(round_trip_delay_samples(0.0, 1.468, 2e9) == 0);
    CHECK(round_trip_delay_samples(100.0, 1.468, 2e9) == std::llround(200.0 * 1.468 / kC * 2e9));
    CHECK(echo_phase(0.0, 1550e-9 / 2.0, 1.468, 1550e-9, PhaseConvention::single_pass) ==
          doctest::Approx(-kPi));
    CHECK(echo_phase(0.0, 1550e-9 / 2.0, 1.468, 1550e-9, PhaseConvention::double_pass) ==
          doctest::Approx(-2.0 * kPi));
}

TEST_CASE("single reflector echo is a delayed, scaled copy of the frame") {
    FiberModel m;
    m.length = 100.0;
    m.attenuation_db_per_km = 3.0;
    m.polarization_seed = 5;
    m = add_point_reflector(m, 60.0, -20.0);
    const ProbeFrame frame = small_frame();
    const Shot s = simulate_shot(m, frame, {}, SensingConstants{}, quiet_laser(), NoiseModel{}, 0.0, 1);
    REQUIRE(s.iq_x.size() == frame.sample_count());
    CHECK(s.sample_rate == 2e8);

    const auto d = static_cast<Eigen::Index>(std::llround(2.0 * 60.0 * 1.468 / kC * 2e8));
    const double amp = std::pow(10.0, -20.0 / 20.0) * std::pow(10.0, -2.0 * 3.0 * 0.06 / 20.0);
    const double phase = -4.0 * kPi * 1.468 * 60.0 / 1550e-9;
    const Jones j = polarization_state(5, 60.0, m.polarization_correlation_length);
    const Eigen::VectorXf tx = frame.samples();
    double worst = 0.0;
    for (Eigen::Index i = 0; i < frame.sample_count(); ++i) {
        const double s_in = i >= d ? tx[i - d] : 0.0;
        const cdouble ex = amp * s_in * std::polar(1.0, phase) * j.x;
        const cdouble ey = amp * s_in * std::polar(1.0, phase) * j.y;
        worst = std::max({worst, std::abs(cdouble(s.iq_x[i]) - ex), std::abs(cdouble(s.iq_y[i]) - ey)});
    }
    CHECK(worst < 1e-6 * amp);
}

TEST_CASE("strain of half a wavelength of path flips the echo") {
    FiberModel m;
    m.length = 100.0;
    m = add_point_reflector(m, 80.0, -10.0);
    const ProbeFrame frame = small_frame();
    SensingConstants k;
    const double dl = 1550e-9 / 2.0 / (1.468 * 0.79);
    const std::vector<EnvironmentEvent> ev{StrainTone{20.0, 40.0, dl, 0.0, kPi / 2.0}};
    const Shot a = simulate_shot(m, frame, {}, k, quiet_laser(), NoiseModel{}, 0.0, 1);
    const Shot b = simulate_shot(m, frame, ev, k, quiet_laser(), NoiseModel{}, 0.0, 1);
    const Eigen::Index d = round_trip_delay_samples(80.0, 1.468, frame.sample_rate());
    const cdouble ratio = cdouble(b.iq_x[d]) / cdouble(a.iq_x[d]);
    CHECK(ratio.real() == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(std::abs(ratio.imag()) < 1e-5);
}

TEST_CASE("simulation is linear in reflectivity and deterministic") {
    FiberModel m;
    m.length = 50.0;
    m.scatterers = generate_scatterers(50.0, 20.0, 1e-3, 3);
    FiberModel m2 = m;
    for (auto& s : m2.scatterers) s.reflectivity *= 3.0;
    const ProbeFrame frame = small_frame();
    LaserModel laser;
    laser.linewidth = 1e4;
    const Shot a = simulate_shot(m, frame, {}, SensingConstants{}, laser, NoiseModel{}, 0.0, 7);
    const Shot b = simulate_shot(m2, frame, {}, SensingConstants{}, laser, NoiseModel{}, 0.0, 7);
    CHECK((b.iq_x - 3.0f * a.iq_x).norm() < 1e-5 * b.iq_x.norm());
    CHECK((b.iq_y - 3.0f * a.iq_y).norm() < 1e-5 * b.iq_y.norm());

    NoiseModel noise{1e-4, true};
    const Shot c = simulate_shot(m, frame, {}, SensingConstants{}, laser, noise, 0.0, 7);
    const Shot c2 = simulate_shot(m, frame, {}, SensingConstants{}, laser, noise, 0.0, 7);
    const Shot c3 = simulate_shot(m, frame, {}, SensingConstants{}, laser, noise, 0.0, 8);
    CHECK(c.iq_x == c2.iq_x);
    CHECK(c.iq_y == c2.iq_y);
    CHECK(c.iq_x != c3.iq_x);
}

TEST_CASE("noise only fibre gives the configured sigma") {
    FiberModel m;
    m.length = 10.0;
    const ProbeFrame frame = build_frame(golay_pair(10), Sequence::A, 2, 2000, 1e8);
    NoiseModel noise{0.25, true};
    const Shot s = simulate_shot(m, frame, {}, SensingConstants{}, quiet_laser(), noise, 0.0, 3);
    std::vector<double> q;
    for (Eigen::Index i = 0; i < s.iq_x.size(); ++i) {
        q.push_back(s.iq_x[i].real());
        q.push_back(s.iq_x[i].imag());
        q.push_back(s.iq_y[i].real());
        q.push_back(s.iq_y[i].imag());
    }
    CHECK(std::sqrt(oracle::variance(q)) == doctest::Approx(0.25).epsilon(0.02));
    NoiseModel off{0.25, false};
    CHECK(simulate_shot(m, frame, {}, SensingConstants{}, quiet_laser(), off, 0.0, 3).iq_x.isZero());
}

TEST_CASE("reflector power follows the round-trip attenuation") {
    const double alpha = 0.2;
    const double rate = 1e7;
    const ProbeFrame frame = build_frame(golay_pair(5), Sequence::A, 2, 100, rate);
    std::vector<double> z, db;
    for (double pos : {0.0, 250.0, 500.0, 750.0, 1000.0}) {
        FiberModel m;
        m.length = 1000.0;
        m.attenuation_db_per_km = alpha;
        m = add_point_reflector(m, pos, -10.0);
        const Shot s = simulate_shot(m, frame, {}, SensingConstants{}, quiet_laser(), NoiseModel{}, 0.0, 1);
        const Eigen::Index d = round_trip_delay_samples(pos, 1.468, frame.sample_rate());
        z.push_back(pos);
        db.push_back(10.0 * std::log10(std::norm(s.iq_x[d]) + std::norm(s.iq_y[d])));
    }
    CHECK(oracle::slope(z, db) * 1000.0 == doctest::Approx(-2.0 * alpha).epsilon(1e-4));
}

TEST_CASE("frames that overlap in flight are rejected") {
    FiberModel m;
    m.length = 100.0;
    const ProbeFrame frame = small_frame(Sequence::A, 1e8, 50);  // needs 98
    CHECK_THROWS_AS(ShotSimulator(m, frame, SensingConstants{}, quiet_laser()), OverlapError);
}

TEST_CASE("campaign order, count and worker independence") {
    FiberModel m;
    m.length = 30.0;
    m.scatterers = generate_scatterers(30.0, 10.0, 1e-3, 2);
    const GolayPair pair = golay_pair(5);
    FrameSpec fs{2, 40, 1e8};
    const std::vector<EnvironmentEvent> ev{StrainTone{10.0, 12.0, 1e-7, 100.0, 0.0}};
    LaserModel laser;
    NoiseModel noise{1e-4, true};
    CampaignSpec spec;
    spec.shot_rate = 1000.0;
    spec.duration = 0.0305;
    spec.seed = 4;
    CHECK(campaign_shot_count(spec) == 30);

    spec.workers = 1;
    const auto serial = run_campaign(m, pair, fs, ev, SensingConstants{}, laser, noise, spec);
    spec.workers = 3;
    spec.queue_depth = 2;
    const auto parallel = run_campaign(m, pair, fs, ev, SensingConstants{}, laser, noise, spec);
    REQUIRE(serial.size() == 30);
    REQUIRE(parallel.size() == 30);
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].index == static_cast<std::int64_t>(i));
        CHECK(serial[i].which == (i % 2 == 0 ? Sequence::A : Sequence::B));
        CHECK(serial[i].timestamp == doctest::Approx(static_cast<double>(i) / 1000.0));
        CHECK(serial[i].iq_x == parallel[i].iq_x);
        CHECK(serial[i].iq_y == parallel[i].iq_y);
    }

    spec.shot_rate = 1e7;
    CHECK_THROWS_AS(run_campaign(m, pair, fs, ev, SensingConstants{}, laser, noise, spec), OverlapError);
    spec.shot_rate = 1000.0;
    const std::vector<EnvironmentEvent> bad{StrainTone{10.0, 40.0, 1e-7, 100.0, 0.0}};
    CHECK_THROWS_AS(run_campaign(m, pair, fs, bad, SensingConstants{}, laser, noise, spec), RangeError);
}
