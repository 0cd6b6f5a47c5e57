#include "ccotdr/fiber.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ccotdr;

TEST_CASE("generate_scatterers count, order and determinism") {
    const auto s = generate_scatterers(100.0, 50.0, 1.0, 42);
    CHECK(s.size() == 5000);
    CHECK(std::is_sorted(s.begin(), s.end(),
                         [](const Scatterer& a, const Scatterer& b) { return a.position < b.position; }));
    for (const auto& x : s) {
        CHECK(x.position >= 0.0);
        CHECK(x.position <= 100.0);
        CHECK(std::abs(x.reflectivity) > 0.0);
    }
    const auto again = generate_scatterers(100.0, 50.0, 1.0, 42);
    REQUIRE(again.size() == s.size());
    bool same = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        same = same && s[i].position == again[i].position && s[i].reflectivity == again[i].reflectivity;
    }
    CHECK(same);
    const auto other = generate_scatterers(100.0, 50.0, 1.0, 43);
    CHECK(other.front().position != s.front().position);

    CHECK(generate_scatterers(10.0, 0.26, 1.0, 1).size() == 3);  // round(2.6)
    CHECK_THROWS_AS(generate_scatterers(10.0, 0.0, 1.0, 1), RangeError);
    CHECK_THROWS_AS(generate_scatterers(1e6, 101.0, 1.0, 1), SizeError);
}

TEST_CASE("scatterer statistics") {
    const double amp = 2.5e-4;
    const auto s = generate_scatterers(1000.0, 200.0, amp, 7);  // 2e5 draws
    std::vector<double> power;
    power.reserve(s.size());
    for (const auto& x : s) power.push_back(std::norm(x.reflectivity));
    const double m = oracle::mean(power);
    // E|r|^2 = amp^2 and exponential power: CV = 1.
    CHECK(m == doctest::Approx(amp * amp).epsilon(0.03));
    CHECK(std::sqrt(oracle::variance(power)) / m == doctest::Approx(1.0).epsilon(0.05));

    // Uniform phase: mean of r / |r| near 0.
    std::complex<double> u{};
    for (const auto& x : s) u += x.reflectivity / std::abs(x.reflectivity);
    CHECK(std::abs(u) / static_cast<double>(s.size()) < 0.01);

    // Positions: chi-square over 100 bins, 1% critical value for 99 dof.
    std::vector<double> bins(100, 0.0);
    for (const auto& x : s) bins[std::min<std::size_t>(99, static_cast<std::size_t>(x.position / 10.0))] += 1.0;
    const double expected = static_cast<double>(s.size()) / 100.0;
    double chi2 = 0.0;
    for (double b : bins) chi2 += (b - expected) * (b - expected) / expected;
    CHECK(chi2 < 134.6);
}

TEST_CASE("point reflectors") {
    FiberModel m;
    m.length = 418.0;
    m = add_point_reflector(m, 8.0, -45.0);
    m = add_point_reflector(m, 418.0, -30.0);
    REQUIRE(m.reflectors.size() == 2);
    CHECK(m.reflectors[0].amplitude() == doctest::Approx(std::pow(10.0, -45.0 / 20.0)));
    CHECK(m.reflectors[1].position == 418.0);

    FiberModel z;
    z.length = 10.0;
    CHECK(add_point_reflector(z, 0.0, 0.0).reflectors[0].amplitude() == doctest::Approx(1.0));
    CHECK(add_point_reflector(z, 1.0, -20.0).reflectors[0].amplitude() == doctest::Approx(0.1));
    CHECK_THROWS_AS(add_point_reflector(z, 10.5, -20.0), RangeError);
    CHECK_THROWS_AS(add_point_reflector(z, -0.1, -20.0), RangeError);
    CHECK_THROWS_AS(add_point_reflector(z, 1.0, 3.0), RangeError);
}

TEST_CASE("fiber model validation") {
    FiberModel m;
    m.length = 10.0;
    CHECK_NOTHROW(m.validate());
    m.group_index = 1.7;
    CHECK_THROWS_AS(m.validate(), RangeError);
    m.group_index = 1.468;
    m.attenuation_db_per_km = -0.1;
    CHECK_THROWS_AS(m.validate(), RangeError);
    m.attenuation_db_per_km = 0.2;
    m.scatterers.push_back({11.0, {1.0, 0.0}});
    CHECK_THROWS_AS(m.validate(), RangeError);
}

TEST_CASE("fbg array layout") {
    FbgArraySpec spec;
    spec.count = 2000;
    spec.spacing = 0.05;
    spec.start = 0.0;
    spec.base_wavelength = 1550e-9;
    spec.variation_amplitude = 0.2e-9;
    spec.variation_period = 10.0;
    spec.sigma = 0.1e-9;
    spec.peak_amplitude = 0.01;
    const auto g = build_fbg_array(spec, 100.0);
    REQUIRE(g.size() == 2000);
    CHECK(g.back().position - g.front().position == doctest::Approx(99.95));
    for (std::size_t k = 0; k + 10 < g.size(); ++k) {
        CHECK(g[k].bragg_wavelength == doctest::Approx(g[k + 10].bragg_wavelength).epsilon(1e-15));
    }
    CHECK(g[0].bragg_wavelength == 1550e-9);
    CHECK(g[3].bragg_wavelength - 1550e-9 == doctest::Approx(0.2e-9 * std::sin(2.0 * kPi * 3 / 10)));

    spec.variation_amplitude = 0.0;
    for (const auto& x : build_fbg_array(spec, 100.0)) CHECK(x.bragg_wavelength == 1550e-9);
    CHECK_THROWS_AS(build_fbg_array(spec, 99.0), RangeError);
    spec.spacing = 0.0;
    CHECK_THROWS_AS(build_fbg_array(spec, 100.0), RangeError);
}

TEST_CASE("fbg reflectivity line shape") {
    Fbg g{1.0, 1550e-9, 0.1e-9, 0.02};
    CHECK(std::abs(fbg_reflectivity(g, 1550e-9)) == doctest::Approx(0.02));
    CHECK(fbg_reflectivity(g, 1550e-9).imag() == 0.0);
    CHECK(std::abs(fbg_reflectivity(g, 1550.1e-9)) == doctest::Approx(0.02 * 0.60653066).epsilon(1e-6));
    CHECK(std::abs(fbg_reflectivity(g, 1549.4e-9)) < 1e-7 * 0.02);
}

TEST_CASE("apply_environment strain tone") {
    FiberModel m;
    m.length = 418.0;
    m.scatterers = {{100.0, {1, 0}}, {216.0, {1, 0}}, {218.0, {1, 0}}, {220.0, {1, 0}}, {300.0, {1, 0}}};
    SensingConstants k;
    StrainTone tone{216.0, 220.0, 1e-6, 120.0, 0.0};
    const double t = 1.0 / (4.0 * 120.0);  // sin = 1
    const std::vector<EnvironmentEvent> events{tone};
    const Eigen::VectorXd d = apply_environment(m, events, k, t);
    const double full = 1.468 * 0.79 * 1e-6;
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(0.0));
    CHECK(d[2] == doctest::Approx(0.5 * full));
    CHECK(d[3] == doctest::Approx(full));
    CHECK(d[4] == doctest::Approx(full));

    CHECK(apply_environment(m, {}, k, t).isZero());
}

TEST_CASE("apply_environment temperature span") {
    FiberModel m;
    m.length = 250.0;
    m.scatterers = {{1.0, {1, 0}}, {102.5, {1, 0}}, {240.0, {1, 0}}};
    TemperatureProfile p;
    p.start = 5.0;
    p.end = 200.0;
    p.knots = {{0.0, 10.0}, {100.0, 10.0}};
    p.dn_dT = 1e-5;
    p.time_constant = 0.0;
    const std::vector<EnvironmentEvent> events{p};
    const Eigen::VectorXd d = apply_environment(m, events, SensingConstants{}, 50.0);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(97.5 * 1e-5 * 10.0));
    CHECK(d[2] == doctest::Approx(1.95e-2));
}

TEST_CASE("environment is cumulative and linear") {
    FiberModel m;
    m.length = 100.0;
    m.scatterers = generate_scatterers(100.0, 5.0, 1.0, 3);
    SensingConstants k;
    StrainTone a{10.0, 30.0, 2e-6, 50.0, 0.3};
    TemperatureProfile b;
    b.start = 20.0;
    b.end = 70.0;
    b.knots = {{0.0, 0.0}, {10.0, 4.0}};
    b.time_constant = 3.0;
    for (double t : {0.0013, 0.4, 7.7}) {
        const std::vector<EnvironmentEvent> ea{a}, eb{b}, both{a, b};
        const Eigen::VectorXd da = apply_environment(m, ea, k, t);
        const Eigen::VectorXd db = apply_environment(m, eb, k, t);
        const Eigen::VectorXd dab = apply_environment(m, both, k, t);
        CHECK((dab - da - db).cwiseAbs().maxCoeff() < 1e-15);
        // Single positive perturbation: non-decreasing along the fibre.
        const Eigen::VectorXd pos = db.cwiseAbs();
        for (Eigen::Index i = 1; i < pos.size(); ++i) CHECK(pos[i] >= pos[i - 1]);
        for (Eigen::Index i = 0; i < da.size(); ++i) {
            CHECK(da[i] == doctest::Approx(optical_path_delta(ea, k, m.group_index, m.scatterers[i].position, t)));
        }
    }
}

TEST_CASE("core temperature follows a first-order lag") {
    TemperatureProfile p;
    p.knots = {{0.0, 0.0}, {20.0, 0.0}, {80.0, 10.0}, {160.0, 10.0}, {220.0, 0.0}, {300.0, 0.0}};
    p.time_constant = 30.0;
    // Reference: RK4 on tau y' + y = u.
    const double h = 0.01;
    double y = 0.0;
    double t = 0.0;
    auto f = [&](double tt, double yy) { return (p.excursion_at(tt) - yy) / p.time_constant; };
    double worst = 0.0;
    while (t < 300.0 - 1e-9) {
        const double k1 = f(t, y), k2 = f(t + h / 2, y + h / 2 * k1), k3 = f(t + h / 2, y + h / 2 * k2),
                     k4 = f(t + h, y + h * k3);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
        if (std::fmod(t + 1e-9, 5.0) < 2e-9 + h / 2) worst = std::max(worst, std::abs(p.core_excursion_at(t) - y));
    }
    CHECK(worst < 1e-6);
    CHECK(p.excursion_at(50.0) == doctest::Approx(5.0));
    CHECK(p.core_excursion_at(-5.0) == 0.0);

    TemperatureProfile step;
    step.knots = {{0.0, 0.0}, {1e-9, 1.0}, {1000.0, 1.0}};
    step.time_constant = 10.0;
    CHECK(step.core_excursion_at(10.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-6));
}

TEST_CASE("event validation") {
    FiberModel m;
    m.length = 100.0;
    CHECK_NOTHROW(validate_event(StrainTone{10, 20, 1e-6, 5, 0}, m));
    CHECK_THROWS_AS(validate_event(StrainTone{10, 120, 1e-6, 5, 0}, m), RangeError);
    CHECK_THROWS_AS(validate_event(StrainTone{20, 10, 1e-6, 5, 0}, m), RangeError);
    CHECK_THROWS_AS(validate_event(StrainTone{10, 20, 1e-6, -5, 0}, m), RangeError);
    TemperatureProfile p;
    p.start = 0;
    p.end = 50;
    p.knots = {{0, 0}, {0, 1}};
    CHECK_THROWS_AS(validate_event(p, m), RangeError);
    p.knots = {{0, 0}, {1, 1}};
    p.time_constant = -1;
    CHECK_THROWS_AS(validate_event(p, m), RangeError);
}
