#include "ccotdr/dsp.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace ccotdr;

namespace {

PhaseSeries series(const Eigen::VectorXd& v, double dt) {
    PhaseSeries p;
    p.values = v;
    p.sample_period = dt;
    p.low_confidence = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(v.size(), false);
    return p;
}

Eigen::VectorXd sine(Eigen::Index n, double dt, double f, double a, double phase = 0.0) {
    return Eigen::VectorXd::NullaryExpr(n, [=](Eigen::Index i) {
        return a * std::sin(2.0 * kPi * f * static_cast<double>(i) * dt + phase);
    });
}

// Single-polarization waterfall from a rows x cells matrix.
Waterfall make_waterfall(const ComplexMatrix<float>& m, double dt, double step) {
    Waterfall w;
    w.planes = {m};
    w.timestamps = Eigen::VectorXd::LinSpaced(m.rows(), 0.0, static_cast<double>(m.rows() - 1) * dt);
    w.position_step = step;
    w.row_period = dt;
    return w;
}

}  // namespace

TEST_CASE("wrap and unwrap") {
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(0.5 + 4.0 * kPi) == doctest::Approx(0.5));
    for (double x = -20.0; x < 20.0; x += 0.37) {
        const double w = wrap_phase(x);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        CHECK(std::remainder(w - x, 2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
    }

    Eigen::VectorXd p(3);
    p << 0.0, 3.0, -0.2832;
    const Eigen::VectorXd u = unwrap(p);
    CHECK(u[0] == 0.0);
    CHECK(u[1] == 3.0);
    CHECK(u[2] == doctest::Approx(6.0).epsilon(1e-4));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> step(-3.0, 3.0);
    Eigen::VectorXd truth(500);
    truth[0] = 0.4;
    for (Eigen::Index i = 1; i < truth.size(); ++i) truth[i] = truth[i - 1] + step(rng);
    const Eigen::VectorXd wrapped = truth.unaryExpr([](double x) { return wrap_phase(x); });
    CHECK((unwrap(wrapped) - truth).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("detect_tone finds frequency and power") {
    const double dt = 1.0 / 2000.0;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 0.05);
    Eigen::VectorXd v = sine(2000, dt, 120.0, 0.5, 0.3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += g(rng) + 0.001 * static_cast<double>(i);
    const auto t = detect_tone(series(v, dt));
    REQUIRE(t);
    CHECK(t->frequency == doctest::Approx(120.0).epsilon(0.1 / 120.0));
    CHECK(t->power == doctest::Approx(0.125).epsilon(0.05));

    const auto off = detect_tone(series(sine(4000, dt, 333.3, 1.0), dt));
    REQUIRE(off);
    CHECK(off->frequency == doctest::Approx(333.3).epsilon(0.05 / 333.3));

    CHECK_FALSE(detect_tone(series(Eigen::VectorXd::LinSpaced(200, 0.0, 5.0), dt)));
    CHECK_THROWS_AS(detect_tone(series(Eigen::VectorXd::Zero(10), dt)), SizeError);
}

TEST_CASE("tone_power_at") {
    const double dt = 1e-3;
    const Eigen::VectorXd v = sine(1000, dt, 50.0, 2.0, 1.0);
    CHECK(tone_power_at(v, dt, 50.0) == doctest::Approx(2.0).epsilon(0.01));
    CHECK(tone_power_at(v, dt, 200.0) < 1e-4);
}

TEST_CASE("phase_slope fits each window") {
    const double dt = 1.0 / 2000.0;
    const Eigen::Index n = 20000;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        v[i] = t < 5.4 ? 0.3 * t : 0.3 * 5.4 - 0.7 * (t - 5.4);
    }
    PhaseSeries p = series(v, dt);
    p.t0 = 1.0;
    const SampledSeries s = phase_slope(p, 2.7);
    REQUIRE(s.size() == 3);
    CHECK(s.sample_period == doctest::Approx(2.7));
    CHECK(s.t0 == doctest::Approx(1.0 + 0.5 * 5399 * dt));
    CHECK(s.values[0] == doctest::Approx(0.3));
    CHECK(s.values[1] == doctest::Approx(0.3));
    CHECK(s.values[2] == doctest::Approx(-0.7));
    CHECK_THROWS_AS(phase_slope(p, 0.001), RangeError);
}

TEST_CASE("core temperature from phase slopes") {
    const double L = 195.0, lambda = 1550e-9, dn = 1e-5, rate = 0.1266;
    const double slope = 2.0 * kPi * L * dn * rate / lambda;
    SampledSeries s;
    s.values = Eigen::VectorXd::Constant(10, slope);
    s.sample_period = 2.7;
    const TemperatureSeries t = core_temperature_series(s, L, lambda, dn, PhaseConvention::single_pass, 30.0);
    CHECK(t.values[0] == 30.0);
    CHECK(t.values[9] == doctest::Approx(30.0 + 9 * 2.7 * rate));
    const TemperatureSeries d = core_temperature_series(s, L, lambda, dn, PhaseConvention::double_pass, 30.0);
    CHECK(d.values[9] == doctest::Approx(30.0 + 9 * 2.7 * rate / 2.0));
    CHECK_THROWS_AS(core_temperature_series(s, 0.0, lambda, dn, PhaseConvention::single_pass, 30.0), RangeError);
    CHECK_THROWS_AS(core_temperature_series(s, L, lambda, 0.0, PhaseConvention::single_pass, 30.0), RangeError);
}

TEST_CASE("inverse filter undoes a first-order lag") {
    const double tau = 30.0, a = 0.1, dt = 2.7;
    TemperatureSeries core;
    core.sample_period = dt;
    core.values.resize(100);
    for (Eigen::Index i = 0; i < 100; ++i) {
        const double t = static_cast<double>(i) * dt;
        core.values[i] = a * (t - tau * (1.0 - std::exp(-t / tau)));
    }
    const TemperatureSeries x = inverse_filter_chamber(core, tau, 1);
    CHECK(x.kind == TemperatureKind::chamber_estimate);
    for (Eigen::Index i = 1; i < 99; ++i) CHECK(x.values[i] == doctest::Approx(a * i * dt).epsilon(0.01));

    // Trapezoid through the lag, recovered after the start-up transient.
    TemperatureProfile p;
    p.knots = {{0, 0}, {15, 0}, {105, 10}, {165, 10}, {255, 0}, {300, 0}};
    p.time_constant = tau;
    TemperatureSeries lagged;
    lagged.sample_period = dt;
    lagged.values.resize(110);
    for (Eigen::Index i = 0; i < 110; ++i) lagged.values[i] = p.core_excursion_at(static_cast<double>(i) * dt);
    const TemperatureSeries est = inverse_filter_chamber(lagged, tau, 3);
    std::vector<double> err;
    for (Eigen::Index i = 1; i + 1 < 110; ++i) err.push_back(est.values[i] - p.excursion_at(static_cast<double>(i) * dt));
    double ss = 0.0;
    for (double e : err) ss += e * e;
    CHECK(std::sqrt(ss / static_cast<double>(err.size())) < 0.3);
    CHECK_THROWS_AS(inverse_filter_chamber(lagged, 0.0, 3), RangeError);
}

TEST_CASE("phase and strain") {
    SensingConstants k;
    CHECK(phase_to_strain(4.7011, 1.0, k, 1550e-9, 1.468) == doctest::Approx(1e-6).epsilon(1e-4));
    CHECK(strain_to_phase(1e-6, 1.0, k, 1550e-9, 1.468) ==
          doctest::Approx(2.0 * kPi * 1.468 * 0.79 * 1e-6 / 1550e-9));
    k.convention = PhaseConvention::double_pass;
    CHECK(phase_to_strain(strain_to_phase(3e-7, 4.0, k, 1550e-9, 1.468), 4.0, k, 1550e-9, 1.468) ==
          doctest::Approx(3e-7));
    CHECK_THROWS_AS(phase_to_strain(1.0, 0.0, k, 1550e-9, 1.468), RangeError);
}

TEST_CASE("bragg periodicity") {
    for (double period : {10.0, 7.0}) {
        const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(200, [=](Eigen::Index i) {
            return 1550e-9 + 0.2e-9 * std::sin(2.0 * kPi * static_cast<double>(i) / period);
        });
        const auto p = bragg_periodicity(b);
        REQUIRE(p);
        CHECK(*p == doctest::Approx(period).epsilon(0.005));
    }
    CHECK_FALSE(bragg_periodicity(Eigen::VectorXd::Constant(50, 1550e-9)));
    CHECK_THROWS_AS(bragg_periodicity(Eigen::VectorXd::Zero(5)), SizeError);
}

TEST_CASE("fbg spectra recover Gaussian line centres") {
    const double sigma = 0.1e-9;
    const std::vector<double> positions{1.0, 2.0, 3.0};
    const std::vector<double> bragg{1549.98e-9, 1550.013e-9, 1550.1e-9};
    std::vector<SweepPoint> sweep;
    for (int k = 0; k < 21; ++k) {
        SweepPoint pt;
        pt.wavelength = 1549.5e-9 + k * 0.05e-9;
        pt.profile.samples = ComplexMatrix<float>::Zero(100, 1);
        pt.profile.position_step = 0.05;
        for (std::size_t g = 0; g < positions.size(); ++g) {
            const double x = (pt.wavelength - bragg[g]) / sigma;
            pt.profile.samples(static_cast<Eigen::Index>(positions[g] / 0.05), 0) =
                static_cast<float>(0.01 * std::exp(-0.5 * x * x));
        }
        sweep.push_back(pt);
    }
    const auto spectra = fbg_spectra(sweep, positions, 0.5);
    REQUIRE(spectra.size() == 3);
    for (std::size_t g = 0; g < 3; ++g) {
        CHECK(spectra[g].grating_index == static_cast<int>(g));
        CHECK(std::abs(spectra[g].bragg_estimate - bragg[g]) < sigma / 20.0);
        CHECK(spectra[g].powers.maxCoeff() > 0.0);
    }
    CHECK_THROWS_AS(fbg_spectra(sweep, std::vector<double>{1.0, 1.2}, 0.5), GeometryError);
    CHECK_THROWS_AS(fbg_spectra(std::span(sweep).first(2), positions, 0.5), SizeError);
}

TEST_CASE("find_peaks") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(50);
    p[10] = 1.0;
    p[20] = 0.5;
    p[21] = 0.4;
    p[30] = 0.001;
    p[45] = 2.0;
    const auto peaks = find_peaks(p, 0.1, 0.0, 0.5, 4.0, 0.01);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0] == doctest::Approx(1.0));
    CHECK(peaks[1] == doctest::Approx(2.0));
}

TEST_CASE("power trace and change map") {
    ComplexMatrix<float> m(3, 2);
    m << cfloat(1, 0), cfloat(0, 2), cfloat(0, 1), cfloat(0, 2), cfloat(3, 0), cfloat(0, 2);
    Waterfall w = make_waterfall(m, 1e-3, 1.0);
    w.planes.push_back(ComplexMatrix<float>::Zero(3, 2));
    const Eigen::VectorXd db = mean_power_trace(w);
    CHECK(db[0] == doctest::Approx(10.0 * std::log10(11.0 / 3.0)));
    CHECK(db[1] == doctest::Approx(10.0 * std::log10(4.0)));
    const Eigen::MatrixXf c = amplitude_change_map(w);
    REQUIRE(c.rows() == 2);
    CHECK(c(0, 0) == doctest::Approx(0.0));
    CHECK(c(1, 0) == doctest::Approx(2.0));
    CHECK(c(1, 1) == doctest::Approx(0.0));
    CHECK_THROWS_AS(amplitude_change_map(make_waterfall(m.topRows(1), 1e-3, 1.0)), SizeError);
}

TEST_CASE("select_gauges pairs strong cells") {
    Eigen::VectorXd db = Eigen::VectorXd::Constant(400, -70.0);
    db[10] = -40.0;
    db[11] = -45.0;
    db[60] = -30.0;
    db[300] = -35.0;
    const auto g = select_gauges(db, 0.1, 2.0, 20.0, 4.0);
    REQUIRE(g.size() == 2);
    CHECK(g[0].z1 == doctest::Approx(3.0));
    CHECK(g[0].z2 == doctest::Approx(8.0));
    CHECK(g[1].z1 == doctest::Approx(8.0));
    CHECK(g[1].z2 == doctest::Approx(32.0));
    CHECK(g[0].center() == doctest::Approx(5.5));

    const auto all = select_gauges(Eigen::VectorXd::Zero(100), 0.5, 0.0, 0.0, 4.0);
    CHECK(all.size() == 12);
    for (const auto& x : all) CHECK(x.length() == doctest::Approx(4.0));

    CHECK_THROWS_AS(select_gauges(Eigen::VectorXd::Constant(100, -70.0), 0.1, 0.0, 20.0, 4.0), DetectionError);
    CHECK_THROWS_AS(select_gauges(db, 0.1, 0.0, 20.0, 0.01), RangeError);
}

TEST_CASE("differential phase, gaps and localization") {
    const Eigen::Index rows = 2000, cells = 120;
    const double dt = 1.0 / 2000.0;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    std::vector<double> base(cells);
    for (auto& b : base) b = u(rng);
    ComplexMatrix<float> m(rows, cells);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double t = static_cast<double>(r) * dt;
        const double tone = 1.2 * std::sin(2.0 * kPi * 90.0 * t) + 3.0 * t;
        for (Eigen::Index c = 0; c < cells; ++c) {
            const double ph = base[static_cast<std::size_t>(c)] - (c >= 70 ? tone : 0.0);
            m(r, c) = std::polar(1.0f, static_cast<float>(ph));
        }
    }
    m(500, 80) = cfloat(1e-4f, 0.0f);
    const Waterfall w = make_waterfall(m, dt, 0.5);

    const PhaseSeries d = differential_phase(w, 10.0, 40.0, 1e-3);
    CHECK(d.size() == rows);
    CHECK(d.low_confidence_count() == 1);
    CHECK(d.low_confidence[500]);
    const PhaseSeries path = to_path_phase(d);
    for (Eigen::Index r : {0, 499, 500, 1999}) {
        const double t = static_cast<double>(r) * dt;
        const double expect = 1.2 * std::sin(2.0 * kPi * 90.0 * t) + 3.0 * t;
        CHECK(path.values[r] - path.values[0] == doctest::Approx(expect).epsilon(1e-3));
    }

    const auto tone = detect_tone(path);
    REQUIRE(tone);
    CHECK(tone->frequency == doctest::Approx(90.0).epsilon(0.002));
    const double z = localize_tone(w, 90.0, 5.0);
    CHECK(std::abs(z - 35.0) <= 2.5);

    CHECK_THROWS_AS(differential_phase(w, 40.0, 10.0), RangeError);
    CHECK_THROWS_AS(localize_tone(w, 1500.0, 5.0), RangeError);
    const Waterfall quiet = make_waterfall(ComplexMatrix<float>::Constant(rows, cells, cfloat(1, 0)), dt, 0.5);
    CHECK_THROWS_AS(localize_tone(quiet, 90.0, 5.0), DetectionError);
}
