#include "ccotdr/probe.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace ccotdr;

TEST_CASE("golay base cases") {
    const GolayPair p0 = golay_pair(0);
    CHECK(p0.seq_a.size() == 1);
    CHECK(p0.seq_a[0] == 1);
    CHECK(p0.seq_b[0] == 1);

    const GolayPair p1 = golay_pair(1);
    CHECK(p1.seq_a == Eigen::Vector2i(1, 1));
    CHECK(p1.seq_b == Eigen::Vector2i(1, -1));
    CHECK(p1.order == 1);
}

TEST_CASE("golay pair sums to a delta for orders 0..14") {
    for (int order = 0; order <= 14; ++order) {
        const GolayPair p = golay_pair(order);
        const auto n = static_cast<long long>(1) << order;
        REQUIRE(p.length() == n);
        REQUIRE(p.seq_b.size() == n);
        CHECK((p.seq_a.array().abs() == 1).all());
        CHECK((p.seq_b.array().abs() == 1).all());
        const auto ra = oracle::autocorrelation(p.seq_a);
        const auto rb = oracle::autocorrelation(p.seq_b);
        CHECK(ra[0] + rb[0] == 2 * n);
        bool zero = true;
        for (std::size_t k = 1; k < ra.size(); ++k) zero = zero && (ra[k] + rb[k] == 0);
        CHECK_MESSAGE(zero, "order " << order);
    }
}

TEST_CASE("golay 2048-bit pair") {
    const GolayPair p = golay_pair(11);
    CHECK(p.length() == 2048);
    const auto ra = oracle::autocorrelation(p.seq_a);
    const auto rb = oracle::autocorrelation(p.seq_b);
    CHECK(ra[0] + rb[0] == 4096);
    // Individual sequences do have sidelobes; only the sum cancels.
    long long worst = 0;
    for (std::size_t k = 1; k < ra.size(); ++k) worst = std::max(worst, std::llabs(ra[k]));
    CHECK(worst > 0);
}

TEST_CASE("golay order bound") {
    CHECK_NOTHROW(golay_pair(kMaxGolayOrder));
    CHECK_THROWS_AS(golay_pair(21), SizeError);
    CHECK_THROWS_AS(golay_pair(-1), SizeError);
}

TEST_CASE("build_frame expands symbols into rectangular pulses") {
    GolayPair p;
    p.seq_a = Eigen::Vector2i(1, -1);
    p.seq_b = Eigen::Vector2i(1, 1);
    p.order = 1;
    const ProbeFrame f = build_frame(p, Sequence::A, 2, 1, 1e9);
    Eigen::VectorXf expected(6);
    expected << 1, 1, -1, -1, 0, 0;
    CHECK(f.samples() == expected);
    CHECK(f.reference() == expected.head(4));
    CHECK(f.which == Sequence::A);
    CHECK(f.pad_symbols() == 1);

    const ProbeFrame b = build_frame(p, Sequence::B, 3, 0, 1e9);
    CHECK(b.sample_count() == 6);
    CHECK(b.samples() == Eigen::VectorXf::Ones(6));
}

TEST_CASE("build_frame geometry and energy") {
    const GolayPair p = golay_pair(11);
    const ProbeFrame fa = build_frame(p, Sequence::A, 2, 20468, 5e9);
    CHECK(fa.duration() == doctest::Approx((2048.0 + 20468.0) / 5e9).epsilon(1e-12));
    CHECK(fa.duration() == doctest::Approx(4.50e-6).epsilon(1e-3));
    CHECK(fa.sample_count() == (2048 + 20468) * 2);
    CHECK(fa.sample_rate() == 1e10);

    for (int sps : {1, 2, 4}) {
        const ProbeFrame a = build_frame(p, Sequence::A, sps, 7, 1e9);
        const ProbeFrame b = build_frame(p, Sequence::B, sps, 7, 1e9);
        CHECK(a.samples().squaredNorm() == doctest::Approx(2048.0 * sps));
        CHECK(b.samples().squaredNorm() == doctest::Approx(2048.0 * sps));
        CHECK(a.samples().tail(7 * sps).isZero());
        // Deterministic.
        CHECK(a.samples() == build_frame(p, Sequence::A, sps, 7, 1e9).samples());
    }
    const ProbeFrame nopad = build_frame(p, Sequence::A, 2, 0, 1e9);
    CHECK(nopad.sample_count() == 2048 * 2);
}

TEST_CASE("build_frame preconditions") {
    const GolayPair p = golay_pair(3);
    CHECK_THROWS_AS(build_frame(p, Sequence::A, 0, 0, 1e9), RangeError);
    CHECK_THROWS_AS(build_frame(p, Sequence::A, 1, -1, 1e9), RangeError);
    CHECK_THROWS_AS(build_frame(p, Sequence::A, 1, 0, 0.0), RangeError);
}

TEST_CASE("required_zero_pad") {
    // ceil(R * 2 L n_g / c) with c = 2.9979e8.
    const double t = 2.0 * 418.0 * 1.468 / 2.9979e8;
    CHECK(t == doctest::Approx(4.0936e-6).epsilon(1e-4));
    CHECK(required_zero_pad(418.0, 1.468, 5e9) == static_cast<std::int64_t>(std::ceil(t * 5e9)));
    CHECK(required_zero_pad(418.0, 1.468, 5e9) == 20469);
    CHECK(required_zero_pad(100.0, 1.5, 1e9) == 1001);
    CHECK(required_zero_pad(0.0, 1.468, 5e9) == 0);
    CHECK(required_zero_pad(1e-9, 1.468, 5e9) == 1);
    CHECK_THROWS_AS(required_zero_pad(-1.0, 1.468, 1e9), RangeError);
}

TEST_CASE("required_zero_pad is monotone in length and rate") {
    std::int64_t last = 0;
    for (double L = 0.0; L <= 2000.0; L += 37.5) {
        const auto pad = required_zero_pad(L, 1.468, 1e9);
        CHECK(pad >= last);
        last = pad;
    }
    last = 0;
    for (double R = 1e8; R <= 1e10; R *= 1.7) {
        const auto pad = required_zero_pad(418.0, 1.468, R);
        CHECK(pad >= last);
        last = pad;
    }
}

TEST_CASE("spatial_resolution") {
    CHECK(spatial_resolution(5e9, 1.468) == doctest::Approx(2.9979e8 / (2 * 1.468 * 5e9)));
    CHECK(spatial_resolution(5e9, 1.468) == doctest::Approx(0.0204).epsilon(0.002));
    CHECK(spatial_resolution(1e9, 1.4990) == doctest::Approx(0.1000).epsilon(1e-3));
    CHECK(spatial_resolution(2e9, 1.468) == doctest::Approx(0.5 * spatial_resolution(1e9, 1.468)));
    CHECK_THROWS_AS(spatial_resolution(0.0, 1.468), RangeError);
}
