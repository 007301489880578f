#include "doctest.h"

#include "ddsat/rng.hpp"
#include "ddsat/signals.hpp"

using namespace ddsat;

namespace {

SignalRecord scalar_ramp(int T) {
    std::vector<Vec> s;
    for (int k = 0; k <= T; ++k) {
        Vec v(1);
        v(0) = k;
        s.push_back(v);
    }
    return SignalRecord(std::move(s));
}

} // namespace

TEST_CASE("saturation clips per channel at the bound") {
    SaturationBounds b{(Vec(2) << 1.0, 0.5).finished()};
    Vec u(2);
    u << 2.0, -0.2;
    Vec v = saturate(u, b);
    CHECK(v(0) == 1.0);
    CHECK(v(1) == -0.2);
    u << -3.0, 0.75;
    v = saturate(u, b);
    CHECK(v(0) == -1.0);
    CHECK(v(1) == 0.5);
}

TEST_CASE("dead-zone complements saturation") {
    SaturationBounds b{(Vec(1) << 1.0).finished()};
    Vec u(1);
    u << 0.4;
    CHECK(deadzone(u, b)(0) == 0.0);
    u << 1.7;
    CHECK(deadzone(u, b)(0) == doctest::Approx(0.7));
    u << -2.5;
    CHECK(deadzone(u, b)(0) == doctest::Approx(-1.5));
}

TEST_CASE("saturation rejects nonpositive bounds") {
    CHECK_THROWS_AS(SaturationBounds{(Vec(1) << 0.0).finished()}, std::invalid_argument);
    CHECK_THROWS_AS(SaturationBounds{(Vec(2) << 1.0, -1.0).finished()}, std::invalid_argument);
}

TEST_CASE("hankel layout follows the inclusive window convention") {
    SignalRecord v = scalar_ramp(5); // samples 0..5
    HankelMatrix h = hankel(v, 0, 2, 3);
    // columns c = 0..(3-0-2+1): entries v(r+c)
    REQUIRE(h.entries.rows() == 2);
    REQUIRE(h.entries.cols() == 3);
    Mat expect(2, 3);
    expect << 0, 1, 2, 1, 2, 3;
    CHECK((h.entries - expect).norm() == 0.0);

    HankelMatrix one = hankel(v, 2, 1, 4);
    REQUIRE(one.entries.rows() == 1);
    REQUIRE(one.entries.cols() == 3);
    Mat erow(1, 3);
    erow << 2, 3, 4;
    CHECK((one.entries - erow).norm() == 0.0);
}

TEST_CASE("hankel stacks vector blocks") {
    std::vector<Vec> s;
    for (int k = 0; k <= 3; ++k) {
        Vec v(2);
        v << k, 10 + k;
        s.push_back(v);
    }
    SignalRecord rec{std::move(s)};
    HankelMatrix h = hankel(rec, 0, 2, 3);
    REQUIRE(h.entries.rows() == 4);
    REQUIRE(h.entries.cols() == 3);
    CHECK(h.entries(0, 0) == 0);
    CHECK(h.entries(1, 0) == 10);
    CHECK(h.entries(2, 1) == 2);  // v(1+1) first coord
    CHECK(h.entries(3, 1) == 12); // v(2) second coord
    CHECK(h.entries(2, 2) == 3);  // last column ends at sample k1
    CHECK(h.entries(0, 2) == 2);
}

TEST_CASE("hankel rejects bad windows") {
    SignalRecord v = scalar_ramp(4);
    CHECK_THROWS_AS(hankel(v, -1, 1, 3), std::out_of_range);
    CHECK_THROWS_AS(hankel(v, 2, 1, 2), std::out_of_range);
    CHECK_THROWS_AS(hankel(v, 0, 6, 4), std::out_of_range);
    CHECK_THROWS_AS(hankel(v, 0, 1, 5), std::out_of_range);
}

TEST_CASE("numerical rank uses a scaled tolerance") {
    Mat a(3, 3);
    a << 1, 2, 3, 2, 4, 6, 1, 0, 1; // row2 = 2*row1
    CHECK(numerical_rank(a) == 2);
    CHECK(numerical_rank(Mat::Identity(4, 4)) == 4);
    CHECK(numerical_rank(Mat::Zero(2, 5)) == 0);
    Mat near = Mat::Identity(3, 3);
    near(2, 2) = 1e-14; // far below sigma_max * n * 1e-10
    CHECK(numerical_rank(near) == 2);
}

TEST_CASE("white noise is persistently exciting, constants are not") {
    Rng rng(3);
    std::vector<Vec> s;
    for (int k = 0; k <= 200; ++k) s.push_back(rng.gaussian_vec(2, 1.0));
    SignalRecord noise{std::move(s)};
    CHECK(is_persistently_exciting(noise, 1));
    CHECK(is_persistently_exciting(noise, 4));

    std::vector<Vec> c(201, Vec::Ones(2));
    SignalRecord constant{std::move(c)};
    CHECK_FALSE(is_persistently_exciting(constant, 2));
}
