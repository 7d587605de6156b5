#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "relpv/stft_basis.hpp"
#include "relpv/verify.hpp"

using namespace relpv;

namespace {
constexpr double kSqrt3Half = 0.86602540378443864676;  // sin(pi/3)
}

TEST_CASE("frequency point table matches the fixed low-frequency set") {
    const auto& pts = frequency_points();
    REQUIRE(pts.size() == 13);
    auto is = [&](std::size_t i, int d, int h, int w) {
        return pts[i].signs[0] == d && pts[i].signs[1] == h && pts[i].signs[2] == w;
    };
    REQUIRE(is(0, 1, 0, 0));
    REQUIRE(is(1, 1, 0, 1));
    REQUIRE(is(2, 1, 0, -1));
    REQUIRE(is(3, 0, 1, 0));
    REQUIRE(is(4, 0, 1, 1));
    REQUIRE(is(5, 0, 1, -1));
    REQUIRE(is(6, 1, 1, 0));
    REQUIRE(is(7, 1, 1, 1));
    REQUIRE(is(8, 1, 1, -1));
    REQUIRE(is(9, 1, -1, 0));
    REQUIRE(is(10, 1, -1, 1));
    REQUIRE(is(11, 1, -1, -1));
    REQUIRE(is(12, 0, 0, 1));
    // exactly 9 of the 13 points move along the depth (time) axis
    int temporal = 0;
    for (const auto& p : pts) temporal += (p.signs[0] != 0);
    REQUIRE(temporal == 9);
}

TEST_CASE("basis parameter validation") {
    REQUIRE_THROWS_AS(build_basis(1), ParameterError);
    REQUIRE_THROWS_AS(build_basis(2), ParameterError);
    REQUIRE_THROWS_AS(build_basis(4), ParameterError);
    REQUIRE_NOTHROW(build_basis(3));
    REQUIRE_NOTHROW(build_basis(5));
}

TEST_CASE("basis entries for n = 3 match hand-evaluated exponentials") {
    const StftBasis b = build_basis(3);
    REQUIRE(b.n == 3);
    REQUIRE(b.r == 1);
    REQUIRE(b.W.shape() == Shape{26, 27});

    // column map: ((yd + r)*n + (yh + r))*n + (yw + r)
    REQUIRE(b.column_of(0, 0, 0) == 13);
    REQUIRE(b.column_of(0, 1, 0) == 16);
    REQUIRE(b.column_of(0, 0, 1) == 14);
    REQUIRE(b.column_of(1, 0, 0) == 22);
    REQUIRE(b.column_of(-1, -1, -1) == 0);
    REQUIRE(b.column_of(1, 1, 1) == 26);

    // window center: every complex exponential is exp(0) = 1
    for (std::size_t i = 0; i < 13; ++i) {
        REQUIRE(b.W.at2(2 * i, 13) == Catch::Approx(1.0).margin(1e-15));
        REQUIRE(b.W.at2(2 * i + 1, 13) == Catch::Approx(0.0).margin(1e-15));
    }

    // v13 = (0,0,1) at offset (0,0,1): exp(-2*pi*j * 1/3)
    REQUIRE(b.W.at2(24, 14) == Catch::Approx(-0.5).margin(1e-12));
    REQUIRE(b.W.at2(25, 14) == Catch::Approx(-kSqrt3Half).margin(1e-12));

    // v1 = (1,0,0) at offset (1,0,0): same value along the depth axis
    REQUIRE(b.W.at2(0, 22) == Catch::Approx(-0.5).margin(1e-12));
    REQUIRE(b.W.at2(1, 22) == Catch::Approx(-kSqrt3Half).margin(1e-12));

    // v1 has no height/width dependence: moving along width keeps the value
    REQUIRE(b.W.at2(0, b.column_of(1, 0, 1)) == Catch::Approx(-0.5).margin(1e-12));

    // conjugate symmetry: negating the offset conjugates the exponential
    for (std::size_t i = 0; i < 13; ++i)
        for (int yd = -1; yd <= 1; ++yd)
            for (int yh = -1; yh <= 1; ++yh)
                for (int yw = -1; yw <= 1; ++yw) {
                    const std::size_t cp = b.column_of(yd, yh, yw);
                    const std::size_t cm = b.column_of(-yd, -yh, -yw);
                    REQUIRE(b.W.at2(2 * i, cp) ==
                            Catch::Approx(b.W.at2(2 * i, cm)).margin(1e-14));
                    REQUIRE(b.W.at2(2 * i + 1, cp) ==
                            Catch::Approx(-b.W.at2(2 * i + 1, cm)).margin(1e-14));
                }
}

TEST_CASE("every basis row sums to zero (constant inputs are annihilated)") {
    for (const int n : {3, 5, 7, 9}) {
        const StftBasis b = build_basis(n);
        const std::size_t n3 = static_cast<std::size_t>(n) * n * n;
        for (std::size_t row = 0; row < 26; ++row) {
            double s = 0.0;
            for (std::size_t c = 0; c < n3; ++c) s += b.W.at2(row, c);
            REQUIRE(std::abs(s) <= 1e-11);
        }
    }
}

TEST_CASE("separable factors reproduce the dense table") {
    for (const int n : {3, 5}) {
        const StftBasis b = build_basis(n);
        for (std::size_t i = 0; i < 13; ++i)
            for (int yd = -b.r; yd <= b.r; ++yd)
                for (int yh = -b.r; yh <= b.r; ++yh)
                    for (int yw = -b.r; yw <= b.r; ++yw) {
                        const std::complex<double> w =
                            b.sep_factors[i][0][static_cast<std::size_t>(yd + b.r)] *
                            b.sep_factors[i][1][static_cast<std::size_t>(yh + b.r)] *
                            b.sep_factors[i][2][static_cast<std::size_t>(yw + b.r)];
                        const std::size_t col = b.column_of(yd, yh, yw);
                        REQUIRE(b.W.at2(2 * i, col) == Catch::Approx(w.real()).margin(1e-14));
                        REQUIRE(b.W.at2(2 * i + 1, col) == Catch::Approx(w.imag()).margin(1e-14));
                    }
        // all factors have unit magnitude
        for (std::size_t i = 0; i < 13; ++i)
            for (int a = 0; a < 3; ++a)
                for (const auto& f : b.sep_factors[i][a])
                    REQUIRE(std::abs(f) == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("interleaved-to-blocked row map") {
    REQUIRE(interleaved_to_blocked_row(0) == 0);
    REQUIRE(interleaved_to_blocked_row(1) == 13);
    REQUIRE(interleaved_to_blocked_row(2) == 1);
    REQUIRE(interleaved_to_blocked_row(24) == 12);
    REQUIRE(interleaved_to_blocked_row(25) == 25);
    REQUIRE_THROWS_AS(interleaved_to_blocked_row(26), IndexError);
    // bijection over 0..25
    std::array<bool, 26> hit{};
    for (std::size_t r = 0; r < 26; ++r) hit[interleaved_to_blocked_row(r)] = true;
    for (bool h : hit) REQUIRE(h);
}

TEST_CASE("shared basis cache returns one table per window size") {
    const auto a = shared_basis(3);
    const auto b = shared_basis(3);
    const auto c = shared_basis(5);
    REQUIRE(a.get() == b.get());
    REQUIRE(a.get() != static_cast<const void*>(c.get()));
    REQUIRE(a->n == 3);
    REQUIRE(c->n == 5);
}

TEST_CASE("verification suites run green on the real basis") {
    verify::Options opt;
    opt.equivalence_inputs = 3;  // keep this unit test fast; full count runs in acceptance
    for (const auto& c : verify::run_suite("basis", opt)) {
        INFO(c.name << " " << c.detail);
        REQUIRE(c.pass);
    }
    for (const auto& c : verify::run_suite("oracle", opt)) {
        INFO(c.name << " " << c.detail);
        REQUIRE(c.pass);
    }
}

TEST_CASE("a corrupted basis table is caught by the evaluator cross-check") {
    verify::Options opt;
    opt.equivalence_inputs = 3;
    opt.basis_mutation = [](StftBasis& b) {
        b.W.at2(7, 5) += 1e-3;  // silent single-entry corruption
    };
    const auto checks = verify::run_suite("oracle", opt);
    bool any_fail = false;
    for (const auto& c : checks) any_fail = any_fail || !c.pass;
    REQUIRE(any_fail);
}
