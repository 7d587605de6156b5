#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "relpv/cost_model.hpp"
#include "relpv/model_zoo.hpp"

using namespace relpv;

TEST_CASE("per-block parameter savings ratio in closed form") {
    // c = f = 27 makes the denominator 27 * 27, so the ratio collapses to n^3
    const int ns[] = {3, 5, 7, 9, 11, 13};
    const std::uint64_t cubes[] = {27, 125, 343, 729, 1331, 2197};
    for (int i = 0; i < 6; ++i) {
        const Rational r = savings_ratio(ns[i], 27, 27);
        REQUIRE(r.num == cubes[i]);
        REQUIRE(r.den == 1);
    }
    REQUIRE(savings_ratio(3, 1, 1) == Rational{1, 1});
    // reduction: 27*2 / (2 + 26) = 54/28 = 27/14
    REQUIRE(savings_ratio(3, 2, 1) == Rational{27, 14});
    REQUIRE(savings_ratio(3, 64, 64).value() ==
            Catch::Approx(27.0 * 64.0 * 64.0 / (64.0 + 26.0 * 64.0)));
    REQUIRE_THROWS_AS(savings_ratio(0, 1, 1), ParameterError);
    REQUIRE_THROWS_AS(savings_ratio(3, 0, 1), ParameterError);
}

TEST_CASE("per-layer accounting on the desk models") {
    const CostReport lp = cost_report(build_lp_mc3d(3, Scale::Desk));
    REQUIRE(lp.layers[0].kind == std::string("relpv"));
    REQUIRE(lp.layers[0].params == 434);   // 1 + 1 + 26*16 + 16
    REQUIRE(lp.layers[0].flops == 1128);   // 2*434 + 2*(13*3*3) + 26

    const CostReport cv = cost_report(build_mc3d(3, Scale::Desk));
    REQUIRE(cv.layers[0].kind == std::string("conv3d"));
    REQUIRE(cv.layers[0].params == 448);   // 1*27*16 + 16
    REQUIRE(cv.layers[0].flops == 896);    // 2*448

    // first fully connected stage: 64 -> 1024
    bool found_fc = false;
    for (const auto& lc : cv.layers) {
        if (lc.kind == std::string("fc")) {
            REQUIRE(lc.params == 66560);   // 64*1024 + 1024
            REQUIRE(lc.flops == 133120);
            found_fc = true;
            break;
        }
    }
    REQUIRE(found_fc);

    // totals are the straight column sums
    std::size_t p = 0, f = 0;
    for (const auto& lc : lp.layers) {
        p += lc.params;
        f += lc.flops;
    }
    REQUIRE(p == lp.total_params);
    REQUIRE(f == lp.total_flops);
}

TEST_CASE("growing the window inflates dense-conv cost but not the local-phase cost") {
    const double conv_ratio = static_cast<double>(count_flops(build_mc3d(9))) /
                              static_cast<double>(count_flops(build_mc3d(3)));
    REQUIRE(conv_ratio >= 7.0);
    REQUIRE(conv_ratio <= 9.0);

    const double lp_ratio = static_cast<double>(count_flops(build_lp_mc3d(9))) /
                            static_cast<double>(count_flops(build_lp_mc3d(3)));
    REQUIRE(lp_ratio >= 1.0);
    REQUIRE(lp_ratio <= 1.05);
}

TEST_CASE("bias toggling and storage size") {
    const ModelSpec m = build_mc3d(3, Scale::Desk);
    const CostReport with = cost_report(m, true);
    const CostReport without = cost_report(m, false);
    REQUIRE(with.total_params > without.total_params);
    REQUIRE(with.model_bytes == with.total_params * 4);
    const CostReport big = cost_report(m, true, 8);
    REQUIRE(big.model_bytes == with.total_params * 8);
}

TEST_CASE("the cost convention is stated verbatim") {
    const char* text = flop_convention_text();
    REQUIRE(std::strcmp(text,
                        "FLOP convention: each trainable parameter (weights and biases) counts "
                        "one multiply and one add per application; ReLPV adds 2*(13*3*n) for its "
                        "fixed separable factors and 26 ops for its internal ReLU; parameterless "
                        "layers cost one op per output channel; flatten and concat are free. "
                        "Spatial replication is not multiplied in.") == 0);
}

TEST_CASE("count helpers agree with the report") {
    const ModelSpec m = build_lp_mc3d(5, Scale::Desk);
    REQUIRE(count_params(m) == cost_report(m).total_params);
    REQUIRE(count_flops(m) == cost_report(m).total_flops);
}
