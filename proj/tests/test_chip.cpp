#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "qimpact/chip.hpp"
#include "qimpact/pipeline.hpp"

using namespace qimpact;

TEST(Chip, DistanceIsEuclidean) {
    EXPECT_DOUBLE_EQ(distance(Position{0, 0}, Position{3, 4}), 5.0);
    EXPECT_DOUBLE_EQ(distance(Position{1, 1}, Position{1, 1}), 0.0);
}

TEST(Chip, LayoutRejectsDuplicatesAndNonFinite) {
    EXPECT_THROW(ChipLayout({{0, {0, 0}, true}, {0, {1, 0}, true}}), Error);
    EXPECT_THROW(ChipLayout({{0, {NAN, 0}, true}}), Error);
    const ChipLayout ok({{3, {0, 0}, true}, {7, {1, 0}, false}});
    EXPECT_EQ(ok.active_ids(), std::vector<QubitId>{3});
    EXPECT_THROW(ok.qubit(4), Error);
}

TEST(Chip, WrapChargeIsPeriodic) {
    EXPECT_DOUBLE_EQ(wrap_charge(0.25).value(), 0.25);
    EXPECT_NEAR(wrap_charge(1.25).value(), 0.25, 1e-15);
    EXPECT_NEAR(wrap_charge(-0.75).value(), 0.25, 1e-15);
    const double tiny = wrap_charge(-1e-18).value();
    EXPECT_GE(tiny, 0.0);
    EXPECT_LT(tiny, 1.0);
    EXPECT_THROW(wrap_charge(INFINITY), Error);
}

TEST(Chip, ChargeResponseFallsOffAsGaussian) {
    ImpactEvent ev;
    ev.pos = {0, 0};
    ev.peak_charge = 0.1;
    EXPECT_DOUBLE_EQ(charge_response(ev, {0, 0}, 1.5), 0.1);
    // one sigma away: 0.1 * exp(-1/2)
    EXPECT_NEAR(charge_response(ev, {1.5, 0}, 1.5), 0.0606531, 1e-7);
    EXPECT_THROW(charge_response(ev, {0, 0}, 0.0), Error);
}

TEST(Chip, LayoutCsvRoundTrip) {
    const ChipLayout a({{0, {0.5, 1.25}, true}, {1, {2.0, -3.0}, false}});
    std::stringstream ss;
    write_layout(ss, a);
    const ChipLayout b = read_layout(ss);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b.position(0), (Position{0.5, 1.25}));
    EXPECT_FALSE(b.qubit(1).active);
}

TEST(Chip, LayoutParseErrorsNameTheRow) {
    std::stringstream bad("qubit_id,x_mm,y_mm,active\n0,0,0,1\n1,abc,0,1\n");
    try {
        read_layout(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::parse_error);
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
    }
    std::stringstream flag("qubit_id,x_mm,y_mm,active\n0,0,0,2\n");
    EXPECT_THROW(read_layout(flag), Error);
    std::stringstream header("id,x,y\n");
    EXPECT_THROW(read_layout(header), Error);
}

TEST(Chip, BundledLayoutHasSeventeenActiveQubits) {
    const ChipLayout l = read_layout(default_layout_path());
    EXPECT_EQ(l.size(), 27u);
    const std::vector<QubitId> expected{0, 2, 4, 5, 6, 9, 10, 11, 13, 15, 16, 17, 20, 21, 22, 24, 26};
    EXPECT_EQ(l.active_ids(), expected);
    // active qubits are never nearest neighbours
    for (QubitId a : expected)
        for (QubitId b : expected)
            if (a < b) EXPECT_GT(distance(l, a, b), 2.0);
}
