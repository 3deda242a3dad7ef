// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/netmodel.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::netmodel;

namespace {

// Distance in units in the last place.
double ulps(double a, double b) {
    return std::fabs(a - b) / (std::nextafter(std::fabs(b), INFINITY) - std::fabs(b));
}

const ChannelParams kTable2{};

}  // namespace

TEST_CASE("channel time") {
    CHECK(ulps(model_channel_time(2048, 1, kTable2), 724.8e-9) <= 1.0);
    CHECK(ulps(model_channel_time(1, 1, kTable2), 526.4e-9) <= 1.0);
    for (std::uint64_t L : {1ull, 63ull, 64ull, 65ull, 4096ull, 1ull << 20}) {
        CHECK(model_channel_time(L, 2, kTable2) == 2.0 * model_channel_time(L, 1, kTable2));
    }
    CHECK_THROWS_AS(model_channel_time(0, 1, kTable2), ConfigError);
    CHECK_THROWS_AS(model_channel_time(8, 0, kTable2), ConfigError);
}

TEST_CASE("channel bandwidth spot values") {
    // 2L / (ceil(L / 64 B) * 6.4 ns + 520 ns), evaluated with exact rationals.
    CHECK(model_channel_bandwidth(1, kTable2) == doctest::Approx(3799392.0972644375).epsilon(1e-14));
    CHECK(model_channel_bandwidth(64, kTable2) == doctest::Approx(128.0 / 526.4e-9).epsilon(1e-14));
    CHECK(model_channel_bandwidth(1 << 20, kTable2) == doctest::Approx(19901307298.70485).epsilon(1e-14));
}

TEST_CASE("channel bandwidth is 2L over the one-message time and nondecreasing") {
    double last = 0;
    for (int k = 0; k <= 20; ++k) {
        const std::uint64_t L = 1ull << k;
        const double bw = model_channel_bandwidth(L, kTable2);
        CHECK(bw == 2.0 * static_cast<double>(L) / model_channel_time(L, 1, kTable2));
        CHECK(bw >= last);
        last = bw;
    }
}

TEST_CASE("staged bandwidth") {
    const StagedParams p{{100e-6}, {50e-6}, {100e-6}};
    CHECK(ulps(model_staged_bandwidth(1 << 20, p), 8.388608e9) <= 1.0);

    // Fixed latencies: bandwidth vanishes with the message.
    CHECK(model_staged_bandwidth(1, p) < 1e5);

    const StagedParams doubled{{200e-6}, {100e-6}, {200e-6}};
    CHECK(model_staged_bandwidth(4096, doubled) == doctest::Approx(model_staged_bandwidth(4096, p) / 2));

    const auto from_link = StagedParams::from_link({11.2e9, 11.2e9, 12.5e9, 1e-6});
    const double L = 1 << 20;
    CHECK(model_staged_bandwidth(1 << 20, from_link) ==
          doctest::Approx(2 * L / (L / 11.2e9 + L / 12.5e9 + 1e-6 + L / 11.2e9)));
}

TEST_CASE("ptrans block time") {
    CHECK(model_ptrans_block_time(512, 16, 300e6, 0) == doctest::Approx(163.84e-6).epsilon(1e-14));
    CHECK(model_ptrans_block_time(1, 16, 300e6, 1e-3) == doctest::Approx(1e-3).epsilon(1e-6));
    const double k1 = model_ptrans_block_time(64, 16, 300e6, 0);
    CHECK(model_ptrans_block_time(128, 16, 300e6, 0) == doctest::Approx(4 * k1));
}

TEST_CASE("ptrans memory bandwidth and peak") {
    CHECK(ulps(model_ptrans_memory_bandwidth(4, kTable2), 60e9) <= 1.0);
    CHECK(model_ptrans_memory_bandwidth(1, kTable2) == doctest::Approx(15e9));
    CHECK(model_ptrans_memory_bandwidth(4, kTable2) == 3.0 * 4 * kTable2.width * kTable2.frequency);

    CHECK(model_ptrans_peak_flops(1, 4, kTable2) == doctest::Approx(5e9));
    CHECK(model_ptrans_peak_flops(2, 4, kTable2) == 2 * model_ptrans_peak_flops(1, 4, kTable2));
    CHECK_THROWS_AS(model_ptrans_peak_flops(1, 0, kTable2), ConfigError);
    CHECK_THROWS_AS(model_ptrans_memory_bandwidth(0, kTable2), ConfigError);
}
