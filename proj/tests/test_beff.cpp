// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <mutex>

#include "hpcc_mesh/beff.hpp"
#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/launch.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::beff;
using namespace hpcc_mesh::transport;

namespace {

// Runs b_eff in-process and returns rank 0's result.
BeffResult run_inproc(Backend backend, int ranks, BeffConfig cfg, VirtualParams vp = {}) {
    LaunchOptions opt;
    opt.backend = backend;
    opt.world_size = ranks;
    opt.virtual_params = vp;
    BeffResult out;
    std::mutex mu;
    const auto res = launch_ranks(opt, [&](Communicator& comm) {
        auto r = run_beff(comm, cfg);
        if (comm.rank() == RankId(0)) {
            std::lock_guard lock(mu);
            out = std::move(r);
        }
        return nlohmann::json(nullptr);
    });
    REQUIRE_MESSAGE(res.ok(), res.first_error());
    return out;
}

// 2L / (ceil(L / 64 B) * 6.4 ns + 520 ns) for the default link, evaluated
// here from the raw parameters.
double channel_oracle(std::size_t bytes) {
    const double beats = std::ceil(static_cast<double>(bytes) / (2 * 32.0));
    return 2.0 * static_cast<double>(bytes) / (beats / 156.25e6 + 520e-9);
}

}  // namespace

TEST_CASE("sizes, iterations and fill rule") {
    const auto sizes = message_sizes();
    REQUIRE(sizes.size() == 21);
    for (int e = 0; e < 21; ++e) CHECK(sizes[static_cast<std::size_t>(e)] == (std::size_t{1} << e));
    CHECK(default_iterations(1) == 32768);
    CHECK(default_iterations(1 << 15) == 1);
    CHECK(default_iterations(1 << 20) == 1);
    CHECK(fill_byte(1) == std::byte{0});
    CHECK(fill_byte(1024) == std::byte{10});
    CHECK(fill_byte(1 << 20) == std::byte{20});
    Bytes ok(8, std::byte{3});
    CHECK(payload_valid(ok, 8));
    ok[5] = std::byte{4};
    CHECK_FALSE(payload_valid(ok, 8));
    CHECK_FALSE(payload_valid(Bytes(4, std::byte{2}), 8));
}

TEST_CASE("effective bandwidth is the mean of the per-size maxima") {
    std::vector<double> flat(21, 10e9);
    CHECK(effective_bandwidth(flat) == doctest::Approx(10e9));
    std::vector<double> one(21, 0.0);
    one[7] = 21e9;
    CHECK(effective_bandwidth(one) == doctest::Approx(1e9));
    CHECK_THROWS_AS(effective_bandwidth(std::vector<double>(20, 1.0)), ConfigError);
}

TEST_CASE("virtual direct mode reproduces the channel curve") {
    const auto r = run_inproc(Backend::virtual_time, 2, {});
    REQUIRE(r.sizes.size() == 21);
    CHECK(r.validation_ok);
    double lo = INFINITY, hi = 0;
    for (std::size_t i = 0; i < 21; ++i) {
        const auto& s = r.sizes[i];
        CHECK(r.per_rank_bandwidth(i) == doctest::Approx(channel_oracle(s.bytes)).epsilon(0.02));
        lo = std::min(lo, s.best_bandwidth);
        hi = std::max(hi, s.best_bandwidth);
    }
    CHECK(r.per_rank_bandwidth(0) == doctest::Approx(3.80e6).epsilon(0.01));
    CHECK(r.per_rank_bandwidth(20) == doctest::Approx(19.9e9).epsilon(0.01));
    // Mean of the 21 model values, computed offline with exact rationals.
    CHECK(r.effective_bandwidth / 2 == doctest::Approx(7771776799.433602).epsilon(0.02));
    CHECK(lo <= r.effective_bandwidth);
    CHECK(r.effective_bandwidth <= hi);
}

TEST_CASE("virtual staged mode follows the copy-exchange-copy cost") {
    VirtualParams vp;
    // 100 us per 1 MiB copy in each direction, 50 us fixed exchange.
    vp.link.staged = StagedLink{1048576.0 / 100e-6, 1048576.0 / 100e-6, std::numeric_limits<double>::infinity(), 50e-6};
    BeffConfig cfg;
    cfg.mode = Mode::staged;
    const auto r = run_inproc(Backend::virtual_time, 2, cfg, vp);
    CHECK(r.per_rank_bandwidth(20) == doctest::Approx(8.388608e9).epsilon(1e-9));
    CHECK(r.validation_ok);
}

TEST_CASE("aggregated bandwidth scales with the ring size") {
    BeffConfig cfg;
    cfg.iterations_override = 4;
    const double base = run_inproc(Backend::virtual_time, 2, cfg).effective_bandwidth;
    for (int n : {3, 4, 8}) {
        const double agg = run_inproc(Backend::virtual_time, n, cfg).effective_bandwidth;
        CHECK(agg == doctest::Approx(base * n / 2.0).epsilon(0.02));
    }
}

TEST_CASE("single rank staged mode uses a self loop") {
    BeffConfig cfg;
    cfg.mode = Mode::staged;
    cfg.iterations_override = 2;
    const auto r = run_inproc(Backend::concurrent, 1, cfg);
    CHECK(r.sizes.size() == 21);
    CHECK(r.validation_ok);
    CHECK(r.effective_bandwidth > 0);

    BeffConfig direct;
    LaunchOptions opt;
    const auto res = launch_ranks(opt, [&](Communicator& comm) {
        run_beff(comm, direct);
        return nlohmann::json(nullptr);
    });
    CHECK_FALSE(res.ok());
    CHECK(res.first_error().find("at least 2 ranks") != std::string::npos);
}

TEST_CASE("real backends exchange valid payloads") {
    BeffConfig cfg;
    cfg.iterations_override = 2;
    cfg.repetitions = 2;
    for (auto mode : {Mode::direct, Mode::staged}) {
        cfg.mode = mode;
        const auto r = run_inproc(Backend::concurrent, 3, cfg);
        CHECK(r.validation_ok);
        for (const auto& s : r.sizes) {
            CHECK(s.rep_bandwidth.size() == 2);
            CHECK(s.best_bandwidth == doctest::Approx(*std::max_element(s.rep_bandwidth.begin(), s.rep_bandwidth.end())));
        }
    }

    LaunchOptions opt;
    opt.backend = Backend::socket;
    opt.world_size = 2;
    const auto res = launch_ranks(opt, [&](Communicator& comm) {
        const auto r = run_beff(comm, cfg);
        return nlohmann::json{{"ok", r.validation_ok}, {"beff", r.effective_bandwidth}};
    });
    REQUIRE_MESSAGE(res.ok(), res.first_error());
    for (const auto& rank : res.ranks) {
        CHECK(rank.value["ok"].get<bool>());
        CHECK(rank.value["beff"].get<double>() > 0);
    }
}

TEST_CASE("config validation") {
    CHECK(mode_from_string("staged") == Mode::staged);
    CHECK_THROWS_AS(mode_from_string("fast"), ConfigError);
    BeffConfig bad;
    bad.repetitions = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
