// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mutex>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/launch.hpp"
#include "hpcc_mesh/randomaccess.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::randomaccess;
using transport::Backend;
using transport::Communicator;

namespace {

// The HPCC scalar update loop, written out independently.
std::vector<std::uint64_t> scalar_oracle(int table_log, std::uint64_t updates) {
    const std::uint64_t size = std::uint64_t{1} << table_log;
    std::vector<std::uint64_t> t(size);
    for (std::uint64_t i = 0; i < size; ++i) t[i] = i;
    std::uint64_t ran = 1;
    for (std::uint64_t u = 0; u < updates; ++u) {
        ran = (ran << 1) ^ (static_cast<std::int64_t>(ran) < 0 ? 7u : 0u);
        t[ran & (size - 1)] ^= ran;
    }
    return t;
}

struct Gathered {
    std::vector<std::uint64_t> table;
    std::vector<RaResult> ranks;
};

Gathered run(int ranks, const RaConfig& cfg, Backend backend = Backend::concurrent) {
    transport::LaunchOptions opt;
    opt.backend = backend;
    opt.world_size = ranks;
    Gathered out;
    out.ranks.resize(static_cast<std::size_t>(ranks));
    std::mutex mu;
    const auto res = transport::launch_ranks(opt, [&](Communicator& comm) {
        auto r = run_randomaccess(comm, cfg);
        std::lock_guard lock(mu);
        out.ranks[static_cast<std::size_t>(comm.rank().index)] = std::move(r);
        return nlohmann::json(nullptr);
    });
    REQUIRE_MESSAGE(res.ok(), res.first_error());
    for (const auto& r : out.ranks) out.table.insert(out.table.end(), r.local_table.begin(), r.local_table.end());
    return out;
}

}  // namespace

TEST_CASE("lfsr step examples") {
    CHECK(lfsr_step(1) == 2);
    CHECK(lfsr_step(0x8000000000000000ull) == 0x7);
    CHECK(lfsr_step(lfsr_step(1)) == 4);
    CHECK(lfsr_step(0xC000000000000000ull) == (0x8000000000000000ull ^ 0x7));
}

TEST_CASE("skip-ahead equals iteration") {
    CHECK(lfsr_skip(0) == 1);
    std::uint64_t v = 1;
    for (std::uint64_t p = 1; p <= 5000; ++p) {
        v = lfsr_step(v);
        REQUIRE(lfsr_skip(p) == v);
    }
    std::uint64_t w = 1;
    for (int i = 0; i < 1000000; ++i) w = lfsr_step(w);
    CHECK(lfsr_skip(1000000) == w);
}

TEST_CASE("single rank, single lane equals the scalar loop") {
    RaConfig cfg{.table_log = 12, .rng_log = 0};
    const auto r = run(1, cfg);
    CHECK(r.table == scalar_oracle(12, cfg.updates()));
    CHECK(r.table == reference_randomaccess(cfg.table_size(), cfg.updates()));
    CHECK(r.ranks[0].error_ratio == 0.0);
    CHECK(r.ranks[0].verify_ok);
}

TEST_CASE("final table is independent of lanes, distance and ranks") {
    const auto oracle = scalar_oracle(13, 4ull << 13);
    for (int ranks : {1, 2, 4, 8}) {
        for (int rng_log : {0, 2, 3}) {
            for (int distance : {1, 3}) {
                RaConfig cfg{.table_log = 13, .rng_log = rng_log, .distance = distance};
                const auto r = run(ranks, cfg);
                CHECK(r.table == oracle);
                std::uint64_t applied = 0;
                for (const auto& rank : r.ranks) {
                    applied += rank.applied;
                    CHECK(rank.error_ratio == 0.0);
                    // Each lane consumes exactly its share of the sequence.
                    std::uint64_t consumed = 0;
                    for (auto c : rank.lane_consumed) consumed += c;
                    CHECK(consumed == cfg.updates());
                }
                CHECK(applied == cfg.updates());
            }
        }
    }
}

TEST_CASE("lanes stall instead of skipping") {
    // All addresses are local on one rank, so four lanes contend for one
    // drain per clock.
    ShiftRegister reg(4, 1, 1000, 0, 1024, 1024);
    std::uint64_t emitted = 0;
    std::uint64_t clocks = 0;
    while (!reg.done()) {
        emitted += reg.step().has_value();
        ++clocks;
    }
    CHECK(emitted == 1000);
    CHECK(reg.stalls() > 0);
    CHECK(clocks >= 1000);
    for (auto c : reg.consumed()) CHECK(c == 250);
}

TEST_CASE("four ranks, four lanes, 2^16 table") {
    RaConfig cfg{.table_log = 16, .rng_log = 2};
    const auto oracle = scalar_oracle(16, 4ull << 16);
    CHECK(run(4, cfg).table == oracle);
    CHECK(run(4, cfg, Backend::virtual_time).table == oracle);
}

TEST_CASE("verification") {
    const std::uint64_t size = 1024, updates = 4096;
    auto table = reference_randomaccess(size, updates);
    CHECK(verify_randomaccess(table, updates) == 0.0);

    // Applying the sequence twice restores the start.
    const auto twice = reference_randomaccess(size, 0);
    auto again = table;
    std::uint64_t v = 1;
    for (std::uint64_t u = 0; u < updates; ++u) {
        v = lfsr_step(v);
        again[v & (size - 1)] ^= v;
    }
    CHECK(again == twice);

    // Undo one update: exactly one entry is wrong.
    const std::uint64_t dropped = lfsr_skip(17);
    auto one = table;
    one[dropped & (size - 1)] ^= dropped;
    CHECK(verify_randomaccess(one, updates) == 1.0 / size);

    // Two drops of the same value at the same address cancel.
    auto two = table;
    two[dropped & (size - 1)] ^= dropped;
    two[dropped & (size - 1)] ^= dropped;
    CHECK(verify_randomaccess(two, updates) == 0.0);
}

TEST_CASE("config errors") {
    RaConfig cfg;
    CHECK_THROWS_AS(cfg.validate(3), ConfigError);
    cfg.distance = 0;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    CHECK_THROWS_AS(verify_randomaccess(std::vector<std::uint64_t>(3), 1), ConfigError);
}
