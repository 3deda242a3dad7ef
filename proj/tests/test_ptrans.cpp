// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/launch.hpp"
#include "hpcc_mesh/ptrans.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::ptrans;
using blockmat::DenseMatrix;
using transport::Backend;
using transport::Communicator;
using transport::LaunchOptions;
using transport::RankId;
using nlohmann::json;

namespace {

// C = B + A^T straight from the generator, element by element.
DenseMatrix<float> dense_oracle(const PtransConfig& cfg) {
    DenseMatrix<float> c(cfg.n);
    const int bs = cfg.block_size;
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.n; ++j) {
            const auto b = blockmat::generate_uniform_block<float>(cfg.seed, kStreamB, cfg.n, bs, i / bs, j / bs);
            float a = 0;
            if (!cfg.zero_a) {
                a = blockmat::generate_uniform_block<float>(cfg.seed, kStreamA, cfg.n, bs, j / bs, i / bs)(j % bs,
                                                                                                          i % bs);
            }
            c(i, j) = b(i % bs, j % bs) + a;
        }
    }
    return c;
}

json matrix_json(const DenseMatrix<float>& m) {
    std::vector<std::uint8_t> raw(m.values().size() * sizeof(float));
    std::memcpy(raw.data(), m.values().data(), raw.size());
    return json::binary(raw);
}

DenseMatrix<float> matrix_from_json(const json& j, int n) {
    const auto& raw = j.get_binary();
    DenseMatrix<float> m(n);
    REQUIRE(raw.size() == static_cast<std::size_t>(n) * n * sizeof(float));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) std::memcpy(&m(i, k), raw.data() + (static_cast<std::size_t>(i) * n + k) * 4, 4);
    return m;
}

struct Run {
    DenseMatrix<float> c;
    std::vector<json> per_rank;
};

// Runs PTRANS and returns the gathered C plus per-rank summaries.
Run run(Backend backend, const PtransConfig& cfg, transport::VirtualParams vp = {}) {
    LaunchOptions opt;
    opt.backend = backend;
    opt.world_size = cfg.grid * cfg.grid;
    opt.virtual_params = vp;
    const auto res = transport::launch_ranks(opt, [&](Communicator& comm) {
        const auto r = run_ptrans<float>(comm, cfg);
        const auto full = blockmat::gather_dense(comm, r.c, RankId(0));
        json out{{"residual", r.max_residual},
                 {"bytes_sent", r.bytes_sent},
                 {"owned", r.c.blocks().size()},
                 {"time", r.time},
                 {"flops", r.flops}};
        if (comm.rank() == RankId(0)) out["c"] = matrix_json(full);
        return out;
    });
    REQUIRE_MESSAGE(res.ok(), res.first_error());
    Run out;
    out.c = matrix_from_json(res.ranks[0].value["c"], cfg.n);
    for (const auto& r : res.ranks) out.per_rank.push_back(r.value);
    return out;
}

}  // namespace

TEST_CASE("single rank matches the dense oracle bitwise") {
    PtransConfig cfg{.n = 4, .block_size = 2, .grid = 1};
    const auto r = run(Backend::concurrent, cfg);
    CHECK(r.c == dense_oracle(cfg));
    CHECK(r.per_rank[0]["residual"].get<double>() == 0.0);
    CHECK(r.per_rank[0]["flops"].get<double>() == 16.0);
}

TEST_CASE("zero A leaves B") {
    PtransConfig cfg{.n = 8, .block_size = 2, .grid = 2, .zero_a = true};
    const auto r = run(Backend::concurrent, cfg);
    CHECK(r.c == dense_oracle(cfg));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            CHECK(r.c(i, j) == blockmat::generate_uniform_block<float>(cfg.seed, kStreamB, 8, 2, i / 2, j / 2)(i % 2,
                                                                                                            j % 2));
}

TEST_CASE("distributed result is independent of the grid") {
    for (auto mode : {Mode::direct, Mode::staged}) {
        PtransConfig cfg{.n = 48, .block_size = 4, .mode = mode, .seed = 77};
        const auto oracle = dense_oracle(cfg);
        for (int p = 1; p <= 4; ++p) {
            cfg.grid = p;
            const auto r = run(Backend::concurrent, cfg);
            CHECK(r.c == oracle);
            for (const auto& rank : r.per_rank) CHECK(rank["residual"].get<double>() == 0.0);
        }
    }
}

TEST_CASE("each rank sends exactly its owned blocks") {
    for (auto mode : {Mode::direct, Mode::staged}) {
        for (int p : {1, 2, 3}) {
            PtransConfig cfg{.n = 36, .block_size = 4, .grid = p, .mode = mode, .repetitions = 2};
            const auto r = run(Backend::concurrent, cfg);
            for (const auto& rank : r.per_rank) {
                CHECK(rank["bytes_sent"].get<std::uint64_t>() == rank["owned"].get<std::uint64_t>() * 16 * 4);
            }
        }
    }
}

TEST_CASE("validate_ptrans") {
    PtransConfig cfg{.n = 8, .block_size = 4};
    const auto c = reference_ptrans<float>(cfg);
    DenseMatrix<float> a(8), b(8);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            a.set_block(i, j, input_block<float>(cfg, kStreamA, i, j));
            b.set_block(i, j, input_block<float>(cfg, kStreamB, i, j));
        }
    CHECK(validate_ptrans(c, a, b) == 0.0);
    auto bad = c;
    bad(3, 5) += 1.0f;
    CHECK(validate_ptrans(bad, a, b) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(validate_ptrans(c, DenseMatrix<float>(4), b), ConfigError);
}

TEST_CASE("transpose-add with zero B is an involution") {
    const auto a = blockmat::generate_uniform_block<double>(5, 9, 16, 16, 0, 0);
    const blockmat::Block<double> zero(16);
    CHECK(blockmat::block_transpose_add(blockmat::block_transpose_add(a, zero), zero) == a);
}

TEST_CASE("backends agree on n=64") {
    PtransConfig cfg{.n = 64, .block_size = 8, .grid = 2, .seed = 3};
    const auto base = run(Backend::concurrent, cfg).c;
    CHECK(base == dense_oracle(cfg));
    CHECK(run(Backend::virtual_time, cfg).c == base);
    CHECK(run(Backend::socket, cfg).c == base);
}

TEST_CASE("virtual direct mode is bounded by the link rate") {
    // With P = 2 the diagonal ranks only address themselves while the two
    // off-diagonal ranks swap all n^2 / 4 of their values over one link of
    // c_n' c_w c_f = 10 GB/s; the slowest rank is bounded by that link.
    const transport::LinkModel link;
    double last = 0;
    for (int n : {64, 256, 512}) {
        PtransConfig cfg{.n = n, .block_size = 64, .grid = 2};
        const auto r = run(Backend::virtual_time, cfg);
        const double t = r.per_rank[0]["time"].get<double>();
        const double offrank_bytes = static_cast<double>(n) * n / 4 * sizeof(float);
        const double rate = offrank_bytes / t;
        CHECK(rate <= link.channel_bandwidth() * 1.0001);
        CHECK(rate > last);
        last = rate;
    }
    CHECK(last > 0.8 * link.channel_bandwidth());
}

TEST_CASE("config errors") {
    PtransConfig cfg{.n = 16, .block_size = 4, .grid = 2};
    CHECK_THROWS_AS(cfg.validate(3), ConfigError);
    cfg.block_size = 5;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    CHECK(mode_from_string("staged") == Mode::staged);
    CHECK_THROWS_AS(mode_from_string("x"), ConfigError);
}
