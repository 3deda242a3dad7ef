// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <map>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/hpl.hpp"
#include "hpcc_mesh/launch.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::hpl;
using blockmat::DenseMatrix;
using transport::Backend;
using transport::Communicator;
using transport::GridCoord;
using transport::RankId;
using nlohmann::json;

namespace {

template <class T>
json matrix_json(const DenseMatrix<T>& m) {
    std::vector<std::uint8_t> raw(m.values().size() * sizeof(T));
    std::memcpy(raw.data(), m.values().data(), raw.size());
    return json::binary(raw);
}

template <class T>
DenseMatrix<T> matrix_from_json(const json& j, int n) {
    const auto& raw = j.get_binary();
    REQUIRE(raw.size() == static_cast<std::size_t>(n) * n * sizeof(T));
    DenseMatrix<T> m(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            std::memcpy(&m(i, k), raw.data() + (static_cast<std::size_t>(i) * n + k) * sizeof(T), sizeof(T));
    return m;
}

template <class T>
struct Run {
    DenseMatrix<T> lu;
    std::vector<json> ranks;
};

template <class T>
Run<T> run(const HplConfig& cfg, Backend backend = Backend::concurrent) {
    transport::LaunchOptions opt;
    opt.backend = backend;
    opt.world_size = cfg.torus * cfg.torus;
    const auto res = transport::launch_ranks(opt, [&](Communicator& comm) {
        const auto r = run_hpl<T>(comm, cfg);
        const auto lu = blockmat::gather_dense(comm, r.factors, RankId(0));
        json lu_msgs = json::array();
        const int nb = cfg.n / cfg.block_size();
        for (int k = 0; k < nb; ++k) {
            const auto& by_tag = comm.counters().messages_by_tag;
            const auto it = by_tag.find(block_tag(BlockKind::lu, 0, k, nb));
            lu_msgs.push_back(it == by_tag.end() ? 0 : it->second);
        }
        json out{{"residual", r.residual_error}, {"solve_ok", r.solve_ok}, {"lu_tasks", r.lu_tasks},
                 {"flops", r.flops},           {"time", r.lu_time},      {"lu_msgs", lu_msgs},
                 {"iterations", r.iterations.size()}};
        if (comm.rank() == RankId(0)) out["lu"] = matrix_json(lu);
        return out;
    });
    REQUIRE_MESSAGE(res.ok(), res.first_error());
    Run<T> out;
    out.lu = matrix_from_json<T>(res.ranks[0].value["lu"], cfg.n);
    for (const auto& r : res.ranks) out.ranks.push_back(r.value);
    return out;
}

// max |(L U)_ij - A_ij| / max |A_ij|, products accumulated in double.
template <class T>
double reconstruction_error(const DenseMatrix<T>& lu, const DenseMatrix<T>& a) {
    const int n = lu.size();
    double worst = 0, amax = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s = 0;
            const int kmax = std::min(i, j);
            for (int k = 0; k < kmax; ++k) s += static_cast<double>(lu(i, k)) * lu(k, j);
            s += (i <= j) ? static_cast<double>(lu(i, j)) : static_cast<double>(lu(i, j)) * lu(j, j);
            worst = std::max(worst, std::fabs(s - a(i, j)));
            amax = std::max(amax, std::fabs(static_cast<double>(a(i, j))));
        }
    }
    return worst / amax;
}

// Unblocked Doolittle in double.
DenseMatrix<double> dense_doolittle(const DenseMatrix<float>& a) {
    const int n = a.size();
    DenseMatrix<double> m(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i) {
            m(i, k) /= m(k, k);
            for (int j = k + 1; j < n; ++j) m(i, j) -= m(i, k) * m(k, j);
        }
    return m;
}

}  // namespace

TEST_CASE("plan: last iteration and single rank") {
    const auto last = plan_iteration(5, 6, 2);
    CHECK(last.route_length == 0);
    CHECK(last.lu_row.empty());
    CHECK(last.lu_col.empty());
    int lu = 0;
    for (const auto& t : last.tasks) {
        lu += t.lu;
        CHECK(t.top.empty());
        CHECK(t.left.empty());
        CHECK(t.inner.empty());
    }
    CHECK(lu == 1);

    const auto single = plan_iteration(0, 4, 1);
    REQUIRE(single.tasks.size() == 1);
    CHECK(single.tasks[0].lu);
    CHECK(single.tasks[0].top.size() == 3);
    CHECK(single.tasks[0].left.size() == 3);
    CHECK(single.tasks[0].inner.size() == 9);
    CHECK(single.lu_row.empty());
}

TEST_CASE("plan: T=3, six block rows, first iteration") {
    const auto plan = plan_iteration(0, 6, 3);
    CHECK(plan.lu_owner == GridCoord{0, 0});
    CHECK(plan.lu_row == std::vector<GridCoord>{{0, 1}, {0, 2}});
    CHECK(plan.lu_col == std::vector<GridCoord>{{1, 0}, {2, 0}});
    // Hand enumeration over owner_pq: row 0 holds j = 3 | 1,4 | 2,5.
    const std::vector<int> top{1, 2, 2, 0, 0, 0, 0, 0, 0};
    const std::vector<int> left{1, 0, 0, 2, 0, 0, 2, 0, 0};
    const std::vector<int> inner{1, 2, 2, 2, 4, 4, 2, 4, 4};
    for (int r = 0; r < 9; ++r) {
        const auto& t = plan.tasks[static_cast<std::size_t>(r)];
        CHECK(t.top.size() == static_cast<std::size_t>(top[r]));
        CHECK(t.left.size() == static_cast<std::size_t>(left[r]));
        CHECK(t.inner.size() == static_cast<std::size_t>(inner[r]));
        CHECK(t.lu == (r == 0));
    }
}

TEST_CASE("plan: every trailing block gets exactly one task") {
    for (int torus : {1, 2, 3}) {
        const int nb = 7;
        for (int k = 0; k < nb; ++k) {
            const auto plan = plan_iteration(k, nb, torus);
            std::map<std::pair<int, int>, int> hits;
            for (int r = 0; r < torus * torus; ++r) {
                const auto& t = plan.tasks[static_cast<std::size_t>(r)];
                const GridCoord me{r / torus, r % torus};
                if (t.lu) ++hits[{k, k}];
                for (int j : t.top) {
                    ++hits[{k, j}];
                    CHECK(blockmat::owner_pq(k, j, torus, torus) == me);
                }
                for (int i : t.left) {
                    ++hits[{i, k}];
                    CHECK(blockmat::owner_pq(i, k, torus, torus) == me);
                }
                for (auto idx : t.inner) {
                    ++hits[{idx.row, idx.col}];
                    CHECK(blockmat::owner_pq(idx.row, idx.col, torus, torus) == me);
                }
            }
            CHECK(hits.size() == static_cast<std::size_t>((nb - k) * (nb - k)));
            for (const auto& [ij, count] : hits) {
                CHECK(count == 1);
                CHECK(ij.first >= k);
                CHECK(ij.second >= k);
            }
            // Routes never wrap back to the owner.
            for (const auto& c : plan.lu_row) CHECK_FALSE(c == plan.lu_owner);
        }
    }
    CHECK_THROWS_AS(plan_iteration(4, 4, 1), ConfigError);
}

TEST_CASE("single block equals the block kernel") {
    HplConfig cfg{.n = 16, .block_log = 4, .register_log = 2, .torus = 1, .seed = 9};
    const auto r = run<float>(cfg);
    auto block = blockmat::diag_dominant_block<float>(9, 16, 16, 0, 0);
    blockmat::block_lu_decompose(block);
    DenseMatrix<float> want(16);
    want.set_block(0, 0, block);
    CHECK(r.lu == want);
}

TEST_CASE("blocked factors match unblocked Doolittle") {
    HplConfig cfg{.n = 64, .block_log = 4, .register_log = 2, .torus = 1, .seed = 4};
    const auto r = run<float>(cfg);
    const auto oracle = dense_doolittle(blockmat::generate_diag_dominant<float>(64, 4).a);
    double worst = 0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < 64; ++j) {
            const double o = oracle(i, j);
            worst = std::max(worst, std::fabs(r.lu(i, j) - o) / std::max(std::fabs(o), 1e-30));
        }
    CHECK(worst <= 1e-4);
}

TEST_CASE("torus size, mode and overlap do not change the factors") {
    HplConfig cfg{.n = 128, .block_log = 4, .register_log = 3, .seed = 21};
    cfg.torus = 1;
    const auto base = run<float>(cfg).lu;
    CHECK(reconstruction_error(base, blockmat::generate_diag_dominant<float>(128, 21).a) <= 1e-4);
    for (int torus : {2, 3}) {
        if (128 / 16 < torus) continue;
        for (auto mode : {Mode::direct, Mode::staged}) {
            for (bool overlap : {false, true}) {
                cfg.torus = torus;
                cfg.mode = mode;
                cfg.overlap = overlap;
                CHECK(run<float>(cfg).lu == base);
            }
        }
    }
    cfg.torus = 2;
    cfg.overlap = true;
    CHECK(run<float>(cfg, Backend::virtual_time).lu == base);
    cfg.overlap = false;
    CHECK(run<float>(cfg, Backend::virtual_time).lu == base);
}

TEST_CASE("double precision reconstruction") {
    HplConfig cfg{.n = 96, .block_log = 4, .register_log = 2, .torus = 2, .seed = 2};
    const auto r = run<double>(cfg);
    CHECK(reconstruction_error(r.lu, blockmat::generate_diag_dominant<double>(96, 2).a) <= 1e-10);
    for (const auto& rank : r.ranks) CHECK(rank["residual"].get<double>() <= kResidualThreshold);
}

TEST_CASE("one LU block per iteration, forwarded once per receiver") {
    for (auto mode : {Mode::direct, Mode::staged}) {
        HplConfig cfg{.n = 96, .block_log = 4, .register_log = 2, .torus = 3, .mode = mode};
        const auto r = run<float>(cfg);
        const int nb = 6;
        int lu_tasks = 0;
        for (const auto& rank : r.ranks) lu_tasks += rank["lu_tasks"].get<int>();
        CHECK(lu_tasks == nb);
        for (int k = 0; k < nb; ++k) {
            std::uint64_t msgs = 0;
            for (const auto& rank : r.ranks) msgs += rank["lu_msgs"][k].get<std::uint64_t>();
            // Every rank on the row and column routes receives it exactly once.
            CHECK(msgs == static_cast<std::uint64_t>(2 * std::min(nb - k - 1, 2)));
        }
    }
}

TEST_CASE("flop accounting") {
    CHECK(hpl_flops(1024) == 715827882.6666666);
    CHECK(hpl_flops(1024) == doctest::Approx(715827882.67));
    CHECK(hpl_flops(3) == 18.0);
    HplConfig cfg{.n = 64, .block_log = 4, .register_log = 2, .torus = 2};
    for (const auto& rank : run<float>(cfg).ranks) CHECK(rank["flops"].get<double>() == hpl_flops(64));
}

TEST_CASE("reference solve") {
    DenseMatrix<double> eye(3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1;
    CHECK(solve_reference(eye, {4.0, 5.0, 6.0}) == std::vector<double>{4.0, 5.0, 6.0});

    blockmat::Block<double> a(2);
    a(0, 0) = 4;
    a(0, 1) = 1;
    a(1, 0) = 1;
    a(1, 1) = 3;
    blockmat::block_lu_decompose(a);
    DenseMatrix<double> lu(2);
    lu.set_block(0, 0, a);
    CHECK(solve_reference(lu, {5.0, 4.0}) == std::vector<double>{1.0, 1.0});

    DenseMatrix<double> singular(2);
    singular(0, 0) = 1;
    CHECK_THROWS_AS(solve_reference(singular, {1.0, 1.0}), NumericalError);
}

TEST_CASE("residual normalization") {
    CHECK(residual_error(std::vector<float>{1, 1, 1}, std::vector<float>{3, 2, 1}) == 0.0);
    const float eps = std::numeric_limits<float>::epsilon();
    CHECK(residual_error(std::vector<float>{1 + eps}, std::vector<float>{1}) == 1.0);
    const double deps = std::numeric_limits<double>::epsilon();
    CHECK(residual_error(std::vector<double>{1 + deps}, std::vector<double>{1}) == 1.0);
}

TEST_CASE("n=256 float solve recovers ones") {
    HplConfig cfg{.n = 256, .block_log = 5, .register_log = 3, .torus = 1, .seed = 13};
    const auto r = run<float>(cfg);
    const auto b = blockmat::diag_dominant_rhs<float>(13, 256);
    const auto x = solve_reference(r.lu, b);
    double worst = 0;
    for (float v : x) worst = std::max(worst, std::fabs(static_cast<double>(v) - 1.0));
    CHECK(worst < 1e-3);
    CHECK(r.ranks[0]["solve_ok"].get<bool>());
    CHECK(r.ranks[0]["residual"].get<double>() == doctest::Approx(residual_error(x, b)));
}

TEST_CASE("config errors") {
    HplConfig cfg{.n = 64, .block_log = 4, .torus = 2};
    CHECK_THROWS_AS(cfg.validate(3), ConfigError);
    cfg.n = 60;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    cfg.n = 64;
    cfg.register_log = 5;
    CHECK_THROWS_AS(cfg.validate(4), ConfigError);
    CHECK(mode_from_string("direct") == Mode::direct);
}
