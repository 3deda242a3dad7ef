// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/harness.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::harness;
using transport::Backend;
using transport::Communicator;

namespace {

RunConfig small(Benchmark b, Backend backend, int ranks) {
    RunConfig c;
    c.benchmark = b;
    c.backend = backend;
    c.ranks = ranks;
    switch (b) {
        case Benchmark::beff: c.iterations = 2; break;
        case Benchmark::ptrans: c.n = 32 * (ranks == 4 ? 2 : 1); c.block = 8; break;
        case Benchmark::hpl: c.n = 64; c.block_log = 3; break;
        case Benchmark::gups: c.table_log = 10; break;
        case Benchmark::stream: c.length = 1024; break;
        case Benchmark::gemm: c.width = 32; c.block = 16; break;
    }
    return c;
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

const Benchmark kAll[] = {Benchmark::beff, Benchmark::ptrans, Benchmark::hpl,
                          Benchmark::gups, Benchmark::stream, Benchmark::gemm};

}  // namespace

TEST_CASE("single-rank staged beff report") {
    auto cfg = small(Benchmark::beff, Backend::virtual_time, 1);
    cfg.mode = "staged";
    const auto r = launch(cfg);
    REQUIRE(report_ok(r));
    REQUIRE(r["table"].size() == 21);
    REQUIRE(r["sizes"].size() == 21);

    // Effective bandwidth is the plain mean of the per-size maxima.
    double sum = 0;
    for (const auto& row : r["table"]) sum += row["bandwidth_bytes_per_s"].get<double>();
    CHECK(r["metrics"]["effective_bandwidth_bytes_per_s"].get<double>() == doctest::Approx(sum / 21).epsilon(1e-14));

    std::ostringstream csv;
    emit_report(r, Format::csv, csv);
    const auto lines = lines_of(csv.str());
    REQUIRE(lines.size() == 1 + 22);
    CHECK(lines.front().starts_with("row,size_bytes,"));
    CHECK(lines.back().starts_with("summary,"));
}

TEST_CASE("direct beff follows the channel model") {
    auto cfg = small(Benchmark::beff, Backend::virtual_time, 2);
    cfg.iterations = 0;
    const auto r = launch(cfg);
    REQUIRE(report_ok(r));
    for (const auto& row : r["table"]) {
        const double measured = row["bandwidth_per_rank_bytes_per_s"].get<double>();
        const double model = row["model_bandwidth_per_rank_bytes_per_s"].get<double>();
        CHECK(std::fabs(measured - model) <= 0.02 * model);
    }
}

TEST_CASE("timing protocol with injected delays") {
    // delay[rep][rank]; the slowest rank differs per repetition and the
    // fastest repetition is the middle one.
    const double delay[3][3] = {{3e-3, 1e-3, 0}, {0, 5e-4, 2e-4}, {1e-4, 0, 4e-3}};
    auto cfg = small(Benchmark::stream, Backend::virtual_time, 3);
    cfg.repetitions = 3;
    cfg.on_repetition = [&](Communicator& comm, int rep) { comm.advance(delay[rep][comm.rank().index]); };
    const auto r = launch(cfg);
    REQUIRE(report_ok(r));

    const double base = 3.0 * 1024 * 8 / 5e10;
    const double expected[3] = {base + 3e-3, base + 5e-4, base + 4e-3};
    REQUIRE(r["repetitions"].size() == 3);
    for (int rep = 0; rep < 3; ++rep) {
        const auto& entry = r["repetitions"][static_cast<std::size_t>(rep)];
        CHECK(entry["time_s"].get<double>() == doctest::Approx(expected[rep]).epsilon(1e-12));
        for (int rank = 0; rank < 3; ++rank) {
            CHECK(entry["rank_time_s"][static_cast<std::size_t>(rank)].get<double>() ==
                  doctest::Approx(base + delay[rep][rank]).epsilon(1e-12));
        }
    }
    CHECK(r["best_repetition"] == 1);
    CHECK(r["metrics"]["time_s"].get<double>() == doctest::Approx(expected[1]).epsilon(1e-12));
    CHECK(r["metrics"]["rate_bytes_per_s"].get<double>() ==
          doctest::Approx(3 * 3.0 * 1024 * 8 / expected[1]).epsilon(1e-12));
}

TEST_CASE("repetition time bounds every rank time") {
    for (Benchmark b : kAll) {
        for (Backend backend : {Backend::virtual_time, Backend::concurrent}) {
            const int ranks = b == Benchmark::ptrans || b == Benchmark::hpl ? 4 : 2;
            auto cfg = small(b, backend, ranks);
            cfg.repetitions = 2;
            const auto r = launch(cfg);
            INFO(to_string(b));
            REQUIRE(report_ok(r));
            auto check = [](const auto& times, const auto& per_rank) {
                for (std::size_t i = 0; i < times.size(); ++i)
                    for (const auto& rank : per_rank) CHECK(times[i].template get<double>() >= rank[i].template get<double>());
            };
            if (b == Benchmark::beff) {
                for (const auto& s : r["sizes"]) check(s["repetition_time_s"], s["rank_time_s"]);
            } else {
                double best = 1e300;
                for (const auto& rep : r["repetitions"]) {
                    for (const auto& t : rep["rank_time_s"]) CHECK(rep["time_s"].get<double>() >= t.get<double>());
                    best = std::min(best, rep["time_s"].get<double>());
                }
                CHECK(r["metrics"]["time_s"].get<double>() == best);
            }
        }
    }
}

TEST_CASE("virtual runs produce identical JSON") {
    for (Benchmark b : kAll) {
        const int ranks = b == Benchmark::ptrans || b == Benchmark::hpl ? 4 : 2;
        const auto cfg = small(b, Backend::virtual_time, ranks);
        std::ostringstream a, c;
        emit_report(launch(cfg), Format::json, a);
        emit_report(launch(cfg), Format::json, c);
        CHECK(a.str() == c.str());
    }
}

TEST_CASE("json round trip and unit suffixes") {
    for (Benchmark b : kAll) {
        const int ranks = b == Benchmark::ptrans || b == Benchmark::hpl ? 4 : 2;
        const auto r = launch(small(b, Backend::virtual_time, ranks));
        INFO(to_string(b));
        CHECK(report_ok(r));
        std::ostringstream out;
        emit_report(r, Format::json, out);
        CHECK(BenchmarkReport::parse(out.str()) == r);
        CHECK(unitless_metric_keys(r).empty());
        CHECK(!r["metrics"].empty());
        CHECK(r["environment"]["clock"] == "logical");
    }
    BenchmarkReport bad;
    bad["metrics"] = {{"bandwidth", 1.0}, {"time_s", 2.0}};
    CHECK(unitless_metric_keys(bad) == std::vector<std::string>{"metrics.bandwidth"});
}

TEST_CASE("csv rows per repetition plus summary") {
    auto cfg = small(Benchmark::gups, Backend::virtual_time, 2);
    cfg.repetitions = 4;
    std::ostringstream csv;
    emit_report(launch(cfg), Format::csv, csv);
    const auto lines = lines_of(csv.str());
    REQUIRE(lines.size() == 1 + 4 + 1);
    CHECK(lines[0] == "row,repetition,time_s,best,time_s,work_updates,rate_updates_per_s,status");
}

TEST_CASE("rank crash yields a partial report") {
    auto cfg = small(Benchmark::stream, Backend::concurrent, 3);
    cfg.on_repetition = [](Communicator& comm, int) {
        if (comm.rank().index == 1) throw std::runtime_error("injected fault");
    };
    const auto r = launch(cfg);
    CHECK(r["status"] == "failed");
    CHECK(r["failure"].get<std::string>().find("injected fault") != std::string::npos);
    CHECK(r["config"]["ranks"] == 3);
    REQUIRE(r["rank_status"].size() == 3);
    CHECK(r["rank_status"][1]["ok"] == false);
    CHECK(!report_ok(r));
    std::ostringstream csv;
    emit_report(r, Format::csv, csv);
    CHECK(lines_of(csv.str()).size() == 2);
}

TEST_CASE("config errors stop the launch") {
    auto hpl = small(Benchmark::hpl, Backend::concurrent, 3);
    CHECK_THROWS_AS(launch(hpl), ConfigError);
    auto beff1 = small(Benchmark::beff, Backend::concurrent, 1);
    CHECK_THROWS_AS(launch(beff1), ConfigError);
    auto gups = small(Benchmark::gups, Backend::concurrent, 3);
    CHECK_THROWS_AS(launch(gups), ConfigError);
    auto stream = small(Benchmark::stream, Backend::concurrent, 1);
    stream.mode = "staged";
    CHECK_THROWS_AS(launch(stream), ConfigError);
    auto ring_hpl = small(Benchmark::hpl, Backend::concurrent, 4);
    ring_hpl.topology = transport::TopologyKind::ring;
    CHECK_THROWS_AS(ring_hpl.validate(), ConfigError);

    RunConfig c;
    CHECK_THROWS_AS(apply_setting(c, "no-such-key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "ranks", "two"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "overlap", "maybe"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "transport", "mpi"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("ranks 4\n"), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/hpcc-mesh.conf"), Error);
}

TEST_CASE("config file then flags") {
    const auto file = parse_config_text("# run\nbenchmark = hpl\n\nranks=4\n--n = 128\nlink-latency = 1000\noverlap = off\n");
    REQUIRE(file.size() == 5);
    RunConfig c;
    for (const auto& [k, v] : file) apply_setting(c, k, v);
    apply_setting(c, "n", "64");  // a flag given after the file wins
    CHECK(c.benchmark == Benchmark::hpl);
    CHECK(c.ranks == 4);
    CHECK(c.hpl_n() == 64);
    CHECK(c.link.latency == 1000e-9);
    CHECK(!c.overlap);
    CHECK(c.hpl_config().torus == 2);
}

TEST_CASE("config echo replays to the same configuration") {
    for (Benchmark b : kAll) {
        const int ranks = b == Benchmark::ptrans || b == Benchmark::hpl ? 4 : 2;
        auto cfg = small(b, Backend::virtual_time, ranks);
        cfg.seed = 7;
        cfg.repetitions = 2;
        cfg.dtype = blockmat::ElementType::f64;
        const auto echo = cfg.echo();
        RunConfig replay;
        for (const auto& [k, v] : echo.items()) apply_setting(replay, k, v.is_string() ? v.get<std::string>() : v.dump());
        INFO(to_string(b));
        CHECK(replay.echo() == echo);
    }
    auto hpl = small(Benchmark::hpl, Backend::virtual_time, 4);
    const auto e = hpl.echo();
    for (const char* key : {"n", "block-log", "reg-log", "torus", "overlap", "mode", "dtype", "seed", "reps"})
        CHECK(e.contains(key));
}

TEST_CASE("strong and weak sweeps") {
    auto beff = small(Benchmark::beff, Backend::virtual_time, 2);
    beff.iterations = 0;
    CHECK(sweep_ranks(beff, 8) == std::vector<int>{2, 4, 8});
    const auto s = run_sweep(beff, SweepKind::strong, 8);
    REQUIRE(report_ok(s));
    REQUIRE(s["table"].size() == 3);
    for (const auto& row : s["table"]) {
        CHECK(row["efficiency_ratio"].get<double>() == doctest::Approx(1.0).epsilon(0.02));
    }

    auto pt = small(Benchmark::ptrans, Backend::virtual_time, 1);
    CHECK(sweep_ranks(pt, 9) == std::vector<int>{1, 4, 9});
    CHECK(sweep_point(pt, SweepKind::weak, 1, 4).ptrans_n() == 64);
    CHECK(sweep_point(pt, SweepKind::strong, 1, 4).ptrans_n() == 32);

    auto st = small(Benchmark::stream, Backend::virtual_time, 1);
    CHECK(sweep_point(st, SweepKind::strong, 1, 4).length == 256);
    CHECK(sweep_point(st, SweepKind::weak, 1, 4).length == 1024);
    const auto w = run_sweep(st, SweepKind::weak, 4);
    REQUIRE(report_ok(w));
    REQUIRE(w["table"].size() == 3);
    CHECK(w["table"][2]["speedup_ratio"].get<double>() == doctest::Approx(4.0).epsilon(1e-12));

    auto ra = small(Benchmark::gups, Backend::virtual_time, 1);
    CHECK(sweep_point(ra, SweepKind::weak, 1, 8).table_log == 13);
    CHECK_THROWS_AS(sweep_ranks(beff, 1), ConfigError);
}

TEST_CASE("socket transport through the harness") {
    const auto r = launch(small(Benchmark::stream, Backend::socket, 2));
    REQUIRE(report_ok(r));
    CHECK(r["environment"]["clock"] == "monotonic");
    CHECK(r["metrics"]["timed_sent_bytes"] == 0);
}

TEST_CASE("report file output") {
    const auto r = launch(small(Benchmark::gemm, Backend::virtual_time, 1));
    CHECK_THROWS_AS(write_report(r, Format::json, "/nonexistent-dir/report.json"), Error);
}
