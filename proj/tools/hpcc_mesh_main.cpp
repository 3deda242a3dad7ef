// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/harness.hpp"

using namespace hpcc_mesh;
using namespace hpcc_mesh::harness;

namespace {

struct Flag {
    const char* key;
    const char* help;
};

// Every key here is also accepted in a --config file.
const std::vector<Flag> kFlags = {
    {"transport", "inproc, virtual or tcp"},
    {"ranks", "number of ranks"},
    {"topology", "ring, torus2d or pq_grid"},
    {"link-latency", "channel latency in ns"},
    {"link-width", "channel width in bytes per beat"},
    {"link-freq", "channel frequency in Hz"},
    {"link-channels", "channels per kernel pair"},
    {"replications", "channel replications used by the model predictions"},
    {"staged-write-bw", "staged path device-to-host bandwidth, bytes/s"},
    {"staged-read-bw", "staged path host-to-device bandwidth, bytes/s"},
    {"staged-net-bw", "staged path host network bandwidth, bytes/s"},
    {"staged-net-latency", "staged path host network latency in ns"},
    {"flop-rate", "virtual compute rate, flop/s"},
    {"memory-bandwidth", "virtual memory bandwidth, bytes/s"},
    {"reps", "repetitions"},
    {"seed", "input generator seed"},
    {"out", "report path (default: stdout)"},
    {"format", "json or csv"},
    {"mode", "staged or direct"},
    {"dtype", "float or double"},
    {"iterations", "beff: exchanges per size (0 = default)"},
    {"n", "ptrans, hpl: matrix size"},
    {"block", "ptrans, gemm: block size"},
    {"grid", "ptrans: P = Q"},
    {"block-log", "hpl: log2 block size"},
    {"reg-log", "hpl, gemm: log2 register block"},
    {"torus", "hpl: torus side T"},
    {"overlap", "hpl: on or off"},
    {"table-log", "gups: log2 table size"},
    {"rng-log", "gups: log2 lanes per rank"},
    {"distance", "gups: shift register distance"},
    {"update-factor", "gups: updates per table entry"},
    {"length", "stream: array length per rank"},
    {"scalar", "stream: triad scalar"},
    {"width", "gemm: matrix width per rank"},
    {"timeout", "transport timeout in seconds"},
};

int run(int argc, char** argv) {
    CLI::App app{"Multi-rank HPC Challenge style benchmarks over a pluggable transport", "hpcc-mesh"};
    app.require_subcommand(1);

    std::map<std::string, std::string> values;
    for (const auto& f : kFlags) app.add_option(std::string("--") + f.key, values[f.key], f.help);
    std::string config_path, sweep;
    int max_ranks = 0;
    app.add_option("--config", config_path, "flat key = value file; flags win");
    app.add_option("--sweep", sweep, "strong or weak")->check(CLI::IsMember({"strong", "weak"}));
    app.add_option("--max-ranks", max_ranks, "largest rank count of a sweep");

    std::vector<std::pair<CLI::App*, Benchmark>> subs;
    for (auto b : {Benchmark::beff, Benchmark::ptrans, Benchmark::hpl, Benchmark::gups, Benchmark::stream,
                   Benchmark::gemm}) {
        auto* sub = app.add_subcommand(std::string(to_string(b)));
        sub->fallthrough();
        subs.emplace_back(sub, b);
    }
    subs[0].first->description("effective bandwidth on a ring");
    subs[1].first->description("distributed matrix transpose C = B + A^T");
    subs[2].first->description("blocked LU factorization on a 2D torus");
    subs[3].first->description("RandomAccess table updates");
    subs[4].first->description("STREAM triad, one array set per rank");
    subs[5].first->description("dense matrix multiply, one problem per rank");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            for (const auto& [k, v] : load_config_file(config_path)) apply_setting(cfg, k, v);
        }
        for (const auto& [sub, b] : subs) {
            if (sub->parsed()) cfg.benchmark = b;
        }
        for (const auto& f : kFlags) {
            if (app.count(std::string("--") + f.key) > 0) apply_setting(cfg, f.key, values[f.key]);
        }

        BenchmarkReport report;
        if (!sweep.empty()) {
            report = run_sweep(cfg, sweep_from_string(sweep), max_ranks > 0 ? max_ranks : cfg.ranks);
        } else {
            report = launch(cfg);
        }
        if (cfg.out.empty()) {
            emit_report(report, cfg.format, std::cout);
        } else {
            write_report(report, cfg.format, cfg.out);
        }
        if (!report_ok(report)) {
            std::cerr << "hpcc-mesh: " << report["status"].get<std::string>() << ": "
                      << report["failure"].get<std::string>() << '\n';
            return 1;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "hpcc-mesh: configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hpcc-mesh: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
