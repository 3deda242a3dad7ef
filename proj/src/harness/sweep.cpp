// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/harness.hpp"

namespace hpcc_mesh::harness {

using nlohmann::ordered_json;

std::string_view to_string(SweepKind s) { return s == SweepKind::strong ? "strong" : "weak"; }

SweepKind sweep_from_string(std::string_view name) {
    if (name == "strong") return SweepKind::strong;
    if (name == "weak") return SweepKind::weak;
    throw ConfigError("unknown sweep '" + std::string(name) + "' (expected strong or weak)");
}

std::vector<int> sweep_ranks(const RunConfig& cfg, int max_ranks) {
    std::vector<int> out;
    if (cfg.benchmark == Benchmark::ptrans || cfg.benchmark == Benchmark::hpl) {
        for (int s = 1; s * s <= max_ranks; ++s) out.push_back(s * s);
    } else {
        const int first = cfg.benchmark == Benchmark::beff && cfg.mode == "direct" ? 2 : 1;
        for (int r = first; r <= max_ranks; r *= 2) out.push_back(r);
    }
    if (out.empty()) throw ConfigError("max-ranks " + std::to_string(max_ranks) + " leaves no sweep point");
    return out;
}

RunConfig sweep_point(const RunConfig& base, SweepKind kind, int base_ranks, int ranks) {
    RunConfig c = base;
    c.ranks = ranks;
    c.grid = 0;
    c.torus = 0;
    const double ratio = static_cast<double>(ranks) / base_ranks;
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ranks))));
    const int base_side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(base_ranks))));
    switch (base.benchmark) {
        case Benchmark::beff: break;
        case Benchmark::ptrans:
            if (kind == SweepKind::weak) c.n = base.ptrans_n() / base_side * side;
            break;
        case Benchmark::hpl:
            if (kind == SweepKind::weak) c.n = base.hpl_n() / base_side * side;
            break;
        case Benchmark::gups:
            if (kind == SweepKind::weak) {
                c.table_log = base.table_log + std::countr_zero(static_cast<unsigned>(ranks)) -
                              std::countr_zero(static_cast<unsigned>(base_ranks));
            }
            break;
        case Benchmark::stream:
            if (kind == SweepKind::strong) {
                c.length = std::max<std::uint64_t>(1, base.length * static_cast<std::uint64_t>(base_ranks) /
                                                           static_cast<std::uint64_t>(ranks));
            }
            break;
        case Benchmark::gemm:
            if (kind == SweepKind::strong) {
                // Total work 2 w^3 * ranks stays fixed; widths stay block multiples.
                const int b = base.gemm_block();
                const int w = static_cast<int>(base.width / std::cbrt(ratio) / b) * b;
                c.width = std::max(b, w);
            }
            break;
    }
    return c;
}

std::string_view primary_metric(Benchmark b) {
    switch (b) {
        case Benchmark::beff: return "effective_bandwidth_bytes_per_s";
        case Benchmark::ptrans:
        case Benchmark::hpl:
        case Benchmark::gemm: return "rate_flop_per_s";
        case Benchmark::gups: return "rate_updates_per_s";
        case Benchmark::stream: return "rate_bytes_per_s";
    }
    return "";
}

BenchmarkReport run_sweep(const RunConfig& base, SweepKind kind, int max_ranks) {
    const auto ranks = sweep_ranks(base, max_ranks);
    const std::string metric(primary_metric(base.benchmark));
    // Fail on a bad configuration before launching anything.
    for (int r : ranks) sweep_point(base, kind, ranks.front(), r).validate();

    BenchmarkReport doc;
    doc["benchmark"] = to_string(base.benchmark);
    doc["status"] = "ok";
    doc["failure"] = nullptr;
    auto echo = sweep_point(base, kind, ranks.front(), ranks.front()).echo();
    echo["sweep"] = to_string(kind);
    echo["max-ranks"] = max_ranks;
    doc["config"] = std::move(echo);

    ordered_json table = ordered_json::array();
    ordered_json reports = ordered_json::array();
    double first = 0;
    double max_speedup = 0, last_efficiency = 0;
    for (int r : ranks) {
        auto report = launch(sweep_point(base, kind, ranks.front(), r));
        ordered_json row;
        row["ranks"] = r;
        row["point_status"] = report["status"];
        if (report_ok(report)) {
            const double value = report["metrics"][metric].get<double>();
            if (r == ranks.front()) first = value;
            row[metric] = value;
            // Speedups need the first point as the reference.
            if (first > 0) {
                const double speedup = value / first;
                const double efficiency = speedup / (static_cast<double>(r) / ranks.front());
                row["speedup_ratio"] = speedup;
                row["efficiency_ratio"] = efficiency;
                max_speedup = std::max(max_speedup, speedup);
                last_efficiency = efficiency;
            }
        } else if (doc["status"] == "ok") {
            doc["status"] = report["status"];
            doc["failure"] = "rank count " + std::to_string(r) + ": " + report["failure"].get<std::string>();
        }
        table.push_back(std::move(row));
        reports.push_back(std::move(report));
    }
    doc["environment"] = reports.front()["environment"];
    doc["metrics"] = {{"max_speedup_ratio", max_speedup}, {"final_efficiency_ratio", last_efficiency}};
    doc["model"] = ordered_json::object();
    doc["validation"] = {{"ok", doc["status"] == "ok"}};
    doc["table"] = std::move(table);
    doc["reports"] = std::move(reports);
    return doc;
}

}  // namespace hpcc_mesh::harness
