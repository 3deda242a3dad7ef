// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/harness.hpp"
#include "hpcc_mesh/launch.hpp"
#include "hpcc_mesh/netmodel.hpp"

namespace hpcc_mesh::harness {

using nlohmann::json;
using nlohmann::ordered_json;
using transport::Backend;
using transport::Communicator;

namespace {

constexpr const char* kVersion = "0.1.0";

// Fields shared by every repetition-based rank result.
template <class R>
void put_times(json& j, const R& r) {
    j["rep_time"] = r.rep_time;
    j["local_rep_time"] = r.local_rep_time;
}

template <class T>
json ptrans_rank(Communicator& comm, const RunConfig& cfg) {
    const auto r = ptrans::run_ptrans<T>(comm, cfg.ptrans_config());
    json j;
    put_times(j, r);
    j["flops"] = r.flops;
    j["max_residual"] = r.max_residual;
    j["bytes_sent"] = r.bytes_sent;
    return j;
}

template <class T>
json hpl_rank(Communicator& comm, const RunConfig& cfg) {
    const auto r = hpl::run_hpl<T>(comm, cfg.hpl_config());
    json j;
    put_times(j, r);
    j["flops"] = r.flops;
    j["residual_error"] = r.residual_error;
    j["solve_ok"] = r.solve_ok;
    json phases = json::array();
    for (const auto& it : r.iterations) {
        phases.push_back({{"k", it.k},
                          {"lu", it.lu},
                          {"communication", it.communication},
                          {"top_left", it.top_left},
                          {"inner", it.inner}});
    }
    j["phases"] = std::move(phases);
    return j;
}

json ep_rank(const epbench::EpResult& r) {
    json j;
    put_times(j, r);
    j["work_per_rank"] = r.work_per_rank;
    j["total_work"] = r.total_work;
    j["bytes_sent_timed"] = r.bytes_sent_timed;
    j["validation_ok"] = r.validation_ok;
    j["max_error"] = r.max_error;
    return j;
}

json rank_program(Communicator& comm, const RunConfig& cfg) {
    const bool f64 = cfg.dtype == blockmat::ElementType::f64;
    switch (cfg.benchmark) {
        case Benchmark::beff: {
            const auto r = beff::run_beff(comm, cfg.beff_config());
            json sizes = json::array();
            for (const auto& s : r.sizes) {
                sizes.push_back({{"bytes", s.bytes},
                                 {"iterations", s.iterations},
                                 {"rep_time", s.rep_time},
                                 {"local_rep_time", s.local_rep_time},
                                 {"valid", s.valid}});
            }
            return {{"sizes", std::move(sizes)}, {"validation_ok", r.validation_ok}, {"failure", r.failure}};
        }
        case Benchmark::ptrans: return f64 ? ptrans_rank<double>(comm, cfg) : ptrans_rank<float>(comm, cfg);
        case Benchmark::hpl: return f64 ? hpl_rank<double>(comm, cfg) : hpl_rank<float>(comm, cfg);
        case Benchmark::gups: {
            const auto r = randomaccess::run_randomaccess(comm, cfg.gups_config());
            json j;
            put_times(j, r);
            j["updates"] = r.updates;
            j["error_ratio"] = r.error_ratio;
            j["verify_ok"] = r.verify_ok;
            return j;
        }
        case Benchmark::stream: return ep_rank(epbench::run_stream_triad(comm, cfg.stream_config()));
        case Benchmark::gemm:
            return ep_rank(f64 ? epbench::run_gemm<double>(comm, cfg.gemm_config())
                               : epbench::run_gemm<float>(comm, cfg.gemm_config()));
    }
    throw ConfigError("unknown benchmark");
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json environment(const RunConfig& cfg, const transport::LaunchResult& res) {
    ordered_json env;
    env["backend"] = transport_name(cfg.backend);
    env["world_size"] = cfg.ranks;
    const bool logical = cfg.backend == Backend::virtual_time;
    env["clock"] = logical ? "logical" : "monotonic";
    if (logical) {
        // Runs are reproducible, so the stamp is the logical end of the run.
        double end = 0;
        for (double c : res.final_clocks) end = std::max(end, c);
        env["timestamp"] = "logical";
        env["final_logical_clock_s"] = end;
    } else {
        env["timestamp"] = utc_timestamp();
    }
    env["version"] = kVersion;
    return env;
}

std::size_t argmin(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

// repetitions, best_repetition and table for repetition-based benchmarks.
// Returns the best repetition's slowest-rank time.
double repetition_section(ordered_json& doc, const std::vector<json>& ranks) {
    const auto slowest = ranks[0]["rep_time"].get<std::vector<double>>();
    const std::size_t best = argmin(slowest);
    ordered_json reps = ordered_json::array();
    ordered_json table = ordered_json::array();
    for (std::size_t i = 0; i < slowest.size(); ++i) {
        ordered_json per_rank = ordered_json::array();
        for (const auto& r : ranks) per_rank.push_back(r["local_rep_time"][i].get<double>());
        ordered_json rep;
        rep["index"] = i;
        rep["time_s"] = slowest[i];
        rep["rank_time_s"] = std::move(per_rank);
        reps.push_back(std::move(rep));
        ordered_json row;
        row["repetition"] = i;
        row["time_s"] = slowest[i];
        row["best"] = i == best;
        table.push_back(std::move(row));
    }
    doc["repetitions"] = std::move(reps);
    doc["best_repetition"] = best;
    doc["table"] = std::move(table);
    return slowest[best];
}

netmodel::ChannelParams channel(const RunConfig& cfg) {
    return netmodel::ChannelParams::from_link(cfg.link, cfg.replications);
}

void assemble_beff(ordered_json& doc, const RunConfig& cfg, const std::vector<json>& ranks) {
    const double world = cfg.ranks;
    const bool staged = cfg.mode == "staged";
    ordered_json sizes = ordered_json::array();
    ordered_json table = ordered_json::array();
    std::vector<double> best_bw, model_bw;
    bool valid = true;
    const auto& root = ranks[0]["sizes"];
    for (std::size_t s = 0; s < root.size(); ++s) {
        const auto bytes = root[s]["bytes"].get<std::uint64_t>();
        const auto iters = root[s]["iterations"].get<std::uint64_t>();
        const auto slowest = root[s]["rep_time"].get<std::vector<double>>();
        const std::size_t best = argmin(slowest);
        const double bw = world * 2.0 * static_cast<double>(bytes) * static_cast<double>(iters) / slowest[best];
        const double model = staged ? netmodel::model_staged_bandwidth(bytes, netmodel::StagedParams::from_link(cfg.staged))
                                    : netmodel::model_channel_bandwidth(bytes, channel(cfg));
        best_bw.push_back(bw);
        model_bw.push_back(model);
        valid = valid && root[s]["valid"].get<bool>();

        ordered_json rank_times = ordered_json::array();
        for (const auto& r : ranks) rank_times.push_back(r["sizes"][s]["local_rep_time"].get<std::vector<double>>());
        ordered_json entry;
        entry["size_bytes"] = bytes;
        entry["iterations"] = iters;
        entry["repetition_time_s"] = slowest;
        entry["rank_time_s"] = std::move(rank_times);
        entry["best_repetition"] = best;
        sizes.push_back(std::move(entry));

        ordered_json row;
        row["size_bytes"] = bytes;
        row["iterations"] = iters;
        row["best_time_s"] = slowest[best];
        row["bandwidth_bytes_per_s"] = bw;
        row["bandwidth_per_rank_bytes_per_s"] = bw / world;
        row["model_bandwidth_per_rank_bytes_per_s"] = model;
        row["valid"] = root[s]["valid"].get<bool>();
        table.push_back(std::move(row));
    }
    const double eff = beff::effective_bandwidth(best_bw);
    const double model_eff = beff::effective_bandwidth(model_bw) * world;
    doc["metrics"] = {{"effective_bandwidth_bytes_per_s", eff},
                      {"effective_bandwidth_per_rank_bytes_per_s", eff / world}};
    doc["model"] = {{"effective_bandwidth_bytes_per_s", model_eff},
                    {"effective_bandwidth_per_rank_bytes_per_s", model_eff / world}};
    ordered_json v;
    v["ok"] = valid;
    if (!valid) v["failure"] = ranks[0]["failure"];
    doc["validation"] = std::move(v);
    doc["sizes"] = std::move(sizes);
    doc["best_repetition"] = nullptr;
    doc["table"] = std::move(table);
}

void assemble(ordered_json& doc, const RunConfig& cfg, const std::vector<json>& ranks) {
    if (cfg.benchmark == Benchmark::beff) {
        assemble_beff(doc, cfg, ranks);
        return;
    }
    ordered_json detail;
    const double value_bytes = cfg.dtype == blockmat::ElementType::f64 ? 8.0 : 4.0;
    ordered_json metrics, model, validation;
    // Metrics need the best time, but precede the repetitions in the document.
    ordered_json reps_doc;
    const double t = repetition_section(reps_doc, ranks);
    metrics["time_s"] = t;
    const json& r0 = ranks[0];
    switch (cfg.benchmark) {
        case Benchmark::ptrans: {
            const double work = r0["flops"].get<double>();
            std::uint64_t sent = 0;
            double residual = 0;
            for (const auto& r : ranks) {
                sent += r["bytes_sent"].get<std::uint64_t>();
                residual = std::max(residual, r["max_residual"].get<double>());
            }
            metrics["work_flop"] = work;
            metrics["rate_flop_per_s"] = work / t;
            metrics["sent_bytes"] = sent;
            const auto ch = channel(cfg);
            model["memory_bandwidth_bytes_per_s"] = netmodel::model_ptrans_memory_bandwidth(cfg.replications, ch);
            model["peak_rate_flop_per_s"] =
                netmodel::model_ptrans_peak_flops(cfg.ranks, cfg.replications, ch, value_bytes);
            validation["ok"] = residual == 0.0;
            validation["max_residual"] = residual;
            break;
        }
        case Benchmark::hpl: {
            const double work = r0["flops"].get<double>();
            metrics["work_flop"] = work;
            metrics["rate_flop_per_s"] = work / t;
            const auto b = static_cast<std::uint64_t>(cfg.hpl_config().block_size());
            model["block_transfer_time_s"] =
                netmodel::model_channel_time(b * b * static_cast<std::uint64_t>(value_bytes), 1, channel(cfg));
            validation["ok"] = r0["solve_ok"].get<bool>();
            validation["residual_error"] = r0["residual_error"];
            validation["threshold"] = hpl::kResidualThreshold;
            ordered_json phases = ordered_json::array();
            for (const auto& p : r0["phases"]) {
                ordered_json ph;
                ph["k"] = p["k"];
                ph["lu_s"] = p["lu"];
                ph["communication_s"] = p["communication"];
                ph["top_left_s"] = p["top_left"];
                ph["inner_s"] = p["inner"];
                phases.push_back(std::move(ph));
            }
            detail["phases"] = std::move(phases);
            break;
        }
        case Benchmark::gups: {
            const double work = static_cast<double>(r0["updates"].get<std::uint64_t>());
            metrics["work_updates"] = work;
            metrics["rate_updates_per_s"] = work / t;
            validation["ok"] = r0["verify_ok"].get<bool>();
            validation["error_ratio"] = r0["error_ratio"];
            validation["threshold"] = randomaccess::kErrorThreshold;
            break;
        }
        case Benchmark::stream:
        case Benchmark::gemm: {
            const bool stream = cfg.benchmark == Benchmark::stream;
            const std::string unit = stream ? "bytes" : "flop";
            double total = 0;
            std::uint64_t sent = 0;
            ordered_json per_rank = ordered_json::array();
            for (const auto& r : ranks) {
                const double w = r["work_per_rank"].get<double>();
                total += w;
                sent = std::max(sent, r["bytes_sent_timed"].get<std::uint64_t>());
                per_rank.push_back(w / t);
            }
            metrics["work_" + unit] = total;
            metrics["rate_" + unit + "_per_s"] = total / t;
            metrics["timed_sent_bytes"] = sent;
            bool ok = true;
            double err = 0;
            for (const auto& r : ranks) {
                ok = ok && r["validation_ok"].get<bool>();
                err = std::max(err, r["max_error"].get<double>());
            }
            validation["ok"] = ok && sent == 0;
            validation["max_error"] = err;
            detail["rank_rate_" + unit + "_per_s"] = std::move(per_rank);
            break;
        }
        case Benchmark::beff: break;
    }
    doc["metrics"] = std::move(metrics);
    doc["model"] = model.is_null() ? ordered_json::object() : std::move(model);
    doc["validation"] = std::move(validation);
    for (auto& [k, v] : reps_doc.items()) doc[k] = v;
    if (!detail.is_null()) doc["detail"] = std::move(detail);
}

std::string csv_cell(const ordered_json& v) {
    if (v.is_null()) return "";
    if (!v.is_string()) return v.dump();
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace

BenchmarkReport launch(const RunConfig& cfg) {
    cfg.validate();
    transport::LaunchOptions opt;
    opt.backend = cfg.backend;
    opt.world_size = cfg.ranks;
    opt.virtual_params = cfg.virtual_params();
    opt.timeout = cfg.timeout;
    const auto res = transport::launch_ranks(opt, [&cfg](Communicator& comm) { return rank_program(comm, cfg); });

    BenchmarkReport doc;
    doc["benchmark"] = to_string(cfg.benchmark);
    doc["status"] = "ok";
    doc["failure"] = nullptr;
    doc["config"] = cfg.echo();
    doc["environment"] = environment(cfg, res);
    if (!res.ok()) {
        doc["status"] = "failed";
        doc["failure"] = res.first_error();
        ordered_json status = ordered_json::array();
        for (std::size_t r = 0; r < res.ranks.size(); ++r) {
            ordered_json s;
            s["rank"] = r;
            s["ok"] = res.ranks[r].ok;
            s["error"] = res.ranks[r].error;
            status.push_back(std::move(s));
        }
        doc["metrics"] = ordered_json::object();
        doc["model"] = ordered_json::object();
        doc["validation"] = {{"ok", false}};
        doc["rank_status"] = std::move(status);
        doc["table"] = ordered_json::array();
        return doc;
    }
    std::vector<json> ranks;
    ranks.reserve(res.ranks.size());
    for (const auto& r : res.ranks) ranks.push_back(r.value);
    assemble(doc, cfg, ranks);
    if (!doc["validation"]["ok"].get<bool>()) {
        doc["status"] = "validation_failed";
        doc["failure"] = "result validation failed";
    }
    return doc;
}

bool report_ok(const BenchmarkReport& report) { return report.value("status", "") == "ok"; }

const std::vector<std::string>& unit_suffixes() {
    static const std::vector<std::string> s{"_s",     "_bytes",   "_bytes_per_s",   "_flop",  "_flop_per_s",
                                            "_updates", "_updates_per_s", "_ratio", "_count"};
    return s;
}

std::vector<std::string> unitless_metric_keys(const BenchmarkReport& report) {
    std::vector<std::string> out;
    for (const char* section : {"metrics", "model"}) {
        if (!report.contains(section)) continue;
        for (const auto& [key, value] : report[section].items()) {
            const bool ok = std::any_of(unit_suffixes().begin(), unit_suffixes().end(),
                                        [&](const std::string& s) { return key.ends_with(s); });
            if (!ok) out.push_back(std::string(section) + "." + key);
        }
    }
    return out;
}

void emit_report(const BenchmarkReport& report, Format format, std::ostream& out) {
    if (format == Format::json) {
        out << report.dump(2) << '\n';
    } else {
        std::vector<std::string> columns;
        const ordered_json empty_rows = ordered_json::array();
        const ordered_json& rows = report.contains("table") ? report["table"] : empty_rows;
        for (const auto& row : rows) {
            for (const auto& [k, v] : row.items()) {
                if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
            }
        }
        std::vector<std::string> metrics;
        if (report.contains("metrics")) {
            for (const auto& [k, v] : report["metrics"].items()) metrics.push_back(k);
        }
        out << "row";
        for (const auto& c : columns) out << ',' << c;
        for (const auto& m : metrics) out << ',' << m;
        out << ",status\n";
        for (const auto& row : rows) {
            out << "data";
            for (const auto& c : columns) out << ',' << (row.contains(c) ? csv_cell(row[c]) : "");
            for (std::size_t i = 0; i < metrics.size(); ++i) out << ',';
            out << ',' << csv_cell(report["status"]) << '\n';
        }
        out << "summary";
        for (std::size_t i = 0; i < columns.size(); ++i) out << ',';
        for (const auto& m : metrics) out << ',' << csv_cell(report["metrics"][m]);
        out << ',' << csv_cell(report["status"]) << '\n';
    }
    if (!out) throw Error("failed to write report");
}

void write_report(const BenchmarkReport& report, Format format, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    emit_report(report, format, f);
    f.flush();
    if (!f) throw Error("failed to write '" + path + "'");
}

}  // namespace hpcc_mesh::harness
