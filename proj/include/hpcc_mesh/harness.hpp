// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hpcc_mesh/beff.hpp"
#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/epbench.hpp"
#include "hpcc_mesh/hpl.hpp"
#include "hpcc_mesh/ptrans.hpp"
#include "hpcc_mesh/randomaccess.hpp"
#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/topology.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::harness {

enum class Benchmark { beff, ptrans, hpl, gups, stream, gemm };

std::string_view to_string(Benchmark b);
Benchmark benchmark_from_string(std::string_view name);

enum class Format { json, csv };

std::string_view to_string(Format f);
Format format_from_string(std::string_view name);

// Transport names on the command line: inproc, virtual, tcp.
std::string_view transport_name(transport::Backend b);
transport::Backend transport_from_name(std::string_view name);

// Everything that affects a run. Keys of apply_setting and echo() are the
// command-line flag names without the leading dashes.
struct RunConfig {
    Benchmark benchmark = Benchmark::beff;
    transport::Backend backend = transport::Backend::concurrent;
    int ranks = 1;
    std::optional<transport::TopologyKind> topology;  // unset: benchmark default

    transport::LinkModel link;     // direct channel; link.staged is ignored
    transport::StagedLink staged;  // host path, used in staged mode
    double flop_rate = 1e11;       // virtual compute model
    double memory_bandwidth = 5e10;
    int replications = 2;  // channel replications for model predictions

    int repetitions = 1;
    std::uint64_t seed = 1;
    std::string mode = "direct";
    blockmat::ElementType dtype = blockmat::ElementType::f32;

    std::uint64_t iterations = 0;  // beff; 0 = per-size default
    int n = 0;                     // ptrans / hpl; 0 = benchmark default
    int block = 0;                 // ptrans / gemm; 0 = benchmark default
    int grid = 0;                  // ptrans P = Q; 0 = sqrt(ranks)
    int block_log = 5;             // hpl
    int reg_log = 3;               // hpl and gemm
    int torus = 0;                 // hpl T; 0 = sqrt(ranks)
    bool overlap = true;           // hpl
    int table_log = 16;            // gups
    int rng_log = 2;
    int distance = 1;
    int update_factor = 4;
    std::uint64_t length = 1 << 20;  // stream, per rank
    double scalar = 3.0;
    int width = 256;  // gemm, per rank

    std::string out;  // empty: standard output
    Format format = Format::json;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);

    // Not part of the echo. Called inside every timed repetition.
    RepetitionHook on_repetition;

    transport::Topology resolved_topology() const;
    int ptrans_n() const { return n > 0 ? n : 64; }
    int hpl_n() const { return n > 0 ? n : 256; }
    int ptrans_block() const { return block > 0 ? block : 16; }
    int gemm_block() const { return block > 0 ? block : 32; }

    beff::BeffConfig beff_config() const;
    ptrans::PtransConfig ptrans_config() const;
    hpl::HplConfig hpl_config() const;
    randomaccess::RaConfig gups_config() const;
    epbench::StreamConfig stream_config() const;
    epbench::GemmConfig gemm_config() const;
    transport::VirtualParams virtual_params() const;

    // Throws ConfigError.
    void validate() const;

    // Parameters that affect this benchmark's results, with resolved
    // defaults.
    nlohmann::ordered_json echo() const;
};

// Sets one parameter from its textual form. Throws ConfigError on an
// unknown key or a malformed value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

// Flat `key = value` lines; blank lines and lines starting with '#' are
// skipped. Throws ConfigError on malformed lines, Error if unreadable.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);
std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path);

// The report document. Top-level keys, in order: benchmark, status,
// failure, config, environment, metrics, model, validation, repetitions
// (or sizes for beff), best_repetition, table and an optional detail.
// A failed report carries rank_status instead. status is "ok",
// "validation_failed" or "failed"; a failed report is partial.
using BenchmarkReport = nlohmann::ordered_json;

// Validates, launches the ranks and assembles the report. A rank failure
// yields a partial report; a ConfigError propagates before any launch.
BenchmarkReport launch(const RunConfig& cfg);

bool report_ok(const BenchmarkReport& report);

// Suffixes accepted on metric and model keys.
const std::vector<std::string>& unit_suffixes();

// Keys under "metrics" and "model" that carry no unit suffix.
std::vector<std::string> unitless_metric_keys(const BenchmarkReport& report);

// JSON: the document, pretty-printed. CSV: one row per entry of "table"
// followed by a summary row holding the metrics.
void emit_report(const BenchmarkReport& report, Format format, std::ostream& out);

// Writes to `path`; throws Error on I/O failure.
void write_report(const BenchmarkReport& report, Format format, const std::string& path);

enum class SweepKind { strong, weak };

std::string_view to_string(SweepKind s);
SweepKind sweep_from_string(std::string_view name);

// Rank counts a sweep visits up to `max_ranks`: squares for ptrans and
// hpl, powers of two otherwise, starting at 2 for direct-mode beff.
std::vector<int> sweep_ranks(const RunConfig& cfg, int max_ranks);

// The configuration at `ranks`. Strong keeps the global problem fixed, weak
// keeps the per-rank problem fixed; `base` describes the first point.
RunConfig sweep_point(const RunConfig& base, SweepKind kind, int base_ranks, int ranks);

// Name of the headline rate of a benchmark's metrics.
std::string_view primary_metric(Benchmark b);

// Runs every point and reports speedup and efficiency against the first.
// The result has the report layout with one table row per point.
BenchmarkReport run_sweep(const RunConfig& base, SweepKind kind, int max_ranks);

}  // namespace hpcc_mesh::harness
