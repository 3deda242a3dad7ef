// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/harness.hpp"

namespace hpcc_mesh::harness {

using transport::Backend;
using transport::TopologyKind;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                      std::string(expected) + ")");
}

template <class Int>
Int parse_int(std::string_view key, std::string_view value) {
    Int out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    double out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, value, "a number");
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    bad_value(key, value, "on or off");
}

int exact_sqrt(int v) {
    const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
    return r * r == v ? r : 0;
}

bool typed(Benchmark b) { return b == Benchmark::ptrans || b == Benchmark::hpl || b == Benchmark::gemm; }
bool has_mode(Benchmark b) { return b == Benchmark::beff || b == Benchmark::ptrans || b == Benchmark::hpl; }

}  // namespace

std::string_view to_string(Benchmark b) {
    switch (b) {
        case Benchmark::beff: return "beff";
        case Benchmark::ptrans: return "ptrans";
        case Benchmark::hpl: return "hpl";
        case Benchmark::gups: return "gups";
        case Benchmark::stream: return "stream";
        case Benchmark::gemm: return "gemm";
    }
    return "?";
}

Benchmark benchmark_from_string(std::string_view name) {
    for (auto b : {Benchmark::beff, Benchmark::ptrans, Benchmark::hpl, Benchmark::gups, Benchmark::stream,
                   Benchmark::gemm}) {
        if (name == to_string(b)) return b;
    }
    throw ConfigError("unknown benchmark '" + std::string(name) + "'");
}

std::string_view to_string(Format f) { return f == Format::json ? "json" : "csv"; }

Format format_from_string(std::string_view name) {
    if (name == "json") return Format::json;
    if (name == "csv") return Format::csv;
    throw ConfigError("unknown format '" + std::string(name) + "' (expected json or csv)");
}

std::string_view transport_name(Backend b) {
    switch (b) {
        case Backend::concurrent: return "inproc";
        case Backend::virtual_time: return "virtual";
        case Backend::socket: return "tcp";
    }
    return "?";
}

Backend transport_from_name(std::string_view name) {
    if (name == "inproc") return Backend::concurrent;
    if (name == "virtual") return Backend::virtual_time;
    if (name == "tcp") return Backend::socket;
    throw ConfigError("unknown transport '" + std::string(name) + "' (expected inproc, virtual or tcp)");
}

transport::Topology RunConfig::resolved_topology() const {
    TopologyKind kind = TopologyKind::ring;
    if (benchmark == Benchmark::ptrans) kind = TopologyKind::pq_grid;
    if (benchmark == Benchmark::hpl) kind = TopologyKind::torus2d;
    if (topology) kind = *topology;
    if (kind == TopologyKind::ring) return transport::Topology::ring();
    const int side = benchmark == Benchmark::hpl ? (torus > 0 ? torus : exact_sqrt(ranks))
                                                 : (grid > 0 ? grid : exact_sqrt(ranks));
    if (side == 0) {
        throw ConfigError(std::string(to_string(benchmark)) + " needs a square rank count, got " +
                          std::to_string(ranks));
    }
    return {kind, side, side};
}

beff::BeffConfig RunConfig::beff_config() const {
    beff::BeffConfig c;
    c.mode = beff::mode_from_string(mode);
    c.repetitions = repetitions;
    c.iterations_override = iterations;
    c.on_repetition = on_repetition;
    return c;
}

ptrans::PtransConfig RunConfig::ptrans_config() const {
    ptrans::PtransConfig c;
    c.n = ptrans_n();
    c.block_size = ptrans_block();
    c.grid = resolved_topology().rows;
    c.mode = ptrans::mode_from_string(mode);
    c.repetitions = repetitions;
    c.seed = seed;
    c.on_repetition = on_repetition;
    return c;
}

hpl::HplConfig RunConfig::hpl_config() const {
    hpl::HplConfig c;
    c.n = hpl_n();
    c.block_log = block_log;
    c.register_log = reg_log;
    c.torus = resolved_topology().rows;
    c.mode = hpl::mode_from_string(mode);
    c.overlap = overlap;
    c.repetitions = repetitions;
    c.seed = seed;
    c.on_repetition = on_repetition;
    return c;
}

randomaccess::RaConfig RunConfig::gups_config() const {
    randomaccess::RaConfig c;
    c.table_log = table_log;
    c.rng_log = rng_log;
    c.distance = distance;
    c.update_factor = update_factor;
    c.repetitions = repetitions;
    c.on_repetition = on_repetition;
    return c;
}

epbench::StreamConfig RunConfig::stream_config() const {
    epbench::StreamConfig c;
    c.array_length = length;
    c.scalar = scalar;
    c.repetitions = repetitions;
    c.seed = seed;
    c.on_repetition = on_repetition;
    return c;
}

epbench::GemmConfig RunConfig::gemm_config() const {
    epbench::GemmConfig c;
    c.matrix_width = width;
    c.block_size = gemm_block();
    c.register_block = 1 << reg_log;
    c.repetitions = repetitions;
    c.seed = seed;
    c.on_repetition = on_repetition;
    return c;
}

transport::VirtualParams RunConfig::virtual_params() const {
    transport::VirtualParams p;
    p.link = link;
    p.link.staged.reset();
    // Staged runs route every message over the host path.
    if (has_mode(benchmark) && mode == "staged") p.link.staged = staged;
    p.flop_rate = flop_rate;
    p.memory_bandwidth = memory_bandwidth;
    return p;
}

void RunConfig::validate() const {
    if (ranks < 1) throw ConfigError("ranks must be at least 1");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (!(flop_rate >= 0) || !(memory_bandwidth >= 0)) throw ConfigError("compute rates must not be negative");
    if (mode != "direct" && mode != "staged") {
        throw ConfigError("unknown mode '" + mode + "' (expected staged or direct)");
    }
    if (!has_mode(benchmark) && mode != "direct") {
        throw ConfigError(std::string(to_string(benchmark)) + " has no staged mode");
    }
    if (dtype != blockmat::ElementType::f32 && dtype != blockmat::ElementType::f64) {
        throw ConfigError("unsupported element type");
    }
    if (block_log < 0 || block_log > 12 || reg_log < 0 || reg_log > 12) {
        throw ConfigError("block-log and reg-log must be in [0, 12]");
    }
    virtual_params().link.validate();

    const auto topo = resolved_topology();
    switch (benchmark) {
        case Benchmark::hpl:
            if (topo.kind != TopologyKind::torus2d) throw ConfigError("hpl runs on a torus2d topology");
            break;
        case Benchmark::ptrans:
            if (topo.kind == TopologyKind::ring) throw ConfigError("ptrans runs on a pq_grid or torus2d topology");
            break;
        default:
            if (topo.kind != TopologyKind::ring) {
                throw ConfigError(std::string(to_string(benchmark)) + " runs on a ring topology");
            }
    }
    topo.validate(ranks);

    switch (benchmark) {
        case Benchmark::beff: {
            const auto c = beff_config();
            c.validate();
            if (c.mode == beff::Mode::direct && ranks < 2) {
                throw ConfigError("direct mode needs at least 2 ranks; use staged mode on a single rank");
            }
            break;
        }
        case Benchmark::ptrans: ptrans_config().validate(ranks); break;
        case Benchmark::hpl: hpl_config().validate(ranks); break;
        case Benchmark::gups: gups_config().validate(ranks); break;
        case Benchmark::stream: stream_config().validate(); break;
        case Benchmark::gemm: gemm_config().validate(); break;
    }
}

nlohmann::ordered_json RunConfig::echo() const {
    nlohmann::ordered_json e;
    e["benchmark"] = to_string(benchmark);
    e["transport"] = transport_name(backend);
    e["ranks"] = ranks;
    const auto topo = resolved_topology();
    e["topology"] = transport::to_string(topo.kind);
    e["reps"] = repetitions;
    e["seed"] = seed;
    if (has_mode(benchmark)) e["mode"] = mode;
    if (typed(benchmark)) e["dtype"] = blockmat::to_string(dtype);
    e["link-latency"] = link.latency * 1e9;
    e["link-width"] = link.width;
    e["link-freq"] = link.frequency;
    e["link-channels"] = link.channels_per_pair;
    e["replications"] = replications;
    if (has_mode(benchmark) && mode == "staged") {
        e["staged-write-bw"] = staged.write_bw;
        e["staged-read-bw"] = staged.read_bw;
        e["staged-net-bw"] = staged.host_net_bw;
        e["staged-net-latency"] = staged.host_net_latency * 1e9;
    }
    if (backend == Backend::virtual_time) {
        e["flop-rate"] = flop_rate;
        e["memory-bandwidth"] = memory_bandwidth;
    }
    switch (benchmark) {
        case Benchmark::beff: e["iterations"] = iterations; break;
        case Benchmark::ptrans:
            e["n"] = ptrans_n();
            e["block"] = ptrans_block();
            e["grid"] = topo.rows;
            break;
        case Benchmark::hpl:
            e["n"] = hpl_n();
            e["block-log"] = block_log;
            e["reg-log"] = reg_log;
            e["torus"] = topo.rows;
            e["overlap"] = overlap ? "on" : "off";
            break;
        case Benchmark::gups:
            e["table-log"] = table_log;
            e["rng-log"] = rng_log;
            e["distance"] = distance;
            e["update-factor"] = update_factor;
            break;
        case Benchmark::stream:
            e["length"] = length;
            e["scalar"] = scalar;
            break;
        case Benchmark::gemm:
            e["width"] = width;
            e["block"] = gemm_block();
            e["reg-log"] = reg_log;
            break;
    }
    return e;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view raw) {
    const std::string value = trim(raw);
    const std::string_view v = value;
    if (key == "benchmark") cfg.benchmark = benchmark_from_string(v);
    else if (key == "transport") cfg.backend = transport_from_name(v);
    else if (key == "ranks") cfg.ranks = parse_int<int>(key, v);
    else if (key == "topology") cfg.topology = transport::topology_from_string(v);
    else if (key == "link-latency") cfg.link.latency = parse_double(key, v) / 1e9;
    else if (key == "link-width") cfg.link.width = parse_double(key, v);
    else if (key == "link-freq") cfg.link.frequency = parse_double(key, v);
    else if (key == "link-channels") cfg.link.channels_per_pair = parse_int<int>(key, v);
    else if (key == "replications") cfg.replications = parse_int<int>(key, v);
    else if (key == "staged-write-bw") cfg.staged.write_bw = parse_double(key, v);
    else if (key == "staged-read-bw") cfg.staged.read_bw = parse_double(key, v);
    else if (key == "staged-net-bw") cfg.staged.host_net_bw = parse_double(key, v);
    else if (key == "staged-net-latency") cfg.staged.host_net_latency = parse_double(key, v) / 1e9;
    else if (key == "flop-rate") cfg.flop_rate = parse_double(key, v);
    else if (key == "memory-bandwidth") cfg.memory_bandwidth = parse_double(key, v);
    else if (key == "reps") cfg.repetitions = parse_int<int>(key, v);
    else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, v);
    else if (key == "mode") cfg.mode = value;
    else if (key == "dtype") cfg.dtype = blockmat::element_type_from_string(v);
    else if (key == "iterations") cfg.iterations = parse_int<std::uint64_t>(key, v);
    else if (key == "n") cfg.n = parse_int<int>(key, v);
    else if (key == "block") cfg.block = parse_int<int>(key, v);
    else if (key == "grid") cfg.grid = parse_int<int>(key, v);
    else if (key == "block-log") cfg.block_log = parse_int<int>(key, v);
    else if (key == "reg-log") cfg.reg_log = parse_int<int>(key, v);
    else if (key == "torus") cfg.torus = parse_int<int>(key, v);
    else if (key == "overlap") cfg.overlap = parse_bool(key, v);
    else if (key == "table-log") cfg.table_log = parse_int<int>(key, v);
    else if (key == "rng-log") cfg.rng_log = parse_int<int>(key, v);
    else if (key == "distance") cfg.distance = parse_int<int>(key, v);
    else if (key == "update-factor") cfg.update_factor = parse_int<int>(key, v);
    else if (key == "length") cfg.length = parse_int<std::uint64_t>(key, v);
    else if (key == "scalar") cfg.scalar = parse_double(key, v);
    else if (key == "width") cfg.width = parse_int<int>(key, v);
    else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = format_from_string(v);
    else if (key == "timeout") cfg.timeout = std::chrono::milliseconds(parse_int<int>(key, v) * 1000LL);
    else throw ConfigError("unknown setting '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
        }
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.starts_with("--")) key.erase(0, 2);
        if (key.empty()) throw ConfigError("config line " + std::to_string(number) + ": empty key");
        out.emplace_back(std::move(key), trim(std::string_view(t).substr(eq + 1)));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace hpcc_mesh::harness
