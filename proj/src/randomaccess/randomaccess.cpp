// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/randomaccess.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <string>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::randomaccess {

using transport::Bytes;
using transport::Communicator;
using transport::RankId;

namespace {

// Column i holds the image of bit i.
using BitMatrix = std::array<std::uint64_t, 64>;

std::uint64_t mat_vec(const BitMatrix& m, std::uint64_t v) {
    std::uint64_t out = 0;
    while (v != 0) {
        const int i = std::countr_zero(v);
        out ^= m[static_cast<std::size_t>(i)];
        v &= v - 1;
    }
    return out;
}

BitMatrix compose(const BitMatrix& a, const BitMatrix& b) {
    BitMatrix out{};
    for (std::size_t i = 0; i < 64; ++i) out[i] = mat_vec(a, b[i]);
    return out;
}

BitMatrix step_matrix() {
    BitMatrix m{};
    for (std::size_t i = 0; i < 64; ++i) m[i] = lfsr_step(std::uint64_t{1} << i);
    return m;
}

}  // namespace

std::uint64_t lfsr_step(std::uint64_t s) {
    return (s << 1) ^ ((s >> 63) != 0 ? kPoly : 0);
}

std::uint64_t lfsr_skip(std::uint64_t position) {
    BitMatrix power = step_matrix();
    std::uint64_t v = 1;
    while (position != 0) {
        if (position & 1) v = mat_vec(power, v);
        position >>= 1;
        if (position != 0) power = compose(power, power);
    }
    return v;
}

void RaConfig::validate(int world_size) const {
    if (table_log < 1 || table_log > 40) throw ConfigError("table_log must be in [1, 40]");
    if (rng_log < 0 || rng_log > 16) throw ConfigError("rng_log must be in [0, 16]");
    if (distance < 1) throw ConfigError("rng distance must be at least 1");
    if (update_factor < 1) throw ConfigError("update factor must be at least 1");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (world_size < 1 || !std::has_single_bit(static_cast<unsigned>(world_size))) {
        throw ConfigError("RandomAccess needs a power-of-two rank count, got " + std::to_string(world_size));
    }
    if (static_cast<std::uint64_t>(world_size) > table_size()) throw ConfigError("more ranks than table entries");
}

ShiftRegister::ShiftRegister(int lanes, int distance, std::uint64_t updates, std::uint64_t local_begin,
                             std::uint64_t local_end, std::uint64_t table_size)
    : slots_(static_cast<std::size_t>(lanes) * static_cast<std::size_t>(distance)),
      distance_(distance),
      local_begin_(local_begin),
      local_end_(local_end),
      mask_(table_size - 1),
      consumed_(static_cast<std::size_t>(lanes), 0) {
    const auto k = static_cast<std::uint64_t>(lanes);
    for (std::uint64_t i = 0; i < k; ++i) {
        // Lane i owns updates [iU/K, (i+1)U/K); update u uses position u + 1.
        const std::uint64_t begin = static_cast<std::uint64_t>((static_cast<unsigned __int128>(i) * updates) / k);
        const std::uint64_t end = static_cast<std::uint64_t>((static_cast<unsigned __int128>(i + 1) * updates) / k);
        lanes_.push_back({lfsr_skip(begin), end - begin});
    }
}

std::optional<std::uint64_t> ShiftRegister::step() {
    const std::size_t len = slots_.size();
    // Drain the last slot; it becomes logical slot 0 after the shift.
    const std::size_t last = (head_ + len - 1) % len;
    std::optional<std::uint64_t> out = std::move(slots_[last]);
    slots_[last].reset();
    if (out) --in_flight_;
    head_ = last;

    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        Lane& lane = lanes_[i];
        if (lane.remaining == 0) continue;
        const std::uint64_t next = lfsr_step(lane.state);
        const std::uint64_t addr = next & mask_;
        if (addr >= local_begin_ && addr < local_end_) {
            auto& slot = slots_[(head_ + i * static_cast<std::size_t>(distance_)) % len];
            if (slot) {
                ++stalls_;
                continue;  // the lane keeps its number for the next clock
            }
            slot = next;
            ++in_flight_;
        }
        lane.state = next;
        --lane.remaining;
        ++consumed_[i];
    }
    return out;
}

bool ShiftRegister::done() const {
    return in_flight_ == 0 &&
           std::all_of(lanes_.begin(), lanes_.end(), [](const Lane& l) { return l.remaining == 0; });
}

std::vector<std::uint64_t> reference_randomaccess(std::uint64_t table_size, std::uint64_t updates) {
    std::vector<std::uint64_t> table(table_size);
    for (std::uint64_t i = 0; i < table_size; ++i) table[i] = i;
    std::uint64_t v = 1;
    for (std::uint64_t u = 0; u < updates; ++u) {
        v = lfsr_step(v);
        table[v & (table_size - 1)] ^= v;
    }
    return table;
}

double verify_randomaccess(std::vector<std::uint64_t> table, std::uint64_t updates) {
    const std::uint64_t size = table.size();
    if (size == 0 || !std::has_single_bit(size)) throw ConfigError("table size must be a power of two");
    std::uint64_t v = 1;
    for (std::uint64_t u = 0; u < updates; ++u) {
        v = lfsr_step(v);
        table[v & (size - 1)] ^= v;
    }
    std::uint64_t mismatches = 0;
    for (std::uint64_t i = 0; i < size; ++i) mismatches += table[i] != i;
    return static_cast<double>(mismatches) / static_cast<double>(size);
}

RaResult run_randomaccess(Communicator& comm, const RaConfig& cfg) {
    cfg.validate(comm.size());
    const std::uint64_t size = cfg.table_size();
    const std::uint64_t per_rank = size / static_cast<std::uint64_t>(comm.size());
    const std::uint64_t begin = per_rank * static_cast<std::uint64_t>(comm.rank().index);
    const std::uint64_t end = begin + per_rank;

    RaResult result;
    result.updates = cfg.updates();
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        std::vector<std::uint64_t> table(per_rank);
        for (std::uint64_t i = 0; i < per_rank; ++i) table[i] = begin + i;

        comm.barrier();
        const double t0 = comm.now();
        run_hook(cfg.on_repetition, comm, rep);
        ShiftRegister reg(cfg.lanes(), cfg.distance, result.updates, begin, end, size);
        std::uint64_t applied = 0;
        while (!reg.done()) {
            if (const auto v = reg.step()) {
                table[(*v & (size - 1)) - begin] ^= *v;
                ++applied;
            }
        }
        // Every rank scans all U numbers; only local ones touch memory.
        comm.compute(static_cast<double>(result.updates), 16.0 * static_cast<double>(applied));
        const double elapsed = comm.now() - t0;
        const double slowest = transport::allreduce_max(comm, elapsed);

        if (result.rep_time.empty() || slowest < result.time) result.time = slowest;
        result.rep_time.push_back(slowest);
        result.local_rep_time.push_back(elapsed);
        result.applied = applied;
        result.lane_consumed = reg.consumed();
        result.local_table = std::move(table);
    }
    result.gups = static_cast<double>(result.updates) / result.time / 1e9;

    const RankId root(0);
    const auto parts = transport::gather(
        comm, root, Bytes(transport::as_bytes_of(result.local_table).begin(),
                          transport::as_bytes_of(result.local_table).end()));
    Bytes ratio(sizeof(double));
    if (comm.rank() == root) {
        std::vector<std::uint64_t> full;
        full.reserve(size);
        for (const auto& p : parts) {
            const auto slice = transport::from_bytes<std::uint64_t>(p);
            full.insert(full.end(), slice.begin(), slice.end());
        }
        const double r = verify_randomaccess(std::move(full), result.updates);
        std::memcpy(ratio.data(), &r, sizeof(double));
    }
    transport::broadcast(comm, root, ratio);
    std::memcpy(&result.error_ratio, ratio.data(), sizeof(double));
    result.verify_ok = result.error_ratio <= kErrorThreshold;
    return result;
}

}  // namespace hpcc_mesh::randomaccess
