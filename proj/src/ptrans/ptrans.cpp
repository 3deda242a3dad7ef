// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/ptrans.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::ptrans {

using blockmat::Block;
using blockmat::BlockIndex;
using blockmat::DenseMatrix;
using transport::Bytes;
using transport::Communicator;
using transport::RankId;

namespace {

constexpr transport::Tag kBlockTag = 0x200;

// A blocks that `src` owns and must ship to `dst`, in the order src sends them.
std::vector<BlockIndex> blocks_for(const blockmat::MatrixLayout& layout, RankId src, RankId dst) {
    std::vector<BlockIndex> out;
    for (const auto& idx : layout.owned_by(src)) {
        if (layout.owner_rank(idx.col, idx.row) == dst) out.push_back(idx);
    }
    return out;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::staged ? "staged" : "direct"; }

Mode mode_from_string(std::string_view name) {
    if (name == "staged") return Mode::staged;
    if (name == "direct") return Mode::direct;
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected staged or direct)");
}

blockmat::MatrixLayout PtransConfig::layout() const {
    return {n, block_size, grid, grid, blockmat::Distribution::diagonal};
}

void PtransConfig::validate(int world_size) const {
    layout().validate();
    if (grid < 1 || grid * grid != world_size) {
        throw ConfigError("PTRANS needs a square grid with P*Q = world size; got P=Q=" + std::to_string(grid) +
                          " for " + std::to_string(world_size) + " ranks");
    }
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
}

template <class T>
Block<T> input_block(const PtransConfig& cfg, std::uint64_t stream, int block_row, int block_col) {
    if (cfg.zero_a && stream == kStreamA) return Block<T>(cfg.block_size);
    return blockmat::generate_uniform_block<T>(cfg.seed, stream, cfg.n, cfg.block_size, block_row, block_col);
}

template <class T>
PtransResult<T> run_ptrans(Communicator& comm, const PtransConfig& cfg) {
    cfg.validate(comm.size());
    const auto layout = cfg.layout();
    const RankId me = comm.rank();
    const int bs = cfg.block_size;
    const double block_elems = static_cast<double>(bs) * bs;

    std::map<BlockIndex, Block<T>> a, b;
    for (const auto& idx : layout.owned_by(me)) {
        a.emplace(idx, input_block<T>(cfg, kStreamA, idx.row, idx.col));
        b.emplace(idx, input_block<T>(cfg, kStreamB, idx.row, idx.col));
    }

    // Fixed per-peer schedules, identical on sender and receiver side.
    std::vector<std::vector<BlockIndex>> outgoing(static_cast<std::size_t>(comm.size()));
    std::vector<std::vector<BlockIndex>> incoming(static_cast<std::size_t>(comm.size()));
    for (int r = 0; r < comm.size(); ++r) {
        outgoing[static_cast<std::size_t>(r)] = blocks_for(layout, me, RankId(r));
        incoming[static_cast<std::size_t>(r)] = blocks_for(layout, RankId(r), me);
    }

    PtransResult<T> result;
    result.c = blockmat::BlockMatrix<T>(layout, me);
    std::uint64_t best_bytes = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        comm.reset_counters();
        comm.barrier();
        const double t0 = comm.now();
        run_hook(cfg.on_repetition, comm, rep);

        for (int r = 0; r < comm.size(); ++r) {
            const auto& list = outgoing[static_cast<std::size_t>(r)];
            if (list.empty()) continue;
            if (cfg.mode == Mode::staged) {
                Bytes packed;
                packed.reserve(list.size() * static_cast<std::size_t>(block_elems) * sizeof(T));
                for (const auto& idx : list) {
                    const Bytes raw = a.at(idx).to_bytes();
                    packed.insert(packed.end(), raw.begin(), raw.end());
                }
                comm.send(RankId(r), kBlockTag, packed);
            } else {
                for (const auto& idx : list) comm.send(RankId(r), kBlockTag, a.at(idx).to_bytes());
            }
        }

        const std::size_t block_bytes = static_cast<std::size_t>(block_elems) * sizeof(T);
        for (int r = 0; r < comm.size(); ++r) {
            const auto& list = incoming[static_cast<std::size_t>(r)];
            if (list.empty()) continue;
            Bytes packed;
            if (cfg.mode == Mode::staged) {
                packed = comm.recv(RankId(r), kBlockTag);
                if (packed.size() != list.size() * block_bytes) throw TransportError("PTRANS packed size mismatch");
            }
            for (std::size_t k = 0; k < list.size(); ++k) {
                const BlockIndex src = list[k];
                Block<T> incoming_a;
                if (cfg.mode == Mode::staged) {
                    incoming_a = Block<T>::from_bytes(
                        bs, Bytes(packed.begin() + static_cast<std::ptrdiff_t>(k * block_bytes),
                                  packed.begin() + static_cast<std::ptrdiff_t>((k + 1) * block_bytes)));
                } else {
                    incoming_a = Block<T>::from_bytes(bs, comm.recv(RankId(r), kBlockTag));
                }
                // A[i][j] lands on C[j][i].
                const BlockIndex dst{src.col, src.row};
                result.c.at(dst.row, dst.col) = blockmat::block_transpose_add(incoming_a, b.at(dst));
                comm.compute(block_elems, 3.0 * block_elems * sizeof(T));
            }
        }

        const double elapsed = comm.now() - t0;
        const double slowest = transport::allreduce_max(comm, elapsed);
        if (result.rep_time.empty() || slowest < result.time) {
            result.time = slowest;
            best_bytes = comm.counters().bytes_sent;
        }
        result.rep_time.push_back(slowest);
        result.local_rep_time.push_back(elapsed);
    }

    // Residual against freshly generated inputs, independent of the exchange.
    double residual = 0;
    for (const auto& [idx, blk] : result.c.blocks()) {
        const Block<T> at = input_block<T>(cfg, kStreamA, idx.col, idx.row);
        for (int r = 0; r < bs; ++r) {
            for (int c = 0; c < bs; ++c) {
                const T want = b.at(idx)(r, c) + at(c, r);
                residual = std::max(residual, std::fabs(static_cast<double>(blk(r, c)) - static_cast<double>(want)));
            }
        }
    }
    result.max_residual = transport::allreduce_max(comm, residual);
    result.bytes_sent = best_bytes;
    result.flops = static_cast<double>(cfg.n) * cfg.n;
    result.flops_per_second = result.flops / result.time;
    return result;
}

template <class T>
double validate_ptrans(const DenseMatrix<T>& c, const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
    if (c.size() != a.size() || c.size() != b.size()) throw ConfigError("matrix size mismatch");
    double worst = 0;
    for (int i = 0; i < c.size(); ++i) {
        for (int j = 0; j < c.size(); ++j) {
            const T want = b(i, j) + a(j, i);
            worst = std::max(worst, std::fabs(static_cast<double>(c(i, j)) - static_cast<double>(want)));
        }
    }
    return worst;
}

template <class T>
DenseMatrix<T> reference_ptrans(const PtransConfig& cfg) {
    cfg.layout().validate();
    const int nb = cfg.n / cfg.block_size;
    DenseMatrix<T> a(cfg.n), b(cfg.n), c(cfg.n);
    for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nb; ++j) {
            a.set_block(i, j, input_block<T>(cfg, kStreamA, i, j));
            b.set_block(i, j, input_block<T>(cfg, kStreamB, i, j));
        }
    }
    for (int i = 0; i < cfg.n; ++i) {
        for (int j = 0; j < cfg.n; ++j) c(i, j) = b(i, j) + a(j, i);
    }
    return c;
}

#define HPCC_MESH_INSTANTIATE_PTRANS(T)                                                                 \
    template Block<T> input_block<T>(const PtransConfig&, std::uint64_t, int, int);                     \
    template PtransResult<T> run_ptrans<T>(Communicator&, const PtransConfig&);                         \
    template double validate_ptrans(const DenseMatrix<T>&, const DenseMatrix<T>&, const DenseMatrix<T>&); \
    template DenseMatrix<T> reference_ptrans<T>(const PtransConfig&);

HPCC_MESH_INSTANTIATE_PTRANS(float)
HPCC_MESH_INSTANTIATE_PTRANS(double)

}  // namespace hpcc_mesh::ptrans
