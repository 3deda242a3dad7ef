// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/epbench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::epbench {

using blockmat::Block;
using blockmat::DenseMatrix;
using transport::Communicator;

namespace {

constexpr std::uint64_t kStreamB = 0x5B;
constexpr std::uint64_t kStreamC = 0x5C;
constexpr std::uint64_t kGemmBase = 0x6E00;

// Per-rank generator stream, so ranks hold different data.
std::uint64_t rank_stream(std::uint64_t base, int rank) { return base + 16 * static_cast<std::uint64_t>(rank); }

struct Timed {
    double slowest;
    double local;
    std::uint64_t bytes_sent;
};

template <class Body>
Timed timed_region(Communicator& comm, const RepetitionHook& hook, int rep, Body&& body) {
    comm.reset_counters();
    comm.barrier();
    const double t0 = comm.now();
    run_hook(hook, comm, rep);
    body();
    const double elapsed = comm.now() - t0;
    const std::uint64_t sent = comm.counters().bytes_sent;
    return {transport::allreduce_max(comm, elapsed), elapsed, sent};
}

void finish(Communicator& comm, EpResult& r, bool local_ok, double local_error) {
    r.total_work = transport::allreduce_sum(comm, r.work_per_rank);
    r.aggregate_rate = r.total_work / r.time;
    r.rank_rate = r.work_per_rank / r.time;
    r.validation_ok = transport::allreduce_max(comm, local_ok ? 0.0 : 1.0) == 0.0;
    r.max_error = transport::allreduce_max(comm, local_error);
}

void record(EpResult& r, const Timed& t) {
    if (r.rep_time.empty() || t.slowest < r.time) r.time = t.slowest;
    r.rep_time.push_back(t.slowest);
    r.local_rep_time.push_back(t.local);
    r.bytes_sent_timed = std::max(r.bytes_sent_timed, t.bytes_sent);
}

}  // namespace

void StreamConfig::validate() const {
    if (array_length < 1) throw ConfigError("array length must be at least 1");
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
}

void stream_triad(std::span<double> a, std::span<const double> b, std::span<const double> c, double s) {
    if (a.size() != b.size() || a.size() != c.size()) throw ConfigError("triad arrays differ in length");
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] + s * c[i];
}

EpResult run_stream_triad(Communicator& comm, const StreamConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.array_length;
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = blockmat::unit_uniform<double>(
            blockmat::counter_random(cfg.seed, rank_stream(kStreamB, comm.rank().index), i));
        c[i] = blockmat::unit_uniform<double>(
            blockmat::counter_random(cfg.seed, rank_stream(kStreamC, comm.rank().index), i));
    }

    EpResult r;
    const double bytes = 3.0 * static_cast<double>(n) * sizeof(double);
    r.work_per_rank = bytes;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        std::fill(a.begin(), a.end(), 0.0);
        record(r, timed_region(comm, cfg.on_repetition, rep, [&] {
                   stream_triad(a, b, c, cfg.scalar);
                   comm.compute(2.0 * static_cast<double>(n), bytes);
               }));
    }

    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok = ok && a[i] == b[i] + cfg.scalar * c[i];
    finish(comm, r, ok, ok ? 0.0 : 1.0);
    return r;
}

void GemmConfig::validate() const {
    if (matrix_width < 1 || block_size < 1) throw ConfigError("matrix width and block size must be positive");
    if (matrix_width % block_size != 0) {
        throw ConfigError("matrix width " + std::to_string(matrix_width) + " is not divisible by block size " +
                          std::to_string(block_size));
    }
    if (register_block < 1 || block_size % register_block != 0) {
        throw ConfigError("register block must divide the block size");
    }
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
}

template <class T>
SquareBlocks<T>::SquareBlocks(int nblocks, int block_size)
    : nb(nblocks), bs(block_size), blocks(static_cast<std::size_t>(nblocks) * nblocks, Block<T>(block_size)) {}

template <class T>
SquareBlocks<T> SquareBlocks<T>::from_dense(const DenseMatrix<T>& m, int block_size) {
    if (block_size < 1 || m.size() % block_size != 0) throw ConfigError("block size must divide the matrix size");
    SquareBlocks out(m.size() / block_size, block_size);
    for (int i = 0; i < out.nb; ++i)
        for (int j = 0; j < out.nb; ++j) out.at(i, j) = m.block(i, j, block_size);
    return out;
}

template <class T>
DenseMatrix<T> SquareBlocks<T>::dense() const {
    DenseMatrix<T> m(nb * bs);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) m.set_block(i, j, at(i, j));
    return m;
}

template <class T>
void gemm_accumulate(SquareBlocks<T>& c, const SquareBlocks<T>& a, const SquareBlocks<T>& b,
                     blockmat::RegisterBlockConfig cfg) {
    if (a.nb != c.nb || b.nb != c.nb || a.bs != c.bs || b.bs != c.bs) throw ConfigError("GEMM shape mismatch");
    SquareBlocks<T> neg = a;
    for (auto& blk : neg.blocks)
        for (T& v : blk.values()) v = -v;
    for (int i = 0; i < c.nb; ++i)
        for (int j = 0; j < c.nb; ++j)
            for (int k = 0; k < c.nb; ++k) blockmat::block_matmul_sub(c.at(i, j), neg.at(i, k), b.at(k, j), cfg);
}

template <class T>
EpResult run_gemm(Communicator& comm, const GemmConfig& cfg) {
    cfg.validate();
    const int w = cfg.matrix_width, bs = cfg.block_size, nb = w / bs;
    const int rank = comm.rank().index;
    auto make = [&](std::uint64_t which) {
        SquareBlocks<T> m(nb, bs);
        for (int i = 0; i < nb; ++i)
            for (int j = 0; j < nb; ++j)
                m.at(i, j) = blockmat::generate_uniform_block<T>(cfg.seed, rank_stream(kGemmBase + which, rank), w, bs,
                                                                 i, j);
        return m;
    };
    const SquareBlocks<T> a = make(0), b = make(1), c0 = make(2);

    EpResult r;
    const double ww = static_cast<double>(w);
    r.work_per_rank = 2.0 * ww * ww * ww;
    SquareBlocks<T> c;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        c = c0;
        record(r, timed_region(comm, cfg.on_repetition, rep, [&] {
                   gemm_accumulate(c, a, b, {cfg.register_block});
                   comm.compute(r.work_per_rank, 3.0 * ww * ww * sizeof(T));
               }));
    }

    // One sampled block against a naive triple loop in double.
    const int si = static_cast<int>(blockmat::counter_random(cfg.seed, 0x6F, static_cast<std::uint64_t>(rank)) % nb);
    const int sj = static_cast<int>(blockmat::counter_random(cfg.seed, 0x70, static_cast<std::uint64_t>(rank)) % nb);
    double worst = 0, scale = 0;
    for (int r0 = 0; r0 < bs; ++r0) {
        for (int c1 = 0; c1 < bs; ++c1) {
            double ref = c0.at(si, sj)(r0, c1);
            for (int k = 0; k < w; ++k) {
                ref += static_cast<double>(a.at(si, k / bs)(r0, k % bs)) * b.at(k / bs, sj)(k % bs, c1);
            }
            const double got = c.at(si, sj)(r0, c1);
            worst = std::max(worst, std::fabs(got - ref));
            scale = std::max(scale, std::fabs(ref));
        }
    }
    // Relative to the largest reference entry of the block.
    worst /= std::max(scale, std::numeric_limits<double>::min());
    const double tol = sizeof(T) == 4 ? 1e-5 : 1e-12;
    finish(comm, r, worst <= tol, worst);
    return r;
}

#define HPCC_MESH_INSTANTIATE_EP(T)                                                                      \
    template struct SquareBlocks<T>;                                                                     \
    template void gemm_accumulate(SquareBlocks<T>&, const SquareBlocks<T>&, const SquareBlocks<T>&,     \
                                  blockmat::RegisterBlockConfig);                                        \
    template EpResult run_gemm<T>(Communicator&, const GemmConfig&);

HPCC_MESH_INSTANTIATE_EP(float)
HPCC_MESH_INSTANTIATE_EP(double)

}  // namespace hpcc_mesh::epbench
