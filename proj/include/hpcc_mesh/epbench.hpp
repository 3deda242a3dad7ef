// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/transport.hpp"

// Rank-local benchmarks: no messages inside the timed region.
namespace hpcc_mesh::epbench {

struct StreamConfig {
    std::uint64_t array_length = 1 << 20;  // per rank
    double scalar = 3.0;
    int repetitions = 1;
    std::uint64_t seed = 1;
    RepetitionHook on_repetition;

    void validate() const;
};

struct EpResult {
    std::vector<double> rep_time;  // slowest rank per repetition
    std::vector<double> local_rep_time;
    double time = 0;
    double work_per_rank = 0;   // bytes (STREAM) or FLOPs (GEMM) of this rank
    double total_work = 0;      // summed over ranks
    double aggregate_rate = 0;  // total_work / time
    double rank_rate = 0;       // work_per_rank / time
    std::uint64_t bytes_sent_timed = 0;
    bool validation_ok = false;
    double max_error = 0;
};

// a[i] = b[i] + s * c[i]
void stream_triad(std::span<double> a, std::span<const double> b, std::span<const double> c, double s);

// Moves 3 * length * 8 bytes per rank.
EpResult run_stream_triad(transport::Communicator& comm, const StreamConfig& cfg);

struct GemmConfig {
    int matrix_width = 256;  // per rank
    int block_size = 32;
    int register_block = 8;
    int repetitions = 1;
    std::uint64_t seed = 1;
    RepetitionHook on_repetition;

    void validate() const;
};

// Square matrix stored as nb x nb blocks, row-major.
template <class T>
struct SquareBlocks {
    int nb = 0;
    int bs = 0;
    std::vector<blockmat::Block<T>> blocks;

    SquareBlocks() = default;
    SquareBlocks(int nblocks, int block_size);

    blockmat::Block<T>& at(int i, int j) { return blocks[static_cast<std::size_t>(i * nb + j)]; }
    const blockmat::Block<T>& at(int i, int j) const { return blocks[static_cast<std::size_t>(i * nb + j)]; }

    static SquareBlocks from_dense(const blockmat::DenseMatrix<T>& m, int block_size);
    blockmat::DenseMatrix<T> dense() const;
};

// c <- c + a * b via the subtracting block kernel with -a.
template <class T>
void gemm_accumulate(SquareBlocks<T>& c, const SquareBlocks<T>& a, const SquareBlocks<T>& b,
                     blockmat::RegisterBlockConfig cfg);

// 2 w^3 FLOPs per rank.
template <class T>
EpResult run_gemm(transport::Communicator& comm, const GemmConfig& cfg);

}  // namespace hpcc_mesh::epbench
