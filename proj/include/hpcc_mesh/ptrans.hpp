// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::ptrans {

enum class Mode { staged, direct };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

// Generator streams of the two inputs.
inline constexpr std::uint64_t kStreamA = 1;
inline constexpr std::uint64_t kStreamB = 2;

struct PtransConfig {
    int n = 64;
    int block_size = 16;
    int grid = 1;  // P = Q
    Mode mode = Mode::direct;
    int repetitions = 1;
    std::uint64_t seed = 1;
    // Testing hook: force A to zero.
    bool zero_a = false;
    RepetitionHook on_repetition;

    blockmat::MatrixLayout layout() const;
    // Throws ConfigError unless grid * grid == world_size and the layout is valid.
    void validate(int world_size) const;
};

template <class T>
struct PtransResult {
    std::vector<double> rep_time;  // slowest rank per repetition
    std::vector<double> local_rep_time;
    double time = 0;               // best repetition
    double flops = 0;              // n^2
    double flops_per_second = 0;
    double max_residual = 0;
    std::uint64_t bytes_sent = 0;  // this rank, best repetition
    blockmat::BlockMatrix<T> c;    // this rank's C blocks
};

// Generated input blocks; `zero_a` yields zeros for A.
template <class T>
blockmat::Block<T> input_block(const PtransConfig& cfg, std::uint64_t stream, int block_row, int block_col);

// Collective. C = B + A^T over the diagonal distribution.
template <class T>
PtransResult<T> run_ptrans(transport::Communicator& comm, const PtransConfig& cfg);

// max |C[i][j] - (B[i][j] + A[j][i])|
template <class T>
double validate_ptrans(const blockmat::DenseMatrix<T>& c, const blockmat::DenseMatrix<T>& a,
                       const blockmat::DenseMatrix<T>& b);

// Single-rank dense oracle C = B + A^T from the generated inputs.
template <class T>
blockmat::DenseMatrix<T> reference_ptrans(const PtransConfig& cfg);

}  // namespace hpcc_mesh::ptrans
