// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/topology.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::hpl {

enum class Mode { staged, direct };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

// Pass bound for residual_error.
inline constexpr double kResidualThreshold = 16.0;

struct HplConfig {
    int n = 256;
    int block_log = 5;     // block_size = 2^block_log
    int register_log = 3;  // register_block = 2^register_log
    int torus = 1;         // T, world size T^2
    Mode mode = Mode::direct;
    bool overlap = true;
    int repetitions = 1;
    std::uint64_t seed = 1;
    RepetitionHook on_repetition;

    int block_size() const { return 1 << block_log; }
    int register_block() const { return 1 << register_log; }
    blockmat::MatrixLayout layout() const;
    void validate(int world_size) const;
};

// 2 n^3 / 3
double hpl_flops(int n);

struct RankTasks {
    bool lu = false;
    std::vector<int> top;                     // block columns j > k in block row k
    std::vector<int> left;                    // block rows i > k in block column k
    std::vector<blockmat::BlockIndex> inner;  // i > k and j > k
};

// Work of iteration k on a T x T torus. Routes list the ranks, nearest first,
// that receive a block travelling right along a torus row or down a torus
// column from its owner; they never wrap back to the owner.
struct IterationPlan {
    int k = 0;
    transport::GridCoord lu_owner;
    int route_length = 0;                      // hops right (and down) from an owner
    std::vector<transport::GridCoord> lu_row;  // LU block, rightward from lu_owner
    std::vector<transport::GridCoord> lu_col;  // LU block, downward from lu_owner
    std::vector<RankTasks> tasks;              // indexed by rank

    // Ranks after `origin` along its row (right) or column (down).
    std::vector<transport::GridCoord> route_right(transport::GridCoord origin, int torus) const;
    std::vector<transport::GridCoord> route_down(transport::GridCoord origin, int torus) const;
};

IterationPlan plan_iteration(int k, int nblocks, int torus);

// Per-iteration phase durations, maxima over ranks.
struct IterationTiming {
    int k = 0;
    double lu = 0;
    double communication = 0;  // waiting for and forwarding blocks
    double top_left = 0;
    double inner = 0;
};

// Message tag of a block travelling in iteration k.
enum class BlockKind : std::uint32_t { lu = 0, top = 1, left = 2 };
transport::Tag block_tag(BlockKind kind, int index, int k, int nblocks);

template <class T>
struct HplResult {
    std::vector<double> rep_time;
    std::vector<double> local_rep_time;
    double lu_time = 0;  // best repetition, slowest rank
    double flops = 0;
    double gflops = 0;
    double residual_error = 0;
    bool solve_ok = false;
    std::vector<IterationTiming> iterations;  // best repetition
    int lu_tasks = 0;                         // this rank, one repetition
    blockmat::BlockMatrix<T> factors;         // packed L\U, this rank's blocks
};

// Collective. LU-factors the generated system, then gathers the factors to
// rank 0 for the reference solve; every rank receives the residual.
template <class T>
HplResult<T> run_hpl(transport::Communicator& comm, const HplConfig& cfg);

// Forward then back substitution with packed unit-lower L and upper U.
template <class T>
std::vector<T> solve_reference(const blockmat::DenseMatrix<T>& lu, const std::vector<T>& b);

// ||x - 1||_inf / (n ||b||_inf eps_T)
template <class T>
double residual_error(const std::vector<T>& x, const std::vector<T>& b);

}  // namespace hpcc_mesh::hpl
