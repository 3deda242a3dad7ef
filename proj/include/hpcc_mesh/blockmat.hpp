// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hpcc_mesh/topology.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::blockmat {

enum class ElementType { f32, f64 };

std::string_view to_string(ElementType t);
ElementType element_type_from_string(std::string_view name);

template <class T>
constexpr ElementType element_type_of() {
    return sizeof(T) == 4 ? ElementType::f32 : ElementType::f64;
}

// Dense square block, row-major.
template <class T>
class Block {
public:
    Block() = default;
    explicit Block(int n) : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), T{0}) {}
    Block(int n, std::vector<T> data);

    static Block identity(int n);

    int size() const { return n_; }
    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * n_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * n_ + c]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    transport::Bytes to_bytes() const;
    static Block from_bytes(int n, const transport::Bytes& raw);

    Block transposed() const;

    friend bool operator==(const Block&, const Block&) = default;

private:
    int n_ = 0;
    std::vector<T> data_;
};

// Square matrix held in one piece. Used for gathered results and oracles.
template <class T>
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(int n) : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), T{0}) {}

    int size() const { return n_; }
    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * n_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * n_ + c]; }
    std::span<const T> values() const { return data_; }

    Block<T> block(int block_row, int block_col, int block_size) const;
    void set_block(int block_row, int block_col, const Block<T>& b);

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    int n_ = 0;
    std::vector<T> data_;
};

// Micro-tile edge of the two-level blocking.
struct RegisterBlockConfig {
    int register_block = 8;
};

enum class Distribution { diagonal, pq };

// PTRANS distribution: block row i lands on grid row i mod P and is shifted
// by its row index along the grid columns, so A[i][j] and C[j][i] always
// share a grid column.
transport::GridCoord owner_diagonal(int block_row, int block_col, int rows, int cols);

// Plain block-cyclic PQ distribution.
transport::GridCoord owner_pq(int block_row, int block_col, int rows, int cols);

struct BlockIndex {
    int row = 0;
    int col = 0;
    friend auto operator<=>(const BlockIndex&, const BlockIndex&) = default;
};

struct MatrixLayout {
    int n = 0;
    int block_size = 1;
    int rows = 1;  // P
    int cols = 1;  // Q
    Distribution distribution = Distribution::pq;

    int nblocks() const { return n / block_size; }
    transport::GridCoord owner(int block_row, int block_col) const;
    transport::RankId owner_rank(int block_row, int block_col) const;
    // Blocks owned by `rank`, row-major.
    std::vector<BlockIndex> owned_by(transport::RankId rank) const;
    void validate() const;
};

// The blocks of a distributed matrix that one rank owns.
template <class T>
class BlockMatrix {
public:
    BlockMatrix() = default;
    BlockMatrix(MatrixLayout layout, transport::RankId rank);

    const MatrixLayout& layout() const { return layout_; }
    transport::RankId rank() const { return rank_; }

    bool owns(int block_row, int block_col) const;
    Block<T>& at(int block_row, int block_col);
    const Block<T>& at(int block_row, int block_col) const;
    const std::map<BlockIndex, Block<T>>& blocks() const { return blocks_; }
    std::map<BlockIndex, Block<T>>& blocks() { return blocks_; }

private:
    MatrixLayout layout_;
    transport::RankId rank_;
    std::map<BlockIndex, Block<T>> blocks_;
};

// Gather every rank's blocks into a dense matrix on `root`; other ranks get
// an empty matrix. Uses the untimed collectives.
template <class T>
DenseMatrix<T> gather_dense(transport::Communicator& comm, const BlockMatrix<T>& m, transport::RankId root);

// --- kernels -------------------------------------------------------------

// out[i][j] = b[i][j] + a[j][i]
template <class T>
Block<T> block_transpose_add(const Block<T>& a, const Block<T>& b);

// c <- c - a * b, micro-tile by micro-tile with the k tiles outermost.
template <class T>
void block_matmul_sub(Block<T>& c, const Block<T>& a, const Block<T>& b, RegisterBlockConfig cfg);

// In-place Doolittle LU without pivoting: strict lower triangle holds L
// (unit diagonal implied), upper triangle holds U.
template <class T>
void block_lu_decompose(Block<T>& a);

// top <- L^-1 top
template <class T>
void block_top_update(const Block<T>& lu, Block<T>& top);

// Returns (left U^-1)^T.
template <class T>
Block<T> block_left_update(const Block<T>& lu, const Block<T>& left);

// --- generators ----------------------------------------------------------

// SplitMix64 in counter mode: a pure function of (seed, stream, counter).
std::uint64_t counter_random(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

template <class T>
T unit_uniform(std::uint64_t bits);

// Uniform [0,1) block of matrix `stream`, keyed by global element
// coordinates so content is independent of rank count and block size.
template <class T>
Block<T> generate_uniform_block(std::uint64_t seed, std::uint64_t stream, int n, int block_size, int block_row,
                                int block_col);

// Diagonally dominant system: off-diagonals uniform in [0,1), diagonal =
// sum of the row's off-diagonals + 1, rhs = A * ones.
template <class T>
Block<T> diag_dominant_block(std::uint64_t seed, int n, int block_size, int block_row, int block_col);

template <class T>
std::vector<T> diag_dominant_rhs(std::uint64_t seed, int n);

template <class T>
struct DenseSystem {
    DenseMatrix<T> a;
    std::vector<T> b;
};

template <class T>
DenseSystem<T> generate_diag_dominant(int n, std::uint64_t seed);

template <class T>
BlockMatrix<T> generate_diag_dominant(const MatrixLayout& layout, transport::RankId rank, std::uint64_t seed);

// --- debug dump ----------------------------------------------------------

// Little-endian: u64 n, u64 block_size, u32 P, u32 Q, u32 dtype (0 = f32,
// 1 = f64), then the blocks in row-major block order, each row-major.
template <class T>
void write_dump(std::ostream& out, const MatrixLayout& layout, const DenseMatrix<T>& m);

template <class T>
DenseMatrix<T> read_dump(std::istream& in, MatrixLayout& layout);

}  // namespace hpcc_mesh::blockmat
