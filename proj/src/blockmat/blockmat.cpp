// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/blockmat.hpp"

#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::blockmat {

using transport::Bytes;
using transport::GridCoord;
using transport::RankId;

std::string_view to_string(ElementType t) { return t == ElementType::f32 ? "float" : "double"; }

ElementType element_type_from_string(std::string_view name) {
    if (name == "float" || name == "f32" || name == "float32") return ElementType::f32;
    if (name == "double" || name == "f64" || name == "float64") return ElementType::f64;
    throw ConfigError("unknown element type '" + std::string(name) + "'");
}

template <class T>
Block<T>::Block(int n, std::vector<T> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw NumericalError("block data does not match its size");
    }
}

template <class T>
Block<T> Block<T>::identity(int n) {
    Block b(n);
    for (int i = 0; i < n; ++i) b(i, i) = T{1};
    return b;
}

template <class T>
Bytes Block<T>::to_bytes() const {
    Bytes out(data_.size() * sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), data_.data(), out.size());
    return out;
}

template <class T>
Block<T> Block<T>::from_bytes(int n, const Bytes& raw) {
    if (raw.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * sizeof(T)) {
        throw TransportError("block payload has " + std::to_string(raw.size()) + " bytes, expected " +
                                        std::to_string(static_cast<std::size_t>(n) * n * sizeof(T)));
    }
    return Block(n, transport::from_bytes<T>(raw));
}

template <class T>
Block<T> Block<T>::transposed() const {
    Block out(n_);
    for (int r = 0; r < n_; ++r) {
        for (int c = 0; c < n_; ++c) out(c, r) = (*this)(r, c);
    }
    return out;
}

template <class T>
Block<T> DenseMatrix<T>::block(int block_row, int block_col, int block_size) const {
    Block<T> b(block_size);
    for (int r = 0; r < block_size; ++r) {
        for (int c = 0; c < block_size; ++c) b(r, c) = (*this)(block_row * block_size + r, block_col * block_size + c);
    }
    return b;
}

template <class T>
void DenseMatrix<T>::set_block(int block_row, int block_col, const Block<T>& b) {
    const int bs = b.size();
    for (int r = 0; r < bs; ++r) {
        for (int c = 0; c < bs; ++c) (*this)(block_row * bs + r, block_col * bs + c) = b(r, c);
    }
}

GridCoord owner_diagonal(int block_row, int block_col, int rows, int cols) {
    return {block_row % rows, (block_row + block_col) % cols};
}

GridCoord owner_pq(int block_row, int block_col, int rows, int cols) {
    return {block_row % rows, block_col % cols};
}

GridCoord MatrixLayout::owner(int block_row, int block_col) const {
    return distribution == Distribution::diagonal ? owner_diagonal(block_row, block_col, rows, cols)
                                                  : owner_pq(block_row, block_col, rows, cols);
}

RankId MatrixLayout::owner_rank(int block_row, int block_col) const {
    return transport::grid_rank(owner(block_row, block_col), cols);
}

std::vector<BlockIndex> MatrixLayout::owned_by(RankId rank) const {
    std::vector<BlockIndex> out;
    for (int i = 0; i < nblocks(); ++i) {
        for (int j = 0; j < nblocks(); ++j) {
            if (owner_rank(i, j) == rank) out.push_back({i, j});
        }
    }
    return out;
}

void MatrixLayout::validate() const {
    if (n < 1 || block_size < 1) throw ConfigError("matrix and block sizes must be positive");
    if (n % block_size != 0) {
        throw ConfigError("matrix size " + std::to_string(n) + " is not divisible by block size " +
                          std::to_string(block_size));
    }
    if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be positive");
}

template <class T>
BlockMatrix<T>::BlockMatrix(MatrixLayout layout, RankId rank) : layout_(layout), rank_(rank) {
    layout_.validate();
    for (const auto& idx : layout_.owned_by(rank)) blocks_.emplace(idx, Block<T>(layout_.block_size));
}

template <class T>
bool BlockMatrix<T>::owns(int block_row, int block_col) const {
    return blocks_.count({block_row, block_col}) != 0;
}

template <class T>
Block<T>& BlockMatrix<T>::at(int block_row, int block_col) {
    auto it = blocks_.find({block_row, block_col});
    if (it == blocks_.end()) {
        throw ConfigError("rank " + std::to_string(rank_.index) + " does not own block (" + std::to_string(block_row) +
                          "," + std::to_string(block_col) + ")");
    }
    return it->second;
}

template <class T>
const Block<T>& BlockMatrix<T>::at(int block_row, int block_col) const {
    return const_cast<BlockMatrix*>(this)->at(block_row, block_col);
}

template <class T>
DenseMatrix<T> gather_dense(transport::Communicator& comm, const BlockMatrix<T>& m, RankId root) {
    Bytes mine;
    for (const auto& [idx, blk] : m.blocks()) {
        const Bytes raw = blk.to_bytes();
        mine.insert(mine.end(), raw.begin(), raw.end());
    }
    const auto parts = transport::gather(comm, root, mine);
    if (comm.rank() != root) return {};

    const auto& layout = m.layout();
    DenseMatrix<T> out(layout.n);
    const std::size_t block_bytes = static_cast<std::size_t>(layout.block_size) * layout.block_size * sizeof(T);
    for (int r = 0; r < comm.size(); ++r) {
        const auto& raw = parts[static_cast<std::size_t>(r)];
        const auto owned = layout.owned_by(RankId(r));
        if (raw.size() != owned.size() * block_bytes) throw TransportError("gathered block count mismatch");
        for (std::size_t k = 0; k < owned.size(); ++k) {
            Bytes one(raw.begin() + static_cast<std::ptrdiff_t>(k * block_bytes),
                      raw.begin() + static_cast<std::ptrdiff_t>((k + 1) * block_bytes));
            out.set_block(owned[k].row, owned[k].col, Block<T>::from_bytes(layout.block_size, one));
        }
    }
    return out;
}

// --- generators ----------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t element_counter(int n, int row, int col) {
    return static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(col);
}

constexpr std::uint64_t kDiagDominantStream = 0xD1A6;

// Row sum of the stored off-diagonal values, accumulated in column order.
template <class T>
double off_diagonal_row_sum(std::uint64_t seed, int n, int row) {
    double sum = 0;
    for (int j = 0; j < n; ++j) {
        if (j == row) continue;
        sum += static_cast<double>(
            unit_uniform<T>(counter_random(seed, kDiagDominantStream, element_counter(n, row, j))));
    }
    return sum;
}

}  // namespace

std::uint64_t counter_random(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(stream));
    return splitmix64(key + counter * 0xD6E8FEB86659FD93ull);
}

template <>
float unit_uniform<float>(std::uint64_t bits) {
    return static_cast<float>(bits >> 40) * 0x1.0p-24f;
}

template <>
double unit_uniform<double>(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

template <class T>
Block<T> generate_uniform_block(std::uint64_t seed, std::uint64_t stream, int n, int block_size, int block_row,
                                int block_col) {
    Block<T> b(block_size);
    for (int r = 0; r < block_size; ++r) {
        for (int c = 0; c < block_size; ++c) {
            const int gi = block_row * block_size + r, gj = block_col * block_size + c;
            b(r, c) = unit_uniform<T>(counter_random(seed, stream, element_counter(n, gi, gj)));
        }
    }
    return b;
}

template <class T>
Block<T> diag_dominant_block(std::uint64_t seed, int n, int block_size, int block_row, int block_col) {
    Block<T> b(block_size);
    for (int r = 0; r < block_size; ++r) {
        const int gi = block_row * block_size + r;
        for (int c = 0; c < block_size; ++c) {
            const int gj = block_col * block_size + c;
            if (gi == gj) {
                b(r, c) = static_cast<T>(off_diagonal_row_sum<T>(seed, n, gi) + 1.0);
            } else {
                b(r, c) = unit_uniform<T>(counter_random(seed, kDiagDominantStream, element_counter(n, gi, gj)));
            }
        }
    }
    return b;
}

template <class T>
std::vector<T> diag_dominant_rhs(std::uint64_t seed, int n) {
    std::vector<T> rhs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const T diag = static_cast<T>(off_diagonal_row_sum<T>(seed, n, i) + 1.0);
        // Sum of the stored row, so A * ones reproduces it up to one rounding.
        double sum = 0;
        for (int j = 0; j < n; ++j) {
            sum += (j == i) ? static_cast<double>(diag)
                            : static_cast<double>(unit_uniform<T>(
                                  counter_random(seed, kDiagDominantStream, element_counter(n, i, j))));
        }
        rhs[static_cast<std::size_t>(i)] = static_cast<T>(sum);
    }
    return rhs;
}

template <class T>
DenseSystem<T> generate_diag_dominant(int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("matrix size must be positive");
    DenseSystem<T> sys{DenseMatrix<T>(n), diag_dominant_rhs<T>(seed, n)};
    const Block<T> whole = diag_dominant_block<T>(seed, n, n, 0, 0);
    sys.a.set_block(0, 0, whole);
    return sys;
}

template <class T>
BlockMatrix<T> generate_diag_dominant(const MatrixLayout& layout, RankId rank, std::uint64_t seed) {
    BlockMatrix<T> m(layout, rank);
    for (auto& [idx, blk] : m.blocks()) {
        blk = diag_dominant_block<T>(seed, layout.n, layout.block_size, idx.row, idx.col);
    }
    return m;
}

// --- dump ----------------------------------------------------------------

namespace {

void put(std::ostream& out, std::uint64_t v, int width) {
    char buf[8];
    for (int i = 0; i < width; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf, width);
}

std::uint64_t get(std::istream& in, int width) {
    unsigned char buf[8] = {};
    in.read(reinterpret_cast<char*>(buf), width);
    if (!in) throw ConfigError("truncated matrix dump");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

template <class T>
void write_dump(std::ostream& out, const MatrixLayout& layout, const DenseMatrix<T>& m) {
    layout.validate();
    put(out, static_cast<std::uint64_t>(layout.n), 8);
    put(out, static_cast<std::uint64_t>(layout.block_size), 8);
    put(out, static_cast<std::uint64_t>(layout.rows), 4);
    put(out, static_cast<std::uint64_t>(layout.cols), 4);
    put(out, element_type_of<T>() == ElementType::f32 ? 0 : 1, 4);
    for (int bi = 0; bi < layout.nblocks(); ++bi) {
        for (int bj = 0; bj < layout.nblocks(); ++bj) {
            const Block<T> b = m.block(bi, bj, layout.block_size);
            for (T v : b.values()) {
                std::uint64_t bits = 0;
                std::memcpy(&bits, &v, sizeof(T));
                put(out, bits, sizeof(T));
            }
        }
    }
    if (!out) throw Error("failed to write matrix dump");
}

template <class T>
DenseMatrix<T> read_dump(std::istream& in, MatrixLayout& layout) {
    layout.n = static_cast<int>(get(in, 8));
    layout.block_size = static_cast<int>(get(in, 8));
    layout.rows = static_cast<int>(get(in, 4));
    layout.cols = static_cast<int>(get(in, 4));
    const auto dtype = get(in, 4);
    if (dtype != (element_type_of<T>() == ElementType::f32 ? 0u : 1u)) throw ConfigError("dump element type mismatch");
    layout.validate();
    DenseMatrix<T> m(layout.n);
    for (int bi = 0; bi < layout.nblocks(); ++bi) {
        for (int bj = 0; bj < layout.nblocks(); ++bj) {
            Block<T> b(layout.block_size);
            for (T& v : b.values()) {
                const std::uint64_t bits = get(in, sizeof(T));
                std::memcpy(&v, &bits, sizeof(T));
            }
            m.set_block(bi, bj, b);
        }
    }
    return m;
}

#define HPCC_MESH_INSTANTIATE(T)                                                                          \
    template class Block<T>;                                                                              \
    template class DenseMatrix<T>;                                                                        \
    template class BlockMatrix<T>;                                                                        \
    template DenseMatrix<T> gather_dense(transport::Communicator&, const BlockMatrix<T>&, RankId);       \
    template Block<T> generate_uniform_block<T>(std::uint64_t, std::uint64_t, int, int, int, int);       \
    template Block<T> diag_dominant_block<T>(std::uint64_t, int, int, int, int);                         \
    template std::vector<T> diag_dominant_rhs<T>(std::uint64_t, int);                                    \
    template DenseSystem<T> generate_diag_dominant<T>(int, std::uint64_t);                               \
    template BlockMatrix<T> generate_diag_dominant<T>(const MatrixLayout&, RankId, std::uint64_t);       \
    template void write_dump(std::ostream&, const MatrixLayout&, const DenseMatrix<T>&);                 \
    template DenseMatrix<T> read_dump(std::istream&, MatrixLayout&);

HPCC_MESH_INSTANTIATE(float)
HPCC_MESH_INSTANTIATE(double)

}  // namespace hpcc_mesh::blockmat
