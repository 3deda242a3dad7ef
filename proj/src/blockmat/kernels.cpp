// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "hpcc_mesh/blockmat.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::blockmat {

namespace {

template <class T>
void require_same_size(const Block<T>& a, const Block<T>& b) {
    if (a.size() != b.size()) {
        throw ConfigError("block size mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

template <class T>
T checked_pivot(const Block<T>& lu, int k) {
    const T p = lu(k, k);
    if (p == T{0}) throw NumericalError("zero pivot at diagonal position " + std::to_string(k));
    return p;
}

}  // namespace

template <class T>
Block<T> block_transpose_add(const Block<T>& a, const Block<T>& b) {
    require_same_size(a, b);
    const int n = a.size();
    Block<T> out(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out(i, j) = b(i, j) + a(j, i);
    }
    return out;
}

// Each c(i,j) sees its k terms in ascending order, so the result matches a
// plain i-k-j loop bit for bit whatever the tile size.
template <class T>
void block_matmul_sub(Block<T>& c, const Block<T>& a, const Block<T>& b, RegisterBlockConfig cfg) {
    require_same_size(c, a);
    require_same_size(c, b);
    const int n = c.size();
    const int rb = cfg.register_block;
    if (rb < 1 || n % rb != 0) {
        throw ConfigError("register block " + std::to_string(rb) + " must divide block size " + std::to_string(n));
    }
    T* cd = c.values().data();
    const T* ad = a.values().data();
    const T* bd = b.values().data();
    for (int kk = 0; kk < n; kk += rb) {
        for (int ii = 0; ii < n; ii += rb) {
            for (int jj = 0; jj < n; jj += rb) {
                for (int i = ii; i < ii + rb; ++i) {
                    T* crow = cd + static_cast<std::size_t>(i) * n;
                    for (int k = kk; k < kk + rb; ++k) {
                        const T aik = ad[static_cast<std::size_t>(i) * n + k];
                        const T* brow = bd + static_cast<std::size_t>(k) * n;
                        for (int j = jj; j < jj + rb; ++j) crow[j] -= aik * brow[j];
                    }
                }
            }
        }
    }
}

template <class T>
void block_lu_decompose(Block<T>& a) {
    const int n = a.size();
    for (int k = 0; k < n; ++k) {
        const T pivot = checked_pivot(a, k);
        for (int i = k + 1; i < n; ++i) {
            const T l = a(i, k) / pivot;
            a(i, k) = l;
            for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
}

template <class T>
void block_top_update(const Block<T>& lu, Block<T>& top) {
    require_same_size(lu, top);
    const int n = lu.size();
    for (int i = 1; i < n; ++i) {
        for (int k = 0; k < i; ++k) {
            const T l = lu(i, k);
            for (int j = 0; j < n; ++j) top(i, j) -= l * top(k, j);
        }
    }
}

template <class T>
Block<T> block_left_update(const Block<T>& lu, const Block<T>& left) {
    require_same_size(lu, left);
    const int n = lu.size();
    Block<T> x = left;
    for (int j = 0; j < n; ++j) {
        const T ujj = checked_pivot(lu, j);
        for (int r = 0; r < n; ++r) x(r, j) /= ujj;
        for (int jj = j + 1; jj < n; ++jj) {
            const T u = lu(j, jj);
            for (int r = 0; r < n; ++r) x(r, jj) -= x(r, j) * u;
        }
    }
    return x.transposed();
}

#define HPCC_MESH_INSTANTIATE_KERNELS(T)                                                   \
    template Block<T> block_transpose_add(const Block<T>&, const Block<T>&);               \
    template void block_matmul_sub(Block<T>&, const Block<T>&, const Block<T>&,            \
                                   RegisterBlockConfig);                                   \
    template void block_lu_decompose(Block<T>&);                                           \
    template void block_top_update(const Block<T>&, Block<T>&);                            \
    template Block<T> block_left_update(const Block<T>&, const Block<T>&);

HPCC_MESH_INSTANTIATE_KERNELS(float)
HPCC_MESH_INSTANTIATE_KERNELS(double)

}  // namespace hpcc_mesh::blockmat
