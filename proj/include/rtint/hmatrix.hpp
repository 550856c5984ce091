#pragma once

#include "rtint/cluster_tree.hpp"
#include "rtint/entry_generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rtint {

// ---------------------------------------------------------------------------
// Partially pivoted adaptive cross approximation. Evaluates r rows and r
// columns of the entry function (plus pivot searches); never materializes the
// block. Stopping rule: ||u_k|| ||v_k|| <= eps * ||A_k||_F for two consecutive
// crosses, with the running Frobenius-norm estimate of the accumulation; the
// stop is then confirmed by sampling residual rows, because a slowly decaying
// tail of individually small crosses can still sum to a large error.
struct AcaResult {
    int rank = 0;
    std::vector<double> U; // rank vectors of length m, U[k*m + i]
    std::vector<double> V; // rank vectors of length n, V[k*n + j]
    bool saturated = false; // rank reached min(m, n) without meeting eps
};

inline AcaResult aca_compress(const EntryGenerator& gen, std::span<const int> rows,
                              std::span<const int> cols, double eps, int rank_cap = -1) {
    const int m = static_cast<int>(rows.size());
    const int n = static_cast<int>(cols.size());
    int max_rank = std::min(m, n);
    if (rank_cap > 0) max_rank = std::min(max_rank, rank_cap);
    AcaResult res;

    std::vector<char> row_used(m, 0), col_used(n, 0);
    std::vector<double> rbuf(n), cbuf(m);
    double frob2 = 0.0;
    int pivot_row = 0;
    int rows_tried = 0;
    int small_streak = 0;

    while (res.rank < max_rank) {
        // residual row at pivot_row
        gen.row(rows[pivot_row], cols, rbuf.data());
        for (int k = 0; k < res.rank; ++k) {
            const double uik = res.U[static_cast<size_t>(k) * m + pivot_row];
            const double* vk = &res.V[static_cast<size_t>(k) * n];
            for (int j = 0; j < n; ++j) rbuf[j] -= uik * vk[j];
        }
        row_used[pivot_row] = 1;
        ++rows_tried;

        int pj = -1;
        double pmax = 0.0;
        for (int j = 0; j < n; ++j) {
            if (col_used[j]) continue;
            const double a = std::abs(rbuf[j]);
            if (a > pmax) {
                pmax = a;
                pj = j;
            }
        }
        const double frob = std::sqrt(frob2);
        if (pj < 0 || pmax <= 1e-15 * (frob > 0.0 ? frob : 1e-290)) {
            // zero residual row (exact zeros happen: one-sided emission,
            // blocked visibility); try the next unused row
            if (rows_tried >= m) return res; // residual exhausted, done
            pivot_row = -1;
            for (int i = 0; i < m; ++i)
                if (!row_used[i]) {
                    pivot_row = i;
                    break;
                }
            if (pivot_row < 0) return res;
            continue;
        }

        // cross k: v = residual_row / pivot, u = residual column at pj
        const double pivot = rbuf[pj];
        const size_t ku = res.U.size(), kv = res.V.size();
        res.U.resize(ku + m);
        res.V.resize(kv + n);
        double* u = &res.U[ku];
        double* v = &res.V[kv];
        for (int j = 0; j < n; ++j) v[j] = rbuf[j] / pivot;

        gen.col(cols[pj], rows, cbuf.data());
        for (int k = 0; k < res.rank; ++k) {
            const double vjk = res.V[static_cast<size_t>(k) * n + pj];
            const double* uk = &res.U[static_cast<size_t>(k) * m];
            for (int i = 0; i < m; ++i) cbuf[i] -= vjk * uk[i];
        }
        for (int i = 0; i < m; ++i) u[i] = cbuf[i];
        col_used[pj] = 1;

        // running Frobenius estimate of the accumulated approximation
        double uu = 0.0, vv = 0.0;
        for (int i = 0; i < m; ++i) uu += u[i] * u[i];
        for (int j = 0; j < n; ++j) vv += v[j] * v[j];
        for (int k = 0; k < res.rank; ++k) {
            const double* uk = &res.U[static_cast<size_t>(k) * m];
            const double* vk = &res.V[static_cast<size_t>(k) * n];
            double uku = 0.0, vkv = 0.0;
            for (int i = 0; i < m; ++i) uku += uk[i] * u[i];
            for (int j = 0; j < n; ++j) vkv += vk[j] * v[j];
            frob2 += 2.0 * uku * vkv;
        }
        frob2 += uu * vv;
        ++res.rank;

        // a single small cross can be an unlucky pivot; require two in a row,
        // then confirm by sampling residual rows (unused rows, evenly spaced)
        if (std::sqrt(uu * vv) <= eps * std::sqrt(std::max(frob2, 0.0))) {
            if (++small_streak >= 2) {
                std::vector<int> unused;
                unused.reserve(m);
                for (int i = 0; i < m; ++i)
                    if (!row_used[i]) unused.push_back(i);
                if (unused.empty()) return res;
                const int ns = std::min<int>(8, static_cast<int>(unused.size()));
                const size_t stride = unused.size() / ns;
                double err2 = 0.0;
                int worst_row = -1;
                double worst_norm2 = -1.0;
                for (int t = 0; t < ns; ++t) {
                    const int i = unused[t * stride];
                    gen.row(rows[i], cols, rbuf.data());
                    for (int k = 0; k < res.rank; ++k) {
                        const double uik = res.U[static_cast<size_t>(k) * m + i];
                        const double* vk = &res.V[static_cast<size_t>(k) * n];
                        for (int j = 0; j < n; ++j) rbuf[j] -= uik * vk[j];
                    }
                    double r2 = 0.0;
                    for (int j = 0; j < n; ++j) r2 += rbuf[j] * rbuf[j];
                    err2 += r2;
                    if (r2 > worst_norm2) {
                        worst_norm2 = r2;
                        worst_row = i;
                    }
                }
                err2 *= static_cast<double>(unused.size()) / ns;
                if (err2 <= 9.0 * eps * eps * std::max(frob2, 0.0)) return res;
                pivot_row = worst_row;
                small_streak = 0;
                continue;
            }
        } else {
            small_streak = 0;
        }

        // next pivot row: largest entry of u among unused rows
        pivot_row = -1;
        double umax = -1.0;
        for (int i = 0; i < m; ++i) {
            if (row_used[i]) continue;
            const double a = std::abs(u[i]);
            if (a > umax) {
                umax = a;
                pivot_row = i;
            }
        }
        if (pivot_row < 0) break;
    }
    res.saturated = (res.rank >= max_rank);
    return res;
}

// ---------------------------------------------------------------------------
// SVD recompression of an ACA factorization U Vᵀ: partial-pivot ACA overshoots
// the optimal rank, so orthogonalize both factors (modified Gram-Schmidt with
// one reorthogonalization pass), take the SVD of the small r x r core by
// one-sided Jacobi, and truncate the singular-value tail at eps relative
// Frobenius norm. Factors stay in the U[k*m + i] layout.

namespace detail {

// in-place MGS: A (m x r, rank vectors contiguous) becomes Q; returns R (r x r,
// row-major) with A_old = Q R; dependent columns yield a zero Q column
inline std::vector<double> mgs_qr(std::vector<double>& a, int m, int r) {
    std::vector<double> rr(static_cast<size_t>(r) * r, 0.0);
    for (int k = 0; k < r; ++k) {
        double* ak = &a[static_cast<size_t>(k) * m];
        for (int pass = 0; pass < 2; ++pass) {
            for (int j = 0; j < k; ++j) {
                const double* qj = &a[static_cast<size_t>(j) * m];
                double d = 0.0;
                for (int i = 0; i < m; ++i) d += qj[i] * ak[i];
                rr[static_cast<size_t>(j) * r + k] += d;
                for (int i = 0; i < m; ++i) ak[i] -= d * qj[i];
            }
        }
        double nn = 0.0;
        for (int i = 0; i < m; ++i) nn += ak[i] * ak[i];
        const double nrm = std::sqrt(nn);
        rr[static_cast<size_t>(k) * r + k] = nrm;
        if (nrm > 0.0) {
            const double inv = 1.0 / nrm;
            for (int i = 0; i < m; ++i) ak[i] *= inv;
        }
    }
    return rr;
}

} // namespace detail

inline void recompress_leaf(std::vector<double>& U, std::vector<double>& V, int& rank, int m,
                            int n, double eps) {
    const int r = rank;
    if (r <= 16) return; // below this the O(r^2 (m+n)) cost outweighs the gain
    std::vector<double> ru = detail::mgs_qr(U, m, r); // U now Qu
    std::vector<double> rv = detail::mgs_qr(V, n, r); // V now Qv
    // core = Ru Rvᵀ, stored column-major as r contiguous columns
    std::vector<double> core(static_cast<size_t>(r) * r, 0.0);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            double acc = 0.0;
            for (int k = std::max(i, j); k < r; ++k)
                acc += ru[static_cast<size_t>(i) * r + k] * rv[static_cast<size_t>(j) * r + k];
            core[static_cast<size_t>(j) * r + i] = acc;
        }
    // one-sided Jacobi on the columns of core: core J has orthogonal columns
    // with norms sigma_k; accumulate J for the right factor
    std::vector<double> jrot(static_cast<size_t>(r) * r, 0.0);
    for (int k = 0; k < r; ++k) jrot[static_cast<size_t>(k) * r + k] = 1.0;
    const double jtol = 1e-28;
    for (int sweep = 0; sweep < 30; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < r - 1; ++p)
            for (int q = p + 1; q < r; ++q) {
                double* cp = &core[static_cast<size_t>(p) * r];
                double* cq = &core[static_cast<size_t>(q) * r];
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < r; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                if (apq * apq <= jtol * app * aqq) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double* jp = &jrot[static_cast<size_t>(p) * r];
                double* jq = &jrot[static_cast<size_t>(q) * r];
                for (int i = 0; i < r; ++i) {
                    const double x = cp[i], y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                    const double jx = jp[i], jy = jq[i];
                    jp[i] = c * jx - s * jy;
                    jq[i] = s * jx + c * jy;
                }
            }
        if (!rotated) break;
    }
    std::vector<double> sig2(r);
    std::vector<int> order(r);
    double total2 = 0.0;
    for (int k = 0; k < r; ++k) {
        double nn = 0.0;
        const double* ck = &core[static_cast<size_t>(k) * r];
        for (int i = 0; i < r; ++i) nn += ck[i] * ck[i];
        sig2[k] = nn;
        total2 += nn;
        order[k] = k;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) { return sig2[a] > sig2[b]; });
    // keep the smallest head with tail <= eps^2 * total (relative Frobenius)
    const double budget = eps * eps * total2;
    double kept2 = 0.0;
    int s = 0;
    while (s < r && total2 - kept2 > budget) kept2 += sig2[order[s++]];
    if (s == 0) s = 1;
    // rebuild even when s == r: the factors were orthogonalized in place
    std::vector<double> nu(static_cast<size_t>(s) * m), nv(static_cast<size_t>(s) * n);
    for (int k = 0; k < s; ++k) {
        const int kk = order[k];
        const double* ck = &core[static_cast<size_t>(kk) * r];
        const double* jk = &jrot[static_cast<size_t>(kk) * r];
        double* uk = &nu[static_cast<size_t>(k) * m];
        double* vk = &nv[static_cast<size_t>(k) * n];
        // U' column = Qu * (core J)_k carries the singular value
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int l = 0; l < r; ++l) acc += U[static_cast<size_t>(l) * m + i] * ck[l];
            uk[i] = acc;
        }
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int l = 0; l < r; ++l) acc += V[static_cast<size_t>(l) * n + j] * jk[l];
            vk[j] = acc;
        }
    }
    U = std::move(nu);
    V = std::move(nv);
    rank = s;
}

// ---------------------------------------------------------------------------

struct CompressionReport {
    long long stored_entries = 0;
    long long full_entries = 0;
    long long entry_evaluations = 0;
    int dense_leaves = 0;
    int admissible_leaves = 0;
    int downgraded_leaves = 0;
    std::map<int, int> max_rank_per_level;

    double ratio() const {
        return full_entries > 0
                   ? 1.0 - static_cast<double>(stored_entries) / static_cast<double>(full_entries)
                   : 0.0;
    }
};

// Hierarchical block matrix: geometric block tree over two cluster trees,
// ACA-compressed admissible leaves, dense leaves elsewhere. Immutable once
// assembled; matvec is deterministic for a fixed leaf ordering.
class HMatrix {
public:
    struct Leaf {
        int r0 = 0, nr = 0, c0 = 0, nc = 0; // ranges in permuted ordering
        int level = 0;
        bool dense = false;
        bool downgraded = false;
        int rank = 0;
        std::vector<double> U, V; // admissible leaves
        std::vector<double> D;    // dense leaves, row-major nr x nc
    };

    HMatrix() = default;

    static HMatrix assemble(const EntryGenerator& gen, const ClusterTree& row_tree,
                            const ClusterTree& col_tree, double eta, double eps,
                            int workers = 1) {
        if (gen.num_rows() != row_tree.num_points() || gen.num_cols() != col_tree.num_points())
            throw std::invalid_argument("HMatrix::assemble: tree/generator dimension mismatch");
        HMatrix h;
        h.rows_ = row_tree;
        h.cols_ = col_tree;
        h.eta_ = eta;
        h.eps_ = eps;

        struct Task {
            int rn, cn, level;
            bool admissible;
        };
        std::vector<Task> tasks;
        {
            std::vector<Task> stack{{0, 0, 0, false}};
            while (!stack.empty()) {
                Task t = stack.back();
                stack.pop_back();
                const auto& rn = row_tree.node(t.rn);
                const auto& cn = col_tree.node(t.cn);
                if (is_admissible(rn, cn, eta)) {
                    t.admissible = true;
                    tasks.push_back(t);
                } else if (rn.is_leaf() && cn.is_leaf()) {
                    t.admissible = false;
                    tasks.push_back(t);
                } else if (!rn.is_leaf() && !cn.is_leaf()) {
                    stack.push_back({rn.child0, cn.child0, t.level + 1, false});
                    stack.push_back({rn.child0, cn.child1, t.level + 1, false});
                    stack.push_back({rn.child1, cn.child0, t.level + 1, false});
                    stack.push_back({rn.child1, cn.child1, t.level + 1, false});
                } else if (rn.is_leaf()) {
                    stack.push_back({t.rn, cn.child0, t.level + 1, false});
                    stack.push_back({t.rn, cn.child1, t.level + 1, false});
                } else {
                    stack.push_back({rn.child0, t.cn, t.level + 1, false});
                    stack.push_back({rn.child1, t.cn, t.level + 1, false});
                }
            }
        }

        h.leaves_.resize(tasks.size());
        const long long evals_before = gen.evaluations();
        std::atomic<size_t> next{0};
        auto work = [&]() {
            for (;;) {
                const size_t k = next.fetch_add(1);
                if (k >= tasks.size()) return;
                const Task& t = tasks[k];
                const auto& rn = row_tree.node(t.rn);
                const auto& cn = col_tree.node(t.cn);
                Leaf leaf;
                leaf.r0 = rn.begin;
                leaf.nr = rn.size();
                leaf.c0 = cn.begin;
                leaf.nc = cn.size();
                leaf.level = t.level;
                std::span<const int> rids(row_tree.perm().data() + rn.begin, rn.size());
                std::span<const int> cids(col_tree.perm().data() + cn.begin, cn.size());
                if (t.admissible) {
                    // past the dense break-even rank, low-rank storage loses;
                    // stop there and fall back to a dense leaf
                    const int cap = std::max(
                        1, static_cast<int>((static_cast<long long>(leaf.nr) * leaf.nc) /
                                            (leaf.nr + leaf.nc)));
                    AcaResult aca = aca_compress(gen, rids, cids, eps, cap);
                    if (aca.saturated) {
                        // compression failed for this block; fall back to dense
                        leaf.dense = true;
                        leaf.downgraded = true;
                        fill_dense(gen, rids, cids, leaf);
                    } else {
                        leaf.rank = aca.rank;
                        leaf.U = std::move(aca.U);
                        leaf.V = std::move(aca.V);
                        recompress_leaf(leaf.U, leaf.V, leaf.rank, leaf.nr, leaf.nc, eps);
                    }
                } else {
                    leaf.dense = true;
                    fill_dense(gen, rids, cids, leaf);
                }
                h.leaves_[k] = std::move(leaf);
            }
        };
        if (workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        h.entry_evaluations_ = gen.evaluations() - evals_before;
        return h;
    }

    int num_rows() const { return rows_.num_points(); }
    int num_cols() const { return cols_.num_points(); }
    const ClusterTree& row_tree() const { return rows_; }
    const ClusterTree& col_tree() const { return cols_; }
    const std::vector<Leaf>& leaves() const { return leaves_; }
    double eps() const { return eps_; }
    double eta() const { return eta_; }

    std::vector<double> matvec(std::span<const double> v) const {
        if (static_cast<int>(v.size()) != num_cols())
            throw std::invalid_argument("HMatrix::matvec: dimension mismatch");
        const auto& cperm = cols_.perm();
        const auto& rperm = rows_.perm();
        std::vector<double> vp(v.size());
        for (size_t k = 0; k < v.size(); ++k) vp[k] = v[cperm[k]];
        std::vector<double> op(num_rows(), 0.0);
        std::vector<double> tmp;
        for (const Leaf& leaf : leaves_) {
            const double* x = vp.data() + leaf.c0;
            double* y = op.data() + leaf.r0;
            if (leaf.dense) {
                for (int i = 0; i < leaf.nr; ++i) {
                    const double* drow = leaf.D.data() + static_cast<size_t>(i) * leaf.nc;
                    double acc = 0.0;
                    for (int j = 0; j < leaf.nc; ++j) acc += drow[j] * x[j];
                    y[i] += acc;
                }
            } else {
                tmp.assign(leaf.rank, 0.0);
                for (int k = 0; k < leaf.rank; ++k) {
                    const double* vk = leaf.V.data() + static_cast<size_t>(k) * leaf.nc;
                    double acc = 0.0;
                    for (int j = 0; j < leaf.nc; ++j) acc += vk[j] * x[j];
                    tmp[k] = acc;
                }
                for (int k = 0; k < leaf.rank; ++k) {
                    const double* uk = leaf.U.data() + static_cast<size_t>(k) * leaf.nr;
                    const double tk = tmp[k];
                    for (int i = 0; i < leaf.nr; ++i) y[i] += uk[i] * tk;
                }
            }
        }
        std::vector<double> out(num_rows());
        for (int k = 0; k < num_rows(); ++k) out[rperm[k]] = op[k];
        return out;
    }

    CompressionReport report() const {
        CompressionReport r;
        r.full_entries = static_cast<long long>(num_rows()) * num_cols();
        r.entry_evaluations = entry_evaluations_;
        for (const Leaf& leaf : leaves_) {
            if (leaf.dense) {
                r.stored_entries += static_cast<long long>(leaf.nr) * leaf.nc;
                ++r.dense_leaves;
                if (leaf.downgraded) ++r.downgraded_leaves;
            } else {
                r.stored_entries += static_cast<long long>(leaf.rank) * (leaf.nr + leaf.nc);
                ++r.admissible_leaves;
                auto& mr = r.max_rank_per_level[leaf.level];
                mr = std::max(mr, leaf.rank);
            }
        }
        return r;
    }

    // ------------------------------------------------------------------
    // Binary dump/load (little-endian doubles) so the benchmark harness can
    // separate assembly time from solve time.
    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("HMatrix::save: cannot open " + path);
        const char magic[8] = {'R', 'T', 'H', 'M', 'A', 'T', '0', '1'};
        out.write(magic, 8);
        write_pod(out, eta_);
        write_pod(out, eps_);
        write_pod(out, entry_evaluations_);
        save_tree(out, rows_);
        save_tree(out, cols_);
        write_pod(out, static_cast<int64_t>(leaves_.size()));
        for (const Leaf& l : leaves_) {
            write_pod(out, l.r0);
            write_pod(out, l.nr);
            write_pod(out, l.c0);
            write_pod(out, l.nc);
            write_pod(out, l.level);
            write_pod(out, static_cast<int32_t>(l.dense));
            write_pod(out, static_cast<int32_t>(l.downgraded));
            write_pod(out, l.rank);
            write_vec(out, l.U);
            write_vec(out, l.V);
            write_vec(out, l.D);
        }
        if (!out) throw std::runtime_error("HMatrix::save: write failed for " + path);
    }

    static HMatrix load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("HMatrix::load: cannot open " + path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, "RTHMAT01", 8) != 0)
            throw std::runtime_error("HMatrix::load: bad magic in " + path);
        HMatrix h;
        read_pod(in, h.eta_);
        read_pod(in, h.eps_);
        read_pod(in, h.entry_evaluations_);
        h.rows_ = load_tree(in);
        h.cols_ = load_tree(in);
        int64_t nleaves = 0;
        read_pod(in, nleaves);
        h.leaves_.resize(nleaves);
        for (auto& l : h.leaves_) {
            int32_t dense = 0, down = 0;
            read_pod(in, l.r0);
            read_pod(in, l.nr);
            read_pod(in, l.c0);
            read_pod(in, l.nc);
            read_pod(in, l.level);
            read_pod(in, dense);
            read_pod(in, down);
            read_pod(in, l.rank);
            l.dense = dense != 0;
            l.downgraded = down != 0;
            read_vec(in, l.U);
            read_vec(in, l.V);
            read_vec(in, l.D);
        }
        if (!in) throw std::runtime_error("HMatrix::load: truncated file " + path);
        return h;
    }

private:
    static void fill_dense(const EntryGenerator& gen, std::span<const int> rids,
                           std::span<const int> cids, Leaf& leaf) {
        leaf.D.resize(static_cast<size_t>(leaf.nr) * leaf.nc);
        for (int i = 0; i < leaf.nr; ++i)
            gen.row(rids[i], cids, leaf.D.data() + static_cast<size_t>(i) * leaf.nc);
    }

    template <class T>
    static void write_pod(std::ostream& out, const T& v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    template <class T>
    static void read_pod(std::istream& in, T& v) {
        in.read(reinterpret_cast<char*>(&v), sizeof(T));
    }
    static void write_vec(std::ostream& out, const std::vector<double>& v) {
        write_pod(out, static_cast<int64_t>(v.size()));
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    static void read_vec(std::istream& in, std::vector<double>& v) {
        int64_t n = 0;
        read_pod(in, n);
        v.resize(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
    }

    static void save_tree(std::ostream& out, const ClusterTree& t) {
        write_pod(out, static_cast<int64_t>(t.perm().size()));
        out.write(reinterpret_cast<const char*>(t.perm().data()),
                  static_cast<std::streamsize>(t.perm().size() * sizeof(int)));
        write_pod(out, static_cast<int64_t>(t.nodes().size()));
        for (const auto& n : t.nodes()) {
            write_pod(out, n.begin);
            write_pod(out, n.end);
            write_pod(out, n.center.x);
            write_pod(out, n.center.y);
            write_pod(out, n.center.z);
            write_pod(out, n.radius);
            write_pod(out, n.child0);
            write_pod(out, n.child1);
        }
        write_pod(out, t.leaf_size());
    }

    static ClusterTree load_tree(std::istream& in) {
        int64_t np = 0;
        read_pod(in, np);
        std::vector<int> perm(np);
        in.read(reinterpret_cast<char*>(perm.data()),
                static_cast<std::streamsize>(np * sizeof(int)));
        int64_t nn = 0;
        read_pod(in, nn);
        std::vector<ClusterTree::Node> nodes(nn);
        for (auto& n : nodes) {
            read_pod(in, n.begin);
            read_pod(in, n.end);
            read_pod(in, n.center.x);
            read_pod(in, n.center.y);
            read_pod(in, n.center.z);
            read_pod(in, n.radius);
            read_pod(in, n.child0);
            read_pod(in, n.child1);
        }
        int leaf_size = 0;
        read_pod(in, leaf_size);
        return ClusterTree::from_parts(std::move(perm), std::move(nodes), leaf_size);
    }

    ClusterTree rows_, cols_;
    std::vector<Leaf> leaves_;
    double eta_ = 2.0, eps_ = 1e-4;
    long long entry_evaluations_ = 0;
};

} // namespace rtint
