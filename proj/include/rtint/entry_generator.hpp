#pragma once

#include <atomic>
#include <cstdint>
#include <span>

namespace rtint {

// A matrix seen as a pure (i, j) -> value function plus batched row/column
// evaluation (the interface partially pivoted ACA needs; no dense block is
// ever materialized for admissible blocks). Implementations must be reentrant.
class EntryGenerator {
public:
    virtual ~EntryGenerator() = default;

    virtual int num_rows() const = 0;
    virtual int num_cols() const = 0;
    virtual double entry(int i, int j) const = 0;

    virtual void row(int i, std::span<const int> cols, double* out) const {
        for (size_t k = 0; k < cols.size(); ++k) out[k] = entry(i, cols[k]);
    }

    virtual void col(int j, std::span<const int> rows, double* out) const {
        for (size_t k = 0; k < rows.size(); ++k) out[k] = entry(rows[k], j);
    }

    long long evaluations() const { return eval_count_.load(std::memory_order_relaxed); }
    void count_evaluations(long long n) const {
        eval_count_.fetch_add(n, std::memory_order_relaxed);
    }

private:
    mutable std::atomic<long long> eval_count_{0};
};

} // namespace rtint
