#pragma once

// Block-wise SVD storage of a multivariate time series with range queries.
//
// Rows arrive one at a time and are folded into the SVD of the current block
// by a rank-one row update; once a block holds `block_size` rows it is sealed
// and only its (U, S, V) triple is kept. A query for rows [t_i, t_f] slices
// the boundary blocks through their stored U factor (partial SVD) and merges
// the per-block triples by factoring the stacked diag(S_k) V_k' cores
// (stitched SVD). Raw rows are never retained.

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "lfss/error.hpp"

namespace lfss {

inline constexpr double kRankTolerance = 1e-12;

/// A = U diag(S) V' with orthonormal columns in U (M x R) and V (N x R).
struct SvdTriple {
    Eigen::MatrixXd U;
    Eigen::VectorXd S;
    Eigen::MatrixXd V;

    Eigen::Index rank() const noexcept { return S.size(); }
    Eigen::Index rows() const noexcept { return U.rows(); }
    Eigen::Index cols() const noexcept { return V.rows(); }

    Eigen::MatrixXd reconstruct() const { return U * S.asDiagonal() * V.transpose(); }

    bool operator==(const SvdTriple& o) const {
        return U.rows() == o.U.rows() && U.cols() == o.U.cols() && V.rows() == o.V.rows() &&
               S.size() == o.S.size() && U == o.U && S == o.S && V == o.V;
    }
};

namespace detail {

/// Flips column pairs so the largest-magnitude entry of each V column is positive.
inline void fix_signs(SvdTriple& t) {
    for (Eigen::Index j = 0; j < t.V.cols(); ++j) {
        Eigen::Index arg = 0;
        t.V.col(j).cwiseAbs().maxCoeff(&arg);
        if (t.V(arg, j) < 0.0) {
            t.V.col(j) = -t.V.col(j);
            t.U.col(j) = -t.U.col(j);
        }
    }
}

}  // namespace detail

/// Thin SVD truncated to singular values above kRankTolerance * S_max.
inline SvdTriple compact_svd(const Eigen::MatrixXd& a) {
    if (!a.allFinite()) throw ValidationError("compact_svd: matrix has non-finite entries");
    SvdTriple t;
    if (a.rows() == 0 || a.cols() == 0) {
        t.U = Eigen::MatrixXd(a.rows(), 0);
        t.V = Eigen::MatrixXd(a.cols(), 0);
        return t;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index r = 0;
    const double cutoff = kRankTolerance * s(0);
    while (r < s.size() && s(r) > cutoff) ++r;
    t.U = svd.matrixU().leftCols(r);
    t.S = s.head(r);
    t.V = svd.matrixV().leftCols(r);
    detail::fix_signs(t);
    return t;
}

/// SVD of [A; row] from the SVD of A, without A itself.
inline SvdTriple append_row(const SvdTriple& t, const Eigen::RowVectorXd& row) {
    const Eigen::Index n = t.cols() > 0 ? t.cols() : row.size();
    if (row.size() != n) throw ValidationError("append_row: row length mismatch");
    if (!row.allFinite()) throw ValidationError("append_row: row has non-finite entries");
    const Eigen::Index m = t.rows(), r = t.rank();
    Eigen::MatrixXd v = t.V;
    if (v.rows() != n) v = Eigen::MatrixXd(n, 0);

    const Eigen::RowVectorXd proj = row * v;                     // coordinates in span(V)
    const Eigen::RowVectorXd resid = row - proj * v.transpose();  // orthogonal remainder
    const double rho = resid.norm();
    const double scale = std::max(r > 0 ? t.S(0) : 0.0, row.norm());
    const bool grow = rho > kRankTolerance * scale && rho > 0.0;

    const Eigen::Index k = grow ? r + 1 : r;
    Eigen::MatrixXd core = Eigen::MatrixXd::Zero(r + 1, k);
    core.topLeftCorner(r, r) = t.S.asDiagonal();
    core.bottomLeftCorner(1, r) = proj;
    if (grow) core(r, r) = rho;

    SvdTriple inner = compact_svd(core);
    Eigen::MatrixXd ub = Eigen::MatrixXd::Zero(m + 1, r + 1);
    ub.topLeftCorner(m, r) = t.U;
    ub(m, r) = 1.0;
    Eigen::MatrixXd vb(n, k);
    vb.leftCols(r) = v;
    if (grow) vb.col(r) = resid.transpose() / rho;

    SvdTriple out{ub * inner.U, inner.S, vb * inner.V};
    detail::fix_signs(out);
    return out;
}

/// SVD of rows [begin, begin + count) of the matrix implied by `block`.
inline SvdTriple partial_svd(const SvdTriple& block, Eigen::Index begin, Eigen::Index count) {
    if (count < 1) throw IndexError("partial_svd: empty row range");
    if (begin < 0 || begin + count > block.rows())
        throw IndexError("partial_svd: row range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside block of " +
                         std::to_string(block.rows()) + " rows");
    if (begin == 0 && count == block.rows()) return block;
    const Eigen::MatrixXd c = block.U.middleRows(begin, count) * block.S.asDiagonal();
    const SvdTriple inner = compact_svd(c);
    SvdTriple out{inner.U, inner.S, block.V * inner.V};
    detail::fix_signs(out);
    return out;
}

/// SVD of the vertical concatenation of the parts' implied matrices.
inline SvdTriple stitched_svd(const std::vector<SvdTriple>& parts) {
    if (parts.empty()) throw ValidationError("stitched_svd: no parts");
    if (parts.size() == 1) return parts.front();
    const Eigen::Index n = parts.front().cols();
    Eigen::Index core_rows = 0, total_rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != n) throw ValidationError("stitched_svd: parts differ in column count");
        core_rows += p.rank();
        total_rows += p.rows();
    }
    Eigen::MatrixXd core(core_rows, n);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        core.middleRows(at, p.rank()) = p.S.asDiagonal() * p.V.transpose();
        at += p.rank();
    }
    const SvdTriple inner = compact_svd(core);
    SvdTriple out;
    out.U = Eigen::MatrixXd(total_rows, inner.rank());
    Eigen::Index row = 0;
    at = 0;
    for (const auto& p : parts) {
        out.U.middleRows(row, p.rows()) = p.U * inner.U.middleRows(at, p.rank());
        row += p.rows();
        at += p.rank();
    }
    out.S = inner.S;
    out.V = inner.V;
    detail::fix_signs(out);
    return out;
}

class BlockStore {
public:
    explicit BlockStore(Eigen::Index columns, Eigen::Index block_size = 60)
        : columns_(columns), block_size_(block_size) {
        if (columns < 1) throw ValidationError("BlockStore needs at least one column");
        if (block_size < 1) throw ValidationError("BlockStore block size must be at least 1");
    }

    Eigen::Index columns() const noexcept { return columns_; }
    Eigen::Index block_size() const noexcept { return block_size_; }
    Eigen::Index total_rows() const noexcept { return total_rows_; }
    const std::vector<SvdTriple>& blocks() const noexcept { return blocks_; }

    std::size_t sealed_count() const noexcept {
        if (blocks_.empty()) return 0;
        return blocks_.back().rows() == block_size_ ? blocks_.size() : blocks_.size() - 1;
    }

    void append(const Eigen::RowVectorXd& row) {
        if (row.size() != columns_)
            throw ValidationError("BlockStore row has " + std::to_string(row.size()) +
                                  " columns, expected " + std::to_string(columns_));
        if (blocks_.empty() || blocks_.back().rows() == block_size_)
            blocks_.push_back({Eigen::MatrixXd(0, 0), Eigen::VectorXd(0), Eigen::MatrixXd(columns_, 0)});
        blocks_.back() = append_row(blocks_.back(), row);
        ++total_rows_;
    }

    void append_rows(const Eigen::MatrixXd& rows) {
        for (Eigen::Index t = 0; t < rows.rows(); ++t) append(rows.row(t));
    }

    /// SVD of rows t_i..t_f inclusive.
    SvdTriple query(Eigen::Index t_i, Eigen::Index t_f) const {
        if (t_i < 0 || t_f < t_i || t_f >= total_rows_)
            throw IndexError("query range [" + std::to_string(t_i) + ", " + std::to_string(t_f) +
                             "] outside stored rows 0.." + std::to_string(total_rows_ - 1));
        std::vector<SvdTriple> parts;
        const Eigen::Index first = t_i / block_size_, last = t_f / block_size_;
        for (Eigen::Index k = first; k <= last; ++k) {
            const SvdTriple& blk = blocks_[static_cast<std::size_t>(k)];
            const Eigen::Index start = k * block_size_;
            const Eigen::Index lo = std::max(t_i, start) - start;
            const Eigen::Index hi = std::min(t_f, start + blk.rows() - 1) - start;
            parts.push_back(partial_svd(blk, lo, hi - lo + 1));
        }
        return stitched_svd(parts);
    }

    /// Right-singular feature of the m rows ending at t: V diag(S), one row per
    /// column of the series, zero-padded to columns x columns.
    Eigen::MatrixXd feature(Eigen::Index t, Eigen::Index m) const {
        if (m < 1) throw ValidationError("feature window must be positive");
        if (t < m) throw IndexError("feature needs t >= m (t = " + std::to_string(t) +
                                    ", m = " + std::to_string(m) + ")");
        const SvdTriple q = query(t - m + 1, t);
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(columns_, columns_);
        f.leftCols(q.rank()) = q.V * q.S.asDiagonal();
        return f;
    }

    /// Numbers held for all blocks.
    Eigen::Index stored_numbers() const {
        Eigen::Index total = 0;
        for (const auto& b : blocks_) total += b.U.size() + b.S.size() + b.V.size();
        return total;
    }

    void save(std::ostream& out) const {
        out.write(kMagic, 4);
        put<std::uint32_t>(out, kVersion);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(columns_));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(block_size_));
        put<std::uint64_t>(out, blocks_.size());
        put<std::uint64_t>(out, static_cast<std::uint64_t>(total_rows_));
        for (const auto& b : blocks_) {
            put<std::uint64_t>(out, static_cast<std::uint64_t>(b.rows()));
            put<std::uint64_t>(out, static_cast<std::uint64_t>(b.rank()));
            put_doubles(out, b.U.data(), b.U.size());
            put_doubles(out, b.S.data(), b.S.size());
            put_doubles(out, b.V.data(), b.V.size());
        }
        if (!out) throw IoError("failed writing block store");
    }

    static BlockStore load(std::istream& in) {
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ValidationError("not a block store file");
        if (get<std::uint32_t>(in) != kVersion) throw ValidationError("unsupported block store version");
        const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(in));
        const auto b = static_cast<Eigen::Index>(get<std::uint64_t>(in));
        const auto count = get<std::uint64_t>(in);
        const auto total = static_cast<Eigen::Index>(get<std::uint64_t>(in));
        if (n < 1 || b < 1 || n > (1 << 20) || b > (1 << 24))
            throw ValidationError("block store header out of range");
        BlockStore s(n, b);
        Eigen::Index rows = 0;
        for (std::uint64_t k = 0; k < count; ++k) {
            const auto m = static_cast<Eigen::Index>(get<std::uint64_t>(in));
            const auto r = static_cast<Eigen::Index>(get<std::uint64_t>(in));
            if (m < 1 || m > b || r > std::min(m, n)) throw ValidationError("block store block out of range");
            if (k + 1 < count && m != b) throw ValidationError("block store has a short interior block");
            SvdTriple t{Eigen::MatrixXd(m, r), Eigen::VectorXd(r), Eigen::MatrixXd(n, r)};
            get_doubles(in, t.U.data(), t.U.size());
            get_doubles(in, t.S.data(), t.S.size());
            get_doubles(in, t.V.data(), t.V.size());
            s.blocks_.push_back(std::move(t));
            rows += m;
        }
        if (rows != total) throw ValidationError("block store row count mismatch");
        s.total_rows_ = total;
        return s;
    }

    void save(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        save(out);
    }

    static BlockStore load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path.string());
        return load(in);
    }

    bool operator==(const BlockStore& o) const {
        return columns_ == o.columns_ && block_size_ == o.block_size_ &&
               total_rows_ == o.total_rows_ && blocks_ == o.blocks_;
    }

private:
    static constexpr char kMagic[4] = {'L', 'F', 'Z', 'S'};
    static constexpr std::uint32_t kVersion = 1;

    template <class T>
    static void put(std::ostream& out, T v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    template <class T>
    static T get(std::istream& in) {
        T v{};
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!in) throw ValidationError("truncated block store file");
        return v;
    }
    static void put_doubles(std::ostream& out, const double* p, Eigen::Index n) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    }
    static void get_doubles(std::istream& in, double* p, Eigen::Index n) {
        in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw ValidationError("truncated block store file");
    }

    Eigen::Index columns_;
    Eigen::Index block_size_;
    Eigen::Index total_rows_ = 0;
    std::vector<SvdTriple> blocks_;
};

/// Builds a store from every row of `series`.
inline BlockStore store_phase(const Eigen::MatrixXd& series, Eigen::Index block_size = 60) {
    BlockStore s(series.cols(), block_size);
    s.append_rows(series);
    return s;
}

}  // namespace lfss
