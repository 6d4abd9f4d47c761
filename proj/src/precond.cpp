#include "precond.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "error.hpp"

namespace pclab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// One factorization attempt at a fixed shift. Works up-looking on the
// CSR lower pattern; row entries are column-sorted with the diagonal
// last. Throws NumericError on a nonpositive pivot.
std::vector<double> ic0_attempt(const SparseCsr& lo, const double shift) {
    const Index n = lo.n_rows;
    std::vector<double> v(lo.values.size(), 0.0);
    // diag_pos[i]: index of (i,i), known to be the last entry of row i.
    std::vector<Index> diag_pos(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Index end = lo.row_ptr[static_cast<std::size_t>(i) + 1];
        diag_pos[static_cast<std::size_t>(i)] = end - 1;
    }

    for (Index i = 0; i < n; ++i) {
        const Index beg = lo.row_ptr[static_cast<std::size_t>(i)];
        const Index end = lo.row_ptr[static_cast<std::size_t>(i) + 1];
        double diag_acc = 0.0;
        for (Index k = beg; k < end; ++k) {
            const Index j = lo.cols[static_cast<std::size_t>(k)];
            if (j == i) {
                const double s =
                    lo.values[static_cast<std::size_t>(k)] + shift - diag_acc;
                if (!(s > 0.0))
                    throw NumericError("ic0: nonpositive pivot at row " +
                                       std::to_string(i));
                v[static_cast<std::size_t>(k)] = std::sqrt(s);
                break;
            }
            // Dot of rows i and j over shared columns below j.
            double s = lo.values[static_cast<std::size_t>(k)];
            Index pi = beg;
            Index pj = lo.row_ptr[static_cast<std::size_t>(j)];
            const Index pj_end = diag_pos[static_cast<std::size_t>(j)];
            while (pi < k && pj < pj_end) {
                const Index ci = lo.cols[static_cast<std::size_t>(pi)];
                const Index cj = lo.cols[static_cast<std::size_t>(pj)];
                if (ci == cj) {
                    s -= v[static_cast<std::size_t>(pi)] *
                         v[static_cast<std::size_t>(pj)];
                    ++pi;
                    ++pj;
                } else if (ci < cj) {
                    ++pi;
                } else {
                    ++pj;
                }
            }
            const double ljj =
                v[static_cast<std::size_t>(diag_pos[static_cast<std::size_t>(j)])];
            const double lij = s / ljj;
            v[static_cast<std::size_t>(k)] = lij;
            diag_acc += lij * lij;
        }
    }
    return v;
}

}  // namespace

const char* precond_kind_name(PrecondKind k) {
    switch (k) {
        case PrecondKind::None: return "none";
        case PrecondKind::Jacobi: return "jacobi";
        case PrecondKind::IC0: return "ic0";
        case PrecondKind::NIC: return "nic";
        case PrecondKind::GnnIC: return "gnnic";
    }
    return "unknown";
}

Preconditioner make_none() { return Preconditioner{}; }

Preconditioner jacobi(const SparseCoo& a) {
    const auto t0 = Clock::now();
    if (a.n_rows != a.n_cols) throw DimensionError("jacobi: matrix not square");
    Preconditioner p;
    p.kind = PrecondKind::Jacobi;
    p.diag.assign(static_cast<std::size_t>(a.n_rows), 0.0);
    for (std::size_t k = 0; k < a.values.size(); ++k)
        if (a.rows[k] == a.cols[k])
            p.diag[static_cast<std::size_t>(a.rows[k])] = a.values[k];
    for (Index i = 0; i < a.n_rows; ++i)
        if (!(p.diag[static_cast<std::size_t>(i)] > 0.0))
            throw NumericError("jacobi: nonpositive diagonal at row " +
                               std::to_string(i));
    p.p_time = seconds_since(t0);
    return p;
}

Preconditioner ic0(const SparseCoo& a) {
    const auto t0 = Clock::now();
    const auto lower = lower_triangle(a);
    const auto lo = coo_to_csr(lower);

    double max_diag = 0.0;
    std::vector<char> has_diag(static_cast<std::size_t>(a.n_rows), 0);
    for (std::size_t k = 0; k < lower.values.size(); ++k)
        if (lower.rows[k] == lower.cols[k]) {
            has_diag[static_cast<std::size_t>(lower.rows[k])] = 1;
            max_diag = std::max(max_diag, std::abs(lower.values[k]));
        }
    for (Index i = 0; i < a.n_rows; ++i)
        if (!has_diag[static_cast<std::size_t>(i)])
            throw FormatError("ic0: missing diagonal at row " + std::to_string(i));

    const double alpha0 = 1e-8 * max_diag;
    std::vector<double> values;
    for (int attempt = 0;; ++attempt) {
        const double shift = attempt == 0 ? 0.0 : alpha0 * double(1 << (attempt - 1));
        try {
            values = ic0_attempt(lo, shift);
            break;
        } catch (const NumericError&) {
            if (attempt == 3) throw;
        }
    }

    Preconditioner p;
    p.kind = PrecondKind::IC0;
    p.factor.matrix = lower;
    p.factor.matrix.values = std::move(values);
    p.p_time = seconds_since(t0);
    return p;
}

Preconditioner nic_predict(const GnnModel& model, const SparseCoo& a) {
    const auto t0 = Clock::now();
    const auto g = build_graph(a);
    Preconditioner p;
    p.kind = PrecondKind::NIC;
    p.factor = assemble_factor(g, gnn_forward(model, g));
    p.p_time = seconds_since(t0);
    return p;
}

Preconditioner gnn_ic_predict(const GnnModel& model, const SparseCoo& a) {
    const auto t0 = Clock::now();
    Preconditioner p = ic0(a);
    p.kind = PrecondKind::GnnIC;
    const auto g = build_graph(a);
    const auto out = gnn_forward(model, g);
    if (g.edge_rows != p.factor.matrix.rows || g.edge_cols != p.factor.matrix.cols)
        throw NumericError("gnn_ic: graph and factor patterns disagree");
    for (std::size_t k = 0; k < out.size(); ++k)
        p.factor.matrix.values[k] += out[k];
    p.factor.validate();
    p.p_time = seconds_since(t0);
    return p;
}

Preconditioner fill_in_dropout(const Preconditioner& p, double eps) {
    if (p.kind != PrecondKind::IC0 && p.kind != PrecondKind::NIC &&
        p.kind != PrecondKind::GnnIC)
        throw DimensionError("fill_in_dropout: preconditioner has no factor");
    if (eps < 0.0) throw DimensionError("fill_in_dropout: eps must be >= 0");
    const auto t0 = Clock::now();
    Preconditioner out;
    out.kind = p.kind;
    const auto& m = p.factor.matrix;
    out.factor.matrix.n_rows = m.n_rows;
    out.factor.matrix.n_cols = m.n_cols;
    for (std::size_t k = 0; k < m.values.size(); ++k) {
        const bool is_diag = m.rows[k] == m.cols[k];
        if (!is_diag && std::abs(m.values[k]) <= eps) continue;
        out.factor.matrix.rows.push_back(m.rows[k]);
        out.factor.matrix.cols.push_back(m.cols[k]);
        out.factor.matrix.values.push_back(m.values[k]);
    }
    out.p_time = p.p_time + seconds_since(t0);
    return out;
}

std::pair<ErrorStats, ErrorStats> factor_relative_error(const LowerFactor& pred,
                                                        const LowerFactor& ref) {
    const auto& a = pred.matrix;
    const auto& b = ref.matrix;
    if (a.rows != b.rows || a.cols != b.cols)
        throw DimensionError("factor_relative_error: patterns differ");
    ErrorStats diag, off;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        const double err = std::abs(a.values[k] - b.values[k]) / std::abs(b.values[k]);
        auto& s = a.rows[k] == a.cols[k] ? diag : off;
        s.values.push_back(err);
        s.max = std::max(s.max, err);
        s.mean += err;
    }
    if (!diag.values.empty()) diag.mean /= static_cast<double>(diag.values.size());
    if (!off.values.empty()) off.mean /= static_cast<double>(off.values.size());
    return {diag, off};
}

}  // namespace pclab
