#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace pclab {

std::vector<double> node_features(const SparseCoo& a) {
    if (a.n_rows != a.n_cols)
        throw DimensionError("node_features: matrix not square");
    const auto n = static_cast<std::size_t>(a.n_rows);

    std::vector<double> deg(n, 0.0);
    std::vector<double> diag(n, 0.0);
    std::vector<double> offdiag_sum(n, 0.0);
    std::vector<double> offdiag_max(n, 0.0);
    std::vector<std::vector<Index>> nbrs(n);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        const auto i = static_cast<std::size_t>(a.rows[k]);
        const auto j = a.cols[k];
        if (a.rows[k] == j) {
            diag[i] = std::abs(a.values[k]);
            continue;
        }
        deg[i] += 1.0;
        offdiag_sum[i] += std::abs(a.values[k]);
        offdiag_max[i] = std::max(offdiag_max[i], std::abs(a.values[k]));
        nbrs[i].push_back(j);
    }

    std::vector<double> f(n * kNodeFeatures, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = f.data() + i * kNodeFeatures;
        row[0] = deg[i];

        if (!nbrs[i].empty()) {
            double mx = 0.0, mn = 1e300, mean = 0.0;
            for (Index j : nbrs[i]) {
                const double d = deg[static_cast<std::size_t>(j)];
                mx = std::max(mx, d);
                mn = std::min(mn, d);
                mean += d;
            }
            mean /= static_cast<double>(nbrs[i].size());
            double var = 0.0;
            for (Index j : nbrs[i]) {
                const double d = deg[static_cast<std::size_t>(j)];
                var += (d - mean) * (d - mean);
            }
            var /= static_cast<double>(nbrs[i].size());
            row[1] = mx;
            row[2] = mn;
            row[3] = mean;
            row[4] = var;
        }

        const double denom = diag[i] + offdiag_sum[i];
        row[5] = denom > 0.0 ? diag[i] / denom : 0.0;
        row[6] = offdiag_max[i] > 0.0
                     ? std::clamp(diag[i] / offdiag_max[i], 0.0, 100.0)
                     : 100.0;

        const double angle =
            2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        row[7] = std::sin(angle);
        row[8] = std::cos(angle);
    }
    return f;
}

Graph build_graph(const SparseCoo& a) {
    const auto [lower, sigma] = scale_by_std(lower_triangle(a));
    Graph g;
    g.n = a.n_rows;
    g.edge_rows = lower.rows;
    g.edge_cols = lower.cols;
    g.edge_feat = lower.values;
    g.node_feat = node_features(a);
    g.sigma = sigma;
    return g;
}

}  // namespace pclab
