#include "gnn.hpp"

#include <cmath>
#include <string>

#include "error.hpp"
#include "rng.hpp"

namespace pclab {

namespace {

ParamLayout build_layout() {
    ParamLayout ly{};
    std::size_t off = 0;
    ly.gain = off;
    off += kNodeFeatures;
    ly.bias = off;
    off += kNodeFeatures;
    const auto alloc_mlp = [&off](int in, int out) {
        ParamLayout::Mlp m{};
        m.in = in;
        m.out = out;
        m.w1 = off;
        off += static_cast<std::size_t>(kHidden) * in;
        m.b1 = off;
        off += kHidden;
        m.w2 = off;
        off += static_cast<std::size_t>(out) * kHidden;
        m.b2 = off;
        off += out;
        return m;
    };
    for (int b = 0; b < kBlocks; ++b) {
        ly.edge[b] = alloc_mlp(kEdgeIn[b], 1);
        ly.node[b] = alloc_mlp(kNodeIn[b], kHidden);
    }
    ly.total = off;
    return ly;
}

// y = W2 tanh(W1 x + b1) + b2 for one sample; hid keeps the post-tanh
// activations the backward pass needs.
void mlp_apply(const double* p, const ParamLayout::Mlp& m, const double* x,
               double* hid, double* y) {
    for (int h = 0; h < kHidden; ++h) {
        double acc = p[m.b1 + h];
        const double* row = p + m.w1 + static_cast<std::size_t>(h) * m.in;
        for (int i = 0; i < m.in; ++i) acc += row[i] * x[i];
        hid[h] = std::tanh(acc);
    }
    for (int o = 0; o < m.out; ++o) {
        double acc = p[m.b2 + o];
        const double* row = p + m.w2 + static_cast<std::size_t>(o) * kHidden;
        for (int h = 0; h < kHidden; ++h) acc += row[h] * hid[h];
        y[o] = acc;
    }
}

// Accumulates parameter gradients into gp and input gradients into dx.
void mlp_backward(const double* p, const ParamLayout::Mlp& m, const double* x,
                  const double* hid, const double* dy, double* gp, double* dx) {
    double dhid[kHidden] = {};
    for (int o = 0; o < m.out; ++o) {
        gp[m.b2 + o] += dy[o];
        const std::size_t row = m.w2 + static_cast<std::size_t>(o) * kHidden;
        for (int h = 0; h < kHidden; ++h) {
            gp[row + h] += dy[o] * hid[h];
            dhid[h] += dy[o] * p[row + h];
        }
    }
    for (int h = 0; h < kHidden; ++h) {
        const double dpre = dhid[h] * (1.0 - hid[h] * hid[h]);
        gp[m.b1 + h] += dpre;
        const std::size_t row = m.w1 + static_cast<std::size_t>(h) * m.in;
        for (int i = 0; i < m.in; ++i) {
            gp[row + i] += dpre * x[i];
            dx[i] += dpre * p[row + i];
        }
    }
}

void check_finite(const std::vector<double>& v, int block, const char* stage) {
    for (double x : v)
        if (!std::isfinite(x))
            throw NumericError(std::string("gnn forward: non-finite ") + stage +
                               " activation in block " + std::to_string(block + 1));
}

}  // namespace

const ParamLayout& param_layout() {
    static const ParamLayout ly = build_layout();
    return ly;
}

GnnModel GnnModel::init(std::uint64_t seed) {
    const auto& ly = param_layout();
    GnnModel m;
    m.params.assign(ly.total, 0.0);
    for (int c = 0; c < kNodeFeatures; ++c) m.params[ly.gain + c] = 1.0;
    Rng r(seed);
    const auto fill = [&](const ParamLayout::Mlp& mlp) {
        const double s1 = 1.0 / std::sqrt(static_cast<double>(mlp.in));
        const std::size_t n1 = static_cast<std::size_t>(kHidden) * mlp.in + kHidden;
        for (std::size_t k = 0; k < n1; ++k)
            m.params[mlp.w1 + k] = r.next_uniform(-s1, s1);
        const double s2 = 1.0 / std::sqrt(static_cast<double>(kHidden));
        const std::size_t n2 = static_cast<std::size_t>(mlp.out) * kHidden + mlp.out;
        for (std::size_t k = 0; k < n2; ++k)
            m.params[mlp.w2 + k] = r.next_uniform(-s2, s2);
    };
    for (int b = 0; b < kBlocks; ++b) {
        fill(ly.edge[b]);
        fill(ly.node[b]);
    }
    return m;
}

GnnModel GnnModel::zero() {
    const auto& ly = param_layout();
    GnnModel m;
    m.params.assign(ly.total, 0.0);
    for (int c = 0; c < kNodeFeatures; ++c) m.params[ly.gain + c] = 1.0;
    return m;
}

std::vector<double> gnn_forward(const GnnModel& model, const Graph& g,
                                GnnTape* tape) {
    const auto& ly = param_layout();
    if (model.params.size() != ly.total)
        throw DimensionError("gnn: parameter vector has wrong length");
    const auto n = static_cast<std::size_t>(g.n);
    const auto ne = static_cast<std::size_t>(g.n_edges());
    if (g.node_feat.size() != n * kNodeFeatures)
        throw DimensionError("gnn: node feature matrix has wrong shape");
    const double* p = model.params.data();

    GnnTape local;
    GnnTape& t = tape ? *tape : local;

    // Per-graph standardization of each input feature, then the affine.
    t.xhat.resize(n * kNodeFeatures);
    t.x[0].resize(n * kNodeFeatures);
    for (int c = 0; c < kNodeFeatures; ++c) {
        double mu = 0.0;
        for (std::size_t v = 0; v < n; ++v) mu += g.node_feat[v * kNodeFeatures + c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            const double d = g.node_feat[v * kNodeFeatures + c] - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / (std::sqrt(var) + 1e-6);
        for (std::size_t v = 0; v < n; ++v) {
            const double xh = (g.node_feat[v * kNodeFeatures + c] - mu) * inv;
            t.xhat[v * kNodeFeatures + c] = xh;
            t.x[0][v * kNodeFeatures + c] = p[ly.gain + c] * xh + p[ly.bias + c];
        }
    }

    // Incidence counts: off-diagonal edges touch both endpoints, the
    // diagonal self-edge one.
    t.cnt.assign(n, 0.0);
    for (std::size_t k = 0; k < ne; ++k) {
        t.cnt[static_cast<std::size_t>(g.edge_rows[k])] += 1.0;
        if (g.edge_rows[k] != g.edge_cols[k])
            t.cnt[static_cast<std::size_t>(g.edge_cols[k])] += 1.0;
    }

    for (int b = 0; b < kBlocks; ++b) {
        const int xw = b == 0 ? kNodeFeatures : kHidden;
        const std::vector<double>& X = t.x[b];
        const std::vector<double>* e_prev = b > 0 ? &t.e_out[b - 1] : nullptr;

        t.e_out[b].resize(ne);
        t.e_hid[b].resize(ne * kHidden);
        double in[1 + 2 * kNodeFeatures];
        for (std::size_t k = 0; k < ne; ++k) {
            int w = 0;
            if (e_prev) in[w++] = (*e_prev)[k];
            in[w++] = g.edge_feat[k];
            const auto i = static_cast<std::size_t>(g.edge_rows[k]);
            const auto j = static_cast<std::size_t>(g.edge_cols[k]);
            for (int c = 0; c < xw; ++c) in[w++] = X[i * xw + c];
            for (int c = 0; c < xw; ++c) in[w++] = X[j * xw + c];
            mlp_apply(p, ly.edge[b], in, &t.e_hid[b][k * kHidden], &t.e_out[b][k]);
        }
        check_finite(t.e_out[b], b, "edge");

        t.msum[b].assign(n, 0.0);
        for (std::size_t k = 0; k < ne; ++k) {
            t.msum[b][static_cast<std::size_t>(g.edge_rows[k])] += t.e_out[b][k];
            if (g.edge_rows[k] != g.edge_cols[k])
                t.msum[b][static_cast<std::size_t>(g.edge_cols[k])] += t.e_out[b][k];
        }
        t.mmean[b].resize(n);
        for (std::size_t v = 0; v < n; ++v)
            t.mmean[b][v] = t.cnt[v] > 0.0 ? t.msum[b][v] / t.cnt[v] : 0.0;

        t.x[b + 1].resize(n * kHidden);
        t.n_hid[b].resize(n * kHidden);
        double nin[kNodeFeatures + 2];
        for (std::size_t v = 0; v < n; ++v) {
            int w = 0;
            for (int c = 0; c < xw; ++c) nin[w++] = X[v * xw + c];
            nin[w++] = t.msum[b][v];
            nin[w++] = t.mmean[b][v];
            mlp_apply(p, ly.node[b], nin, &t.n_hid[b][v * kHidden],
                      &t.x[b + 1][v * kHidden]);
        }
        check_finite(t.x[b + 1], b, "node");
    }

    t.out = t.e_out[kBlocks - 1];
    for (std::size_t k = 0; k < ne; ++k)
        if (g.edge_rows[k] == g.edge_cols[k]) t.out[k] = std::exp(t.out[k] / 2.0);
    return t.out;
}

std::vector<double> gnn_backward(const GnnModel& model, const Graph& g,
                                 const GnnTape& tape,
                                 std::span<const double> upstream) {
    const auto& ly = param_layout();
    const auto n = static_cast<std::size_t>(g.n);
    const auto ne = static_cast<std::size_t>(g.n_edges());
    if (upstream.size() != ne)
        throw DimensionError("gnn_backward: upstream gradient length mismatch");
    if (tape.out.size() != ne || tape.x[0].size() != n * kNodeFeatures)
        throw DimensionError("gnn_backward: tape does not match the graph");
    const double* p = model.params.data();

    std::vector<double> gp(ly.total, 0.0);

    // Through the diagonal transform: d exp(o/2)/do = out/2.
    std::vector<double> de(ne);
    for (std::size_t k = 0; k < ne; ++k)
        de[k] = g.edge_rows[k] == g.edge_cols[k]
                    ? upstream[k] * tape.out[k] * 0.5
                    : upstream[k];

    // Gradient on the block's node output; the final node state feeds
    // nothing, so it starts at zero.
    std::vector<double> dX(n * kHidden, 0.0);

    for (int b = kBlocks - 1; b >= 0; --b) {
        const int xw = b == 0 ? kNodeFeatures : kHidden;
        const std::vector<double>& X = tape.x[b];
        std::vector<double> dXb(n * xw, 0.0);

        // Node updater first: it feeds message gradients back to edges.
        std::vector<double> dms(n, 0.0), dmm(n, 0.0);
        double nin[kNodeFeatures + 2], dnin[kNodeFeatures + 2];
        for (std::size_t v = 0; v < n; ++v) {
            int w = 0;
            for (int c = 0; c < xw; ++c) nin[w++] = X[v * xw + c];
            nin[w++] = tape.msum[b][v];
            nin[w++] = tape.mmean[b][v];
            for (int c = 0; c < xw + 2; ++c) dnin[c] = 0.0;
            mlp_backward(p, ly.node[b], nin, &tape.n_hid[b][v * kHidden],
                         &dX[v * kHidden], gp.data(), dnin);
            for (int c = 0; c < xw; ++c) dXb[v * xw + c] += dnin[c];
            dms[v] = dnin[xw];
            dmm[v] = dnin[xw + 1];
        }

        // Aggregation: every incident edge receives the sum slot's
        // gradient plus the mean slot's divided by the incidence count.
        for (std::size_t k = 0; k < ne; ++k) {
            const auto i = static_cast<std::size_t>(g.edge_rows[k]);
            const auto j = static_cast<std::size_t>(g.edge_cols[k]);
            de[k] += dms[i] + dmm[i] / tape.cnt[i];
            if (i != j) de[k] += dms[j] + dmm[j] / tape.cnt[j];
        }

        const std::vector<double>* e_prev = b > 0 ? &tape.e_out[b - 1] : nullptr;
        std::vector<double> de_prev;
        if (e_prev) de_prev.assign(ne, 0.0);
        double ein[1 + 2 * kNodeFeatures], dein[1 + 2 * kNodeFeatures];
        for (std::size_t k = 0; k < ne; ++k) {
            int w = 0;
            if (e_prev) ein[w++] = (*e_prev)[k];
            ein[w++] = g.edge_feat[k];
            const auto i = static_cast<std::size_t>(g.edge_rows[k]);
            const auto j = static_cast<std::size_t>(g.edge_cols[k]);
            for (int c = 0; c < xw; ++c) ein[w++] = X[i * xw + c];
            for (int c = 0; c < xw; ++c) ein[w++] = X[j * xw + c];
            for (int c = 0; c < w; ++c) dein[c] = 0.0;
            mlp_backward(p, ly.edge[b], ein, &tape.e_hid[b][k * kHidden], &de[k],
                         gp.data(), dein);
            int r = 0;
            if (e_prev) de_prev[k] += dein[r++];
            ++r;  // gradient on the original edge feature: input data
            for (int c = 0; c < xw; ++c) dXb[i * xw + c] += dein[r + c];
            for (int c = 0; c < xw; ++c) dXb[j * xw + c] += dein[r + xw + c];
        }

        if (e_prev) de = std::move(de_prev);
        dX = std::move(dXb);
    }

    // Norm affine: x0 = gain * xhat + bias.
    for (std::size_t v = 0; v < n; ++v)
        for (int c = 0; c < kNodeFeatures; ++c) {
            const double d = dX[v * kNodeFeatures + c];
            gp[ly.gain + c] += d * tape.xhat[v * kNodeFeatures + c];
            gp[ly.bias + c] += d;
        }
    return gp;
}

LowerFactor assemble_factor(const Graph& g, std::span<const double> edge_values) {
    if (static_cast<Index>(edge_values.size()) != g.n_edges())
        throw DimensionError("assemble_factor: edge value length mismatch");
    SparseCoo m;
    m.n_rows = m.n_cols = g.n;
    m.rows = g.edge_rows;
    m.cols = g.edge_cols;
    m.values.resize(edge_values.size());
    for (std::size_t k = 0; k < edge_values.size(); ++k)
        m.values[k] = edge_values[k] * g.sigma;
    LowerFactor f{std::move(m)};
    f.validate();
    return f;
}

nlohmann::json model_to_json(const GnnModel& m) {
    return nlohmann::json{{"format", "pclab-gnn"},
                          {"version", 1},
                          {"hidden", kHidden},
                          {"blocks", kBlocks},
                          {"node_features", kNodeFeatures},
                          {"params", m.params}};
}

GnnModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "pclab-gnn")
        throw FormatError("model checkpoint: missing pclab-gnn format tag");
    if (j.value("version", 0) != 1)
        throw FormatError("model checkpoint: unsupported version");
    if (j.value("hidden", 0) != kHidden || j.value("blocks", 0) != kBlocks ||
        j.value("node_features", 0) != kNodeFeatures)
        throw FormatError("model checkpoint: architecture mismatch");
    GnnModel m;
    m.params = j.at("params").get<std::vector<double>>();
    if (m.params.size() != param_layout().total)
        throw FormatError("model checkpoint: wrong parameter count");
    return m;
}

}  // namespace pclab
