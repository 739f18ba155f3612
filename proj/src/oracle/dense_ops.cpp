#include "blockformer/oracle/dense_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blockformer/common/error.hpp"

namespace blockformer::oracle {

namespace {

void same_dims(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols) {
        throw ShapeError(std::string(op) + ": " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols));
    }
}

DenseMatrix columns(const DenseMatrix& a, std::size_t begin, std::size_t count) {
    DenseMatrix out(a.rows, count);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < count; ++j) out(i, j) = a(i, begin + j);
    }
    return out;
}

}  // namespace

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw ShapeError("dense_matmul: inner dimensions differ");
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < a.cols; ++p) s += double(a(i, p)) * double(b(p, j));
            out(i, j) = static_cast<float>(s);
        }
    }
    return out;
}

DenseMatrix dense_transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    }
    return out;
}

DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b) {
    same_dims(a, b, "dense_add");
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = static_cast<float>(double(a.data[i]) + double(b.data[i]));
    }
    return out;
}

DenseMatrix dense_relu(const DenseMatrix& a) {
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::max(a.data[i], 0.0f);
    return out;
}

DenseMatrix dense_exp(const DenseMatrix& a) {
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = static_cast<float>(std::exp(double(a.data[i])));
    }
    return out;
}

DenseMatrix dense_scale(const DenseMatrix& a, double c) {
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = static_cast<float>(a.data[i] * c);
    return out;
}

DenseMatrix dense_add_bias(const DenseMatrix& a, std::span<const float> bias) {
    if (bias.size() != a.cols) throw ShapeError("dense_add_bias: bias length mismatch");
    DenseMatrix out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out(i, j) = static_cast<float>(double(a(i, j)) + double(bias[j]));
        }
    }
    return out;
}

DenseMatrix dense_softmax(const DenseMatrix& a) {
    DenseMatrix out(a.rows, a.cols);
    std::vector<double> e(a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double mx = a(i, 0);
        for (std::size_t j = 1; j < a.cols; ++j) mx = std::max(mx, double(a(i, j)));
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            e[j] = std::exp(double(a(i, j)) - mx);
            sum += e[j];
        }
        for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = static_cast<float>(e[j] / sum);
    }
    return out;
}

DenseMatrix dense_layer_norm(const DenseMatrix& a, double eps) {
    DenseMatrix out(a.rows, a.cols);
    const double n = static_cast<double>(a.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) mean += a(i, j);
        mean /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            const double d = a(i, j) - mean;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < a.cols; ++j) {
            out(i, j) = static_cast<float>((a(i, j) - mean) * inv);
        }
    }
    return out;
}

DenseMatrix dense_attention(const DenseMatrix& q, const DenseMatrix& k, const DenseMatrix& v) {
    if (q.cols != k.cols || k.rows != v.rows) throw ShapeError("dense_attention: shape mismatch");
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
    DenseMatrix out(q.rows, v.cols);
    std::vector<double> w(k.rows);
    for (std::size_t i = 0; i < q.rows; ++i) {
        double mx = -INFINITY;
        for (std::size_t t = 0; t < k.rows; ++t) {
            double s = 0.0;
            for (std::size_t p = 0; p < q.cols; ++p) s += double(q(i, p)) * double(k(t, p));
            w[t] = s * scale;
            mx = std::max(mx, w[t]);
        }
        double sum = 0.0;
        for (std::size_t t = 0; t < k.rows; ++t) {
            w[t] = std::exp(w[t] - mx);
            sum += w[t];
        }
        for (std::size_t j = 0; j < v.cols; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k.rows; ++t) acc += (w[t] / sum) * double(v(t, j));
            out(i, j) = static_cast<float>(acc);
        }
    }
    return out;
}

DenseMatrix dense_mha(const DenseMatrix& x, const DenseBlockWeights& w, const ModelConfig& cfg) {
    const DenseMatrix q = dense_matmul(x, w.wq);
    const DenseMatrix k = dense_matmul(x, w.wk);
    const DenseMatrix v = dense_matmul(x, w.wv);
    const std::size_t hd = cfg.head_dim();
    DenseMatrix out(x.rows, cfg.embed_dim);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        const DenseMatrix head = dense_attention(columns(q, h * hd, hd), columns(k, h * hd, hd),
                                                 columns(v, h * hd, hd));
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t j = 0; j < hd; ++j) out(i, h * hd + j) = head(i, j);
        }
    }
    if (cfg.use_output_projection) {
        if (!w.wo) throw ShapeError("dense_mha: output projection enabled but Wo missing");
        out = dense_matmul(out, *w.wo);
    }
    return out;
}

DenseMatrix dense_ffn(const DenseMatrix& x, const DenseBlockWeights& w, const ModelConfig& cfg) {
    const DenseMatrix h = dense_relu(dense_add_bias(dense_matmul(x, w.w0), w.b0));
    DenseMatrix out = dense_add_bias(dense_matmul(h, w.w1), w.b1);
    return cfg.final_ffn_relu ? dense_relu(out) : out;
}

DenseMatrix dense_encoder_block(const DenseMatrix& x, const DenseBlockWeights& w,
                                const ModelConfig& cfg) {
    const double eps = cfg.layernorm_eps;
    if (cfg.netsdb_dataflow) {
        const DenseMatrix n = dense_layer_norm(dense_mha(x, w, cfg), eps);
        return dense_add(n, dense_ffn(n, w, cfg));
    }
    const DenseMatrix u = dense_add(x, dense_mha(dense_layer_norm(x, eps), w, cfg));
    return dense_add(u, dense_ffn(dense_layer_norm(u, eps), w, cfg));
}

std::vector<DenseMatrix> dense_encoder_forward(const std::vector<DenseMatrix>& batch,
                                               const DenseWeights& w, const ModelConfig& cfg) {
    if (w.blocks.size() < cfg.n_blocks) throw ShapeError("dense_encoder_forward: missing weights");
    std::vector<DenseMatrix> out;
    out.reserve(batch.size());
    for (const auto& item : batch) {
        DenseMatrix x = item;
        for (std::size_t b = 0; b < cfg.n_blocks; ++b) x = dense_encoder_block(x, w.blocks[b], cfg);
        out.push_back(std::move(x));
    }
    return out;
}

CompareMetrics compare(const DenseMatrix& a, const DenseMatrix& b) {
    same_dims(a, b, "compare");
    CompareMetrics m;
    if (a.data.empty()) return m;
    double total = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double x = a.data[i];
        const double y = b.data[i];
        const double d = std::abs(x - y);
        m.max_abs = std::max(m.max_abs, d);
        m.max_rel = std::max(m.max_rel, d / std::max({std::abs(x), std::abs(y), 1e-12}));
        total += d;
    }
    m.mean_abs = total / static_cast<double>(a.data.size());
    return m;
}

}  // namespace blockformer::oracle
