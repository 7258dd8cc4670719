#include "ghem/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ghem/csv.hpp"

namespace ghem {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLnEps = 1e-5;

MatrixXd xavier(int rows, int cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

// Row-wise layer norm; caches normalized rows and inverse stddev for the
// backward pass.
struct LayerNormCache {
    MatrixXd x_hat;
    VectorXd inv_std;
};

MatrixXd layer_norm(const MatrixXd& x, const VectorXd& gain, const VectorXd& bias,
                    LayerNormCache& cache) {
    const int rows = static_cast<int>(x.rows());
    const int cols = static_cast<int>(x.cols());
    cache.x_hat.resize(rows, cols);
    cache.inv_std.resize(rows);
    MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std[r] = inv;
        cache.x_hat.row(r) = (x.row(r).array() - mean) * inv;
        out.row(r) = cache.x_hat.row(r).cwiseProduct(gain.transpose()) + bias.transpose();
    }
    return out;
}

MatrixXd layer_norm_backward(const MatrixXd& dout, const VectorXd& gain,
                             const LayerNormCache& cache, VectorXd& dgain, VectorXd& dbias) {
    const int rows = static_cast<int>(dout.rows());
    const int cols = static_cast<int>(dout.cols());
    MatrixXd dx(rows, cols);
    for (int r = 0; r < rows; ++r) {
        dgain += dout.row(r).cwiseProduct(cache.x_hat.row(r)).transpose();
        dbias += dout.row(r).transpose();
        const Eigen::RowVectorXd dxhat = dout.row(r).cwiseProduct(gain.transpose());
        const double mean_dxhat = dxhat.mean();
        const double mean_dxhat_xhat = dxhat.cwiseProduct(cache.x_hat.row(r)).mean();
        dx.row(r) = cache.inv_std[r] *
                    (dxhat.array() - mean_dxhat -
                     cache.x_hat.row(r).array() * mean_dxhat_xhat);
    }
    return dx;
}

// Inverted dropout: mask entries are 0 or 1/(1-p).
MatrixXd dropout_mask(int rows, int cols, double p, std::mt19937_64* rng) {
    if (rng == nullptr || p <= 0.0) return MatrixXd::Constant(rows, cols, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatrixXd m(rows, cols);
    const double keep = 1.0 / (1.0 - p);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(*rng) < p ? 0.0 : keep;
    return m;
}

struct LayerCache {
    MatrixXd s_in;          // block input
    MatrixXd q, k, v;       // projections
    std::vector<MatrixXd> attn;  // per-head softmax output, T x T
    MatrixXd concat;        // attention output before the out-projection
    MatrixXd attn_mask;     // dropout
    MatrixXd ln1_in;
    LayerNormCache ln1;
    MatrixXd s_mid;         // after first layer norm
    MatrixXd ff_pre;        // before ReLU
    MatrixXd ff_act;        // after ReLU
    MatrixXd ff_mask;       // dropout
    MatrixXd ln2_in;
    LayerNormCache ln2;
    MatrixXd s_out;
};

struct SampleCache {
    MatrixXd x;        // raw input window
    MatrixXd embed_mask;
    MatrixXd s0;       // embedded + positional encoding (+ dropout)
    std::vector<LayerCache> layers;
    VectorXd flat;
    VectorXd output;
};

}  // namespace

// Grants the free functions access to the private weights.
struct TransformerForward {
    static SampleCache forward(const TransformerModel& m, const MatrixXd& window,
                               std::mt19937_64* rng) {
        const auto& cfg = m.config_;
        if (window.rows() != cfg.window || window.cols() != cfg.input_features)
            throw std::invalid_argument(
                "window shape " + std::to_string(window.rows()) + "x" +
                std::to_string(window.cols()) + " does not match the model (" +
                std::to_string(cfg.window) + "x" + std::to_string(cfg.input_features) + ")");
        SampleCache c;
        c.x = window;
        MatrixXd s = window * m.embed_w_;
        s.rowwise() += m.embed_b_.transpose();
        s += m.pos_enc_;
        c.embed_mask = dropout_mask(cfg.window, cfg.model_dim, cfg.dropout, rng);
        s = s.cwiseProduct(c.embed_mask);
        c.s0 = s;

        const int dk = cfg.model_dim / cfg.heads;
        const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
        c.layers.resize(cfg.layers);
        for (int l = 0; l < cfg.layers; ++l) {
            const auto& L = m.layers_[l];
            LayerCache& lc = c.layers[l];
            lc.s_in = s;
            lc.q = s * L.wq;
            lc.q.rowwise() += L.bq.transpose();
            lc.k = s * L.wk;
            lc.k.rowwise() += L.bk.transpose();
            lc.v = s * L.wv;
            lc.v.rowwise() += L.bv.transpose();

            lc.concat.resize(cfg.window, cfg.model_dim);
            lc.attn.resize(cfg.heads);
            for (int h = 0; h < cfg.heads; ++h) {
                const auto qh = lc.q.middleCols(h * dk, dk);
                const auto kh = lc.k.middleCols(h * dk, dk);
                const auto vh = lc.v.middleCols(h * dk, dk);
                MatrixXd scores = qh * kh.transpose() * scale;
                // Row-wise softmax with max subtraction.
                for (int r = 0; r < scores.rows(); ++r) {
                    const double mx = scores.row(r).maxCoeff();
                    scores.row(r) = (scores.row(r).array() - mx).exp();
                    scores.row(r) /= scores.row(r).sum();
                }
                lc.attn[h] = scores;
                lc.concat.middleCols(h * dk, dk) = scores * vh;
            }
            MatrixXd attn_out = lc.concat * L.wo;
            attn_out.rowwise() += L.bo.transpose();
            lc.attn_mask = dropout_mask(cfg.window, cfg.model_dim, cfg.dropout, rng);
            lc.ln1_in = lc.s_in + attn_out.cwiseProduct(lc.attn_mask);
            lc.s_mid = layer_norm(lc.ln1_in, L.ln1_gain, L.ln1_bias, lc.ln1);

            lc.ff_pre = lc.s_mid * L.w1;
            lc.ff_pre.rowwise() += L.b1.transpose();
            lc.ff_act = lc.ff_pre.cwiseMax(0.0);
            MatrixXd ff_out = lc.ff_act * L.w2;
            ff_out.rowwise() += L.b2.transpose();
            lc.ff_mask = dropout_mask(cfg.window, cfg.model_dim, cfg.dropout, rng);
            lc.ln2_in = lc.s_mid + ff_out.cwiseProduct(lc.ff_mask);
            lc.s_out = layer_norm(lc.ln2_in, L.ln2_gain, L.ln2_bias, lc.ln2);
            s = lc.s_out;
        }

        c.flat.resize(cfg.window * cfg.model_dim);
        for (int t = 0; t < cfg.window; ++t)
            c.flat.segment(t * cfg.model_dim, cfg.model_dim) = s.row(t).transpose();
        c.output = m.head_w_.transpose() * c.flat + m.head_b_;
        return c;
    }
};

void AttentionModelConfig::check_valid() const {
    if (layers <= 0 || heads <= 0 || model_dim <= 0 || feedforward_dim <= 0 || window <= 0 ||
        horizon <= 0 || input_features <= 0)
        throw std::invalid_argument("model dimensions must be positive");
    if (model_dim % heads != 0)
        throw std::invalid_argument("model_dim must be divisible by the head count");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout outside [0,1)");
}

std::size_t TransformerModel::ParamRef::size() const {
    return matrix ? static_cast<std::size_t>(matrix->size())
                  : static_cast<std::size_t>(vector->size());
}

double* TransformerModel::ParamRef::data() { return matrix ? matrix->data() : vector->data(); }

MatrixXd TransformerModel::positional_encoding(int window, int dim) {
    MatrixXd pe(window, dim);
    for (int t = 0; t < window; ++t)
        for (int d = 0; d < dim; ++d) {
            const double rate = std::pow(10000.0, -2.0 * (d / 2) / static_cast<double>(dim));
            pe(t, d) = (d % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
        }
    return pe;
}

TransformerModel::TransformerModel(const AttentionModelConfig& config, std::uint64_t seed)
    : config_(config) {
    config_.check_valid();
    std::mt19937_64 rng(seed);
    const int d = config_.model_dim;
    embed_w_ = xavier(config_.input_features, d, rng);
    embed_b_ = VectorXd::Zero(d);
    layers_.resize(config_.layers);
    for (auto& L : layers_) {
        L.wq = xavier(d, d, rng);
        L.wk = xavier(d, d, rng);
        L.wv = xavier(d, d, rng);
        L.wo = xavier(d, d, rng);
        L.bq = VectorXd::Zero(d);
        L.bk = VectorXd::Zero(d);
        L.bv = VectorXd::Zero(d);
        L.bo = VectorXd::Zero(d);
        L.ln1_gain = VectorXd::Ones(d);
        L.ln1_bias = VectorXd::Zero(d);
        L.w1 = xavier(d, config_.feedforward_dim, rng);
        L.b1 = VectorXd::Zero(config_.feedforward_dim);
        L.w2 = xavier(config_.feedforward_dim, d, rng);
        L.b2 = VectorXd::Zero(d);
        L.ln2_gain = VectorXd::Ones(d);
        L.ln2_bias = VectorXd::Zero(d);
    }
    head_w_ = xavier(config_.window * d, config_.horizon, rng);
    head_b_ = VectorXd::Zero(config_.horizon);
    pos_enc_ = positional_encoding(config_.window, d);
}

VectorXd TransformerModel::predict(const MatrixXd& window) const {
    return TransformerForward::forward(*this, window, nullptr).output;
}

std::vector<TransformerModel::ParamRef> TransformerModel::parameters() {
    std::vector<ParamRef> out;
    out.push_back({"embed.w", &embed_w_, nullptr});
    out.push_back({"embed.b", nullptr, &embed_b_});
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& L = layers_[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        out.push_back({p + "attn.wq", &L.wq, nullptr});
        out.push_back({p + "attn.bq", nullptr, &L.bq});
        out.push_back({p + "attn.wk", &L.wk, nullptr});
        out.push_back({p + "attn.bk", nullptr, &L.bk});
        out.push_back({p + "attn.wv", &L.wv, nullptr});
        out.push_back({p + "attn.bv", nullptr, &L.bv});
        out.push_back({p + "attn.wo", &L.wo, nullptr});
        out.push_back({p + "attn.bo", nullptr, &L.bo});
        out.push_back({p + "ln1.gain", nullptr, &L.ln1_gain});
        out.push_back({p + "ln1.bias", nullptr, &L.ln1_bias});
        out.push_back({p + "ff.w1", &L.w1, nullptr});
        out.push_back({p + "ff.b1", nullptr, &L.b1});
        out.push_back({p + "ff.w2", &L.w2, nullptr});
        out.push_back({p + "ff.b2", nullptr, &L.b2});
        out.push_back({p + "ln2.gain", nullptr, &L.ln2_gain});
        out.push_back({p + "ln2.bias", nullptr, &L.ln2_bias});
    }
    out.push_back({"head.w", &head_w_, nullptr});
    out.push_back({"head.b", nullptr, &head_b_});
    return out;
}

std::vector<MatrixXd> TransformerModel::snapshot_parameters() const {
    std::vector<MatrixXd> out;
    auto refs = const_cast<TransformerModel*>(this)->parameters();
    out.reserve(refs.size());
    for (auto& r : refs) {
        if (r.matrix)
            out.push_back(*r.matrix);
        else
            out.push_back(r.vector->transpose());
    }
    return out;
}

void TransformerModel::restore_parameters(const std::vector<MatrixXd>& snapshot) {
    auto refs = parameters();
    if (snapshot.size() != refs.size())
        throw std::invalid_argument("parameter snapshot does not match the model");
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].matrix)
            *refs[i].matrix = snapshot[i];
        else
            *refs[i].vector = snapshot[i].transpose();
    }
}

double TransformerModel::loss_and_gradients(const std::vector<MatrixXd>& windows,
                                            const std::vector<VectorXd>& targets,
                                            std::vector<MatrixXd>& grads,
                                            std::mt19937_64* dropout_rng) const {
    if (windows.size() != targets.size() || windows.empty())
        throw std::invalid_argument("batch windows/targets mismatch");
    auto self = const_cast<TransformerModel*>(this);
    auto refs = self->parameters();
    grads.assign(refs.size(), MatrixXd());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].matrix)
            grads[i] = MatrixXd::Zero(refs[i].matrix->rows(), refs[i].matrix->cols());
        else
            grads[i] = MatrixXd::Zero(1, refs[i].vector->size());
    }
    // Named handles into the flat gradient list, in parameters() order.
    std::size_t gi = 0;
    MatrixXd& g_embed_w = grads[gi++];
    MatrixXd& g_embed_b = grads[gi++];
    struct LayerGrads {
        MatrixXd *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
        MatrixXd *ln1g, *ln1b, *w1, *b1, *w2, *b2, *ln2g, *ln2b;
    };
    std::vector<LayerGrads> lg(config_.layers);
    for (int l = 0; l < config_.layers; ++l) {
        lg[l].wq = &grads[gi++];
        lg[l].bq = &grads[gi++];
        lg[l].wk = &grads[gi++];
        lg[l].bk = &grads[gi++];
        lg[l].wv = &grads[gi++];
        lg[l].bv = &grads[gi++];
        lg[l].wo = &grads[gi++];
        lg[l].bo = &grads[gi++];
        lg[l].ln1g = &grads[gi++];
        lg[l].ln1b = &grads[gi++];
        lg[l].w1 = &grads[gi++];
        lg[l].b1 = &grads[gi++];
        lg[l].w2 = &grads[gi++];
        lg[l].b2 = &grads[gi++];
        lg[l].ln2g = &grads[gi++];
        lg[l].ln2b = &grads[gi++];
    }
    MatrixXd& g_head_w = grads[gi++];
    MatrixXd& g_head_b = grads[gi++];

    const int dk = config_.model_dim / config_.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
    const double norm = 1.0 / (static_cast<double>(windows.size()) * config_.horizon);

    double loss = 0.0;
    for (std::size_t s = 0; s < windows.size(); ++s) {
        SampleCache c = TransformerForward::forward(*this, windows[s], dropout_rng);
        if (targets[s].size() != config_.horizon)
            throw std::invalid_argument("target length does not match the horizon");
        const VectorXd err = c.output - targets[s];
        loss += err.squaredNorm() * norm;

        const VectorXd dy = 2.0 * norm * err;
        g_head_w += c.flat * dy.transpose();
        g_head_b += dy.transpose();
        const VectorXd dflat = head_w_ * dy;
        MatrixXd ds(config_.window, config_.model_dim);
        for (int t = 0; t < config_.window; ++t)
            ds.row(t) = dflat.segment(t * config_.model_dim, config_.model_dim).transpose();

        for (int l = config_.layers - 1; l >= 0; --l) {
            const auto& L = layers_[l];
            const LayerCache& lc = c.layers[l];
            VectorXd dg = VectorXd::Zero(config_.model_dim);
            VectorXd db = VectorXd::Zero(config_.model_dim);
            MatrixXd dln2 = layer_norm_backward(ds, L.ln2_gain, lc.ln2, dg, db);
            *lg[l].ln2g += dg.transpose();
            *lg[l].ln2b += db.transpose();

            // Residual split: dln2 flows to s_mid and to the feedforward path.
            const MatrixXd dff_out = dln2.cwiseProduct(lc.ff_mask);
            *lg[l].w2 += lc.ff_act.transpose() * dff_out;
            *lg[l].b2 += dff_out.colwise().sum();
            MatrixXd dff_act = dff_out * L.w2.transpose();
            const MatrixXd relu_gate = (lc.ff_pre.array() > 0.0).cast<double>();
            dff_act = dff_act.cwiseProduct(relu_gate);
            *lg[l].w1 += lc.s_mid.transpose() * dff_act;
            *lg[l].b1 += dff_act.colwise().sum();
            MatrixXd ds_mid = dln2 + dff_act * L.w1.transpose();

            dg.setZero();
            db.setZero();
            MatrixXd dln1 = layer_norm_backward(ds_mid, L.ln1_gain, lc.ln1, dg, db);
            *lg[l].ln1g += dg.transpose();
            *lg[l].ln1b += db.transpose();

            const MatrixXd dattn_out = dln1.cwiseProduct(lc.attn_mask);
            *lg[l].wo += lc.concat.transpose() * dattn_out;
            *lg[l].bo += dattn_out.colwise().sum();
            const MatrixXd dconcat = dattn_out * L.wo.transpose();

            MatrixXd dq = MatrixXd::Zero(config_.window, config_.model_dim);
            MatrixXd dkm = MatrixXd::Zero(config_.window, config_.model_dim);
            MatrixXd dv = MatrixXd::Zero(config_.window, config_.model_dim);
            for (int h = 0; h < config_.heads; ++h) {
                const auto qh = lc.q.middleCols(h * dk, dk);
                const auto kh = lc.k.middleCols(h * dk, dk);
                const auto vh = lc.v.middleCols(h * dk, dk);
                const MatrixXd& a = lc.attn[h];
                const auto dov = dconcat.middleCols(h * dk, dk);
                MatrixXd da = dov * vh.transpose();
                dv.middleCols(h * dk, dk) = a.transpose() * dov;
                // Softmax backward, row by row.
                MatrixXd dscore(a.rows(), a.cols());
                for (int r = 0; r < a.rows(); ++r) {
                    const double dot = da.row(r).cwiseProduct(a.row(r)).sum();
                    dscore.row(r) = a.row(r).array() * (da.row(r).array() - dot);
                }
                dq.middleCols(h * dk, dk) = dscore * kh * scale;
                dkm.middleCols(h * dk, dk) = dscore.transpose() * qh * scale;
            }

            *lg[l].wq += lc.s_in.transpose() * dq;
            *lg[l].bq += dq.colwise().sum();
            *lg[l].wk += lc.s_in.transpose() * dkm;
            *lg[l].bk += dkm.colwise().sum();
            *lg[l].wv += lc.s_in.transpose() * dv;
            *lg[l].bv += dv.colwise().sum();

            ds = dln1 + dq * L.wq.transpose() + dkm * L.wk.transpose() + dv * L.wv.transpose();
        }

        const MatrixXd ds0 = ds.cwiseProduct(c.embed_mask);
        g_embed_w += c.x.transpose() * ds0;
        g_embed_b += ds0.colwise().sum();
    }
    return loss;
}

void TransformerModel::serialize_params(std::ostream& out) const {
    auto refs = const_cast<TransformerModel*>(this)->parameters();
    for (auto& r : refs) {
        const double* p = r.matrix ? r.matrix->data() : r.vector->data();
        out.write(reinterpret_cast<const char*>(p),
                  static_cast<std::streamsize>(r.size() * sizeof(double)));
    }
}

void TransformerModel::deserialize_params(std::istream& in) {
    auto refs = parameters();
    for (auto& r : refs) {
        in.read(reinterpret_cast<char*>(r.data()),
                static_cast<std::streamsize>(r.size() * sizeof(double)));
        if (!in) throw DataError("model checkpoint truncated");
    }
}

TrainResult train_model(TransformerModel& model, const std::vector<TrainingSample>& train_set,
                        const std::vector<TrainingSample>& val_set,
                        const OptimizerConfig& opt, double target_mean, double target_std) {
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("training requires non-empty train and validation splits");

    auto refs = model.parameters();
    std::vector<MatrixXd> m1(refs.size()), m2(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const int rows = refs[i].matrix ? static_cast<int>(refs[i].matrix->rows()) : 1;
        const int cols = refs[i].matrix ? static_cast<int>(refs[i].matrix->cols())
                                        : static_cast<int>(refs[i].vector->size());
        m1[i] = MatrixXd::Zero(rows, cols);
        m2[i] = MatrixXd::Zero(rows, cols);
    }

    std::mt19937_64 shuffle_rng(opt.seed);
    std::mt19937_64 dropout_rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    const auto evaluate = [&](const std::vector<TrainingSample>& set, double& rmse,
                              double& mae) {
        double se = 0.0, ae = 0.0;
        std::size_t count = 0;
        for (const auto& sample : set) {
            const VectorXd pred = model.predict(sample.window);
            for (int i = 0; i < pred.size(); ++i) {
                const double diff = (pred[i] - sample.target[i]) * target_std;
                se += diff * diff;
                ae += std::abs(diff);
                ++count;
            }
        }
        (void)target_mean;  // shifts cancel in the error
        rmse = std::sqrt(se / static_cast<double>(count));
        mae = ae / static_cast<double>(count);
    };

    TrainResult result;
    std::vector<MatrixXd> best_params = model.snapshot_parameters();
    double best_rmse = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    long step = 0;
    std::vector<MatrixXd> grads;

    for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            std::vector<MatrixXd> windows;
            std::vector<VectorXd> targets;
            windows.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                windows.push_back(train_set[order[i]].window);
                targets.push_back(train_set[order[i]].target);
            }
            const double loss = model.loss_and_gradients(
                windows, targets, grads, model.config().dropout > 0 ? &dropout_rng : nullptr);
            if (!std::isfinite(loss))
                throw SolverError("training diverged (loss is not finite) at epoch " +
                                  std::to_string(epoch) + ", batch starting at sample " +
                                  std::to_string(start));
            epoch_loss += loss * static_cast<double>(end - start);
            seen += end - start;

            ++step;
            const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < refs.size(); ++i) {
                double* theta = refs[i].data();
                const double* g = grads[i].data();
                double* mo = m1[i].data();
                double* vo = m2[i].data();
                const std::size_t n = refs[i].size();
                // Layer norms and biases are exempt from weight decay.
                const bool decay = refs[i].matrix != nullptr;
                for (std::size_t k = 0; k < n; ++k) {
                    mo[k] = opt.beta1 * mo[k] + (1.0 - opt.beta1) * g[k];
                    vo[k] = opt.beta2 * vo[k] + (1.0 - opt.beta2) * g[k] * g[k];
                    const double mhat = mo[k] / bc1;
                    const double vhat = vo[k] / bc2;
                    theta[k] -= opt.learning_rate *
                                (mhat / (std::sqrt(vhat) + opt.epsilon) +
                                 (decay ? opt.weight_decay * theta[k] : 0.0));
                }
            }
        }

        EpochMetrics metrics;
        metrics.epoch = epoch;
        metrics.train_mse = epoch_loss / static_cast<double>(seen);
        evaluate(val_set, metrics.val_rmse, metrics.val_mae);
        result.history.push_back(metrics);

        if (metrics.val_rmse < best_rmse - 1e-12) {
            best_rmse = metrics.val_rmse;
            best_epoch = epoch;
            best_params = model.snapshot_parameters();
        } else if (epoch - best_epoch >= opt.patience) {
            break;
        }
    }

    model.restore_parameters(best_params);
    result.best_epoch = best_epoch;
    result.best_val_rmse = best_rmse;
    return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& history, const std::string& path) {
    CsvWriter w(path);
    w.write_row({"epoch", "train_mse", "val_rmse", "val_mae"});
    for (const auto& m : history)
        w.write_row({std::to_string(m.epoch), fmt_double(m.train_mse, 8),
                     fmt_double(m.val_rmse, 8), fmt_double(m.val_mae, 8)});
}

}  // namespace ghem
