#include "sayt/neural.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sayt/error.hpp"
#include "sayt/rng.hpp"

namespace sayt {

namespace {

Vector sigmoid(Vector const &z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct BranchCache {
    std::vector<LstmStepCache> fwd;
    std::vector<LstmStepCache> bwd;
    Vector u;
    Vector pre;  // W1 u + b1
    Vector v;    // relu(pre)
};

void run_direction(LstmWeights const &w, std::vector<Vector> const &xs, bool reverse,
                   std::vector<LstmStepCache> &steps)
{
    Eigen::Index h = w.hidden();
    Vector hs = Vector::Zero(h);
    Vector cs = Vector::Zero(h);
    steps.clear();
    steps.reserve(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        auto const &x = reverse ? xs[xs.size() - 1 - k] : xs[k];
        steps.push_back(lstm_step_cached(w, x, hs, cs));
        hs = steps.back().h;
        cs = steps.back().c;
    }
}

void backprop_direction(LstmWeights const &w, std::vector<LstmStepCache> const &steps, Vector const &dh_final,
                        LstmWeights &grad)
{
    Vector dh = dh_final;
    Vector dc = Vector::Zero(w.hidden());
    Vector dh_prev, dc_prev;
    for (std::size_t k = steps.size(); k-- > 0;) {
        lstm_step_backward(w, steps[k], dh, dc, grad, dh_prev, dc_prev);
        dh.swap(dh_prev);
        dc.swap(dc_prev);
    }
}

std::vector<Vector> embed_tokens(QNetworkParams const &params, Tokens const &tokens)
{
    std::vector<Vector> xs;
    xs.reserve(tokens.size());
    auto d = params.weights.dims.d;
    for (auto const &tok : tokens) {
        Vector const *v = params.embedding ? params.embedding->find(tok) : nullptr;
        xs.push_back(v != nullptr ? *v : Vector::Zero(d));
    }
    return xs;
}

Vector encode_branch(QNetworkParams const &params, Tokens const &tokens, BranchCache &cache)
{
    auto const &w = params.weights;
    Eigen::Index h = w.dims.hidden;
    cache.u = Vector::Zero(2 * h);
    if (!tokens.empty()) {
        auto xs = embed_tokens(params, tokens);
        run_direction(w.lstm_fwd, xs, false, cache.fwd);
        run_direction(w.lstm_bwd, xs, true, cache.bwd);
        cache.u.head(h) = cache.fwd.back().h;
        cache.u.tail(h) = cache.bwd.back().h;
    } else {
        cache.fwd.clear();
        cache.bwd.clear();
    }
    cache.pre = w.w1 * cache.u + w.b1;
    cache.v = cache.pre.cwiseMax(0.0);
    return cache.v;
}

struct ForwardCache {
    BranchCache left;
    BranchCache right;
    Vector joint;
    QValues q{};
};

void forward_cached(QNetworkParams const &params, Tokens const &q1, Tokens const &q2, ForwardCache &cache)
{
    auto const &w = params.weights;
    Eigen::Index p = w.dims.proj;
    encode_branch(params, q1, cache.left);
    encode_branch(params, q2, cache.right);
    cache.joint.resize(2 * p);
    cache.joint.head(p) = cache.left.v;
    cache.joint.tail(p) = cache.right.v;
    Vector r = w.w2 * cache.joint + w.b2;
    cache.q = {r(0), r(1)};
}

void backprop_branch(QNetworkWeights const &w, BranchCache const &cache, Vector const &dv, QNetworkWeights &g)
{
    Vector dpre = (cache.pre.array() > 0.0).select(dv, 0.0);
    g.w1.noalias() += dpre * cache.u.transpose();
    g.b1 += dpre;
    if (cache.fwd.empty()) {
        return;
    }
    Vector du = w.w1.transpose() * dpre;
    Eigen::Index h = w.dims.hidden;
    backprop_direction(w.lstm_fwd, cache.fwd, du.head(h), g.lstm_fwd);
    backprop_direction(w.lstm_bwd, cache.bwd, du.tail(h), g.lstm_bwd);
}

void fill_uniform(Matrix &m, double bound, std::mt19937_64 &rng)
{
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = uniform(rng, -bound, bound);
        }
    }
}

}  // namespace

LstmWeights LstmWeights::zeros(Eigen::Index input, Eigen::Index hidden)
{
    return {Matrix::Zero(4 * hidden, input), Matrix::Zero(4 * hidden, hidden), Vector::Zero(4 * hidden)};
}

LstmStepCache lstm_step_cached(LstmWeights const &w, Vector const &x, Vector const &h, Vector const &c)
{
    Eigen::Index n = w.hidden();
    if (x.size() != w.input() || h.size() != n || c.size() != n) {
        throw InputError("lstm_step: shape mismatch");
    }
    Vector z = w.b;
    z.noalias() += w.wx * x;
    z.noalias() += w.wh * h;
    LstmStepCache s;
    s.x = x;
    s.h_prev = h;
    s.c_prev = c;
    s.i = sigmoid(z.segment(0, n));
    s.f = sigmoid(z.segment(n, n));
    s.g = z.segment(2 * n, n).array().tanh().matrix();
    s.o = sigmoid(z.segment(3 * n, n));
    s.c = s.f.cwiseProduct(c) + s.i.cwiseProduct(s.g);
    s.tanh_c = s.c.array().tanh().matrix();
    s.h = s.o.cwiseProduct(s.tanh_c);
    return s;
}

std::pair<Vector, Vector> lstm_step(LstmWeights const &w, Vector const &x, Vector const &h, Vector const &c)
{
    auto s = lstm_step_cached(w, x, h, c);
    return {std::move(s.h), std::move(s.c)};
}

void lstm_step_backward(LstmWeights const &w, LstmStepCache const &s, Vector const &dh, Vector const &dc,
                        LstmWeights &grad, Vector &dh_prev, Vector &dc_prev)
{
    Eigen::Index n = w.hidden();
    auto one = [n] { return Eigen::ArrayXd::Ones(n); };
    Eigen::ArrayXd dct = dc.array() + dh.array() * s.o.array() * (one() - s.tanh_c.array().square());
    Vector dz(4 * n);
    dz.segment(0, n) = (dct * s.g.array() * s.i.array() * (one() - s.i.array())).matrix();
    dz.segment(n, n) = (dct * s.c_prev.array() * s.f.array() * (one() - s.f.array())).matrix();
    dz.segment(2 * n, n) = (dct * s.i.array() * (one() - s.g.array().square())).matrix();
    dz.segment(3 * n, n) = (dh.array() * s.tanh_c.array() * s.o.array() * (one() - s.o.array())).matrix();
    grad.wx.noalias() += dz * s.x.transpose();
    grad.wh.noalias() += dz * s.h_prev.transpose();
    grad.b += dz;
    dh_prev.noalias() = w.wh.transpose() * dz;
    dc_prev = (dct * s.f.array()).matrix();
}

QNetworkWeights QNetworkWeights::zeros(QNetworkDims dims)
{
    QNetworkWeights w;
    w.dims = dims;
    w.lstm_fwd = LstmWeights::zeros(dims.d, dims.hidden);
    w.lstm_bwd = LstmWeights::zeros(dims.d, dims.hidden);
    w.w1 = Matrix::Zero(dims.proj, 2 * dims.hidden);
    w.b1 = Vector::Zero(dims.proj);
    w.w2 = Matrix::Zero(2, 2 * dims.proj);
    w.b2 = Vector::Zero(2);
    return w;
}

bool QNetworkWeights::operator==(QNetworkWeights const &other) const
{
    if (!(dims == other.dims)) {
        return false;
    }
    auto a = tensors(*this);
    auto b = tensors(other);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].rows != b[i].rows || a[i].cols != b[i].cols ||
            !std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin())) {
            return false;
        }
    }
    return true;
}

namespace {

template <typename View, typename W>
std::vector<View> collect(W &w)
{
    auto mat = [](char const *name, auto &m) {
        return View{name, m.rows(), m.cols(), {m.data(), static_cast<std::size_t>(m.size())}};
    };
    return {mat("lstm_fwd.wx", w.lstm_fwd.wx), mat("lstm_fwd.wh", w.lstm_fwd.wh), mat("lstm_fwd.b", w.lstm_fwd.b),
            mat("lstm_bwd.wx", w.lstm_bwd.wx), mat("lstm_bwd.wh", w.lstm_bwd.wh), mat("lstm_bwd.b", w.lstm_bwd.b),
            mat("w1", w.w1),                   mat("b1", w.b1),                   mat("w2", w.w2),
            mat("b2", w.b2)};
}

}  // namespace

std::vector<TensorView> tensors(QNetworkWeights &w) { return collect<TensorView>(w); }
std::vector<ConstTensorView> tensors(QNetworkWeights const &w) { return collect<ConstTensorView>(w); }

QNetworkWeights init_weights(QNetworkDims dims, std::mt19937_64 &rng)
{
    if (dims.d <= 0 || dims.hidden <= 0 || dims.proj <= 0) {
        throw InputError("network dimensions must be positive");
    }
    auto w = QNetworkWeights::zeros(dims);
    auto inv_sqrt = [](Eigen::Index n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
    for (auto *lstm : {&w.lstm_fwd, &w.lstm_bwd}) {
        fill_uniform(lstm->wx, inv_sqrt(dims.d), rng);
        fill_uniform(lstm->wh, inv_sqrt(dims.hidden), rng);
        lstm->b.segment(dims.hidden, dims.hidden).setOnes();
    }
    fill_uniform(w.w1, inv_sqrt(2 * dims.hidden), rng);
    fill_uniform(w.w2, inv_sqrt(2 * dims.proj), rng);
    return w;
}

QNetworkParams make_qnetwork(std::shared_ptr<EmbeddingTable const> embedding, QNetworkDims dims,
                             std::mt19937_64 &rng)
{
    if (embedding && embedding->dim() != static_cast<std::size_t>(dims.d)) {
        throw InputError("embedding dimension " + std::to_string(embedding->dim()) +
                         " does not match the network input size " + std::to_string(dims.d));
    }
    return {init_weights(dims, rng), std::move(embedding)};
}

Vector bilstm_encode(QNetworkParams const &params, Tokens const &tokens)
{
    BranchCache cache;
    encode_branch(params, tokens, cache);
    return cache.u;
}

QValues qnet_forward(QNetworkParams const &params, Tokens const &q1, Tokens const &q2)
{
    ForwardCache cache;
    forward_cached(params, q1, q2, cache);
    return cache.q;
}

Gradients qnet_backward(QNetworkParams const &params, std::span<TrainingExample const> batch)
{
    if (batch.empty()) {
        throw InputError("qnet_backward needs a non-empty batch");
    }
    auto const &w = params.weights;
    Gradients out{QNetworkWeights::zeros(w.dims), 0.0};
    auto &g = out.grads;
    Eigen::Index p = w.dims.proj;
    double scale = 1.0 / static_cast<double>(batch.size());
    ForwardCache cache;
    for (auto const &ex : batch) {
        forward_cached(params, ex.q1, ex.q2, cache);
        std::size_t a = action_index(ex.action);
        double err = ex.target - cache.q[a];
        out.loss += err * err * scale;
        Vector dr = Vector::Zero(2);
        dr(static_cast<Eigen::Index>(a)) = -2.0 * err * scale;
        g.w2.noalias() += dr * cache.joint.transpose();
        g.b2 += dr;
        Vector djoint = w.w2.transpose() * dr;
        backprop_branch(w, cache.left, djoint.head(p), g);
        backprop_branch(w, cache.right, djoint.tail(p), g);
    }
    return out;
}

AdamState AdamState::for_weights(QNetworkWeights const &w, double lr)
{
    AdamState s;
    s.lr = lr;
    s.m = QNetworkWeights::zeros(w.dims);
    s.v = QNetworkWeights::zeros(w.dims);
    return s;
}

void adam_step(QNetworkWeights &weights, QNetworkWeights const &grads, AdamState &opt)
{
    if (!(weights.dims == grads.dims) || !(weights.dims == opt.m.dims)) {
        throw InputError("adam_step: shape mismatch");
    }
    ++opt.step;
    double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    auto params = tensors(weights);
    auto gs = tensors(grads);
    auto ms = tensors(opt.m);
    auto vs = tensors(opt.v);
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto p = params[t].values;
        auto g = gs[t].values;
        auto m = ms[t].values;
        auto v = vs[t].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            double mhat = m[i] / c1;
            double vhat = v[i] / c2;
            p[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
        }
    }
}

std::string checkpoint_json(QNetworkWeights const &weights)
{
    nlohmann::ordered_json doc;
    doc["format"] = "sayt-qnetwork";
    doc["version"] = checkpoint_version;
    doc["dims"] = {{"d", weights.dims.d}, {"H", weights.dims.hidden}, {"P", weights.dims.proj}};
    nlohmann::ordered_json arrays = nlohmann::ordered_json::object();
    for (auto const &t : tensors(weights)) {
        std::vector<double> row_major;
        row_major.reserve(t.values.size());
        for (Eigen::Index r = 0; r < t.rows; ++r) {
            for (Eigen::Index c = 0; c < t.cols; ++c) {
                row_major.push_back(t.values[static_cast<std::size_t>(c * t.rows + r)]);
            }
        }
        arrays[t.name] = {{"shape", {t.rows, t.cols}}, {"data", row_major}};
    }
    doc["tensors"] = std::move(arrays);
    return doc.dump() + "\n";
}

void save_checkpoint(QNetworkWeights const &weights, std::filesystem::path const &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << checkpoint_json(weights);
    if (!out) {
        throw InputError("write failed for " + path.string());
    }
}

QNetworkWeights parse_checkpoint(std::string const &text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (nlohmann::json::parse_error const &e) {
        throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    auto field = [](nlohmann::json const &obj, char const *name) -> nlohmann::json const & {
        if (!obj.is_object() || !obj.contains(name)) {
            throw FormatError(std::string("checkpoint is missing field \"") + name + "\"");
        }
        return obj.at(name);
    };
    try {
        auto version = field(doc, "version").get<int>();
        if (version != checkpoint_version) {
            throw FormatError("unsupported checkpoint version " + std::to_string(version));
        }
        auto const &dims_json = field(doc, "dims");
        QNetworkDims dims{field(dims_json, "d").get<Eigen::Index>(), field(dims_json, "H").get<Eigen::Index>(),
                          field(dims_json, "P").get<Eigen::Index>()};
        if (dims.d <= 0 || dims.hidden <= 0 || dims.proj <= 0) {
            throw FormatError("checkpoint dims must be positive");
        }
        auto const &arrays = field(doc, "tensors");
        auto w = QNetworkWeights::zeros(dims);
        for (auto &t : tensors(w)) {
            auto const &entry = field(arrays, t.name);
            auto shape = field(entry, "shape").get<std::vector<Eigen::Index>>();
            auto data = field(entry, "data").get<std::vector<double>>();
            if (shape.size() != 2 || shape[0] != t.rows || shape[1] != t.cols ||
                data.size() != t.values.size()) {
                throw FormatError(std::string("tensor \"") + t.name + "\" has the wrong shape");
            }
            for (Eigen::Index r = 0; r < t.rows; ++r) {
                for (Eigen::Index c = 0; c < t.cols; ++c) {
                    t.values[static_cast<std::size_t>(c * t.rows + r)] = data[static_cast<std::size_t>(r * t.cols + c)];
                }
            }
        }
        return w;
    } catch (nlohmann::json::exception const &e) {
        throw FormatError(std::string("malformed checkpoint: ") + e.what());
    }
}

QNetworkWeights load_checkpoint_weights(std::filesystem::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

QNetworkParams load_checkpoint(std::filesystem::path const &path, std::shared_ptr<EmbeddingTable const> embedding)
{
    auto weights = load_checkpoint_weights(path);
    if (embedding && embedding->dim() != static_cast<std::size_t>(weights.dims.d)) {
        throw InputError("checkpoint expects " + std::to_string(weights.dims.d) +
                         "-dimensional word vectors, got " + std::to_string(embedding->dim()));
    }
    return {std::move(weights), std::move(embedding)};
}

}  // namespace sayt
