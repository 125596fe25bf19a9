#include <phasessl/dataset.hpp>
#include <phasessl/kernels.hpp>
#include <phasessl/net.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace phasessl {

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(StreamInputs s)
{
    switch (s) {
    case StreamInputs::both: return "both";
    case StreamInputs::cxr_only: return "cxr_only";
    case StreamInputs::mf_only: return "mf_only";
    }
    return "both";
}

StreamInputs stream_inputs_from_string(const std::string& s)
{
    if (s == "both") return StreamInputs::both;
    if (s == "cxr_only") return StreamInputs::cxr_only;
    if (s == "mf_only") return StreamInputs::mf_only;
    throw std::invalid_argument("unknown stream input mode '" + s + "'");
}

void NetConfig::validate() const
{
    if (stream_channels.empty())
        throw std::invalid_argument("net: stream_channels must be non-empty");
    for (int c : stream_channels)
        if (c < 1)
            throw std::invalid_argument("net: channel widths must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw std::invalid_argument("net: kernel_size must be odd and positive");
    if (num_classes < 2)
        throw std::invalid_argument("net: num_classes must be >= 2");
    if (fusion_hidden < 1)
        throw std::invalid_argument("net: fusion_hidden must be positive");
    if (cxr_in_channels < 1 || mf_in_channels < 1)
        throw std::invalid_argument("net: input channel counts must be positive");
    const int shrink = 1 << stream_channels.size();
    if (input_width < shrink || input_height < shrink)
        throw std::invalid_argument("net: input dims too small for the number of pooling stages");
}

nlohmann::json to_json(const NetConfig& c)
{
    return {{"stream_channels", c.stream_channels}, {"kernel_size", c.kernel_size},
            {"num_classes", c.num_classes},         {"fusion_hidden", c.fusion_hidden},
            {"input_width", c.input_width},         {"input_height", c.input_height},
            {"cxr_in_channels", c.cxr_in_channels}, {"mf_in_channels", c.mf_in_channels},
            {"init_seed", c.init_seed},             {"inputs", to_string(c.inputs)}};
}

NetConfig net_config_from_json(const nlohmann::json& j)
{
    NetConfig c;
    c.stream_channels = j.at("stream_channels").get<std::vector<int>>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.fusion_hidden = j.at("fusion_hidden").get<int>();
    c.input_width = j.at("input_width").get<int>();
    c.input_height = j.at("input_height").get<int>();
    c.cxr_in_channels = j.at("cxr_in_channels").get<int>();
    c.mf_in_channels = j.at("mf_in_channels").get<int>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.inputs = stream_inputs_from_string(j.at("inputs").get<std::string>());
    c.validate();
    return c;
}

void TrainConfig::validate() const
{
    if (epochs < 0)
        throw std::invalid_argument("train: epochs must be >= 0");
    if (!(base_lr > 0.0) || !(decay_factor > 0.0))
        throw std::invalid_argument("train: base_lr and decay_factor must be > 0");
    if (decay_every < 1 || batch_size < 1 || patience < 1)
        throw std::invalid_argument("train: decay_every, batch_size and patience must be >= 1");
}

std::size_t ModelParams::count() const
{
    std::size_t n = 0;
    for (const auto& t : tensors)
        n += t.values.size();
    return n;
}

std::size_t Gradient::count() const
{
    std::size_t n = 0;
    for (const auto& t : tensors)
        n += t.values.size();
    return n;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

std::size_t product(const std::vector<int>& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

std::vector<Tensor> make_tensors(const NetConfig& cfg)
{
    cfg.validate();
    std::vector<Tensor> ts;
    const int k = cfg.kernel_size;
    const char* stream_names[2] = {"cxr", "mf"};
    for (int s = 0; s < 2; ++s) {
        int cin = s == 0 ? cfg.cxr_in_channels : cfg.mf_in_channels;
        for (std::size_t l = 0; l < cfg.stream_channels.size(); ++l) {
            const int cout = cfg.stream_channels[l];
            const std::string base = std::string(stream_names[s]) + ".conv" + std::to_string(l);
            ts.push_back({base + ".weight", {cout, cin, k, k}, {}});
            ts.push_back({base + ".bias", {cout}, {}});
            cin = cout;
        }
    }
    const int fused = 2 * cfg.stream_channels.back();
    ts.push_back({"fc1.weight", {cfg.fusion_hidden, fused}, {}});
    ts.push_back({"fc1.bias", {cfg.fusion_hidden}, {}});
    ts.push_back({"fc2.weight", {cfg.num_classes, cfg.fusion_hidden}, {}});
    ts.push_back({"fc2.bias", {cfg.num_classes}, {}});
    for (auto& t : ts)
        t.values.assign(product(t.shape), 0.0);
    return ts;
}

}  // namespace

ModelParams zero_params(const NetConfig& cfg)
{
    return ModelParams{cfg, make_tensors(cfg)};
}

ModelParams init_params(const NetConfig& cfg)
{
    ModelParams p = zero_params(cfg);
    std::mt19937_64 rng(cfg.init_seed);
    for (auto& t : p.tensors) {
        if (t.shape.size() < 2)
            continue;  // biases stay zero
        const std::size_t fan_in = t.values.size() / static_cast<std::size_t>(t.shape[0]);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : t.values)
            v = dist(rng);
    }
    return p;
}

NetInput prepare_input(const GrayImage& cxr, const MultiFeatureImage& mf, int width, int height)
{
    NetInput x;
    x.width = width;
    x.height = height;
    const auto c = normalize_image(resize_image(cxr, width, height));
    x.cxr.assign(c.values().begin(), c.values().end());
    x.mf.reserve(static_cast<std::size_t>(3) * width * height);
    for (int ch = 0; ch < mf.channels(); ++ch) {
        const auto plane = normalize_image(resize_image(mf.channel(ch), width, height));
        x.mf.insert(x.mf.end(), plane.values().begin(), plane.values().end());
    }
    return x;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct LayerCache {
    int cin = 0;
    int cout = 0;
    int height = 0;
    int width = 0;
    std::vector<double> input;
    std::vector<double> pre;       // conv output before ReLU
    std::vector<int> pool_argmax;  // flat index into pre/post for each pooled output
};

struct StreamCache {
    std::vector<LayerCache> layers;
    int out_height = 0;
    int out_width = 0;
};

struct ForwardCache {
    StreamCache streams[2];
    std::vector<double> fused;
    std::vector<double> pre1;
    std::vector<double> hidden;
    std::vector<double> logits;
};

namespace {

const std::vector<double>& stream_input(const ModelParams& p, const NetInput& x, int s, std::vector<double>& zeros)
{
    const auto& cfg = p.config;
    const bool active = cfg.inputs == StreamInputs::both ||
                        (s == 0 && cfg.inputs == StreamInputs::cxr_only) ||
                        (s == 1 && cfg.inputs == StreamInputs::mf_only);
    const auto& src = s == 0 ? x.cxr : x.mf;
    if (active)
        return src;
    zeros.assign(src.size(), 0.0);
    return zeros;
}

void check_input(const ModelParams& p, const NetInput& x)
{
    const auto& cfg = p.config;
    const auto n = static_cast<std::size_t>(cfg.input_width) * cfg.input_height;
    if (x.width != cfg.input_width || x.height != cfg.input_height ||
        x.cxr.size() != n * static_cast<std::size_t>(cfg.cxr_in_channels) ||
        x.mf.size() != n * static_cast<std::size_t>(cfg.mf_in_channels))
        throw std::invalid_argument("forward: input shape does not match the network configuration");
}

std::vector<double> run_stream(const ModelParams& p, int s, const std::vector<double>& input, StreamCache& cache)
{
    const auto& cfg = p.config;
    const std::size_t layers = cfg.stream_channels.size();
    cache.layers.assign(layers, {});
    std::vector<double> x = input;
    int h = cfg.input_height;
    int w = cfg.input_width;
    int cin = s == 0 ? cfg.cxr_in_channels : cfg.mf_in_channels;
    for (std::size_t l = 0; l < layers; ++l) {
        auto& lc = cache.layers[l];
        const int cout = cfg.stream_channels[l];
        lc.cin = cin;
        lc.cout = cout;
        lc.height = h;
        lc.width = w;
        const auto& wt = p.tensors[(static_cast<std::size_t>(s) * layers + l) * 2];
        const auto& bs = p.tensors[(static_cast<std::size_t>(s) * layers + l) * 2 + 1];
        lc.pre.resize(static_cast<std::size_t>(cout) * h * w);
        kernels::omp::conv2d_forward({cin, cout, h, w, cfg.kernel_size}, x, wt.values, bs.values, lc.pre);

        const int ph = h / 2;
        const int pw = w / 2;
        std::vector<double> pooled(static_cast<std::size_t>(cout) * ph * pw);
        lc.pool_argmax.resize(pooled.size());
        for (int c = 0; c < cout; ++c)
            for (int y = 0; y < ph; ++y)
                for (int xx = 0; xx < pw; ++xx) {
                    double best = -std::numeric_limits<double>::infinity();
                    int arg = -1;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int idx = (c * h + 2 * y + dy) * w + 2 * xx + dx;
                            const double v = std::max(lc.pre[static_cast<std::size_t>(idx)], 0.0);  // ReLU
                            if (v > best) {
                                best = v;
                                arg = idx;
                            }
                        }
                    const std::size_t o = (static_cast<std::size_t>(c) * ph + y) * pw + xx;
                    pooled[o] = best;
                    lc.pool_argmax[o] = arg;
                }
        lc.input = std::move(x);
        x = std::move(pooled);
        h = ph;
        w = pw;
        cin = cout;
    }
    cache.out_height = h;
    cache.out_width = w;

    // Global average pool.
    std::vector<double> feat(static_cast<std::size_t>(cin), 0.0);
    const std::size_t area = static_cast<std::size_t>(h) * w;
    for (int c = 0; c < cin; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < area; ++i)
            acc += x[static_cast<std::size_t>(c) * area + i];
        feat[static_cast<std::size_t>(c)] = acc / static_cast<double>(area);
    }
    return feat;
}

ForwardResult forward_cached(const ModelParams& p, const NetInput& x, ForwardCache& cache)
{
    check_input(p, x);
    const auto& cfg = p.config;
    const std::size_t layers = cfg.stream_channels.size();
    std::vector<double> zeros;
    cache.fused.clear();
    for (int s = 0; s < 2; ++s) {
        const auto feat = run_stream(p, s, stream_input(p, x, s, zeros), cache.streams[s]);
        cache.fused.insert(cache.fused.end(), feat.begin(), feat.end());
    }
    const auto& w1 = p.tensors[4 * layers];
    const auto& b1 = p.tensors[4 * layers + 1];
    const auto& w2 = p.tensors[4 * layers + 2];
    const auto& b2 = p.tensors[4 * layers + 3];
    const std::size_t nf = cache.fused.size();
    const auto nh = static_cast<std::size_t>(cfg.fusion_hidden);
    const auto nc = static_cast<std::size_t>(cfg.num_classes);

    cache.pre1.assign(nh, 0.0);
    cache.hidden.assign(nh, 0.0);
    for (std::size_t j = 0; j < nh; ++j) {
        double acc = b1.values[j];
        for (std::size_t i = 0; i < nf; ++i)
            acc += w1.values[j * nf + i] * cache.fused[i];
        cache.pre1[j] = acc;
        cache.hidden[j] = std::max(acc, 0.0);
    }
    cache.logits.assign(nc, 0.0);
    for (std::size_t k = 0; k < nc; ++k) {
        double acc = b2.values[k];
        for (std::size_t j = 0; j < nh; ++j)
            acc += w2.values[k * nh + j] * cache.hidden[j];
        cache.logits[k] = acc;
    }
    return {cache.logits, softmax(cache.logits)};
}

// Accumulates the gradient of loss_xent_logits for one sample into g; returns the loss.
double backward_one(const ModelParams& p, const LabeledExample& ex, Gradient& g)
{
    const auto& cfg = p.config;
    if (ex.label < 0 || ex.label >= cfg.num_classes)
        throw std::invalid_argument("backward: label out of range");
    ForwardCache cache;
    const auto fr = forward_cached(p, *ex.input, cache);
    const double loss = loss_xent_logits(fr.logits, ex.label);

    const std::size_t layers = cfg.stream_channels.size();
    const std::size_t nf = cache.fused.size();
    const auto nh = static_cast<std::size_t>(cfg.fusion_hidden);
    const auto nc = static_cast<std::size_t>(cfg.num_classes);
    const auto& w1 = p.tensors[4 * layers];
    const auto& w2 = p.tensors[4 * layers + 2];
    auto& gw1 = g.tensors[4 * layers].values;
    auto& gb1 = g.tensors[4 * layers + 1].values;
    auto& gw2 = g.tensors[4 * layers + 2].values;
    auto& gb2 = g.tensors[4 * layers + 3].values;

    std::vector<double> dlogits = fr.distribution.probabilities;
    dlogits[static_cast<std::size_t>(ex.label)] -= 1.0;

    std::vector<double> dhidden(nh, 0.0);
    for (std::size_t k = 0; k < nc; ++k) {
        gb2[k] += dlogits[k];
        for (std::size_t j = 0; j < nh; ++j) {
            gw2[k * nh + j] += dlogits[k] * cache.hidden[j];
            dhidden[j] += w2.values[k * nh + j] * dlogits[k];
        }
    }
    std::vector<double> dfused(nf, 0.0);
    for (std::size_t j = 0; j < nh; ++j) {
        const double d = cache.pre1[j] > 0.0 ? dhidden[j] : 0.0;
        gb1[j] += d;
        for (std::size_t i = 0; i < nf; ++i) {
            gw1[j * nf + i] += d * cache.fused[i];
            dfused[i] += w1.values[j * nf + i] * d;
        }
    }

    const std::size_t per_stream = nf / 2;
    for (int s = 0; s < 2; ++s) {
        const auto& sc = cache.streams[s];
        const std::size_t area = static_cast<std::size_t>(sc.out_height) * sc.out_width;
        std::vector<double> dx(per_stream * area);
        for (std::size_t c = 0; c < per_stream; ++c)
            for (std::size_t i = 0; i < area; ++i)
                dx[c * area + i] = dfused[static_cast<std::size_t>(s) * per_stream + c] / static_cast<double>(area);

        for (std::size_t l = layers; l-- > 0;) {
            const auto& lc = sc.layers[l];
            std::vector<double> dpre(lc.pre.size(), 0.0);
            for (std::size_t o = 0; o < dx.size(); ++o) {
                const auto idx = static_cast<std::size_t>(lc.pool_argmax[o]);
                if (lc.pre[idx] > 0.0)
                    dpre[idx] += dx[o];
            }
            const std::size_t wi = (static_cast<std::size_t>(s) * layers + l) * 2;
            const kernels::ConvShape shape{lc.cin, lc.cout, lc.height, lc.width, cfg.kernel_size};
            std::vector<double> gw(g.tensors[wi].values.size());
            std::vector<double> gb(g.tensors[wi + 1].values.size());
            kernels::omp::conv2d_backward_params(shape, lc.input, dpre, gw, gb);
            for (std::size_t i = 0; i < gw.size(); ++i)
                g.tensors[wi].values[i] += gw[i];
            for (std::size_t i = 0; i < gb.size(); ++i)
                g.tensors[wi + 1].values[i] += gb[i];
            if (l > 0) {
                dx.assign(lc.input.size(), 0.0);
                kernels::omp::conv2d_backward_input(shape, p.tensors[wi].values, dpre, dx);
            }
        }
    }
    return loss;
}

Gradient zero_gradient(const ModelParams& p)
{
    Gradient g;
    g.tensors = p.tensors;
    for (auto& t : g.tensors)
        std::fill(t.values.begin(), t.values.end(), 0.0);
    return g;
}

}  // namespace

ForwardResult forward(const ModelParams& p, const NetInput& x)
{
    ForwardCache cache;
    return forward_cached(p, x, cache);
}

ClassDistribution softmax(std::span<const double> logits)
{
    ClassDistribution d;
    if (logits.empty())
        return d;
    const double m = *std::max_element(logits.begin(), logits.end());
    d.probabilities.resize(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        d.probabilities[k] = std::exp(logits[k] - m);
        sum += d.probabilities[k];
    }
    for (auto& v : d.probabilities)
        v /= sum;
    return d;
}

double loss_xent(const ClassDistribution& dist, int label)
{
    if (label < 0 || static_cast<std::size_t>(label) >= dist.probabilities.size())
        throw std::invalid_argument("loss_xent: label out of range");
    const double prob = dist.probabilities[static_cast<std::size_t>(label)];
    return prob >= 1.0 ? 0.0 : -std::log(prob);
}

double loss_xent_logits(std::span<const double> logits, int label)
{
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw std::invalid_argument("loss_xent: label out of range");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits)
        sum += std::exp(z - m);
    return std::max(0.0, m + std::log(sum) - logits[static_cast<std::size_t>(label)]);
}

BackwardResult backward(const ModelParams& p, std::span<const LabeledExample> batch)
{
    if (batch.empty())
        throw std::invalid_argument("backward: empty batch");
    const auto n = static_cast<std::ptrdiff_t>(batch.size());
    std::vector<Gradient> per_sample(batch.size());
    std::vector<double> losses(batch.size(), 0.0);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            per_sample[static_cast<std::size_t>(i)] = zero_gradient(p);
            losses[static_cast<std::size_t>(i)] =
                backward_one(p, batch[static_cast<std::size_t>(i)], per_sample[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical
            failure = std::current_exception();
        }
    }
    if (failure)
        std::rethrow_exception(failure);

    BackwardResult r{0.0, zero_gradient(p)};
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        r.loss += losses[i];
        for (std::size_t t = 0; t < r.gradient.tensors.size(); ++t) {
            auto& dst = r.gradient.tensors[t].values;
            const auto& src = per_sample[i].tensors[t].values;
            for (std::size_t k = 0; k < dst.size(); ++k)
                dst[k] += src[k];
        }
    }
    r.loss *= scale;
    for (auto& t : r.gradient.tensors)
        for (auto& v : t.values)
            v *= scale;
    return r;
}

ModelParams sgd_step(const ModelParams& p, const Gradient& g, double lr)
{
    if (g.tensors.size() != p.tensors.size())
        throw std::invalid_argument("sgd_step: gradient does not match parameters");
    ModelParams out = p;
    for (std::size_t t = 0; t < p.tensors.size(); ++t) {
        if (g.tensors[t].shape != p.tensors[t].shape || g.tensors[t].values.size() != p.tensors[t].values.size())
            throw std::invalid_argument("sgd_step: shape mismatch in tensor " + p.tensors[t].name);
        auto& dst = out.tensors[t].values;
        const auto& gv = g.tensors[t].values;
        for (std::size_t k = 0; k < dst.size(); ++k)
            dst[k] -= lr * gv[k];
    }
    return out;
}

double lr_at(int epoch, const TrainConfig& cfg)
{
    if (epoch < 0)
        throw std::invalid_argument("lr_at: epoch must be >= 0");
    double lr = cfg.base_lr;
    for (int k = 0; k < epoch / cfg.decay_every; ++k)
        lr *= cfg.decay_factor;
    return lr;
}

Prediction argmax_prediction(const ClassDistribution& dist)
{
    if (dist.probabilities.empty())
        throw std::invalid_argument("predict: empty distribution");
    std::size_t best = 0;
    for (std::size_t k = 1; k < dist.probabilities.size(); ++k)
        if (dist.probabilities[k] > dist.probabilities[best])
            best = k;
    return {static_cast<int>(best), dist.probabilities[best]};
}

Prediction predict(const ModelParams& p, const NetInput& x)
{
    return argmax_prediction(forward(p, x).distribution);
}

double mean_loss(const ModelParams& p, std::span<const LabeledExample> examples)
{
    if (examples.empty())
        throw std::invalid_argument("mean_loss: empty example set");
    std::vector<double> losses(examples.size());
    const auto n = static_cast<std::ptrdiff_t>(examples.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& ex = examples[static_cast<std::size_t>(i)];
        losses[static_cast<std::size_t>(i)] = loss_xent_logits(forward(p, *ex.input).logits, ex.label);
    }
    double sum = 0.0;
    for (double l : losses)
        sum += l;
    return sum / static_cast<double>(examples.size());
}

TrainResult train(const ModelParams& init, std::span<const LabeledExample> train_set,
                  std::span<const LabeledExample> stop_set, const TrainConfig& cfg)
{
    cfg.validate();
    if (train_set.empty())
        throw std::invalid_argument("train: empty training set");

    TrainResult result;
    result.params = init;
    ModelParams current = init;
    double best_stop = stop_set.empty() ? 0.0 : mean_loss(init, stop_set);
    int since_best = 0;

    std::mt19937_64 rng(cfg.shuffle_seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<LabeledExample> batch;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = start; k < end; ++k)
                batch.push_back(train_set[order[k]]);
            const auto br = backward(current, batch);
            total += br.loss * static_cast<double>(batch.size());
            current = sgd_step(current, br.gradient, lr);
        }
        EpochRecord rec{epoch, lr, total / static_cast<double>(order.size()), std::nullopt, false};
        if (stop_set.empty()) {
            rec.kept = true;
            result.params = current;
            result.best_epoch = epoch;
        } else {
            const double sl = mean_loss(current, stop_set);
            rec.stop_loss = sl;
            if (sl < best_stop) {
                best_stop = sl;
                rec.kept = true;
                result.params = current;
                result.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        result.history.push_back(rec);
        if (!stop_set.empty() && since_best >= cfg.patience)
            break;
    }
    return result;
}

nlohmann::json history_record_json(const EpochRecord& r)
{
    nlohmann::json j = {{"epoch", r.epoch}, {"lr", r.lr}, {"train_loss", r.train_loss}, {"kept", r.kept}};
    j["stop_loss"] = r.stop_loss ? nlohmann::json(*r.stop_loss) : nlohmann::json(nullptr);
    return j;
}

std::string history_jsonl(const std::vector<EpochRecord>& history)
{
    std::string out;
    for (const auto& r : history)
        out += history_record_json(r).dump() + "\n";
    return out;
}

}  // namespace phasessl
