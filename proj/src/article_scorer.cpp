#include "claimrank/article_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "claimrank/error.hpp"

namespace claimrank {

using json = nlohmann::json;

namespace {

// Uniform in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
    // Lemire's multiply-shift with rejection
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = rng();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_from_logit(double z, double label) { return label * softplus(-z) + (1.0 - label) * softplus(z); }

struct Workspace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    std::vector<double> delta, next_delta;
};

}  // namespace

MlpModel MlpModel::zeros(std::size_t input_dim, std::vector<std::size_t> hidden) {
    if (input_dim == 0) throw std::invalid_argument("MLP input dim must be positive");
    MlpModel m;
    std::size_t prev = input_dim;
    hidden.push_back(1);
    for (auto width : hidden) {
        if (width == 0) throw std::invalid_argument("MLP layer width must be positive");
        DenseLayer layer;
        layer.inputs = prev;
        layer.outputs = width;
        layer.weight.assign(prev * width, 0.0);
        layer.bias.assign(width, 0.0);
        m.layers_.push_back(std::move(layer));
        prev = width;
    }
    return m;
}

MlpModel MlpModel::initialize(std::size_t input_dim, std::uint64_t seed, std::vector<std::size_t> hidden) {
    auto m = zeros(input_dim, std::move(hidden));
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
        auto& layer = m.layers_[l];
        const bool output = l + 1 == m.layers_.size();
        const double fan_in = static_cast<double>(layer.inputs);
        const double fan_out = static_cast<double>(layer.outputs);
        const double limit = output ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
        for (auto& w : layer.weight) w = (2.0 * unit_uniform(rng) - 1.0) * limit;
    }
    return m;
}

std::vector<std::size_t> MlpModel::layer_sizes() const {
    std::vector<std::size_t> sizes;
    if (layers_.empty()) return sizes;
    sizes.push_back(layers_.front().inputs);
    for (const auto& l : layers_) sizes.push_back(l.outputs);
    return sizes;
}

void MlpModel::check_input(std::size_t n) const {
    if (layers_.empty()) throw std::logic_error("MLP has no layers");
    if (n != input_dim())
        throw std::invalid_argument("MLP expects " + std::to_string(input_dim()) + " features, got " +
                                    std::to_string(n));
}

void MlpModel::forward(std::span<const double> x, std::vector<std::vector<double>>& pre,
                       std::vector<std::vector<double>>& act) const {
    pre.resize(layers_.size());
    act.resize(layers_.size() + 1);
    act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        auto& z = pre[l];
        z.resize(layer.outputs);
        const auto& in = act[l];
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            double s = layer.bias[o];
            const double* w = layer.weight.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) s += w[i] * in[i];
            z[o] = s;
        }
        auto& a = act[l + 1];
        a.resize(layer.outputs);
        const bool output = l + 1 == layers_.size();
        for (std::size_t o = 0; o < layer.outputs; ++o) a[o] = output ? z[o] : std::max(0.0, z[o]);
    }
}

double MlpModel::logit(std::span<const double> features) const {
    check_input(features.size());
    thread_local Workspace ws;
    forward(features, ws.pre, ws.act);
    return ws.pre.back()[0];
}

double MlpModel::score(std::span<const double> features) const {
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(sigmoid(logit(features)), lo, hi);
}

double MlpModel::score(std::span<const float> features) const {
    thread_local std::vector<double> buf;
    buf.assign(features.begin(), features.end());
    return score(std::span<const double>(buf));
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> MlpModel::parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers_) {
        p.insert(p.end(), l.weight.begin(), l.weight.end());
        p.insert(p.end(), l.bias.begin(), l.bias.end());
    }
    return p;
}

void MlpModel::set_parameters(std::span<const double> params) {
    if (params.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
        for (auto& w : l.weight) w = params[k++];
        for (auto& b : l.bias) b = params[k++];
    }
}

double MlpModel::loss(std::span<const double> features, double label, double weight) const {
    return weight * bce_from_logit(logit(features), label);
}

double MlpModel::accumulate_gradient(std::span<const double> features, double label, double weight,
                                     std::span<double> grad) const {
    check_input(features.size());
    if (grad.size() != parameter_count()) throw std::invalid_argument("gradient buffer size mismatch");
    thread_local Workspace ws;
    forward(features, ws.pre, ws.act);
    const double z = ws.pre.back()[0];

    std::vector<std::size_t> offset(layers_.size());
    std::size_t k = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offset[l] = k;
        k += layers_[l].weight.size() + layers_[l].bias.size();
    }
    ws.delta.assign(1, weight * (sigmoid(z) - label));
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const auto& in = ws.act[l];
        double* gw = grad.data() + offset[l];
        double* gb = gw + layer.weight.size();
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            double* row = gw + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += d * in[i];
            gb[o] += d;
        }
        if (l == 0) break;
        ws.next_delta.assign(layer.inputs, 0.0);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            const double d = ws.delta[o];
            if (d == 0.0) continue;
            const double* w = layer.weight.data() + o * layer.inputs;
            for (std::size_t i = 0; i < layer.inputs; ++i) ws.next_delta[i] += w[i] * d;
        }
        const auto& prev_pre = ws.pre[l - 1];
        for (std::size_t i = 0; i < layer.inputs; ++i)
            if (!(prev_pre[i] > 0.0)) ws.next_delta[i] = 0.0;
        std::swap(ws.delta, ws.next_delta);
    }
    return weight * bce_from_logit(z, label);
}

void LabeledFeatures::add(std::span<const double> features, bool positive) {
    if (dim == 0 && labels.empty()) dim = features.size();
    if (features.size() != dim)
        throw std::invalid_argument("feature row has length " + std::to_string(features.size()) + ", expected " +
                                    std::to_string(dim));
    for (double f : features) values.push_back(static_cast<float>(f));
    labels.push_back(positive ? 1 : 0);
}

std::size_t LabeledFeatures::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

ClassWeights ClassWeights::inverse_frequency(std::size_t negatives, std::size_t positives) {
    if (negatives == 0 || positives == 0) throw ValidationError("class weighting needs both classes");
    const double total = static_cast<double>(negatives + positives);
    return {total / (2.0 * static_cast<double>(negatives)), total / (2.0 * static_cast<double>(positives))};
}

double weighted_loss_sum(const MlpModel& model, const LabeledFeatures& data, const ClassWeights& weights) {
    std::vector<double> x(data.dim);
    double total = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        auto row = data.row(r);
        std::copy(row.begin(), row.end(), x.begin());
        total += model.loss(x, data.labels[r], weights.of(data.labels[r] != 0));
    }
    return total;
}

double accuracy(const MlpModel& model, const LabeledFeatures& data) {
    if (data.rows() == 0) return 0.0;
    std::size_t correct = 0;
    std::vector<double> x(data.dim);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        auto row = data.row(r);
        std::copy(row.begin(), row.end(), x.begin());
        const bool pred = model.logit(x) > 0.0;
        if (pred == (data.labels[r] != 0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.rows());
}

TrainResult train_mlp(const LabeledFeatures& data, const TrainConfig& config, TrainOptions options) {
    if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (config.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    const std::size_t pos = data.positives();
    const std::size_t neg = data.rows() - pos;
    if (pos == 0 || neg == 0) throw ValidationError("training data must contain both classes");

    TrainResult result;
    result.weights = config.class_weighting ? ClassWeights::inverse_frequency(neg, pos) : ClassWeights{};
    // separate streams: parameter init and shuffling
    result.model = MlpModel::initialize(data.dim, config.seed, config.hidden);
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    auto& model = result.model;
    const std::size_t np = model.parameter_count();
    std::vector<double> params = model.parameters();
    std::vector<double> grad(np), m(np, 0.0), v(np, 0.0);
    std::vector<std::size_t> order(data.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> x(data.dim);
    std::uint64_t step = 0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[bounded(shuffle_rng, i)]);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t r = order[k];
                auto row = data.row(r);
                std::copy(row.begin(), row.end(), x.begin());
                const bool label = data.labels[r] != 0;
                if ((model.logit(x) > 0.0) == label) ++correct;
                batch_loss += model.accumulate_gradient(x, label ? 1.0 : 0.0, result.weights.of(label), grad);
            }
            if (!std::isfinite(batch_loss))
                throw Error("MLP training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch starting at row " + std::to_string(start));
            loss_sum += batch_loss;
            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < np; ++p) {
                const double g = grad[p] * scale;
                m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * g;
                v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * g * g;
                params[p] -= config.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + config.epsilon);
            }
            model.set_parameters(params);
        }
        const double n = static_cast<double>(data.rows());
        result.log.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
        if (options.keep_trajectory) result.trajectory.push_back(params);
    }
    return result;
}

std::string format_training_log(std::span<const EpochStats> log) {
    std::ostringstream out;
    out << "epoch,weighted_loss,accuracy\n";
    char buf[96];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.6f\n", e.epoch, e.weighted_loss, e.accuracy);
        out << buf;
    }
    return out.str();
}

namespace {

std::vector<bool> relu_pattern(const MlpModel& model, std::span<const double> x) {
    std::vector<bool> bits;
    std::vector<double> act(x.begin(), x.end());
    const auto& layers = model.layers();
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const auto& layer = layers[l];
        std::vector<double> next(layer.outputs);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            double s = layer.bias[o];
            for (std::size_t i = 0; i < layer.inputs; ++i) s += layer.weight[o * layer.inputs + i] * act[i];
            bits.push_back(s > 0.0);
            next[o] = std::max(0.0, s);
        }
        act = std::move(next);
    }
    return bits;
}

}  // namespace

GradientCheckResult mlp_gradient_check(const MlpModel& model, std::span<const double> features, double label,
                                       double weight, double step) {
    GradientCheckResult result;
    const std::size_t np = model.parameter_count();
    std::vector<double> analytic(np, 0.0);
    model.accumulate_gradient(features, label, weight, analytic);
    const auto base_pattern = relu_pattern(model, features);

    MlpModel probe = model;
    auto params = model.parameters();
    for (std::size_t p = 0; p < np; ++p) {
        const double orig = params[p];
        params[p] = orig + step;
        probe.set_parameters(params);
        const double up = probe.loss(features, label, weight);
        const bool kink_up = relu_pattern(probe, features) != base_pattern;
        params[p] = orig - step;
        probe.set_parameters(params);
        const double down = probe.loss(features, label, weight);
        const bool kink_down = relu_pattern(probe, features) != base_pattern;
        params[p] = orig;
        if (kink_up || kink_down) {
            ++result.skipped_kinks;
            continue;
        }
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-10});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[p] - numeric) / denom);
        ++result.checked;
    }
    return result;
}

LabeledFeatures generate_training_pairs(std::span<const InputClaim> inputs, const VerifiedClaimStore& claims,
                                        const PairSet& gold, const PairFeatureFn& features, PairSampling sampling) {
    if (!(sampling.negative_ratio > 0.0 && sampling.negative_ratio <= 1.0))
        throw std::invalid_argument("negative_ratio must be in (0, 1]");
    LabeledFeatures data;
    std::mt19937_64 rng(sampling.seed);
    for (const auto& input : inputs) {
        for (const auto& claim : claims) {
            const bool positive = gold.is_relevant(input.id, claim.id);
            if (!positive && sampling.negative_ratio < 1.0 && unit_uniform(rng) >= sampling.negative_ratio) continue;
            const auto f = features(input, claim);
            data.add(f, positive);
        }
    }
    return data;
}

namespace {

constexpr const char* kMlpFormat = "claimrank-mlp";

json layer_json(const DenseLayer& l) {
    return {{"inputs", l.inputs}, {"outputs", l.outputs}, {"weight", l.weight}, {"bias", l.bias}};
}

}  // namespace

void save_mlp(const MlpArtifact& a, const std::filesystem::path& path) {
    json j;
    j["format"] = kMlpFormat;
    j["version"] = 1;
    j["layer_sizes"] = a.model.layer_sizes();
    json layers = json::array();
    for (const auto& l : a.model.layers()) layers.push_back(layer_json(l));
    j["layers"] = std::move(layers);
    j["config"] = {{"epochs", a.config.epochs},
                   {"batch_size", a.config.batch_size},
                   {"learning_rate", a.config.learning_rate},
                   {"beta1", a.config.beta1},
                   {"beta2", a.config.beta2},
                   {"epsilon", a.config.epsilon},
                   {"class_weighting", a.config.class_weighting},
                   {"seed", a.config.seed},
                   {"hidden", a.config.hidden}};
    j["class_weights"] = {{"negative", a.weights.negative}, {"positive", a.weights.positive}};
    j["body_sentences"] = a.body_sentences;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

MlpArtifact load_mlp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != kMlpFormat) throw ParseError(path.string(), 0, "not an MLP model");
        MlpArtifact a;
        const auto& c = j.at("config");
        a.config.epochs = c.at("epochs").get<int>();
        a.config.batch_size = c.at("batch_size").get<std::size_t>();
        a.config.learning_rate = c.at("learning_rate").get<double>();
        a.config.beta1 = c.at("beta1").get<double>();
        a.config.beta2 = c.at("beta2").get<double>();
        a.config.epsilon = c.at("epsilon").get<double>();
        a.config.class_weighting = c.at("class_weighting").get<bool>();
        a.config.seed = c.at("seed").get<std::uint64_t>();
        a.config.hidden = c.at("hidden").get<std::vector<std::size_t>>();
        a.weights.negative = j.at("class_weights").at("negative").get<double>();
        a.weights.positive = j.at("class_weights").at("positive").get<double>();
        a.body_sentences = j.at("body_sentences").get<std::size_t>();
        const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        if (sizes.size() < 2 || sizes.back() != 1) throw ParseError(path.string(), 0, "bad layer sizes");
        std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
        a.model = MlpModel::zeros(sizes.front(), hidden);
        const auto& layers = j.at("layers");
        if (layers.size() != a.model.layers().size()) throw ParseError(path.string(), 0, "layer count mismatch");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& dst = a.model.layers()[l];
            auto w = layers[l].at("weight").get<std::vector<double>>();
            auto b = layers[l].at("bias").get<std::vector<double>>();
            if (w.size() != dst.weight.size() || b.size() != dst.bias.size())
                throw ParseError(path.string(), 0, "layer " + std::to_string(l) + " shape mismatch");
            for (double x : w)
                if (!std::isfinite(x)) throw ParseError(path.string(), 0, "non-finite parameter");
            dst.weight = std::move(w);
            dst.bias = std::move(b);
        }
        return a;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, std::string("malformed model: ") + e.what());
    }
}

}  // namespace claimrank
