#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"

namespace claimrank {

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weight;  // outputs x inputs, row-major
    std::vector<double> bias;    // outputs

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward binary classifier: ReLU hidden layers, one sigmoid output.
class MlpModel {
public:
    MlpModel() = default;

    /// He-uniform hidden layers, Xavier-uniform output layer, zero biases.
    static MlpModel initialize(std::size_t input_dim, std::uint64_t seed, std::vector<std::size_t> hidden = {20, 10});
    /// All parameters zero.
    static MlpModel zeros(std::size_t input_dim, std::vector<std::size_t> hidden = {20, 10});

    std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().inputs; }
    /// [input_dim, hidden..., 1]
    std::vector<std::size_t> layer_sizes() const;
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    /// Pre-sigmoid output.
    double logit(std::span<const double> features) const;
    /// Match probability, strictly inside (0, 1). Throws std::invalid_argument
    /// on a feature-length mismatch.
    double score(std::span<const double> features) const;
    double score(std::span<const float> features) const;

    std::size_t parameter_count() const;
    /// Flattened as layer by layer, weights then biases.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);

    /// weight * BCE(sigmoid(logit), label), computed without cancellation.
    double loss(std::span<const double> features, double label, double weight = 1.0) const;
    /// Same loss; adds its gradient (in parameters() order) into `grad`.
    double accumulate_gradient(std::span<const double> features, double label, double weight,
                               std::span<double> grad) const;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;

private:
    void forward(std::span<const double> x, std::vector<std::vector<double>>& pre,
                 std::vector<std::vector<double>>& act) const;
    void check_input(std::size_t n) const;

    std::vector<DenseLayer> layers_;
};

/// Rows of float features with 0/1 labels.
struct LabeledFeatures {
    std::size_t dim = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> labels;

    std::size_t rows() const noexcept { return labels.size(); }
    std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
    void add(std::span<const double> features, bool positive);
    std::size_t positives() const;
};

struct ClassWeights {
    double negative = 1.0;
    double positive = 1.0;

    /// total / (2 * class_count) per class.
    static ClassWeights inverse_frequency(std::size_t negatives, std::size_t positives);
    double of(bool positive_label) const { return positive_label ? positive : negative; }
};

struct TrainConfig {
    int epochs = 15;
    std::size_t batch_size = 2048;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    bool class_weighting = true;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {20, 10};
};

struct EpochStats {
    int epoch = 0;
    double weighted_loss = 0.0;  // mean over rows of weight * BCE, accumulated during the epoch
    double accuracy = 0.0;       // at threshold 0.5, accumulated during the epoch
};

struct TrainResult {
    MlpModel model;
    ClassWeights weights;
    std::vector<EpochStats> log;
    /// Parameters after every epoch (only when TrainOptions::keep_trajectory).
    std::vector<std::vector<double>> trajectory;
};

struct TrainOptions {
    bool keep_trajectory = false;
};

/// Adam on class-weighted binary cross-entropy, mini-batches of
/// `batch_size` over a seeded shuffle each epoch. Throws ValidationError on
/// single-class data and Error when the loss becomes non-finite.
TrainResult train_mlp(const LabeledFeatures& data, const TrainConfig& config, TrainOptions options = {});

/// Sum over rows of weight(label) * BCE at the model's current parameters.
double weighted_loss_sum(const MlpModel& model, const LabeledFeatures& data, const ClassWeights& weights);
double accuracy(const MlpModel& model, const LabeledFeatures& data);

/// Training log as CSV: epoch,weighted_loss,accuracy
std::string format_training_log(std::span<const EpochStats> log);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Parameters skipped because the finite-difference step flipped a ReLU.
    std::size_t skipped_kinks = 0;
};

/// Analytic gradient vs. central differences over every parameter. Relative
/// error is |a - n| / max(|a|, |n|, 1e-10).
GradientCheckResult mlp_gradient_check(const MlpModel& model, std::span<const double> features, double label,
                                       double weight = 1.0, double step = 1e-5);

/// Produces the feature vector of one (input claim, verified claim) pair.
/// Must throw when the pair cannot be scored.
using PairFeatureFn = std::function<std::vector<double>(const InputClaim&, const VerifiedClaim&)>;

struct PairSampling {
    /// Fraction of negatives kept, in (0, 1]; 1 keeps the full cross product.
    double negative_ratio = 1.0;
    std::uint64_t seed = 0;
};

/// Cross product of `inputs` with every verified claim; label 1 iff the pair
/// is gold. Positives are always kept.
LabeledFeatures generate_training_pairs(std::span<const InputClaim> inputs, const VerifiedClaimStore& claims,
                                        const PairSet& gold, const PairFeatureFn& features, PairSampling sampling = {});

struct MlpArtifact {
    MlpModel model;
    TrainConfig config;
    ClassWeights weights;
    std::size_t body_sentences = 4;
};

void save_mlp(const MlpArtifact& artifact, const std::filesystem::path& path);
MlpArtifact load_mlp(const std::filesystem::path& path);

}  // namespace claimrank
