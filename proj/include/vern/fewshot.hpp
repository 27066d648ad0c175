#ifndef VERN_FEWSHOT_HPP_
#define VERN_FEWSHOT_HPP_

// Siamese embedder over synthetic quadrant descriptors. Both branches of a
// pair go through the same Embedder instance; there is no second copy of
// the weights anywhere.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vern::fewshot {

inline constexpr int kNumClasses = 4;  // sparse grass, dense grass, bush, tree

/// Two-layer encoder h = W2 tanh(W1 x + b1) + b2.
template <typename Scalar>
struct Embedder {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;

  Eigen::Index input_dim() const { return w1.cols(); }
  Eigen::Index hidden_dim() const { return w1.rows(); }
  Eigen::Index embed_dim() const { return w2.rows(); }
  Eigen::Index num_params() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  static Embedder zeros(Eigen::Index input, Eigen::Index hidden, Eigen::Index embed) {
    Embedder e;
    e.w1 = Mat::Zero(hidden, input);
    e.b1 = Vec::Zero(hidden);
    e.w2 = Mat::Zero(embed, hidden);
    e.b2 = Vec::Zero(embed);
    return e;
  }

  /// Uniform init in +-1/sqrt(fan_in), biases zero.
  static Embedder random(Eigen::Index input, Eigen::Index hidden, Eigen::Index embed,
                         std::uint64_t seed) {
    Embedder e = zeros(input, hidden, embed);
    std::mt19937_64 rng(seed);
    const auto fill = [&](Mat& m) {
      const double s = 1.0 / std::sqrt(static_cast<double>(m.cols()));
      std::uniform_real_distribution<double> u(-s, s);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
    };
    fill(e.w1);
    fill(e.w2);
    return e;
  }

  Vec hidden(const Vec& x) const { return (w1 * x + b1).array().tanh().matrix(); }

  Vec embed(const Vec& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("descriptor dimension mismatch");
    return w2 * hidden(x) + b2;
  }

  /// Flat view in (w1, b1, w2, b2) order, column-major within each block.
  Vec flatten() const {
    Vec out(num_params());
    Eigen::Index o = 0;
    out.segment(o, w1.size()) = w1.reshaped(); o += w1.size();
    out.segment(o, b1.size()) = b1; o += b1.size();
    out.segment(o, w2.size()) = w2.reshaped(); o += w2.size();
    out.segment(o, b2.size()) = b2;
    return out;
  }

  void assign(const Vec& flat) {
    if (flat.size() != num_params()) throw std::invalid_argument("parameter count mismatch");
    Eigen::Index o = 0;
    w1.reshaped() = flat.segment(o, w1.size()); o += w1.size();
    b1 = flat.segment(o, b1.size()); o += b1.size();
    w2.reshaped() = flat.segment(o, w2.size()); o += w2.size();
    b2 = flat.segment(o, b2.size());
  }

  Embedder& operator+=(const Embedder& g) {
    w1 += g.w1; b1 += g.b1; w2 += g.w2; b2 += g.b2;
    return *this;
  }
  Embedder& operator*=(Scalar s) {
    w1 *= s; b1 *= s; w2 *= s; b2 *= s;
    return *this;
  }
};

using EmbedderParams = Embedder<double>;

template <typename Derived1, typename Derived2>
typename Derived1::Scalar pair_distance(const Eigen::MatrixBase<Derived1>& h1,
                                        const Eigen::MatrixBase<Derived2>& h2) {
  if (h1.size() != h2.size()) throw std::invalid_argument("embedding dimension mismatch");
  return (h1 - h2).norm();
}

/// label 1 = similar pair, 0 = dissimilar. Throws on negative distance or
/// non-positive margin.
double contrastive_loss(double d, int label, double margin);

/// dJ/dd; zero on the flat hinge region including the kink d == margin.
double contrastive_loss_derivative(double d, int label, double margin);

template <typename Scalar>
struct LossAndGradient {
  Scalar loss{};
  Embedder<Scalar> gradient;
};

/// Contrastive loss of one pair and its gradient with respect to the shared
/// weights (both branches contribute).
template <typename Scalar>
LossAndGradient<Scalar> loss_gradient(const Embedder<Scalar>& p,
                                      const typename Embedder<Scalar>::Vec& x1,
                                      const typename Embedder<Scalar>::Vec& x2, int label,
                                      Scalar margin) {
  using Vec = typename Embedder<Scalar>::Vec;
  const Vec a1 = p.hidden(x1);
  const Vec a2 = p.hidden(x2);
  const Vec diff = (p.w2 * a1 + p.b2) - (p.w2 * a2 + p.b2);
  const Scalar d = diff.norm();

  LossAndGradient<Scalar> out;
  out.loss = static_cast<Scalar>(contrastive_loss(d, label, margin));
  out.gradient = Embedder<Scalar>::zeros(p.input_dim(), p.hidden_dim(), p.embed_dim());
  const Scalar dj_dd = static_cast<Scalar>(contrastive_loss_derivative(d, label, margin));
  if (dj_dd == Scalar(0) || d == Scalar(0)) return out;

  // g_h1 = dJ/dh1; the second branch sees -g_h1. b2 cancels between branches.
  const Vec g_h1 = dj_dd * diff / d;
  const Vec g_h2 = -g_h1;
  out.gradient.w2 = g_h1 * a1.transpose() + g_h2 * a2.transpose();
  const Vec g_z1 = ((p.w2.transpose() * g_h1).array() * (1 - a1.array().square())).matrix();
  const Vec g_z2 = ((p.w2.transpose() * g_h2).array() * (1 - a2.array().square())).matrix();
  out.gradient.w1 = g_z1 * x1.transpose() + g_z2 * x2.transpose();
  out.gradient.b1 = g_z1 + g_z2;
  return out;
}

// ---------------------------------------------------------------------------
// Data

struct Descriptor {
  Eigen::VectorXd x;
  int label = 0;  // class index in [0, kNumClasses)
};

struct DescriptorPair {
  Eigen::VectorXd x1;
  Eigen::VectorXd x2;
  int label = 0;  // 1 same class, 0 different
};

struct SyntheticConfig {
  int dim = 16;
  double separation = 4.0;  // distance of each class center from the origin; nearest-center accuracy about 0.994 at noise 1
  double noise = 1.0;       // per-feature Gaussian sigma
  std::uint64_t seed = 2023;
};

/// Class-clustered descriptor source. Class centers are fixed by the seed;
/// an extra "unseen" center serves descriptors of things no class covers.
class DescriptorGenerator {
 public:
  explicit DescriptorGenerator(const SyntheticConfig& config);

  const SyntheticConfig& config() const { return config_; }
  const Eigen::VectorXd& center(int cls) const { return centers_.at(cls); }

  Eigen::VectorXd sample(int cls, std::mt19937_64& rng) const;
  Eigen::VectorXd sample_unseen(std::mt19937_64& rng) const;

  std::vector<Descriptor> dataset(int per_class, std::uint64_t seed) const;

 private:
  SyntheticConfig config_;
  std::vector<Eigen::VectorXd> centers_;  // kNumClasses + 1, last is unseen
};

/// Balanced similar/dissimilar pairs drawn from `data`.
std::vector<DescriptorPair> make_pairs(const std::vector<Descriptor>& data, int n_pairs,
                                       std::uint64_t seed);

/// Splits into (train, held-out) with the last `holdout` fraction of each
/// class held out after a seeded shuffle.
std::pair<std::vector<Descriptor>, std::vector<Descriptor>> split_dataset(
    const std::vector<Descriptor>& data, double holdout, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training

struct TrainingParams {
  double margin = 1.0;
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 7;
  int hidden_dim = 16;
  int embed_dim = 8;
};

struct TrainingResult {
  EmbedderParams params;
  /// Entry 0 is the mean loss before any update; entry k the mean over
  /// epoch k's mini-batches.
  std::vector<double> loss_curve;
};

/// Seeded mini-batch gradient descent. Throws on an empty dataset or one
/// that lacks either label.
TrainingResult train(const std::vector<DescriptorPair>& pairs, const TrainingParams& params);
/// Same, starting from `init`.
TrainingResult train(const std::vector<DescriptorPair>& pairs, const TrainingParams& params,
                     EmbedderParams init);

double mean_loss(const EmbedderParams& p, const std::vector<DescriptorPair>& pairs,
                 double margin);

// ---------------------------------------------------------------------------
// Inference

using ReferenceSet = std::array<std::vector<Eigen::VectorXd>, kNumClasses>;

/// Embeddings of each reference, computed once.
struct EmbeddedReferences {
  std::array<std::vector<Eigen::VectorXd>, kNumClasses> embeddings;
};

EmbeddedReferences embed_references(const EmbedderParams& p, const ReferenceSet& refs);

inline double squash_distance(double d) { return d / (1.0 + d); }

/// Entry j: least distance between the query embedding and any class-j
/// reference; optionally mapped through d/(1+d). Throws on an empty class.
Eigen::Vector4d min_class_distance(const EmbedderParams& p, const Eigen::VectorXd& query,
                                   const ReferenceSet& refs, bool squash = false);
Eigen::Vector4d min_class_distance(const EmbedderParams& p, const Eigen::VectorXd& query,
                                   const EmbeddedReferences& refs, bool squash = false);

/// Picks `per_class` references of each class from `data` (first seen).
ReferenceSet pick_references(const std::vector<Descriptor>& data, int per_class);

/// Fraction of `test` whose argmin class distance equals its label.
double nearest_reference_accuracy(const EmbedderParams& p, const std::vector<Descriptor>& test,
                                  const ReferenceSet& refs);

/// Generate, split, pair, train and score in one go.
struct PipelineConfig {
  int per_class = 600;
  double holdout = 0.2;
  int pairs_per_descriptor = 4;
  int references_per_class = 5;
  std::uint64_t seed = 11;
  SyntheticConfig data;
  TrainingParams training;
};

struct PipelineResult {
  TrainingResult training;
  ReferenceSet references;
  double holdout_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

PipelineResult run_pipeline(const PipelineConfig& config);

/// Deterministic reference set drawn straight from the generator.
ReferenceSet reference_set(const DescriptorGenerator& gen, int per_class, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Files

/// Text layout: "vern-embedder 1", then "D H E", then w1 (H rows of D),
/// b1 (one row), w2 (E rows of H), b2 (one row). Row-major.
void save_params(const EmbedderParams& p, const std::string& path);
EmbedderParams load_params(const std::string& path);
std::string params_to_string(const EmbedderParams& p);
EmbedderParams params_from_string(const std::string& text);

/// CSV with header "epoch,mean_loss".
void write_loss_csv(const std::vector<double>& curve, const std::string& path);

}  // namespace vern::fewshot

#endif  // VERN_FEWSHOT_HPP_
